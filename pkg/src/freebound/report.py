"""Check results and verification reports shared by the validators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass
class CheckResult:
    check_id: str
    status: str
    residual: float
    tolerance: float
    anchor: str = ""
    detail: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def compare(cls, check_id: str, residual: float, tolerance: float,
                anchor: str = "", **detail: Any) -> "CheckResult":
        ok = math.isfinite(residual) and residual <= tolerance
        return cls(check_id, PASS if ok else FAIL, float(residual), float(tolerance),
                   anchor, dict(detail))

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict[str, Any]:
        return {
            "check_id": self.check_id,
            "status": self.status,
            "residual": _jsonable(self.residual),
            "tolerance": _jsonable(self.tolerance),
            "anchor": self.anchor,
            "detail": {k: _jsonable(v) for k, v in self.detail.items()},
        }


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    refinement_orders: dict[str, float] = field(default_factory=dict)

    def add(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        return result

    def __getitem__(self, check_id: str) -> CheckResult:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def __contains__(self, check_id: str) -> bool:
        return any(c.check_id == check_id for c in self.checks)

    @property
    def passed(self) -> bool:
        """True unless some check failed outright; inconclusive does not count."""
        return all(c.status != FAIL for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.status == FAIL]

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "refinement_orders": {k: _jsonable(v) for k, v in self.refinement_orders.items()},
        }


def _jsonable(v: Any) -> Any:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(v, "tolist"):
        return _jsonable(v.tolist())
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v
