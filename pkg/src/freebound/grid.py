"""Mass grid, Lagrangian state and interior cut regions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class MassGrid:
    """Fixed nodes 0 = x_0 < ... < x_M = 1 in the mass coordinate."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("mass grid needs at least two nodes")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise ValueError(f"mass grid must span [0, 1], got [{x[0]}, {x[-1]}]")
        if np.any(np.diff(x) <= 0):
            raise ValueError("mass grid nodes must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @classmethod
    def uniform(cls, M: int) -> "MassGrid":
        if M < 1:
            raise ValueError("M must be positive")
        x = np.linspace(0.0, 1.0, M + 1)
        return cls(x)

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def cells(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def node_weights(self) -> np.ndarray:
        """Dual-cell widths: half a cell at x=0 and x=1."""
        h = self.widths
        w = np.empty(self.M + 1)
        w[0] = 0.5 * h[0]
        w[-1] = 0.5 * h[-1]
        w[1:-1] = 0.5 * (h[:-1] + h[1:])
        return w

    @property
    def dx(self) -> float:
        return float(self.widths.max())


@dataclass(frozen=True)
class LagrangianState:
    """Discrete (rho, u, r) at time ``tau``; rho per cell, u and r per node."""

    tau: float
    rho: np.ndarray
    u: np.ndarray
    r: np.ndarray
    a: float
    grid: MassGrid = field(repr=False)

    def __post_init__(self) -> None:
        M = self.grid.M
        if self.rho.shape != (M,) or self.u.shape != (M + 1,) or self.r.shape != (M + 1,):
            raise ValueError(
                f"state shapes {self.rho.shape}, {self.u.shape}, {self.r.shape} "
                f"do not match a grid with {M} cells"
            )

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def replace(self, **changes) -> "LagrangianState":
        return replace(self, **changes)

    def copy(self) -> "LagrangianState":
        return replace(self, rho=self.rho.copy(), u=self.u.copy(), r=self.r.copy())


def quintic_step(s: np.ndarray | float) -> np.ndarray:
    """C^2 smoothstep 6s^5 - 15s^4 + 10s^3, clamped to [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


@dataclass(frozen=True)
class RegionSpec:
    """Interior cut points 0 < x0 < x2 < x1 < 1 and the cutoff ramp width.

    ``x_cut`` is where weighted quantities that blow up at the vacuum edge
    (the BD integrand, the rho^{theta-3} separation weight) are truncated.
    """

    x0: float = 0.25
    x2: float = 0.5
    x1: float = 0.75
    x_cut: float = 0.9
    ramp: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.x0 < self.x2 < self.x1 < 1.0:
            raise ValueError(
                f"cut points must satisfy 0 < x0 < x2 < x1 < 1, got "
                f"({self.x0}, {self.x2}, {self.x1})"
            )
        if not 0.0 < self.x_cut < 1.0:
            raise ValueError(f"x_cut must lie in (0, 1), got {self.x_cut}")
        if self.ramp < 0.0 or self.x_cut + self.ramp >= 1.0:
            raise ValueError("cutoff ramp must be non-negative and end before x = 1")

    def cutoff(self, x: np.ndarray, plateau_end: float | None = None) -> np.ndarray:
        """1 on [0, plateau_end], quintic ramp down to 0 over ``ramp``."""
        end = self.x_cut if plateau_end is None else plateau_end
        x = np.asarray(x, dtype=float)
        if self.ramp == 0.0:
            return (x <= end).astype(float)
        return 1.0 - quintic_step((x - end) / self.ramp)
