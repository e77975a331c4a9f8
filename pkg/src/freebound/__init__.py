"""Lagrangian solver and verification harness for a degenerate viscous gas with a free vacuum boundary."""
from .coords import EulerianField, mass_coordinate, radius_from_mass, to_eulerian, vacuum_slope
from .functionals import (FunctionalReport, bd_entropy, bound_margins, energy, functional_report,
                          mass, velocity_moments)
from .grid import LagrangianState, MassGrid, RegionSpec
from .model import (InitialData, Params, ProfileSpec, VelocitySpec, make_initial_data,
                    validate_initial_data, validate_params)
from .report import CheckResult, VerificationReport
from .solver import HorizonEstimate, Trajectory, horizon_estimates, run, semi_discrete_rhs, step
from .verify import refinement_study, run_suite, uniqueness_contraction

__version__ = "0.1.0"

__all__ = [
    "CheckResult", "EulerianField", "FunctionalReport", "HorizonEstimate", "InitialData",
    "LagrangianState", "MassGrid", "Params", "ProfileSpec", "RegionSpec", "Trajectory",
    "VelocitySpec", "VerificationReport", "bd_entropy", "bound_margins", "energy",
    "functional_report", "horizon_estimates", "make_initial_data", "mass", "mass_coordinate",
    "radius_from_mass", "refinement_study", "run", "run_suite", "semi_discrete_rhs", "step",
    "to_eulerian", "uniqueness_contraction", "vacuum_slope", "validate_initial_data",
    "validate_params", "velocity_moments",
]
