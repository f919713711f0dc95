"""Stochastic Lawson integrators for split Stratonovich SDEs."""

from .brownian import WienerGrid, coarsen, generate
from .linalg import expm
from .model import (
    LinearInvariant,
    QuadraticInvariant,
    SplitSde,
    SplittingMode,
    ZeroMap,
    resplit,
    validate_commutativity,
    validate_linear_assumptions,
    validate_quadratic_assumptions,
)
from .schemes import NonConvergence, Scheme, StepperConfig, Trajectory, integrate

__all__ = [
    "LinearInvariant",
    "NonConvergence",
    "QuadraticInvariant",
    "Scheme",
    "SplitSde",
    "SplittingMode",
    "StepperConfig",
    "Trajectory",
    "WienerGrid",
    "ZeroMap",
    "coarsen",
    "expm",
    "generate",
    "integrate",
    "resplit",
    "validate_commutativity",
    "validate_linear_assumptions",
    "validate_quadratic_assumptions",
]
