"""Normalized ground states for two-component Schrödinger systems with mixed or supercritical power nonlinearities."""

from .params import ProblemParams, Regime, derive_regime
from .radial import RadialField, RadialGrid, StatePair
from .solver import GroundStateResult, SolverConfig, solve

__all__ = [
    "GroundStateResult",
    "ProblemParams",
    "RadialField",
    "RadialGrid",
    "Regime",
    "SolverConfig",
    "StatePair",
    "derive_regime",
    "solve",
]
__version__ = "0.1.0"
