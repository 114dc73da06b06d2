"""Harmonic-map flow between hyperbolic disks, barycentric boundary extension,
and numerical checks of the identities behind them."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DegenerateMap,
    DegenerateStencil,
    HypflowError,
    InputError,
    IterationLimit,
    MonotonicityViolation,
    NonConvergence,
    NumericalFailure,
    SolverDivergence,
)
from .hyperbolic import DOMAIN, Mobius, Space  # noqa: F401
