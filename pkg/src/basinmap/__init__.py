"""Basins of attraction of a parameterized modified Newton family."""
from .core import (
    GeneralizedExponents,
    IterationParams,
    Polynomial,
    PRESETS,
    StepMap,
    eval_derivatives,
    generalized_step,
    gerlach_step,
    modified_step,
)
from .errors import (
    BasinMapError,
    InsufficientSamples,
    MergedRoots,
    NoConvergence,
    NonFiniteStep,
    OrbitDiverged,
    PoleAtDerivativeZero,
    SingularDenominator,
)
from .solver import ConvergenceRecord, RootSet, Status, iterate, orbit, reference_roots

__version__ = "0.1.0"
