"""Waxman Green's-operator iteration and its 2x2 subspace variant for bound-state coupling constants."""

__version__ = "0.1.0"

from .errors import (
    DegenerateBranch,
    EpsilonInSpectrum,
    NonMonotone,
    OutOfRange,
    RayleighZero,
    RefOrthogonal,
    SolverError,
    StartVectorDegenerate,
    TooFewPoints,
    UsageError,
    WaxmanError,
    ZeroVector,
)
from .green import GreenOperator, apply_gv, apply_sym, lambda_exact, make_green
from .model import ModelProblem, ModelSpec, fixture, generate
from .solver import (
    ConvergenceReport,
    IterationTrace,
    SolverConfig,
    Status,
    count_applications,
    modified_solve,
    power_solve,
    power_solve_ref,
)
from .sweep import (
    SmoothnessReport,
    SweepResult,
    compare_schemes,
    detect_pseudoconvergence,
    interpolate_eps_of_lambda,
    run_sweep,
)
