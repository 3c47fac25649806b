"""Green's operator ``G = (T - eps)^-1`` for diagonal ``T`` and the composites built on it.

The iterations never run on ``G V`` itself: it is not symmetric in the plain
inner product. They run on ``A = G^(1/2) V G^(1/2)``, which is similar to
``G V`` (same eigenvalues) and exactly symmetric whenever ``eps`` lies below
every level of ``T``. An eigenvector ``y`` of ``A`` maps back to the
eigenvector ``G^(1/2) y`` of ``G V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBranch, EpsilonInSpectrum, UsageError
from .linalg import DENSE_DIM_CAP, SymMatrix, eig_sym_dense, normalize
from .model import ModelProblem

GAP_FLOOR = 1e-8
BRANCHES = ("highest", "lowest")


class OpCounter:
    """Per-run tally of operator applications."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def tick(self) -> None:
        self.count += 1


@dataclass(frozen=True, eq=False)
class GreenOperator:
    epsilon: float
    inv_diag: np.ndarray
    sqrt_inv_diag: np.ndarray
    problem: ModelProblem

    @property
    def dim(self) -> int:
        return self.problem.dim


def make_green(problem: ModelProblem, epsilon: float, gap_floor: float = GAP_FLOOR) -> GreenOperator:
    epsilon = float(epsilon)
    t_min = problem.t_min
    if not np.isfinite(epsilon) or epsilon >= t_min - gap_floor:
        raise EpsilonInSpectrum(
            f"epsilon={epsilon!r} must lie below min(t)={t_min!r} by more than {gap_floor!r}"
        )
    shifted = problem.t_diag - epsilon
    inv = 1.0 / shifted
    sqrt_inv = 1.0 / np.sqrt(shifted)
    inv.setflags(write=False)
    sqrt_inv.setflags(write=False)
    return GreenOperator(epsilon, inv, sqrt_inv, problem)


def _check_dim(g: GreenOperator, x: np.ndarray) -> None:
    if x.shape != (g.dim,):
        raise UsageError(f"dimension mismatch: operator {g.dim}, vector {x.shape}")


def apply_gv(g: GreenOperator, x: np.ndarray, counter: OpCounter | None = None) -> np.ndarray:
    """``G V x``: multiply by ``V``, then scale by ``1/(t_i - eps)``."""
    _check_dim(g, x)
    if counter is not None:
        counter.tick()
    return g.inv_diag * (g.problem.v.array @ x)


def apply_sym(g: GreenOperator, y: np.ndarray, counter: OpCounter | None = None) -> np.ndarray:
    """``A y`` with ``A = G^(1/2) V G^(1/2)``."""
    _check_dim(g, y)
    if counter is not None:
        counter.tick()
    s = g.sqrt_inv_diag
    return s * (g.problem.v.array @ (s * y))


def dense_sym(g: GreenOperator) -> SymMatrix:
    s = g.sqrt_inv_diag
    return SymMatrix.from_array(s[:, None] * g.problem.v.array * s[None, :])


def dense_gv(g: GreenOperator) -> np.ndarray:
    return g.inv_diag[:, None] * g.problem.v.array


def gershgorin_bounds(g: GreenOperator) -> tuple[float, float]:
    """Interval guaranteed to contain the spectrum of ``A``."""
    a = dense_sym(g).array
    diag = np.diag(a)
    radius = np.abs(a).sum(axis=1) - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def to_original(g: GreenOperator, y: np.ndarray) -> np.ndarray:
    """Map a vector from symmetrized coordinates to an eigenvector of ``G V`` (unit norm)."""
    return normalize(g.sqrt_inv_diag * y)


def lambda_exact(g: GreenOperator, branch: str = "highest") -> float:
    """Coupling constant from the dense reference eigensolver.

    ``1/mu`` for the largest (``highest``) or smallest (``lowest``)
    eigenvalue ``mu`` of ``A``.
    """
    if branch not in BRANCHES:
        raise UsageError(f"branch must be one of {BRANCHES}, got {branch!r}")
    if g.dim > DENSE_DIM_CAP:
        raise UsageError(f"reference solve limited to dim <= {DENSE_DIM_CAP}")
    evals, _ = eig_sym_dense(dense_sym(g))
    mu = evals[-1] if branch == "highest" else evals[0]
    if abs(mu) <= 1e-12:
        raise DegenerateBranch(f"selected eigenvalue {mu!r} is zero; lambda is unbounded")
    return float(1.0 / mu)
