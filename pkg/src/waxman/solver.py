"""Iteration schemes for the coupling constant ``lam(eps)``.

All schemes iterate in the symmetrized coordinates of
:func:`waxman.green.apply_sym`; start and reference vectors are given in those
coordinates, and the reported eigenvector is mapped back to an eigenvector of
``G V``.

``power_solve``
    Waxman's iteration: apply the operator, take the Rayleigh quotient
    ``eps_n = <n|A|n> = 1/lam_n``, renormalize.
``power_solve_ref``
    The same iteration normalized against a fixed reference vector.
``modified_solve``
    Rayleigh-Ritz on ``span{|n>, |n_perp>}`` each step, keeping the upper
    (or lower) Ritz vector. The ``A|n_perp>`` product is reused to update
    ``A|n>`` by linearity, so a run of ``k`` subspace steps costs ``k + 1``
    operator applications.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import RayleighZero, RefOrthogonal, StartVectorDegenerate, UsageError
from .green import BRANCHES, GreenOperator, OpCounter, apply_sym, gershgorin_bounds, to_original
from .linalg import eig_sym_2x2, norm

RAYLEIGH_FLOOR = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    ``start`` is ``"uniform"``, ``"basis_<k>"`` or an explicit vector.
    A run counts as converged once the relative change in ``lam`` is at most
    ``tol`` and the residual ``||A y - eps_n y||`` of the unit iterate is at
    most ``residual_tol``. The residual guard keeps a run from stopping on a
    ``lam`` that has settled while the vector has not.
    """

    tol: float = 1e-10
    max_iter: int = 10000
    branch: str = "highest"
    start: object = "uniform"
    breakdown_tol: float = 1e-13
    residual_tol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise UsageError(f"tol must lie in (0, 1), got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise UsageError(f"max_iter must be a positive integer, got {self.max_iter}")
        if self.branch not in BRANCHES:
            raise UsageError(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        if isinstance(self.start, str):
            if self.start != "uniform" and _parse_basis(self.start) is None:
                raise UsageError(f"start must be 'uniform', 'basis_<k>' or a vector, got {self.start!r}")
        else:
            object.__setattr__(self, "start", tuple(float(x) for x in self.start))
        if self.breakdown_tol < 0:
            raise UsageError("breakdown_tol must be non-negative")
        if not self.residual_tol > 0:
            raise UsageError(f"residual_tol must be positive, got {self.residual_tol}")


def _parse_basis(start: str) -> int | None:
    head, _, idx = start.partition("_")
    if head != "basis" or not idx.isdigit():
        return None
    return int(idx)


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"


class Subspace(NamedTuple):
    """The projected 2x2 problem of one modified step."""

    eps_n: float
    v_n: float
    alpha_n: float
    low: float
    high: float
    v_mismatch: float  # |<n|A|n_perp> - ||r||| (zero in exact arithmetic)


@dataclass(frozen=True)
class StepRecord:
    n: int
    lambda_n: float
    eps_n: float
    residual: float
    op_applications: int
    overlap: float | None = None
    subspace: Subspace | None = None


@dataclass
class IterationTrace:
    scheme: str
    steps: list[StepRecord] = field(default_factory=list)
    shift: float = 0.0

    def lambdas(self) -> np.ndarray:
        return np.array([s.lambda_n for s in self.steps])

    def eps(self) -> np.ndarray:
        return np.array([s.eps_n for s in self.steps])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "lambda", "eps_n", "residual", "op_apps"])
            for s in self.steps:
                writer.writerow([s.n, f"{s.lambda_n:.17g}", f"{s.eps_n:.17g}", f"{s.residual:.17g}", s.op_applications])


@dataclass(frozen=True)
class ConvergenceReport:
    status: Status
    lambda_final: float
    eigenvector: np.ndarray
    iterations: int
    op_applications: int
    trace: IterationTrace

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def count_applications(report: ConvergenceReport) -> int:
    return report.op_applications


def start_vector(g: GreenOperator, cfg: SolverConfig) -> np.ndarray:
    n = g.dim
    if cfg.start == "uniform":
        x = np.ones(n)
    elif isinstance(cfg.start, str):
        k = _parse_basis(cfg.start)
        if k >= n:
            raise UsageError(f"start {cfg.start!r} out of range for dim {n}")
        x = np.zeros(n)
        x[k] = 1.0
    else:
        x = np.array(cfg.start, dtype=float)
        if x.shape != (n,):
            raise UsageError(f"start vector has shape {x.shape}, expected ({n},)")
    nx = norm(x)
    if nx <= 1e-14:
        raise StartVectorDegenerate("start vector is (numerically) zero")
    return x / nx


def power_shift(g: GreenOperator, branch: str) -> tuple[float, float]:
    """``(sigma, sign)`` such that the target eigenvalue of ``A`` is dominant for ``sign * (A - sigma)``.

    For ``highest`` the shift is the Gershgorin lower bound when that bound
    is negative and zero otherwise, so definite problems run unshifted. For
    ``lowest`` it is the Gershgorin upper bound.
    """
    lo, hi = gershgorin_bounds(g)
    if branch == "highest":
        return min(0.0, lo), 1.0
    return hi, -1.0


def _converged(lam: float, lam_prev: float | None, residual: float, cfg: SolverConfig) -> bool:
    return lam_prev is not None and abs(lam - lam_prev) <= cfg.tol * abs(lam) and residual <= cfg.residual_tol


def _rayleigh_check(eps_n: float) -> None:
    if not abs(eps_n) > RAYLEIGH_FLOOR:
        raise RayleighZero(f"Rayleigh quotient {eps_n!r} is zero; lambda is undefined")


def power_solve(g: GreenOperator, cfg: SolverConfig = SolverConfig()) -> ConvergenceReport:
    counter = OpCounter()
    sigma, sign = power_shift(g, cfg.branch)
    trace = IterationTrace("power", shift=sigma)
    x = start_vector(g, cfg)
    lam_prev = None
    status = Status.MAX_ITERATIONS
    for n in range(1, cfg.max_iter + 1):
        ax = apply_sym(g, x, counter)
        eps_n = float(x @ ax)
        _rayleigh_check(eps_n)
        lam = 1.0 / eps_n
        bx = sign * (ax - sigma * x) if sigma else ax
        rho = float(x @ bx)
        if rho == 0.0:
            raise RayleighZero("iterated operator annihilates the current direction")
        nxt = bx / rho
        residual = norm(ax - eps_n * x)
        trace.steps.append(StepRecord(n, lam, eps_n, residual, counter.count, overlap=float(x @ nxt)))
        if _converged(lam, lam_prev, residual, cfg):
            status = Status.CONVERGED
            break
        lam_prev = lam
        x = nxt / norm(nxt)
    last = trace.steps[-1]
    return ConvergenceReport(status, last.lambda_n, to_original(g, x), last.n, counter.count, trace)


def _remaining_error(delta: float, delta_prev: float | None) -> float:
    """Geometric-tail estimate of the error left in a linearly converging sequence."""
    if delta == 0.0:
        return 0.0
    if not delta_prev:
        return math.inf
    q = abs(delta / delta_prev)
    return abs(delta) * q / (1.0 - q) if q < 1.0 else math.inf


def power_solve_ref(g: GreenOperator, ref, cfg: SolverConfig = SolverConfig()) -> ConvergenceReport:
    """Power iteration normalized so that ``<ref|n> = 1``; ``lam_n = 1/<ref|A|n>``.

    Unlike the Rayleigh quotient, ``<ref|A|n>`` carries an error linear in the
    error of ``|n>``, so a small step in ``lam`` can hide a much larger
    remaining error when the iteration contracts slowly. Convergence here also
    requires the geometric-tail estimate of that remaining error to be within
    ``tol``.
    """
    ref = np.asarray(ref, dtype=float)
    if ref.shape != (g.dim,):
        raise UsageError(f"reference vector has shape {ref.shape}, expected ({g.dim},)")
    counter = OpCounter()
    sigma, sign = power_shift(g, cfg.branch)
    trace = IterationTrace("power_ref", shift=sigma)
    x = start_vector(g, cfg)
    d0 = float(ref @ x)
    if abs(d0) <= RAYLEIGH_FLOOR:
        raise RefOrthogonal("reference vector is orthogonal to the start vector")
    x = x / d0
    lam_prev = delta_prev = None
    status = Status.MAX_ITERATIONS
    for n in range(1, cfg.max_iter + 1):
        ax = apply_sym(g, x, counter)
        bx = sign * (ax - sigma * x) if sigma else ax
        d = float(ref @ bx)
        if abs(d) <= RAYLEIGH_FLOOR:
            raise RefOrthogonal(f"<ref|A|n> = {d!r}; normalization undefined")
        eps_n = sigma + sign * d if sigma else d
        _rayleigh_check(eps_n)
        lam = 1.0 / eps_n
        residual = norm(ax - eps_n * x) / norm(x)
        trace.steps.append(StepRecord(n, lam, eps_n, residual, counter.count))
        delta = None if lam_prev is None else lam - lam_prev
        if _converged(lam, lam_prev, residual, cfg) and _remaining_error(delta, delta_prev) <= cfg.tol * abs(lam):
            status = Status.CONVERGED
            break
        lam_prev, delta_prev = lam, delta
        x = bx / d
    last = trace.steps[-1]
    return ConvergenceReport(status, last.lambda_n, to_original(g, x), last.n, counter.count, trace)


def modified_solve(g: GreenOperator, cfg: SolverConfig = SolverConfig()) -> ConvergenceReport:
    counter = OpCounter()
    trace = IterationTrace("2x2")
    upper = cfg.branch == "highest"
    x = start_vector(g, cfg)
    w = apply_sym(g, x, counter)
    eps_n = float(x @ w)
    _rayleigh_check(eps_n)
    lam = 1.0 / eps_n
    trace.steps.append(StepRecord(0, lam, eps_n, norm(w - eps_n * x), counter.count))

    status = Status.MAX_ITERATIONS
    steps = 0
    while True:
        r = w - eps_n * x
        rn = norm(r)
        if rn <= cfg.breakdown_tol * norm(w):
            # |n> spans an invariant direction: c_perp = 0
            status = Status.CONVERGED
            break
        if steps >= cfg.max_iter:
            break
        xp = r / rn
        xp = xp - float(x @ xp) * x
        xp /= norm(xp)
        z = apply_sym(g, xp, counter)
        v_n = float(x @ z)
        alpha_n = float(xp @ z)
        pair = eig_sym_2x2(eps_n, v_n, alpha_n)
        c1, c2 = pair.eigvec_high if upper else pair.eigvec_low
        if c1 < 0:
            c1, c2 = -c1, -c2
        x_new = c1 * x + c2 * xp
        w_new = c1 * w + c2 * z
        scale = norm(x_new)
        x, w = x_new / scale, w_new / scale
        steps += 1
        eps_new = float(x @ w)
        _rayleigh_check(eps_new)
        lam_new = 1.0 / eps_new
        residual = norm(w - eps_new * x)
        trace.steps.append(
            StepRecord(
                steps,
                lam_new,
                eps_new,
                residual,
                counter.count,
                subspace=Subspace(eps_n, v_n, alpha_n, pair.eigenvalue_low, pair.eigenvalue_high, abs(v_n - rn)),
            )
        )
        done = _converged(lam_new, lam, residual, cfg)
        eps_n, lam = eps_new, lam_new
        if done:
            status = Status.CONVERGED
            break
    return ConvergenceReport(status, lam, to_original(g, x), max(1, steps), counter.count, trace)


SCHEMES = {"power": power_solve, "2x2": modified_solve, "modified": modified_solve}


def solve(g: GreenOperator, scheme: str, cfg: SolverConfig = SolverConfig()) -> ConvergenceReport:
    try:
        fn = SCHEMES[scheme]
    except KeyError:
        raise UsageError(f"unknown scheme {scheme!r}; choose 'power' or '2x2'") from None
    return fn(g, cfg)
