"""Sweeps of ``lam(eps)``, inversion to ``eps(lam)``, and a smoothness check.

A sweep runs one independent solve per grid energy. Because ``lam(eps)`` is a
smooth function, a point that the iteration only *appeared* to converge
stands out as a local kink; :func:`detect_pseudoconvergence` finds such kinks
with leave-one-out quadratic fits.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import median
from typing import Mapping, Sequence

import numpy as np

from .errors import NonMonotone, OutOfRange, SolverError, TooFewPoints, UsageError
from .green import GAP_FLOOR, make_green
from .model import ModelProblem
from .solver import ConvergenceReport, SolverConfig, Status, solve

DEVIATION_FLOOR = 1e-12


@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    lam: float
    iterations: int
    op_applications: int
    status: str
    report: ConvergenceReport | None = field(default=None, repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED.value


@dataclass(frozen=True)
class SweepResult:
    points: list[SweepPoint]
    scheme: str
    problem_label: str

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([p.epsilon for p in self.points])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])


@dataclass(frozen=True)
class Flag:
    index: int
    epsilon: float
    lambda_observed: float
    lambda_fit: float
    relative_deviation: float


@dataclass(frozen=True)
class SmoothnessReport:
    flags: list[Flag]
    threshold: float

    @property
    def flagged_indices(self) -> list[int]:
        return [f.index for f in self.flags]

    def format(self) -> str:
        lines = [f"threshold={self.threshold!r} flagged={len(self.flags)}"]
        for f in self.flags:
            lines.append(
                f"index={f.index} epsilon={f.epsilon:.17g} lambda_observed={f.lambda_observed:.17g} "
                f"lambda_fit={f.lambda_fit:.17g} relative_deviation={f.relative_deviation:.6g}"
            )
        return "\n".join(lines) + "\n"


def parse_grid(text: str) -> list[float]:
    """``start:stop:count`` with inclusive endpoints."""
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise UsageError(f"grid must look like start:stop:count, got {text!r}") from None
    if count < 0:
        raise UsageError("grid count must be non-negative")
    if count >= 2 and not stop > start:
        raise UsageError("grid must be strictly increasing (start < stop)")
    if count == 1:
        return [start]
    return [float(e) for e in np.linspace(start, stop, count)]


def check_grid(problem: ModelProblem, grid: Sequence[float], gap_floor: float = GAP_FLOOR) -> list[float]:
    grid = [float(e) for e in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("grid must be strictly increasing")
    for e in grid:
        make_green(problem, e, gap_floor)  # raises EpsilonInSpectrum
    return grid


def _solve_point(problem, epsilon, scheme, cfg, gap_floor) -> SweepPoint:
    g = make_green(problem, epsilon, gap_floor)
    try:
        rep = solve(g, scheme, cfg)
    except SolverError as exc:
        return SweepPoint(epsilon, math.nan, 0, 0, type(exc).__name__)
    return SweepPoint(epsilon, rep.lambda_final, rep.iterations, rep.op_applications, rep.status.value, rep)


def run_sweep(
    problem: ModelProblem,
    grid: Sequence[float],
    scheme: str = "2x2",
    cfg: SolverConfig = SolverConfig(),
    *,
    warm_start: bool = False,
    point_configs: Mapping[int, SolverConfig] | None = None,
    jobs: int = 1,
    gap_floor: float = GAP_FLOOR,
) -> SweepResult:
    """Solve at every grid energy.

    ``point_configs`` overrides the config at given grid indices (used to
    truncate single points on purpose). With ``warm_start`` each point starts
    from the previous point's eigenvector, which forces sequential execution.
    Solver failures become per-point statuses; they never abort the sweep.
    """
    grid = check_grid(problem, grid, gap_floor)
    overrides = dict(point_configs or {})
    configs = [overrides.get(i, cfg) for i in range(len(grid))]

    if warm_start:
        points = []
        prev = None
        for e, c in zip(grid, configs):
            if prev is not None and prev.report is not None:
                g = make_green(problem, e, gap_floor)
                y = prev.report.eigenvector / g.sqrt_inv_diag
                c = replace(c, start=tuple(y))
            prev = _solve_point(problem, e, scheme, c, gap_floor)
            points.append(prev)
    elif jobs > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(lambda ec: _solve_point(problem, ec[0], scheme, ec[1], gap_floor), zip(grid, configs)))
    else:
        points = [_solve_point(problem, e, scheme, c, gap_floor) for e, c in zip(grid, configs)]
    return SweepResult(points, scheme, problem.label)


def interpolate_eps_of_lambda(sweep: SweepResult, lambda_target: float, exclude: Sequence[int] = ()) -> float:
    """Piecewise-linear ``eps(lam)`` through the converged, non-excluded points."""
    skip = set(exclude)
    pts = [(p.lam, p.epsilon) for i, p in enumerate(sweep.points) if p.converged and i not in skip]
    if len(pts) < 1:
        raise OutOfRange("sweep has no converged points to interpolate")
    lam = np.array([p[0] for p in pts])
    eps = np.array([p[1] for p in pts])
    if len(lam) > 1:
        d = np.diff(lam)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise NonMonotone("lambda is not strictly monotone over converged points; run the detector")
    lo, hi = float(lam.min()), float(lam.max())
    if not lo <= lambda_target <= hi:
        raise OutOfRange(f"lambda={lambda_target!r} outside the swept range [{lo!r}, {hi!r}]")
    if lam[0] > lam[-1]:
        lam, eps = lam[::-1], eps[::-1]
    return float(np.interp(lambda_target, lam, eps))


def _neighbors(i: int, eps: np.ndarray, pool: Sequence[int]) -> list[int]:
    left = [j for j in pool if j != i and eps[j] < eps[i]]
    right = [j for j in pool if j != i and eps[j] > eps[i]]
    left.sort(key=lambda j: eps[i] - eps[j])
    right.sort(key=lambda j: eps[j] - eps[i])
    take_l, take_r = min(2, len(left)), min(2, len(right))
    while take_l + take_r < 3 and (take_l < len(left) or take_r < len(right)):
        if take_l < len(left) and (take_r >= len(right) or len(left) - take_l >= len(right) - take_r):
            take_l += 1
        else:
            take_r += 1
    return left[:take_l] + right[:take_r]


def _local_fit(i: int, eps: np.ndarray, lam: np.ndarray, pool: Sequence[int]) -> float | None:
    nb = _neighbors(i, eps, pool)
    if len(nb) < 3:
        return None
    x = eps[nb] - eps[i]
    scale = np.max(np.abs(x))
    coef = np.polyfit(x / scale, lam[nb], 2)
    return float(coef[-1])


def _deviation(observed: float, fit: float) -> float:
    return abs(observed - fit) / max(abs(fit), DEVIATION_FLOOR)


def detect_pseudoconvergence(sweep: SweepResult, threshold: float = 1e-3) -> SmoothnessReport:
    """Flag sweep points that sit off the smooth ``lam(eps)`` curve.

    Each interior point (one with converged points on both sides) is
    compared with a quadratic fitted through its nearest converged
    neighbours, two per side where available and at least three in total,
    excluding the point itself. One bad point also spoils its neighbours'
    fits, so outliers are removed greedily: each round flags the candidate
    whose exclusion leaves the smallest total excess deviation among the
    others, until nothing exceeds ``threshold``. Non-converged points are
    checked but never used as neighbours.
    """
    if not threshold > 0:
        raise UsageError("threshold must be positive")
    eps = sweep.epsilons
    lam = sweep.lambdas
    pool = [i for i, p in enumerate(sweep.points) if p.converged and math.isfinite(p.lam)]
    if len(pool) < 4:
        raise TooFewPoints(f"smoothness check needs at least 4 converged points, got {len(pool)}")
    lo, hi = eps[pool].min(), eps[pool].max()
    candidates = [i for i, p in enumerate(sweep.points) if math.isfinite(p.lam) and lo < eps[i] < hi]

    def deviations(active_pool, among):
        out = {}
        for i in among:
            fit = _local_fit(i, eps, lam, active_pool)
            if fit is not None:
                out[i] = _deviation(lam[i], fit)
        return out

    flagged: list[int] = []
    while True:
        active = [j for j in pool if j not in flagged]
        remaining = [i for i in candidates if i not in flagged]
        devs = deviations(active, remaining)
        over = sorted(i for i, d in devs.items() if d > threshold)
        if not over:
            break
        best = None
        for j in over:
            rest = deviations([k for k in active if k != j], [i for i in over if i != j])
            excess = sum(max(d - threshold, 0.0) for d in rest.values())
            key = (excess, -devs[j], j)
            if best is None or key < best[0]:
                best = (key, j)
        flagged.append(best[1])

    active = [j for j in pool if j not in flagged]
    flags = []
    for i in sorted(flagged):
        fit = _local_fit(i, eps, lam, active)
        if fit is None:
            continue
        dev = _deviation(lam[i], fit)
        if dev > threshold:
            flags.append(Flag(i, float(eps[i]), float(lam[i]), fit, float(dev)))
    return SmoothnessReport(flags, threshold)


# -- scheme comparison ---------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    epsilon: float
    iter_power: int
    iter_2x2: int
    apps_power: int
    apps_2x2: int
    lambda_power: float
    lambda_2x2: float
    status_power: str
    status_2x2: str
    agree: bool


@dataclass(frozen=True)
class Comparison:
    rows: list[ComparisonRow]
    power: SweepResult
    modified: SweepResult

    @property
    def median_iter_ratio(self) -> float:
        ratios = [r.iter_2x2 / r.iter_power for r in self.rows if r.iter_power > 0]
        return median(ratios) if ratios else math.nan

    @property
    def median_apps_ratio(self) -> float:
        ratios = [r.apps_2x2 / r.apps_power for r in self.rows if r.apps_power > 0]
        return median(ratios) if ratios else math.nan


def compare_schemes(
    problem: ModelProblem,
    grid: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
    *,
    agree_tol: float = 1e-8,
    jobs: int = 1,
) -> Comparison:
    power = run_sweep(problem, grid, "power", cfg, jobs=jobs)
    modified = run_sweep(problem, grid, "2x2", cfg, jobs=jobs)
    rows = []
    for a, b in zip(power.points, modified.points):
        agree = (
            a.converged
            and b.converged
            and abs(a.lam - b.lam) <= agree_tol * max(abs(a.lam), abs(b.lam))
        )
        rows.append(
            ComparisonRow(a.epsilon, a.iterations, b.iterations, a.op_applications, b.op_applications,
                          a.lam, b.lam, a.status, b.status, agree)
        )
    return Comparison(rows, power, modified)


# -- file output ---------------------------------------------------------------

def _g(x: float) -> str:
    return f"{x:.17g}"


def write_sweep_csv(sweep: SweepResult, path, report: SmoothnessReport | None = None) -> None:
    """Write the sweep in grid order; the ``flagged`` column is present only with a report."""
    header = ["epsilon", "lambda", "iterations", "op_apps", "status"]
    if report is not None:
        header.append("flagged")
        flagged = set(report.flagged_indices)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, p in enumerate(sweep.points):
            row = [_g(p.epsilon), _g(p.lam), p.iterations, p.op_applications, p.status]
            if report is not None:
                row.append(int(i in flagged))
            w.writerow(row)


def read_sweep_csv(path, scheme: str = "?", label: str = "sweep") -> tuple[SweepResult, list[int]]:
    """Read a sweep CSV back; returns the sweep and the indices marked flagged."""
    points, flagged = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"epsilon", "lambda", "status"} - set(reader.fieldnames or ())
        if missing:
            raise UsageError(f"sweep file lacks columns: {', '.join(sorted(missing))}")
        for i, row in enumerate(reader):
            points.append(
                SweepPoint(float(row["epsilon"]), float(row["lambda"]), int(row.get("iterations") or 0),
                           int(row.get("op_apps") or 0), row["status"])
            )
            if row.get("flagged", "0").strip() not in ("", "0"):
                flagged.append(i)
    return SweepResult(points, scheme, label), flagged


def write_plot_file(sweep: SweepResult, path) -> None:
    with open(path, "w") as fh:
        for p in sweep.points:
            fh.write(f"{_g(p.epsilon)} {_g(p.lam)}\n")
