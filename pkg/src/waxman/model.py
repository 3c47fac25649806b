"""Model Hamiltonians: a diagonal unperturbed spectrum T and a random symmetric V.

Random entries come from SplitMix64 (Steele, Lea and Flood 2014; constants as
published by Vigna), so a given seed produces the same matrix on any
platform or language. Uniform doubles use the top 53 bits of each output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UsageError
from .linalg import SymMatrix, as_vector

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double on [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class ModelSpec:
    """Recipe for a model problem.

    ``V = v_shift * I + R`` where ``R`` is symmetric with upper-triangle
    entries i.i.d. uniform on ``[-v_scale, v_scale]``. ``v_scale`` may be 0
    only when ``v_shift`` is nonzero (the analytic ``V = I`` case).
    """

    dim: int
    t_spectrum: tuple[float, ...]
    v_scale: float
    seed: int = 0
    label: str = "model"
    v_shift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "t_spectrum", tuple(float(t) for t in self.t_spectrum))
        if self.dim < 1:
            raise UsageError(f"dim must be >= 1, got {self.dim}")
        if len(self.t_spectrum) != self.dim:
            raise UsageError(f"t_spectrum has {len(self.t_spectrum)} entries, dim is {self.dim}")
        if not all(np.isfinite(self.t_spectrum)):
            raise UsageError("t_spectrum entries must be finite")
        if any(b <= a for a, b in zip(self.t_spectrum, self.t_spectrum[1:])):
            raise UsageError("t_spectrum must be strictly increasing")
        if not np.isfinite(self.v_scale) or self.v_scale < 0:
            raise UsageError(f"v_scale must be positive, got {self.v_scale}")
        if self.v_scale == 0 and self.v_shift == 0:
            raise UsageError("v_scale must be positive unless v_shift is nonzero")
        if not 0 <= int(self.seed) <= _MASK64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if not self.label or any(ch.isspace() for ch in self.label):
            raise UsageError(f"label must be non-empty without whitespace, got {self.label!r}")


@dataclass(frozen=True)
class ModelProblem:
    """The eigenproblem ``(T - lam V) u = eps u`` with ``T = diag(t_diag)``."""

    t_diag: np.ndarray
    v: SymMatrix
    spec: ModelSpec = field(compare=False)

    @property
    def dim(self) -> int:
        return self.t_diag.size

    @property
    def t_min(self) -> float:
        return float(self.t_diag.min())

    @property
    def label(self) -> str:
        return self.spec.label

    def __eq__(self, other):
        if not isinstance(other, ModelProblem):
            return NotImplemented
        return np.array_equal(self.t_diag, other.t_diag) and self.v == other.v

    __hash__ = None


def generate(spec: ModelSpec) -> ModelProblem:
    n = spec.dim
    v = np.zeros((n, n))
    if spec.v_scale > 0:
        rng = SplitMix64(spec.seed)
        for i in range(n):
            for j in range(i, n):
                v[i, j] = spec.v_scale * (2.0 * rng.uniform() - 1.0)
    v[np.diag_indices(n)] += spec.v_shift
    return ModelProblem(as_vector(spec.t_spectrum), SymMatrix.from_upper(v), spec)


def linear_spectrum(dim: int, t_min: float = 1.0, t_step: float = 1.0) -> tuple[float, ...]:
    if t_step <= 0:
        raise UsageError(f"t_step must be positive, got {t_step}")
    return tuple(t_min + k * t_step for k in range(dim))


FIXTURES = ("easy20", "hard20", "identityV")


def fixture_spec(name: str, dim: int | None = None, t_min: float = 2.0) -> ModelSpec:
    """Spec of a named fixture.

    ``easy20``
        Well separated levels 10, 11, ..., 29 and an attractive ``V = I``
        plus a weak random part: the leading eigenvalue of the Green's
        operator is far from the rest, so the power scheme converges fast.
    ``hard20``
        Same construction but the two lowest levels are 1e-3 apart and, on
        that pair, ``V`` is replaced by ``[[1, -0.01], [-0.01, 1]]``. The
        leading eigenvector is then close to the antisymmetric combination
        of the pair, nearly orthogonal to the uniform start: iterations
        stall near the wrong eigenvalue for ~100 steps before escaping.
    ``identityV``
        ``V = I`` with levels ``t_min, t_min + 1, ...`` (``dim`` defaults to
        4). Every quantity is analytic: ``lam(eps) = t_min - eps``.
    """
    if name == "easy20":
        return ModelSpec(20, linear_spectrum(20, 10.0, 1.0), 0.1, seed=20, label="easy20", v_shift=1.0)
    if name == "hard20":
        t = (10.0, 10.001) + linear_spectrum(18, 11.0, 1.0)
        return ModelSpec(20, t, 0.02, seed=2, label="hard20", v_shift=1.0)
    if name == "identityV":
        n = 4 if dim is None else dim
        return ModelSpec(n, linear_spectrum(n, t_min, 1.0), 0.0, seed=0, label="identityV", v_shift=1.0)
    raise UsageError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")


HARD20_PAIR_COUPLING = -0.01


def fixture(name: str, dim: int | None = None, t_min: float = 2.0) -> ModelProblem:
    problem = generate(fixture_spec(name, dim=dim, t_min=t_min))
    if name == "hard20":
        v = problem.v.array.copy()
        v[0, 0] = v[1, 1] = 1.0
        v[0, 1] = v[1, 0] = HARD20_PAIR_COUPLING
        problem = ModelProblem(problem.t_diag, SymMatrix.from_array(v), problem.spec)
    return problem


def standard_grid(problem: ModelProblem, count: int = 8) -> list[float]:
    """Default sweep grid: ``count`` energies from ``t_min - 4`` to ``t_min - 0.5``."""
    t0 = problem.t_min
    return list(np.linspace(t0 - 4.0, t0 - 0.5, count))


# -- serialization -----------------------------------------------------------

def dumps(problem: ModelProblem) -> str:
    s = problem.spec
    lines = [
        f"dim={problem.dim} seed={s.seed} label={s.label} v_scale={s.v_scale!r} v_shift={s.v_shift!r}",
        "T " + " ".join(repr(float(t)) for t in problem.t_diag),
    ]
    for row in problem.v.array:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def loads(text: str) -> ModelProblem:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise UsageError("model file is truncated")
    try:
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        n = int(header["dim"])
        t_tokens = lines[1].split()
        if t_tokens[0] != "T":
            raise UsageError("second line of a model file must start with 'T'")
        t = [float(x) for x in t_tokens[1:]]
        rows = [[float(x) for x in ln.split()] for ln in lines[2:]]
        v = np.array(rows, dtype=np.float64)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"malformed model file: {exc}") from None
    if len(t) != n or v.shape != (n, n):
        raise UsageError(f"model file dimensions disagree with dim={n}")
    if not np.array_equal(v, v.T):
        raise UsageError("V in model file is not symmetric")
    spec = ModelSpec(
        n,
        tuple(t),
        float(header.get("v_scale", 1.0)),
        seed=int(header.get("seed", 0)),
        label=header.get("label", "model"),
        v_shift=float(header.get("v_shift", 0.0)),
    )
    return ModelProblem(as_vector(t), SymMatrix.from_array(v), spec)


def save(problem: ModelProblem, path) -> None:
    Path(path).write_text(dumps(problem))


def load(path) -> ModelProblem:
    return loads(Path(path).read_text())
