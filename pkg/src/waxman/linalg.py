"""Small dense real linear algebra.

Vectors are plain 1-D ``float64`` numpy arrays; :func:`as_vector` is the
validating constructor. :class:`SymMatrix` stores one triangle and mirrors it,
so symmetry holds bit-for-bit. The dense eigensolver is a self-contained
Jacobi method used as a brute-force reference for the iterative schemes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UsageError, ZeroVector

DENSE_DIM_CAP = 512


def as_vector(x) -> np.ndarray:
    """Return ``x`` as a read-only finite 1-D float64 array of length >= 1."""
    v = np.array(x, dtype=np.float64, copy=True)
    if v.ndim != 1 or v.size == 0:
        raise UsageError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise UsageError("vector entries must be finite")
    v.setflags(write=False)
    return v


def dot(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def normalize(a: np.ndarray) -> np.ndarray:
    n = norm(a)
    if n == 0.0:
        raise ZeroVector("cannot normalize the zero vector")
    return a / n


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Dense real symmetric matrix.

    Build with :meth:`from_upper` or :meth:`from_array`; both keep only the
    upper triangle (diagonal included) and mirror it.
    """

    array: np.ndarray

    def __post_init__(self):
        a = self.array
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise UsageError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise UsageError("matrix entries must be finite")
        upper = np.triu(a)
        full = upper + np.triu(a, 1).T
        full.setflags(write=False)
        object.__setattr__(self, "array", full)

    @classmethod
    def from_array(cls, a) -> "SymMatrix":
        return cls(np.array(a, dtype=np.float64, copy=True))

    @classmethod
    def from_upper(cls, a) -> "SymMatrix":
        return cls.from_array(a)

    @property
    def dim(self) -> int:
        return self.array.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if x.shape != (self.dim,):
            raise UsageError(f"dimension mismatch: matrix {self.dim}, vector {x.shape}")
        return self.array @ x

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return np.array_equal(self.array, other.array)

    __hash__ = None


class Eigenpair2x2(NamedTuple):
    eigenvalue_low: float
    eigenvalue_high: float
    eigvec_low: tuple[float, float]
    eigvec_high: tuple[float, float]


def eig_sym_2x2(a: float, b: float, c: float) -> Eigenpair2x2:
    """Diagonalize ``[[a, b], [b, c]]`` in closed form.

    One Jacobi rotation annihilates ``b``. The rotated diagonal entries
    ``a - t*b`` and ``c + t*b`` equal ``(a+c)/2 -/+ sqrt(((a-c)/2)**2 + b**2)``
    but keep full relative accuracy in the shift away from ``a`` when ``b``
    is small, which is what the monotone 2x2 iteration depends on.
    """
    a, b, c = float(a), float(b), float(c)
    if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(c)):
        raise UsageError("2x2 entries must be finite")
    if b == 0.0:
        cs, sn, t = 1.0, 0.0, 0.0
    else:
        theta = (c - a) / (2.0 * b)
        if abs(theta) > 1e150:
            t = 1.0 / (2.0 * theta)
        else:
            t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
        cs = 1.0 / np.sqrt(t * t + 1.0)
        sn = t * cs
    # columns of the rotation [[cs, sn], [-sn, cs]]
    lam_p, vec_p = a - t * b, (cs, -sn)
    lam_q, vec_q = c + t * b, (sn, cs)
    if lam_p <= lam_q:
        return Eigenpair2x2(lam_p, lam_q, vec_p, vec_q)
    return Eigenpair2x2(lam_q, lam_p, vec_q, vec_p)


def _round_robin(m: int):
    """Yield ``m - 1`` rounds of ``m // 2`` disjoint index pairs covering all pairs."""
    players = list(range(m))
    for _ in range(m - 1):
        half = m // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        yield np.minimum(p, q), np.maximum(p, q)
        players = [players[0], players[-1]] + players[1:-1]


def eig_sym_dense(m: SymMatrix, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Rotations are applied in round-robin order: each round rotates ``n/2``
    disjoint index pairs at once. Returns ``(eigenvalues, eigenvectors)`` with
    eigenvalues ascending and eigenvectors as the matching columns.
    """
    n = m.dim
    if n > DENSE_DIM_CAP:
        raise UsageError(f"dense eigensolver is capped at dim {DENSE_DIM_CAP}, got {n}")
    size = n + (n % 2)
    # work on a copy scaled to unit max-entry so norms cannot under- or overflow
    scale = float(np.max(np.abs(m.array)))
    a = np.zeros((size, size))
    a[:n, :n] = m.array / scale if scale > 0 else m.array
    q_acc = np.eye(size)
    fro = np.linalg.norm(a)
    eps = np.finfo(float).eps

    if n > 1 and fro > 0:
        for _ in range(max_sweeps):
            off = np.linalg.norm(a - np.diag(np.diag(a)))
            if off <= eps * fro:
                break
            for p, q in _round_robin(size):
                apq = a[p, q]
                app = a[p, p]
                aqq = a[q, q]
                active = np.abs(apq) > eps * eps * fro
                safe_apq = np.where(active, apq, 1.0)
                theta = (aqq - app) / (2.0 * safe_apq)
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                cs = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * cs
                rot = np.eye(size)
                rot[p, p] = cs
                rot[q, q] = cs
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
                a[p, q] = 0.0
                a[q, p] = 0.0
                q_acc = q_acc @ rot

    evals = np.diag(a)[:n] * scale if scale > 0 else np.diag(a)[:n].copy()
    evecs = q_acc[:n, :n].copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], evecs[:, order]
