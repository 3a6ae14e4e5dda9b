"""Vector sets, Gram vectors and the cone/angle primitives used by all solvers.

Vectors are stored as the columns of an ``n x k`` matrix, the same layout
used on disk.  Every set is unit-normalized on construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import SingularBasisError, UpdateSingularError, ZeroVectorError


@dataclass(frozen=True)
class Tolerances:
    unit_tol: float = 1e-12
    eq_tol: float = 1e-9
    rank_tol: float = 1e-10
    cone_tol: float = 1e-9

    def __post_init__(self):
        for name in ("unit_tol", "eq_tol", "rank_tol", "cone_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOL = Tolerances()

# Columns already this close to unit length are stored untouched so that
# save/load round trips stay bit-exact.
_ALREADY_UNIT = 1e-15


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class VectorSet:
    """An ordered multiset of ``k`` unit vectors in R^n.

    Use :func:`normalize_set` (or :meth:`from_columns`) to build one from raw
    data; the constructor assumes columns are already unit length and only
    validates them.
    """

    matrix: np.ndarray
    labels: tuple[str, ...] | None = None
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError("a VectorSet needs a non-empty n x k matrix")
        norms = np.linalg.norm(m, axis=0)
        if np.any(np.abs(norms - 1.0) > self.tol.unit_tol):
            raise ValueError("VectorSet columns must be unit vectors; use normalize_set")
        if self.labels is not None and len(self.labels) != m.shape[1]:
            raise ValueError("labels must match the number of vectors")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def from_columns(cls, matrix, labels=None, tol: Tolerances = DEFAULT_TOL) -> "VectorSet":
        m = np.asarray(matrix, dtype=float)
        if m.ndim == 1:
            m = m.reshape(1, -1)
        return normalize_set(list(m.T), labels=labels, tol=tol)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.size

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.matrix[:, j] for j in range(self.size)]

    def subset(self, indices: Sequence[int]) -> np.ndarray:
        return self.matrix[:, list(indices)]

    def equals(self, other: "VectorSet", atol: float = 0.0) -> bool:
        if self.matrix.shape != other.matrix.shape:
            return False
        if atol == 0.0:
            return bool(np.array_equal(self.matrix, other.matrix))
        return bool(np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class GramInfo:
    basis_indices: tuple[int, ...]
    gram_vector: np.ndarray
    gram_value: float


@dataclass(eq=False)
class CosineResult:
    """Outcome of a cosine measure computation.

    ``status`` is ``"exact"`` when an exhaustive method ran to completion,
    ``"heuristic"`` for completed random-LP runs and ``"timeout_incumbent"``
    when a time budget cut the run short.
    """

    value: float
    cosine_vectors: list[np.ndarray]
    active_sets: list[tuple[int, ...]]
    status: str
    stats: dict = field(default_factory=dict)
    truncated: bool = False


def normalize_set(raw_vectors: Iterable, labels=None, tol: Tolerances = DEFAULT_TOL) -> VectorSet:
    """Scale every vector to unit length, preserving order and duplicates."""
    cols = [np.atleast_1d(np.asarray(v, dtype=float)) for v in raw_vectors]
    if not cols:
        raise ValueError("at least one vector is required")
    n = cols[0].shape[0]
    if any(c.shape != (n,) for c in cols):
        raise ValueError("all vectors must share one dimension")
    m = np.column_stack(cols)
    norms = np.linalg.norm(m, axis=0)
    bad = np.flatnonzero(norms <= tol.rank_tol)
    if bad.size:
        raise ZeroVectorError(f"vector(s) {bad.tolist()} have (near) zero norm")
    scale = np.where(np.abs(norms - 1.0) <= _ALREADY_UNIT, 1.0, norms)
    return VectorSet(m / scale, labels=tuple(labels) if labels is not None else None, tol=tol)


def matrix_rank(a: np.ndarray, rank_tol: float = DEFAULT_TOL.rank_tol) -> int:
    """Numerical rank: singular values above ``rank_tol`` times the largest."""
    a = np.atleast_2d(a)
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rank_tol * sv[0]))


def gram_matrix(S: VectorSet, indices: Sequence[int] | None = None) -> np.ndarray:
    sub = S.matrix if indices is None else S.subset(indices)
    return sub.T @ sub


def gram_vector(S: VectorSet, basis_indices: Sequence[int]) -> GramInfo:
    """Unique unit ``u`` with ``u . d_i = gamma > 0`` for each basis member.

    Solves ``B^T w = e``; then ``gamma = 1/|w|`` and ``u = w/|w|``.
    """
    idx = tuple(int(i) for i in basis_indices)
    B = S.subset(idx)
    n = S.dim
    if B.shape != (n, n):
        raise SingularBasisError(f"a basis of R^{n} needs exactly {n} vectors, got {len(idx)}")
    if matrix_rank(B, S.tol.rank_tol) < n:
        raise SingularBasisError(f"vectors {idx} are linearly dependent")
    w = np.linalg.solve(B.T, np.ones(n))
    norm_w = float(np.linalg.norm(w))
    return GramInfo(idx, _frozen(w / norm_w), 1.0 / norm_w)


def rank1_update_inverse(A_inv, u, v, rank_tol: float = DEFAULT_TOL.rank_tol) -> np.ndarray:
    """Inverse of ``A + u v^T`` given ``A^{-1}`` (Sherman-Morrison)."""
    A_inv = np.asarray(A_inv, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    Au = A_inv @ u
    denom = 1.0 + v @ Au
    if abs(denom) <= rank_tol:
        raise UpdateSingularError(f"1 + v^T A^-1 u = {denom:.3e}; the update is singular")
    return A_inv - np.outer(Au, v @ A_inv) / denom


def cone_violators(S: VectorSet, y, alpha: float) -> tuple[int, ...]:
    """Indices of vectors strictly inside the minimum cosine cone around ``y``.

    An empty result means no element of ``S`` makes a cosine larger than
    ``alpha`` with ``y``.
    """
    y = np.asarray(y, dtype=float)
    if abs(np.linalg.norm(y) - 1.0) > max(S.tol.unit_tol, 1e-10):
        raise ValueError("y must be a unit vector")
    dots = S.matrix.T @ y
    return tuple(int(i) for i in np.flatnonzero(dots > alpha + S.tol.cone_tol))


def cosine_along(S: VectorSet, v) -> tuple[float, tuple[int, ...]]:
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > max(S.tol.unit_tol, 1e-10):
        raise ValueError("v must be a unit vector")
    dots = S.matrix.T @ v
    top = float(dots.max())
    active = np.flatnonzero(dots >= top - S.tol.eq_tol)
    return top, tuple(int(i) for i in active)


def is_positive_spanning(S: VectorSet) -> bool:
    """True when nonnegative combinations of ``S`` cover R^n.

    Needs full rank plus a strictly positive combination summing to zero.
    The latter is decided through its LP dual: the polytope
    ``{x : d.x <= 1}`` must be bounded, which the polytope engine checks by
    maximizing and minimizing every coordinate.
    """
    from .polytope import build_polytope, is_bounded

    if S.size < S.dim + 1 or matrix_rank(S.matrix, S.tol.rank_tol) < S.dim:
        return False
    return is_bounded(build_polytope(S))
