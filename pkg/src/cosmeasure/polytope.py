"""The polytope ``P = {x : d.x <= 1 for every d in S}`` and its vertices.

The LP engine works directly on the inequality system.  A basis is a sorted
tuple of ``n`` constraint indices whose normals are linearly independent; its
basic point solves ``A_B x = 1``.  Because the origin is always feasible no
phase 1 is needed: a crash procedure walks from the origin to a vertex, then
the simplex method pivots between adjacent vertices.

Vertex enumeration is reverse search over feasible bases.  Bland's rule
pivoting toward a fixed objective defines a parent for every non-optimal
basis; the resulting spanning forest is traversed from its roots by checking,
for each adjacent basis, whether its parent pivot leads back.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .core import Tolerances, VectorSet, matrix_rank
from .errors import UnboundedPolytopeError

DEDUP_TOL = 1e-8
_DIR_TOL = 1e-12
_RATIO_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class Polytope:
    source: VectorSet

    @property
    def normals(self) -> np.ndarray:
        """Constraint normals as a ``k x n`` array (row ``i`` is ``d_i``)."""
        return self.source.matrix.T

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def n_constraints(self) -> int:
        return self.source.size

    @property
    def tol(self) -> Tolerances:
        return self.source.tol

    @cached_property
    def reduced(self):
        """``(rank, row_space, lineality)`` with orthonormal column bases."""
        A = self.normals
        r = matrix_rank(A, self.tol.rank_tol)
        _, _, vt = np.linalg.svd(A)
        return r, vt[:r].T, vt[r:].T

    def contains(self, x, tol: float | None = None) -> bool:
        tol = self.tol.eq_tol if tol is None else tol
        return bool(np.all(self.normals @ np.asarray(x, dtype=float) <= 1.0 + tol))


@dataclass(frozen=True, eq=False)
class Vertex:
    point: np.ndarray
    tight_set: tuple[int, ...]
    defining_basis: tuple[int, ...]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.point))


@dataclass(frozen=True, eq=False)
class LpOutcome:
    status: str  # "optimal" | "unbounded"
    vertex: Vertex | None
    objective: float
    basis: tuple[int, ...] | None = None
    ray: np.ndarray | None = None
    pivots: int = 0


def build_polytope(S: VectorSet) -> Polytope:
    return Polytope(S)


def _greedy_basis(A: np.ndarray, candidates: Sequence[int], rank_tol: float) -> tuple[int, ...]:
    """Lexicographically smallest maximal independent subset of ``candidates``.

    A row is kept when its component orthogonal to the rows already chosen
    exceeds ``rank_tol`` relative to its own norm (Gram-Schmidt, applied twice).
    """
    n = A.shape[1]
    chosen: list[int] = []
    Q = np.empty((n, 0))
    for i in sorted(candidates):
        if len(chosen) == n:
            break
        a = A[i]
        na = float(np.linalg.norm(a))
        if na == 0.0:
            continue
        r = a - Q @ (Q.T @ a)
        r = r - Q @ (Q.T @ r)
        nr = float(np.linalg.norm(r))
        if nr > rank_tol * na:
            chosen.append(int(i))
            Q = np.column_stack([Q, r / nr])
    return tuple(chosen)


def _make_vertex(A: np.ndarray, x: np.ndarray, tol: Tolerances, basis=None) -> Vertex:
    slack = 1.0 - A @ x
    tight = tuple(int(i) for i in np.flatnonzero(np.abs(slack) <= tol.eq_tol))
    x = np.array(x, dtype=float)
    x.flags.writeable = False
    if basis is not None and tuple(basis) == tight:
        # nondegenerate vertex: the known nonsingular basis is the only choice
        return Vertex(x, tight, tight)
    return Vertex(x, tight, _greedy_basis(A, tight, tol.rank_tol))


class _Engine:
    """Dense simplex machinery for ``max c.x  s.t.  A x <= 1`` with full-rank ``A``."""

    def __init__(self, A: np.ndarray, tol: Tolerances):
        self.A = A
        self.k, self.n = A.shape
        self.tol = tol
        self.ones = np.ones(self.n)

    def point(self, basis: Sequence[int]) -> np.ndarray:
        return np.linalg.solve(self.A[list(basis)], self.ones)

    def is_feasible_basis(self, basis: Sequence[int]) -> np.ndarray | None:
        """Basic point if ``basis`` is nonsingular and primal feasible, else None."""
        AB = self.A[list(basis)]
        if matrix_rank(AB, self.tol.rank_tol) < self.n:
            return None
        x = np.linalg.solve(AB, self.ones)
        if np.any(self.A @ x > 1.0 + self.tol.eq_tol):
            return None
        return x

    def crash(self, c: np.ndarray):
        """Walk from the origin to a vertex, moving along ``c`` where possible.

        Returns ``(basis, None)`` or ``(None, ray)`` when an improving ray of
        ``c`` is met on the way.
        """
        A, n = self.A, self.n
        x = np.zeros(n)
        work: list[int] = []
        c_norm = float(np.linalg.norm(c))
        while len(work) < n:
            if work:
                _, _, vt = np.linalg.svd(A[work])
                null = vt[len(work):].T
            else:
                null = np.eye(n)
            d = null @ (null.T @ c)
            if np.linalg.norm(d) <= 1e-12 * max(1.0, c_norm):
                d = null[:, 0]
            d = d / np.linalg.norm(d)
            moved = False
            for sign in (1.0, -1.0):
                dd = sign * d
                ad = A @ dd
                ad[work] = 0.0
                mask = ad > _DIR_TOL
                if not mask.any():
                    if c @ dd > 1e-12 * max(1.0, c_norm):
                        return None, dd
                    continue
                slack = np.maximum(1.0 - A @ x, 0.0)
                idx = np.flatnonzero(mask)
                ratios = slack[idx] / ad[idx]
                tmin = ratios.min()
                j = int(idx[ratios <= tmin + _RATIO_TOL * max(1.0, tmin)].min())
                x = x + tmin * dd
                work.append(j)
                moved = True
                break
            if not moved:
                raise RuntimeError("constraint matrix is rank deficient; no vertex exists")
        return tuple(sorted(work)), None

    def step(self, basis: tuple[int, ...], c: np.ndarray, rule: str, x: np.ndarray | None = None):
        """One simplex pivot.

        Returns ``("optimal", basis)``, ``("unbounded", ray)`` or
        ``("pivot", (new_basis, step_length))``.  ``rule`` chooses the
        constraint that leaves the tight set: ``"bland"`` takes the smallest
        index with a negative multiplier, ``"dantzig"`` the most negative.
        The entering constraint is always the smallest index among minimum
        ratios.
        """
        A = self.A
        B_inv = np.linalg.inv(A[list(basis)])
        if x is None:
            x = B_inv @ self.ones
        lam = B_inv.T @ c
        lam_tol = self.tol.eq_tol * max(1.0, float(np.abs(c).max()))
        neg = np.flatnonzero(lam < -lam_tol)
        if neg.size == 0:
            return "optimal", basis
        pos = int(neg[0]) if rule == "bland" else int(neg[np.argmin(lam[neg])])
        d = -B_inv[:, pos]
        ad = A @ d
        ad[list(basis)] = 0.0
        scale = max(1.0, float(np.abs(d).max()))
        mask = ad > _DIR_TOL * scale
        if not mask.any():
            return "unbounded", d / np.linalg.norm(d)
        idx = np.flatnonzero(mask)
        slack = np.maximum(1.0 - A[idx] @ x, 0.0)
        ratios = slack / ad[idx]
        tmin = float(ratios.min())
        enter = int(idx[ratios <= tmin + _RATIO_TOL * max(1.0, tmin)].min())
        new = list(basis)
        new[pos] = enter
        return "pivot", (tuple(sorted(new)), tmin)

    def optimize(self, c: np.ndarray, basis: tuple[int, ...], max_pivots: int | None = None):
        """Dantzig pricing, switching to Bland's rule after a degenerate streak."""
        max_pivots = max_pivots or 50 * self.k + 10 * self.n + 1000
        rule = "dantzig"
        degenerate = 0
        for pivots in range(max_pivots):
            kind, payload = self.step(basis, c, rule)
            if kind == "optimal":
                return "optimal", basis, pivots
            if kind == "unbounded":
                return "unbounded", payload, pivots
            basis, t = payload
            if t <= _RATIO_TOL:
                degenerate += 1
                if degenerate > self.n:
                    rule = "bland"
            else:
                degenerate = 0
        raise RuntimeError("simplex iteration limit reached")

    def parent(self, basis: tuple[int, ...], c: np.ndarray):
        """Bland pivot from a feasible basis; None at an optimal (root) basis."""
        kind, payload = self.step(basis, c, "bland")
        if kind == "optimal":
            return None
        if kind == "unbounded":
            raise UnboundedPolytopeError("improving ray found during reverse search")
        return payload[0]


def solve_lp(P: Polytope, c, start_basis: Sequence[int] | None = None) -> LpOutcome:
    """Maximize ``c.x`` over ``P``.

    Deterministic for given inputs.  ``start_basis`` may warm-start from a
    known feasible basis (for instance the previous optimum); the optimal
    point is always recomputed from the final basis.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (P.dim,) or not np.linalg.norm(c) > 0:
        raise ValueError("objective must be a nonzero vector of the polytope's dimension")
    tol = P.tol
    A = P.normals
    n = P.dim
    r, row_space, lineality = P.reduced
    if r < n:
        leak = lineality @ (lineality.T @ c)
        if np.linalg.norm(leak) > tol.eq_tol * np.linalg.norm(c):
            return LpOutcome("unbounded", None, float("inf"), ray=leak / np.linalg.norm(leak))
        engine = _Engine(A @ row_space, tol)
        c_eff = row_space.T @ c
        start_basis = None
    else:
        engine = _Engine(A, tol)
        c_eff = c

    basis = None
    if start_basis is not None:
        cand = tuple(sorted(int(i) for i in start_basis))
        if len(cand) == n and engine.is_feasible_basis(cand) is not None:
            basis = cand
    if basis is None:
        basis, ray = engine.crash(c_eff)
        if basis is None:
            full_ray = ray if r == n else row_space @ ray
            return LpOutcome("unbounded", None, float("inf"), ray=full_ray)

    status, payload, pivots = engine.optimize(c_eff, basis)
    if status == "unbounded":
        full_ray = payload if r == n else row_space @ payload
        return LpOutcome("unbounded", None, float("inf"), ray=full_ray, pivots=pivots)
    basis = payload
    z = engine.point(basis)
    x = z if r == n else row_space @ z
    vertex = _make_vertex(A, x, tol, basis if r == n else None)
    return LpOutcome("optimal", vertex, float(c @ x), basis=basis, pivots=pivots)


def is_bounded(P: Polytope) -> bool:
    """Probe LPs along every +/- coordinate axis; all must be optimal."""
    if matrix_rank(P.normals, P.tol.rank_tol) < P.dim:
        return False
    eye = np.eye(P.dim)
    for i in range(P.dim):
        for sign in (1.0, -1.0):
            if solve_lp(P, sign * eye[i]).status != "optimal":
                return False
    return True


def enumerate_vertices(P: Polytope) -> Iterator[Vertex]:
    """Yield every vertex of a bounded ``P`` exactly once.

    Degenerate vertices are reported once, from the basis equal to their
    lexicographically smallest independent tight subset.  The generator can
    be abandoned at any time.
    """
    A = P.normals
    tol = P.tol
    n, k = P.dim, P.n_constraints
    if k < n + 1 or not is_bounded(P):
        raise UnboundedPolytopeError("the polytope is unbounded; the source set is not positive spanning")
    engine = _Engine(A, tol)
    start, _ = engine.crash(np.zeros(n))
    objective = A[list(start)].sum(axis=0)
    x0 = engine.point(start)
    top = _make_vertex(A, x0, tol)
    roots = []
    for cand in itertools.combinations(top.tight_set, n):
        if engine.is_feasible_basis(cand) is not None and engine.parent(cand, objective) is None:
            roots.append(cand)

    for root in roots:
        stack = [(root, _children(engine, root, objective))]
        out = _vertex_at(engine, root)
        if out is not None:
            yield out
        while stack:
            node, kids = stack[-1]
            child = next(kids, None)
            if child is None:
                stack.pop()
                continue
            out = _vertex_at(engine, child)
            if out is not None:
                yield out
            stack.append((child, _children(engine, child, objective)))


def _vertex_at(engine: _Engine, basis: tuple[int, ...]) -> Vertex | None:
    x = engine.point(basis)
    v = _make_vertex(engine.A, x, engine.tol, basis)
    return v if v.defining_basis == basis else None


def _children(engine: _Engine, basis: tuple[int, ...], objective: np.ndarray) -> Iterator[tuple[int, ...]]:
    A, tol = engine.A, engine.tol
    AB = A[list(basis)]
    x = np.linalg.solve(AB, engine.ones)
    D = -np.linalg.inv(AB)  # column p moves off constraint basis[p], keeps the others tight
    AD = A @ D
    slack = 1.0 - A @ x
    in_basis = np.zeros(engine.k, dtype=bool)
    in_basis[list(basis)] = True
    for p in range(engine.n):
        col = AD[:, p]
        scale = max(1.0, float(np.abs(D[:, p]).max()))
        up = (col > _DIR_TOL * scale) & ~in_basis
        down = (col < -_DIR_TOL * scale) & ~in_basis & (np.abs(slack) <= tol.eq_tol)
        cands = set(np.flatnonzero(down).tolist())
        if up.any():
            idx = np.flatnonzero(up)
            ratios = np.maximum(slack[idx], 0.0) / col[idx]
            tmin = ratios.min()
            cands.update(idx[ratios <= tmin + _RATIO_TOL * max(1.0, tmin)].tolist())
        for j in sorted(cands):
            new = list(basis)
            new[p] = j
            child = tuple(sorted(new))
            if engine.is_feasible_basis(child) is None:
                continue
            if engine.parent(child, objective) == basis:
                yield child


def brute_force_vertices(P: Polytope, dedup_tol: float = DEDUP_TOL) -> np.ndarray:
    """All vertices by solving every ``n``-subset of constraints.

    Exponential; intended as a test oracle for small ``n`` and ``k``.
    Returns an array of points sorted lexicographically.
    """
    A = P.normals
    n, k = P.dim, P.n_constraints
    tol = P.tol
    kept: list[np.ndarray] = []
    for combo in itertools.combinations(range(k), n):
        AB = A[list(combo)]
        if matrix_rank(AB, tol.rank_tol) < n:
            continue
        x = np.linalg.solve(AB, np.ones(n))
        if np.any(A @ x > 1.0 + tol.eq_tol):
            continue
        if any(np.max(np.abs(x - y)) <= dedup_tol for y in kept):
            continue
        kept.append(x)
    if not kept:
        return np.empty((0, n))
    pts = np.array(kept)
    return pts[np.lexsort(pts.T[::-1])]


def vertex_to_gram(S: VectorSet, v: Vertex):
    """Gram vector ``x/|x|`` with Gram value ``1/|x|`` of the vertex's defining basis."""
    from .core import GramInfo

    norm = float(np.linalg.norm(v.point))
    u = v.point / norm
    u.flags.writeable = False
    return GramInfo(tuple(v.defining_basis), u, 1.0 / norm)
