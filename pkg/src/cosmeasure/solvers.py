"""Cosine measure algorithms: basis, KKT-point and vertex enumeration, random LPs.

Every solver takes a :class:`VectorSet` and a :class:`SolverConfig` and
returns a :class:`SolverReport`.  The time budget is checked between work
granules (a chunk of subsets, one vertex, or one LP round); when it runs out
the best admissible candidate found so far is returned with status
``timeout_incumbent``.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .core import (DEFAULT_TOL, CosineResult, Tolerances, VectorSet, cosine_along,
                   is_positive_spanning)
from .errors import NoCandidateFoundError, NotPositiveSpanningError, UnboundedPolytopeError
from .polytope import build_polytope, enumerate_vertices, solve_lp

METHODS = ("basis_enum", "kkt_enum", "vertex_enum", "random_lp")

# Subsets handled per vectorized batch; also the budget-check granule.
CHUNK = 256


@dataclass(frozen=True)
class SolverConfig:
    tolerances: Tolerances = DEFAULT_TOL
    time_budget: float | None = None
    rng_seed: int = 0
    lp_iterations: int = 1000
    max_reported_vectors: int = 64

    def __post_init__(self):
        if self.lp_iterations < 1:
            raise ValueError("lp_iterations must be at least 1")
        if self.time_budget is not None and not self.time_budget > 0:
            raise ValueError("time_budget must be positive")


@dataclass
class SolverReport:
    result: CosineResult
    method: str
    completed: bool


class _Clock:
    def __init__(self, budget: float | None):
        self.start = time.perf_counter()
        self.deadline = None if budget is None else self.start + budget

    def expired(self) -> bool:
        return self.deadline is not None and time.perf_counter() >= self.deadline

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


class _Incumbent:
    """Tracks the smallest candidate value and every unit vector attaining it."""

    def __init__(self, eq_tol: float):
        self.eq_tol = eq_tol
        self.best = math.inf
        self.found: dict[tuple, tuple[float, np.ndarray]] = {}

    def offer(self, value: float, u: np.ndarray) -> None:
        if value > self.best + self.eq_tol:
            return
        if value < self.best - self.eq_tol:
            self.found = {key: item for key, item in self.found.items()
                          if item[0] <= value + self.eq_tol}
        self.best = min(self.best, value)
        key = tuple(np.round(u, 7) + 0.0)
        if key not in self.found or value < self.found[key][0]:
            self.found[key] = (value, np.array(u, dtype=float))

    def result(self, S: VectorSet, status: str, cap: int, stats: dict) -> CosineResult:
        if math.isinf(self.best):
            return CosineResult(math.nan, [], [], status, stats)
        keep = [u for val, u in self.found.values() if val <= self.best + self.eq_tol]
        keep.sort(key=lambda u: tuple(u))
        truncated = len(keep) > cap
        keep = keep[:cap]
        active = [cosine_along(S, u / np.linalg.norm(u))[1] for u in keep]
        return CosineResult(float(self.best), keep, active, status, stats, truncated)


def _chunks(iterable, size: int):
    it = iter(iterable)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _stack(A: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Stack of column submatrices: ``out[c] == A[:, idx[c]]``."""
    return np.moveaxis(A[:, idx], 1, 0)


def _finish(inc: _Incumbent, S: VectorSet, cfg: SolverConfig, method: str, completed: bool,
            exact_status: str, stats: dict, clock: _Clock) -> SolverReport:
    stats["wall_time"] = clock.elapsed()
    status = exact_status if completed else "timeout_incumbent"
    return SolverReport(inc.result(S, status, cfg.max_reported_vectors, stats), method, completed)


def _full_rank(B: np.ndarray, rank_tol: float) -> np.ndarray:
    """Singular-value rank test for a stack of square matrices with unit columns.

    ``sigma_min / sigma_max >= |det| / n^(n/2)`` (Hadamard), so a large
    determinant settles the test; only the remaining matrices need an SVD.
    """
    n = B.shape[1]
    ok = np.abs(np.linalg.det(B)) > rank_tol * n ** (n / 2)
    unsure = np.flatnonzero(~ok)
    if unsure.size:
        sv = np.linalg.svd(B[unsure], compute_uv=False)
        ok[unsure] = sv[:, -1] > rank_tol * sv[:, 0]
    return ok


def basis_enumeration(S: VectorSet, cfg: SolverConfig = SolverConfig()) -> SolverReport:
    """Minimum admissible Gram value over all bases contained in ``S``.

    A basis's Gram vector ``u`` with value ``g`` is admissible when no
    element of ``S`` makes a cosine larger than ``g`` with ``u``.
    """
    if not is_positive_spanning(S):
        raise NotPositiveSpanningError("basis enumeration requires a positive spanning set")
    tol = cfg.tolerances
    A = S.matrix
    n, k = A.shape
    clock = _Clock(cfg.time_budget)
    inc = _Incumbent(tol.eq_tol)
    stats = {"candidates": 0, "bases": 0, "admissible": 0}
    completed = True
    ones = np.ones((n, 1))
    for idx in _chunks(itertools.combinations(range(k), n), CHUNK):
        if clock.expired():
            completed = False
            break
        stats["candidates"] += len(idx)
        B = _stack(A, idx)
        ok = _full_rank(B, tol.rank_tol)
        if not ok.any():
            continue
        B = B[ok]
        stats["bases"] += len(B)
        w = np.linalg.solve(np.swapaxes(B, 1, 2), np.broadcast_to(ones, (len(B), n, 1)))[..., 0]
        norms = np.linalg.norm(w, axis=1)
        gamma = 1.0 / norms
        U = w / norms[:, None]
        admissible = (U @ A).max(axis=1) <= gamma + tol.cone_tol
        stats["admissible"] += int(admissible.sum())
        for g, u in zip(gamma[admissible], U[admissible]):
            inc.offer(float(g), u)
    return _finish(inc, S, cfg, "basis_enum", completed, "exact", stats, clock)


def _zero_in_hull(T: np.ndarray, eq_tol: float) -> bool:
    """Whether the origin is a convex combination of the columns of ``T``."""
    m = T.shape[1]
    M = np.vstack([T, np.ones((1, m))])
    rhs = np.zeros(T.shape[0] + 1)
    rhs[-1] = 1.0
    _, resid = nnls(M, rhs)
    return resid <= eq_tol


def kkt_enumeration(S: VectorSet, cfg: SolverConfig = SolverConfig()) -> SolverReport:
    """Enumerate KKT candidates over all subsets of size 2 to n+1.

    Full-rank subsets give the unit direction ``x`` proportional to ``T beta``
    where ``beta`` is the minimum-norm solution of ``Gram(T) beta = e``; both
    ``x`` and ``-x`` are kept when no element of ``S`` beats the value they
    make with the subset's first vector.  Rank ``n-1`` subsets whose hull
    contains the origin (and that do not admit equal angles) contribute a
    normal of their span with value 0.
    """
    tol = cfg.tolerances
    A = S.matrix
    n, k = A.shape
    if k < 2:
        raise ValueError("KKT enumeration needs at least two vectors")
    clock = _Clock(cfg.time_budget)
    inc = _Incumbent(tol.eq_tol)
    stats = {"candidates": 0, "full_rank": 0, "perp": 0}
    completed = True
    for m in range(2, min(n + 1, k) + 1):
        e_m = np.ones(m)
        for idx in _chunks(itertools.combinations(range(k), m), CHUNK):
            if clock.expired():
                completed = False
                break
            stats["candidates"] += len(idx)
            T = _stack(A, idx)
            sv = np.linalg.svd(T, compute_uv=False)
            ranks = (sv > tol.rank_tol * sv[:, :1]).sum(axis=1)

            full = np.flatnonzero(ranks == n)
            if full.size:
                Tf = T[full]
                G = np.swapaxes(Tf, 1, 2) @ Tf
                beta = np.linalg.pinv(G, rcond=tol.rank_tol) @ e_m
                y = (Tf @ beta[..., None])[..., 0]
                norms = np.linalg.norm(y, axis=1)
                live = norms > tol.rank_tol
                X = y[live] / norms[live, None]
                first = Tf[live][:, :, 0]
                gamma = np.einsum("ij,ij->i", X, first)
                dots = X @ A
                stats["full_rank"] += int(live.sum())
                for g, x, d in zip(gamma, X, dots):
                    if d.max() <= g + tol.cone_tol:
                        inc.offer(float(g), x)
                    if (-d).max() <= -g + tol.cone_tol:
                        inc.offer(float(-g), -x)

            for c in np.flatnonzero(ranks == n - 1):
                Tc = T[c]
                aug = np.vstack([Tc, -e_m])
                sv_aug = np.linalg.svd(aug, compute_uv=False)
                if int((sv_aug > tol.rank_tol * sv_aug[0]).sum()) != n:
                    continue
                x = np.linalg.svd(Tc)[0][:, -1]
                d = x @ A
                plus = d.max() <= tol.cone_tol
                minus = (-d).max() <= tol.cone_tol
                if not (plus or minus) or not _zero_in_hull(Tc, tol.eq_tol):
                    continue
                stats["perp"] += 1
                if plus:
                    inc.offer(0.0, x)
                if minus:
                    inc.offer(0.0, -x)
        if not completed:
            break
    if completed and math.isinf(inc.best):
        raise NoCandidateFoundError("no subset produced an admissible KKT candidate")
    return _finish(inc, S, cfg, "kkt_enum", completed, "exact", stats, clock)


def vertex_enum_solver(S: VectorSet, cfg: SolverConfig = SolverConfig()) -> SolverReport:
    """Reciprocal norm of the furthest vertex of ``{x : d.x <= 1}``."""
    tol = cfg.tolerances
    clock = _Clock(cfg.time_budget)
    stats = {"vertices": 0}
    best_norm = -1.0
    best: list[np.ndarray] = []
    completed = True
    try:
        for v in enumerate_vertices(build_polytope(S)):
            stats["vertices"] += 1
            nv = v.norm
            if nv > best_norm + tol.eq_tol:
                best = [p for p in best if np.linalg.norm(p) >= nv - tol.eq_tol] + [v.point]
                best_norm = nv
            elif nv >= best_norm - tol.eq_tol:
                best.append(v.point)
                best_norm = max(best_norm, nv)
            if clock.expired():
                completed = False
                break
    except UnboundedPolytopeError as exc:
        raise NotPositiveSpanningError(str(exc)) from exc
    inc = _Incumbent(tol.eq_tol)
    for p in best:
        norm = float(np.linalg.norm(p))
        if norm >= best_norm - tol.eq_tol:
            inc.offer(1.0 / norm, p / norm)
    return _finish(inc, S, cfg, "vertex_enum", completed, "exact", stats, clock)


def sample_unit_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        z = rng.standard_normal(n)
        norm = np.linalg.norm(z)
        if norm > 0:
            return z / norm


def round_rng(seed: int, round_index: int) -> np.random.Generator:
    """Independent stream for one LP round, derived from (seed, round)."""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, round_index])


def random_lp_solver(S: VectorSet, cfg: SolverConfig = SolverConfig()) -> SolverReport:
    """Furthest vertex among optima of LPs with uniformly random objectives.

    ``stats["trace"]`` holds the best value after each completed round.
    """
    if not is_positive_spanning(S):
        raise NotPositiveSpanningError("random LPs require a positive spanning set")
    P = build_polytope(S)
    n = S.dim
    clock = _Clock(cfg.time_budget)
    best_norm = 0.0
    best_x = None
    basis = None
    trace: list[float] = []
    stats = {"lps": 0, "pivots": 0, "trace": trace, "best_round": None}
    completed = True
    for i in range(cfg.lp_iterations):
        if clock.expired():
            completed = False
            break
        c = sample_unit_sphere(round_rng(cfg.rng_seed, i), n)
        out = solve_lp(P, c, start_basis=basis)
        if out.status != "optimal":
            raise NotPositiveSpanningError("an LP over the polytope is unbounded")
        basis = out.basis
        stats["lps"] += 1
        stats["pivots"] += out.pivots
        norm = out.vertex.norm
        if norm > best_norm:
            best_norm, best_x = norm, out.vertex.point
            stats["best_round"] = i
        trace.append(1.0 / best_norm)
    inc = _Incumbent(cfg.tolerances.eq_tol)
    if best_x is not None:
        inc.offer(1.0 / best_norm, best_x / best_norm)
    return _finish(inc, S, cfg, "random_lp", completed, "heuristic", stats, clock)


SOLVERS = {
    "basis_enum": basis_enumeration,
    "kkt_enum": kkt_enumeration,
    "vertex_enum": vertex_enum_solver,
    "random_lp": random_lp_solver,
}


def solve(S: VectorSet, method: str, cfg: SolverConfig = SolverConfig()) -> SolverReport:
    try:
        fn = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None
    return fn(S, cfg)
