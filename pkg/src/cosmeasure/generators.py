"""Benchmark families with known cosine measure, and measure-preserving transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import VectorSet, normalize_set
from .errors import (AugmentationStalledError, InvalidDeltaError, InvalidSizeError,
                     TargetOutOfRangeError)

FAMILIES = (
    "canonical_min",
    "canonical_max",
    "uniform_simplex",
    "min_delta_shift",
    "max_delta_shift",
    "aug_max_delta_shift",
    "optimal_orthogonal",
    "random_pss",
)


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    dim: int
    delta: float | None = None
    size: int | None = None
    augment_count: int | None = None
    seed: int | None = None
    instance: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.family in ("min_delta_shift", "max_delta_shift", "aug_max_delta_shift"):
            if self.delta is None:
                raise InvalidDeltaError(f"{self.family} requires delta")
            _check_delta(self.dim, self.delta)
        if self.family == "optimal_orthogonal":
            if self.size is None:
                raise InvalidSizeError("optimal_orthogonal requires size")
            _check_size(self.dim, self.size)
        if self.family in ("random_pss", "aug_max_delta_shift") and self.seed is None:
            raise ValueError(f"{self.family} requires a seed")

    def params(self) -> dict:
        out = {}
        if self.delta is not None:
            out["delta"] = self.delta
        if self.size is not None:
            out["size"] = self.size
        if self.augment_count is not None:
            out["augment_count"] = self.augment_count
        if self.family in ("random_pss", "aug_max_delta_shift"):
            out["instance"] = self.instance
        return out


@dataclass(eq=False)
class TestCase:
    set: VectorSet
    known_cm: float | None
    spec: GeneratorSpec | None
    transform_log: list[dict] = field(default_factory=list)
    cosine_vector: np.ndarray | None = None

    __test__ = False  # keep pytest from collecting this class


def _check_delta(n: int, delta: float) -> None:
    if n < 2 or not (0.0 <= delta < 1.0 / n):
        raise InvalidDeltaError(f"delta must lie in [0, 1/n) with n >= 2; got delta={delta}, n={n}")


def _check_size(n: int, s: int) -> None:
    if not (n + 1 <= s <= 2 * n):
        raise InvalidSizeError(f"size must lie in [n+1, 2n] = [{n + 1}, {2 * n}]; got {s}")


# -- closed forms ---------------------------------------------------------

def cm_canonical_min(n: int) -> float:
    return 1.0 / math.sqrt(n * n + 2 * (n - 1) * math.sqrt(n))


def cm_canonical_max(n: int) -> float:
    return 1.0 / math.sqrt(n)


def cm_min_delta_shift(n: int, delta: float) -> float:
    return (1 - delta * n) / math.sqrt(n * n * delta * delta - 2 * n * delta + n * n)


def cm_max_delta_shift(n: int, delta: float) -> float:
    return (1 - delta * n) / math.sqrt(n * (delta * delta * n - 2 * delta + 1))


def orthogonal_blocks(n: int, s: int) -> list[int]:
    """Balanced block sizes: ``r`` blocks of the ceiling size first, then the rest."""
    _check_size(n, s)
    q = s - n
    lo, r = divmod(n, q)
    return [lo + 1] * r + [lo] * (q - r)


def cm_optimal_orthogonal(n: int, s: int) -> float:
    q = s - n
    r = n % q
    return 1.0 / math.sqrt((q - r) * (n // q) ** 2 + r * (-(-n // q)) ** 2)


# -- constructions --------------------------------------------------------

def uniform_simplex(n: int) -> np.ndarray:
    """``n x (n+1)`` matrix of unit columns with pairwise dot products ``-1/n``."""
    if n < 1:
        raise ValueError("n must be positive")
    P = np.zeros((n, n + 1))
    for i in range(1, n + 1):
        a = math.sqrt((n - i + 1) * (n + 1) / (n * (n - i + 2)))
        P[i - 1, i - 1] = a
        P[i - 1, i:] = -a / (n - i + 1)
    return P


def canonical_minimal(n: int) -> TestCase:
    cols = list(np.eye(n)) + [-np.ones(n)]
    S = normalize_set(cols)
    return TestCase(S, cm_canonical_min(n), GeneratorSpec("canonical_min", n))


def canonical_maximal(n: int) -> TestCase:
    eye = np.eye(n)
    S = normalize_set(list(eye) + list(-eye))
    return TestCase(S, cm_canonical_max(n), GeneratorSpec("canonical_max", n),
                    cosine_vector=np.ones(n) / math.sqrt(n))


def uniform_simplex_case(n: int) -> TestCase:
    S = VectorSet.from_columns(uniform_simplex(n))
    return TestCase(S, 1.0 / n, GeneratorSpec("uniform_simplex", n), cosine_vector=-np.eye(n)[0])


def minimal_delta_shift(n: int, delta: float) -> TestCase:
    _check_delta(n, delta)
    P = uniform_simplex(n)
    alpha = n / math.sqrt(n * n * delta * delta - 2 * n * delta + n * n)
    shifted = P.copy()
    shifted[0, 1:] += delta
    shifted[:, 1:] *= alpha
    S = VectorSet.from_columns(shifted)
    return TestCase(S, cm_min_delta_shift(n, delta), GeneratorSpec("min_delta_shift", n, delta=delta),
                    cosine_vector=-np.eye(n)[0])


def min_shift_certificate(n: int, delta: float) -> np.ndarray:
    """Positive weights whose combination of the minimal shift columns is zero."""
    alpha = n / math.sqrt(n * n * delta * delta - 2 * n * delta + n * n)
    return np.array([1 - delta * n] + [1 / alpha] * n)


def _in_range(c: float, top: float) -> bool:
    # targets computed as top * j / m can land an ulp or two above top
    return 0 < c <= top * (1 + 4 * np.finfo(float).eps)


def delta_for_target_min(n: int, c: float) -> float:
    if n < 2 or not _in_range(c, 1.0 / n):
        raise TargetOutOfRangeError(f"minimal shift reaches (0, 1/n]; got c={c}, n={n}")
    delta = 1.0 / n + math.sqrt(max(0.0, -(n * n - 1) * (c ** 4 - c ** 2))) / (n * (c * c - 1))
    return min(max(delta, 0.0), math.nextafter(1.0 / n, 0.0))


def maximal_delta_shift(n: int, delta: float) -> TestCase:
    _check_delta(n, delta)
    alpha = 1.0 / math.sqrt(delta * delta * n - 2 * delta + 1)
    B = alpha * (np.eye(n) - delta * np.ones((n, n)))
    S = VectorSet.from_columns(np.hstack([B, -B]))
    return TestCase(S, cm_max_delta_shift(n, delta), GeneratorSpec("max_delta_shift", n, delta=delta),
                    cosine_vector=np.ones(n) / math.sqrt(n))


def delta_for_target_max(n: int, c: float) -> float:
    if n < 2 or not _in_range(c, 1.0 / math.sqrt(n)):
        raise TargetOutOfRangeError(f"maximal shift reaches (0, 1/sqrt(n)]; got c={c}, n={n}")
    delta = 1.0 / n + math.sqrt(max(0.0, (n - 1) * (c * c - c ** 4))) / (n * (c * c - 1))
    return min(max(delta, 0.0), math.nextafter(1.0 / n, 0.0))


def optimal_orthogonal(n: int, s: int) -> TestCase:
    """Orthogonal blocks of balanced size, each carrying a uniform simplex."""
    sizes = orthogonal_blocks(n, s)
    cols = []
    u = np.zeros(n)
    start = 0
    for m in sizes:
        block = uniform_simplex(m)
        for j in range(m + 1):
            v = np.zeros(n)
            v[start:start + m] = block[:, j]
            cols.append(v)
        # the block's own cosine vector is -e_1 with value 1/m
        u[start] = -m
        start += m
    u /= np.linalg.norm(u)
    return TestCase(normalize_set(cols), cm_optimal_orthogonal(n, s),
                    GeneratorSpec("optimal_orthogonal", n, size=s), cosine_vector=u)


def random_pss(n: int, seed: int, instance: int = 0) -> TestCase:
    """Random positive spanning set grown from a diagonally dominant basis.

    Each basis column is assigned to one of ``l ~ U{1..n-1}`` groups; every
    non-empty group contributes the negated sum of its columns.
    """
    if n < 2:
        raise ValueError("random_pss needs n >= 2")
    rng = np.random.default_rng(seed)
    M = rng.random((n, n))
    off = np.abs(M).sum(axis=0) - np.abs(np.diag(M))
    M[np.diag_indices(n)] = off + 1.0
    groups = int(rng.integers(1, n))
    assign = rng.integers(0, groups, size=n)
    extra = [-M[:, assign == g].sum(axis=1) for g in range(groups) if np.any(assign == g)]
    S = normalize_set(list(M.T) + extra)
    return TestCase(S, None, GeneratorSpec("random_pss", n, seed=seed, instance=instance))


def augment(tc: TestCase, count: int, seed: int, cosine_vector=None,
            max_draws: int | None = None) -> TestCase:
    """Add ``count`` random unit vectors lying outside the optimal gap.

    Every added ``v`` satisfies ``u*.v <= cm - eq_tol`` for a cosine vector
    ``u*``, which leaves the cosine measure unchanged.
    """
    if count == 0:
        return tc
    if tc.known_cm is None:
        raise ValueError("augmentation needs a known cosine measure")
    u = cosine_vector if cosine_vector is not None else tc.cosine_vector
    if u is None:
        from .solvers import SolverConfig, vertex_enum_solver

        u = vertex_enum_solver(tc.set, SolverConfig()).result.cosine_vectors[0]
    u = np.asarray(u, dtype=float)
    n = tc.set.dim
    limit = tc.known_cm - tc.set.tol.eq_tol
    rng = np.random.default_rng(seed)
    max_draws = max_draws or max(10_000_000, 1_000_000 * count)
    added: list[np.ndarray] = []
    draws = 0
    while len(added) < count:
        batch = rng.standard_normal((max(64, 4 * count), n))
        norms = np.linalg.norm(batch, axis=1)
        batch = batch[norms > 0] / norms[norms > 0, None]
        for v in batch:
            draws += 1
            if u @ v <= limit:
                added.append(v)
                if len(added) == count:
                    break
        if draws >= max_draws and len(added) / draws < 1e-6:
            raise AugmentationStalledError(f"accepted {len(added)} of {draws} draws")
    S = normalize_set(tc.set.vectors + added, tol=tc.set.tol)
    log = tc.transform_log + [{"kind": "augment", "count": count, "seed": seed}]
    spec = replace(tc.spec, augment_count=count)
    return TestCase(S, tc.known_cm, spec, log, cosine_vector=u)


def aug_max_delta_shift(n: int, delta: float, seed: int, count: int | None = None,
                        instance: int = 0) -> TestCase:
    count = n * n if count is None else count
    tc = augment(maximal_delta_shift(n, delta), count, seed)
    spec = GeneratorSpec("aug_max_delta_shift", n, delta=delta, augment_count=count,
                         seed=seed, instance=instance)
    return TestCase(tc.set, tc.known_cm, spec, tc.transform_log, tc.cosine_vector)


def random_rotation(n: int, seed: int) -> np.ndarray:
    """Uniformly distributed rotation in SO(n).

    QR of a standard normal matrix with the signs of ``R``'s diagonal moved
    into ``Q`` gives a Haar orthogonal matrix; negating the first column
    when the determinant is -1 maps it onto SO(n).
    """
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def rotate(tc: TestCase, seed: int) -> TestCase:
    Q = random_rotation(tc.set.dim, seed)
    S = normalize_set(list((Q @ tc.set.matrix).T), labels=tc.set.labels, tol=tc.set.tol)
    u = None if tc.cosine_vector is None else Q @ tc.cosine_vector
    return TestCase(S, tc.known_cm, tc.spec, tc.transform_log + [{"kind": "rotation", "seed": seed}], u)


def permute(tc: TestCase, seed: int) -> TestCase:
    perm = np.random.default_rng(seed).permutation(tc.set.size)
    labels = None if tc.set.labels is None else tuple(tc.set.labels[i] for i in perm)
    S = VectorSet(tc.set.matrix[:, perm], labels=labels, tol=tc.set.tol)
    entry = {"kind": "permutation", "seed": seed}
    return TestCase(S, tc.known_cm, tc.spec, tc.transform_log + [entry], tc.cosine_vector)


def transform(tc: TestCase, rotation_seed: int, permutation_seed: int) -> TestCase:
    return permute(rotate(tc, rotation_seed), permutation_seed)


def generate(spec: GeneratorSpec) -> TestCase:
    n = spec.dim
    if spec.family == "canonical_min":
        tc = canonical_minimal(n)
    elif spec.family == "canonical_max":
        tc = canonical_maximal(n)
    elif spec.family == "uniform_simplex":
        tc = uniform_simplex_case(n)
    elif spec.family == "min_delta_shift":
        tc = minimal_delta_shift(n, spec.delta)
    elif spec.family == "max_delta_shift":
        tc = maximal_delta_shift(n, spec.delta)
    elif spec.family == "aug_max_delta_shift":
        tc = aug_max_delta_shift(n, spec.delta, spec.seed, spec.augment_count, spec.instance)
    elif spec.family == "optimal_orthogonal":
        tc = optimal_orthogonal(n, spec.size)
    else:
        tc = random_pss(n, spec.seed, spec.instance)
    if spec.augment_count and spec.family != "aug_max_delta_shift":
        tc = augment(tc, spec.augment_count, spec.seed or 0)
    tc.spec = spec
    return tc


def closed_form_cm(spec: GeneratorSpec) -> float | None:
    """Family formula for the cosine measure, or None when it is unknown."""
    n = spec.dim
    return {
        "canonical_min": lambda: cm_canonical_min(n),
        "canonical_max": lambda: cm_canonical_max(n),
        "uniform_simplex": lambda: 1.0 / n,
        "min_delta_shift": lambda: cm_min_delta_shift(n, spec.delta),
        "max_delta_shift": lambda: cm_max_delta_shift(n, spec.delta),
        "aug_max_delta_shift": lambda: cm_max_delta_shift(n, spec.delta),
        "optimal_orthogonal": lambda: cm_optimal_orthogonal(n, spec.size),
        "random_pss": lambda: None,
    }[spec.family]()

