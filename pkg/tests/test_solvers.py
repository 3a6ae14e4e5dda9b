import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cosmeasure.core import cosine_along, is_positive_spanning, normalize_set
from cosmeasure.errors import NoCandidateFoundError, NotPositiveSpanningError
from cosmeasure.generators import (canonical_maximal, canonical_minimal, minimal_delta_shift,
                                   optimal_orthogonal, random_pss, rotate, uniform_simplex_case)
from cosmeasure.solvers import (METHODS, SolverConfig, basis_enumeration, kkt_enumeration, random_lp_solver,
                                round_rng, sample_unit_sphere, solve, vertex_enum_solver)

EXACT = (basis_enumeration, kkt_enumeration, vertex_enum_solver)


def _sorted_rows(vectors):
    a = np.array(vectors)
    return a[np.lexsort(a.T[::-1])]


# --- spec examples -----------------------------------------------------------------

def test_basis_enum_square(square):
    res = basis_enumeration(square).result
    assert res.value == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert res.status == "exact"
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(_sorted_rows(res.cosine_vectors),
                               [[-s, -s], [-s, s], [s, -s], [s, s]], atol=1e-12)


def test_basis_enum_canonical_minimal_three():
    assert basis_enumeration(canonical_minimal(3).set).result.value == pytest.approx(0.2505629, abs=1e-7)


def test_basis_enum_simplex_three_vectors():
    res = basis_enumeration(uniform_simplex_case(2).set).result
    assert res.value == pytest.approx(0.5, abs=1e-15)
    assert len(res.cosine_vectors) == 3


def test_kkt_square(square):
    assert kkt_enumeration(square).result.value == pytest.approx(basis_enumeration(square).result.value, abs=1e-12)


def test_kkt_perp_branch():
    res = kkt_enumeration(normalize_set([(1, 0), (-1, 0)])).result
    assert res.value == 0.0
    np.testing.assert_allclose(_sorted_rows(res.cosine_vectors), [[0, -1], [0, 1]], atol=1e-12)


def test_kkt_non_spanning_value_is_true_minimum():
    # min over unit v of max(v1, v2) is -1/sqrt(2), reached at v = -(1,1)/sqrt(2)
    res = kkt_enumeration(normalize_set([(1, 0), (0, 1)])).result
    assert res.value == pytest.approx(-1 / math.sqrt(2), abs=1e-12)


def test_kkt_no_candidate():
    with pytest.raises(NoCandidateFoundError):
        kkt_enumeration(normalize_set([(1, 0, 0), (0, 1, 0)]))


def test_kkt_minimal_shift():
    res = kkt_enumeration(minimal_delta_shift(3, 1 / 6).set).result
    assert res.value == pytest.approx(0.5 / math.sqrt(0.25 - 1 + 9), abs=1e-12)
    assert res.value == pytest.approx(0.1740777, abs=1e-7)


def test_vertex_enum_square(square):
    res = vertex_enum_solver(square).result
    assert res.value == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert len(res.cosine_vectors) == 4


def test_vertex_enum_rotated_maximal():
    tc = rotate(canonical_maximal(5), seed=11)
    assert vertex_enum_solver(tc.set).result.value == pytest.approx(1 / math.sqrt(5), abs=1e-12)


def test_vertex_enum_optimal_orthogonal():
    assert vertex_enum_solver(optimal_orthogonal(4, 6).set).result.value == pytest.approx(1 / math.sqrt(8), abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 12345])
def test_random_lp_square_one_round(square, seed):
    res = random_lp_solver(square, SolverConfig(rng_seed=seed, lp_iterations=1)).result
    assert res.value == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert res.status == "heuristic"


def test_random_lp_optimal_orthogonal_one_round():
    tc = optimal_orthogonal(6, 9)
    res = random_lp_solver(tc.set, SolverConfig(rng_seed=3, lp_iterations=1)).result
    assert res.value == pytest.approx(tc.known_cm, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_random_lp_minimal_shift_seed_sweep(seed):
    tc = minimal_delta_shift(3, 1 / 6)
    res = random_lp_solver(tc.set, SolverConfig(rng_seed=seed, lp_iterations=300)).result
    assert res.value == pytest.approx(0.1740777, abs=1e-7)
    assert abs(res.value - tc.known_cm) <= 1e-8


def test_sample_unit_sphere_one_dim():
    draws = [sample_unit_sphere(round_rng(7, i), 1)[0] for i in range(4000)]
    assert set(draws) == {-1.0, 1.0}
    assert abs(np.mean(draws)) < 0.05


def test_sample_unit_sphere_mean():
    rng = np.random.default_rng(3)
    z = np.array([sample_unit_sphere(rng, 3) for _ in range(100_000)])
    np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-12)
    assert np.all(np.abs(z.mean(axis=0)) < 0.02)


def test_sample_unit_sphere_deterministic():
    a = [sample_unit_sphere(round_rng(99, i), 4) for i in range(10)]
    b = [sample_unit_sphere(round_rng(99, i), 4) for i in range(10)]
    np.testing.assert_array_equal(a, b)


# --- contracts ----------------------------------------------------------------------

@pytest.mark.parametrize("method", ["basis_enum", "vertex_enum", "random_lp"])
def test_rejects_orthant(method):
    with pytest.raises(NotPositiveSpanningError):
        solve(normalize_set(list(np.eye(3))), method)


def test_unknown_method(square):
    with pytest.raises(ValueError):
        solve(square, "branch_and_bound")


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(lp_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(time_budget=0)


def test_kkt_forced_timeout():
    S = canonical_maximal(8).set
    rep = kkt_enumeration(S, SolverConfig(time_budget=1e-3))
    assert rep.completed is False
    assert rep.result.status == "timeout_incumbent"


@pytest.mark.parametrize("method", METHODS)
def test_budget_granule(method):
    """A budgeted run overshoots by at most about one batch of work."""
    S = rotate(canonical_maximal(8), seed=1).set
    budget = 0.05
    t0 = time.perf_counter()
    rep = solve(S, method, SolverConfig(time_budget=budget, lp_iterations=10**9))
    elapsed = time.perf_counter() - t0
    # PSS pre-checks plus one granule; generous for slow machines
    assert elapsed < budget + 1.0
    if not rep.completed:
        assert rep.result.status == "timeout_incumbent"


def test_report_cap_and_order():
    S = canonical_maximal(4).set  # 16 cosine vectors
    res = basis_enumeration(S, SolverConfig(max_reported_vectors=5)).result
    assert res.truncated and len(res.cosine_vectors) == 5
    full = basis_enumeration(S).result
    assert not full.truncated and len(full.cosine_vectors) == 16
    keys = [tuple(u) for u in full.cosine_vectors]
    assert keys == sorted(keys)
    np.testing.assert_allclose(res.cosine_vectors, full.cosine_vectors[:5])


def test_duplicates_are_harmless():
    tc = canonical_minimal(3)
    dup = normalize_set(tc.set.vectors + tc.set.vectors[:2])
    for fn in EXACT:
        assert fn(dup).result.value == pytest.approx(tc.known_cm, abs=1e-12)


def test_random_lp_trace_monotone():
    S = random_pss(5, seed=4).set
    res = random_lp_solver(S, SolverConfig(rng_seed=1, lp_iterations=200)).result
    trace = res.stats["trace"]
    assert len(trace) == 200
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert trace[-1] == res.value


def test_random_lp_deterministic():
    S = random_pss(4, seed=8).set
    a = random_lp_solver(S, SolverConfig(rng_seed=5, lp_iterations=50)).result
    b = random_lp_solver(S, SolverConfig(rng_seed=5, lp_iterations=50)).result
    assert a.value == b.value and a.stats["trace"] == b.stats["trace"]


# --- properties ------------------------------------------------------------------------

def _pss(seed, n, k):
    rng = np.random.default_rng(seed)
    while True:
        S = normalize_set(list(rng.standard_normal((k, n))))
        if is_positive_spanning(S):
            return S


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 5), extra=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_exact_methods_agree(n, extra, seed):
    S = _pss(seed, n, n + extra)
    vals = [fn(S).result.value for fn in EXACT]
    assert max(vals) - min(vals) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 5), extra=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_reported_vectors_attain_value(n, extra, seed):
    S = _pss(seed, n, n + extra)
    for fn in EXACT:
        res = fn(S).result
        for u in res.cosine_vectors:
            assert cosine_along(S, u)[0] == pytest.approx(res.value, abs=1e-9)
    res = random_lp_solver(S, SolverConfig(lp_iterations=20)).result
    assert cosine_along(S, res.cosine_vectors[0])[0] == pytest.approx(res.value, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 5), extra=st.integers(1, 6), seed=st.integers(0, 2**32 - 1),
       iters=st.integers(1, 30))
def test_random_lp_never_below_exact(n, extra, seed, iters):
    S = _pss(seed, n, n + extra)
    exact = vertex_enum_solver(S).result.value
    assert random_lp_solver(S, SolverConfig(rng_seed=seed, lp_iterations=iters)).result.value >= exact - 1e-8


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 4), k=st.integers(2, 7), seed=st.integers(0, 2**32 - 1))
def test_positive_value_iff_spanning(n, k, seed):
    S = normalize_set(list(np.random.default_rng(seed).standard_normal((k, n))))
    if is_positive_spanning(S):
        value = kkt_enumeration(S).result.value
        assert value > 0
        assert basis_enumeration(S).result.value == pytest.approx(value, abs=1e-8)
    else:
        try:
            value = kkt_enumeration(S).result.value
        except NoCandidateFoundError:
            return  # too few vectors for any subset the algorithm inspects
        assert value <= 1e-9
