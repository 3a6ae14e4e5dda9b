import math

import numpy as np
import pytest

from cosmeasure.core import is_positive_spanning
from cosmeasure.errors import InvalidDeltaError, InvalidSizeError, TargetOutOfRangeError
from cosmeasure.generators import (GeneratorSpec, augment, canonical_maximal, canonical_minimal, closed_form_cm,
                                   cm_max_delta_shift, cm_min_delta_shift, delta_for_target_max,
                                   delta_for_target_min, generate, maximal_delta_shift, min_shift_certificate,
                                   minimal_delta_shift, optimal_orthogonal, orthogonal_blocks, permute,
                                   random_pss, random_rotation, rotate, transform, uniform_simplex)
from cosmeasure.polytope import build_polytope, enumerate_vertices
from cosmeasure.solvers import basis_enumeration, kkt_enumeration, vertex_enum_solver


# --- closed forms and constructions -------------------------------------------------

def test_canonical_minimal_values():
    assert canonical_minimal(2).known_cm == pytest.approx(0.3826834, abs=1e-7)
    assert canonical_minimal(3).known_cm == pytest.approx(0.2505629, abs=1e-7)


def test_canonical_minimal_solver_match():
    tc = canonical_minimal(2)
    assert basis_enumeration(tc.set).result.value == pytest.approx(tc.known_cm, abs=1e-10)


def test_canonical_maximal():
    assert canonical_maximal(4).known_cm == 0.5
    one = canonical_maximal(1)
    assert one.known_cm == 1.0
    np.testing.assert_array_equal(one.set.matrix, [[1.0, -1.0]])
    assert len(list(enumerate_vertices(build_polytope(canonical_maximal(3).set)))) == 8


def test_uniform_simplex_two():
    P = uniform_simplex(2)
    np.testing.assert_allclose(P, [[1, -0.5, -0.5], [0, math.sqrt(3) / 2, -math.sqrt(3) / 2]], atol=1e-15)


@pytest.mark.parametrize("n", range(1, 9))
def test_uniform_simplex_properties(n):
    P = uniform_simplex(n)
    np.testing.assert_allclose(np.linalg.norm(P, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(P.sum(axis=1), 0.0, atol=1e-9)
    G = P.T @ P
    off = G[~np.eye(n + 1, dtype=bool)]
    np.testing.assert_allclose(off, -1.0 / n, atol=1e-12)


def test_minimal_shift_examples():
    assert minimal_delta_shift(2, 0.0).known_cm == pytest.approx(0.5, abs=1e-15)
    assert minimal_delta_shift(2, 0.25).known_cm == pytest.approx(0.5 / math.sqrt(3.25), abs=1e-15)
    assert minimal_delta_shift(2, 0.25).known_cm == pytest.approx(0.2773501, abs=1e-7)


@pytest.mark.parametrize("n,delta", [(3, 2 / 9), (2, 0.1), (5, 0.15), (8, 0.0)])
def test_minimal_shift_certificate(n, delta):
    tc = minimal_delta_shift(n, delta)
    w = min_shift_certificate(n, delta)
    assert np.all(w > 0)
    np.testing.assert_allclose(tc.set.matrix @ w, 0.0, atol=1e-10)


def test_maximal_shift_examples():
    assert maximal_delta_shift(2, 0.0).known_cm == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert maximal_delta_shift(2, 0.25).known_cm == pytest.approx(1 / math.sqrt(5), abs=1e-15)
    assert vertex_enum_solver(maximal_delta_shift(2, 0.25).set).result.value == pytest.approx(1 / math.sqrt(5), abs=1e-12)
    raw = np.eye(3) - np.ones((3, 3)) / 6
    alpha = 1 / math.sqrt(1 / 36 * 3 - 2 / 6 + 1)
    np.testing.assert_allclose(np.linalg.norm(alpha * raw, axis=0), 1.0, atol=1e-12)
    # the set has unit columns even before the normalizing pass would act
    np.testing.assert_allclose(maximal_delta_shift(3, 1 / 6).set.matrix[:, :3], alpha * raw, atol=1e-15)


def test_maximal_shift_certificate():
    tc = maximal_delta_shift(4, 0.1)
    np.testing.assert_allclose(tc.set.matrix @ np.ones(8), 0.0, atol=1e-12)


def test_delta_validation():
    with pytest.raises(InvalidDeltaError):
        minimal_delta_shift(3, 1 / 3)
    with pytest.raises(InvalidDeltaError):
        maximal_delta_shift(3, -0.01)
    with pytest.raises(InvalidDeltaError):
        GeneratorSpec("min_delta_shift", 3)


def test_delta_for_target_examples():
    assert delta_for_target_min(3, 1 / 3) == pytest.approx(0.0, abs=1e-12)
    d = delta_for_target_min(3, 0.2)
    assert cm_min_delta_shift(3, d) == pytest.approx(0.2, abs=1e-10)
    with pytest.raises(TargetOutOfRangeError):
        delta_for_target_min(2, 0.6)
    assert delta_for_target_max(4, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert cm_max_delta_shift(4, delta_for_target_max(4, 0.3)) == pytest.approx(0.3, abs=1e-10)
    with pytest.raises(TargetOutOfRangeError):
        delta_for_target_max(4, 0.6)


@pytest.mark.parametrize("n", range(2, 9))
def test_delta_for_target_upper_end_rounding(n):
    top_min, top_max = 1 / n, 1 / math.sqrt(n)
    assert delta_for_target_min(n, top_min * 20 / 20) == pytest.approx(0.0, abs=1e-7)
    assert delta_for_target_max(n, top_max * 20 / 20) == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(TargetOutOfRangeError):
        delta_for_target_max(n, top_max * (1 + 1e-9))


@pytest.mark.parametrize("n", range(2, 9))
def test_shift_families_monotone_in_delta(n):
    grid = np.linspace(0, 1 / n, 60, endpoint=False)
    lo = [cm_min_delta_shift(n, d) for d in grid]
    hi = [cm_max_delta_shift(n, d) for d in grid]
    assert all(b < a for a, b in zip(lo, lo[1:]))
    assert all(b < a for a, b in zip(hi, hi[1:]))
    assert lo[0] == pytest.approx(1 / n, abs=1e-15)
    assert hi[0] == pytest.approx(1 / math.sqrt(n), abs=1e-15)


def test_optimal_orthogonal_examples():
    assert optimal_orthogonal(4, 6).known_cm == pytest.approx(1 / math.sqrt(8), abs=1e-15)
    assert optimal_orthogonal(4, 8).known_cm == pytest.approx(0.5, abs=1e-15)
    tc = optimal_orthogonal(5, 7)
    assert tc.known_cm == pytest.approx(1 / math.sqrt(13), abs=1e-15)
    assert basis_enumeration(tc.set).result.value == pytest.approx(1 / math.sqrt(13), abs=1e-12)
    assert orthogonal_blocks(5, 7) == [3, 2]
    with pytest.raises(InvalidSizeError):
        optimal_orthogonal(4, 9)


@pytest.mark.parametrize("n,s", [(4, 6), (5, 7), (6, 9), (7, 12)])
def test_optimal_orthogonal_equal_vertex_norms(n, s):
    norms = [v.norm for v in enumerate_vertices(build_polytope(optimal_orthogonal(n, s).set))]
    assert max(norms) - min(norms) <= 1e-9


@pytest.mark.parametrize("n", range(2, 7))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_pss_spans(n, seed):
    tc = random_pss(n, seed)
    assert tc.known_cm is None
    assert is_positive_spanning(tc.set)
    assert n + 1 <= tc.set.size <= 2 * n - 1 or n == 2


def test_random_pss_exact_agreement_and_determinism():
    a, b = random_pss(3, 7), random_pss(3, 7)
    assert a.set.equals(b.set)
    vals = [fn(a.set).result.value for fn in (basis_enumeration, kkt_enumeration, vertex_enum_solver)]
    assert max(vals) - min(vals) <= 1e-8


def test_augment_examples():
    tc = augment(canonical_maximal(3), 9, seed=1)
    assert tc.set.size == 15
    assert vertex_enum_solver(tc.set).result.value == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    base = minimal_delta_shift(3, 1 / 6)
    aug = augment(base, 9, seed=2)
    assert basis_enumeration(aug.set).result.value == pytest.approx(base.known_cm, abs=1e-9)
    assert augment(base, 0, seed=3) is base
    assert aug.transform_log[-1] == {"kind": "augment", "count": 9, "seed": 2}


def test_augment_without_known_vector():
    tc = canonical_minimal(3)
    assert tc.cosine_vector is None
    aug = augment(tc, 9, seed=5)
    assert vertex_enum_solver(aug.set).result.value == pytest.approx(tc.known_cm, abs=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_random_rotation_contract(n):
    Q = random_rotation(n, seed=n)
    np.testing.assert_allclose(Q.T @ Q, np.eye(n), atol=1e-12)
    assert np.linalg.det(Q) == pytest.approx(1.0, abs=1e-12)


def test_random_rotation_one_dim():
    assert random_rotation(1, seed=4).tolist() == [[1.0]]


def test_random_rotation_haar_moments():
    # for Haar-distributed Q, E[Q_ij] = 0 and E[Q_ij^2] = 1/n
    n = 3
    Qs = np.array([random_rotation(n, s) for s in range(4000)])
    assert np.all(np.abs(Qs.mean(axis=0)) < 0.04)
    np.testing.assert_allclose((Qs ** 2).mean(axis=0), 1 / n, atol=0.03)


def test_rotation_permutation_invariance():
    tc = canonical_minimal(4)
    moved = transform(tc, 10, 11)
    assert [e["kind"] for e in moved.transform_log] == ["rotation", "permutation"]
    assert vertex_enum_solver(moved.set).result.value == pytest.approx(tc.known_cm, abs=1e-9)


def test_permute_keeps_multiset():
    tc = maximal_delta_shift(3, 0.1)
    p = permute(tc, 3)
    a = np.sort(tc.set.matrix, axis=1)
    b = np.sort(p.set.matrix, axis=1)
    np.testing.assert_array_equal(a, b)


def test_rotate_moves_cosine_vector():
    tc = rotate(maximal_delta_shift(3, 0.1), 8)
    assert vertex_enum_solver(tc.set).result.value == pytest.approx(tc.known_cm, abs=1e-12)
    assert np.max(tc.set.matrix.T @ tc.cosine_vector) == pytest.approx(tc.known_cm, abs=1e-12)


def test_generate_dispatch_and_closed_form():
    specs = [GeneratorSpec("canonical_min", 3), GeneratorSpec("canonical_max", 3),
             GeneratorSpec("uniform_simplex", 3), GeneratorSpec("min_delta_shift", 3, delta=0.1),
             GeneratorSpec("max_delta_shift", 3, delta=0.1),
             GeneratorSpec("aug_max_delta_shift", 3, delta=0.1, augment_count=9, seed=4),
             GeneratorSpec("optimal_orthogonal", 3, size=5), GeneratorSpec("random_pss", 3, seed=1)]
    for spec in specs:
        tc = generate(spec)
        assert tc.spec == spec
        assert tc.known_cm == closed_form_cm(spec)
        if tc.known_cm is not None:
            assert vertex_enum_solver(tc.set).result.value == pytest.approx(tc.known_cm, abs=1e-10)


def test_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec("hexagon", 3)
    with pytest.raises(ValueError):
        GeneratorSpec("random_pss", 3)
    with pytest.raises(InvalidSizeError):
        GeneratorSpec("optimal_orthogonal", 3)
