import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings

from bethe_perm.analysis import (
    best_permutation,
    bounds_report,
    classify_vertex,
    regular_bethe_bound,
    regular_degree,
    sinkhorn,
    spectral_radius,
    vertex_transition_matrix,
)
from bethe_perm.errors import InfeasibleError, PositivityError, SupportError
from bethe_perm.exact import perm_ryser
from bethe_perm.matrix_io import permutation_matrix
from bethe_perm.spa import run_spa

from .strategies import positive_matrices

EX = np.array([[3.0, 1.0], [1.0, 3.0]])


def test_best_permutation():
    assert best_permutation(EX) == (0, 1)
    assert best_permutation(permutation_matrix((2, 0, 1))) == (2, 0, 1)
    assert best_permutation(np.ones((4, 4))) == (0, 1, 2, 3)
    with pytest.raises(InfeasibleError):
        best_permutation(np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_transition_matrix():
    assert np.allclose(vertex_transition_matrix(EX, (0, 1)), [[0, 1 / 3], [1 / 3, 0]])
    assert np.array_equal(vertex_transition_matrix(np.ones((3, 3)), (1, 2, 0)), np.ones((3, 3)) - np.eye(3))
    assert not vertex_transition_matrix(np.diag([1.0, 2.0, 3.0]), (0, 1, 2)).any()
    with pytest.raises(SupportError):
        vertex_transition_matrix(np.diag([1.0, 2.0]), (1, 0))


def test_transition_matrix_definition(rng):
    th = rng.uniform(size=(4, 4))
    sigma = (3, 1, 0, 2)
    a = vertex_transition_matrix(th, sigma)
    for i in range(4):
        for k in range(4):
            expected = 0.0 if i == k else th[i, sigma[k]] / th[i, sigma[i]]
            assert a[i, k] == pytest.approx(expected)


def test_spectral_radius_examples():
    r = spectral_radius(np.array([[0.0, 1 / 3], [1 / 3, 0.0]]))
    assert r.rho == pytest.approx(1 / 3, rel=1e-12) and r.converged
    for n in (2, 3, 6):
        assert spectral_radius(np.ones((n, n)) - np.eye(n)).rho == pytest.approx(n - 1, rel=1e-12)
    assert spectral_radius(np.zeros((3, 3))).rho == 0.0


def test_spectral_vectors_normalised(rng):
    a = rng.uniform(size=(5, 5))
    r = spectral_radius(a)
    assert r.right_vec.sum() == pytest.approx(1.0) and r.left_vec.sum() == pytest.approx(1.0)
    assert np.allclose(a @ r.right_vec, r.rho * r.right_vec, atol=1e-10)
    assert np.allclose(a.T @ r.left_vec, r.rho * r.left_vec, atol=1e-10)


@settings(max_examples=40)
@given(positive_matrices(2, 7, 1e-9, 5.0))
def test_spectral_radius_matches_eigvals(a):
    r = spectral_radius(a)
    expected = float(np.max(np.abs(np.linalg.eigvals(a))))
    assert r.rho == pytest.approx(expected, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("a, expected", [
    (np.array([[2.0, 1.0], [0.0, 3.0]]), 3.0),
    (np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]), 1.0),
    (np.diag([0.5, 0.0, 0.25]), 0.5),
    (np.array([[0.0, 4.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.5], [0.0, 0.0, 0.5, 0.0]]), 2.0),
])
def test_spectral_radius_reducible_and_periodic(a, expected):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert spectral_radius(a, max_iters=5000).rho == pytest.approx(expected, rel=1e-10)


def test_nilpotent_flags_non_convergence():
    with pytest.warns(RuntimeWarning):
        r = spectral_radius(np.triu(np.ones((4, 4)), 1), max_iters=2000)
    assert not r.converged
    assert r.rho == pytest.approx(0.0, abs=1e-6)


def test_classify_examples():
    v = classify_vertex(EX, (0, 1))
    assert v.verdict == "unique_minimum" and v.rho == pytest.approx(1 / 3)
    assert classify_vertex(np.ones((2, 2))).verdict == "inconclusive"
    for n in range(3, 7):
        v = classify_vertex(np.ones((n, n)))
        assert v.verdict == "not_minimum" and v.rho == pytest.approx(n - 1)


def test_classify_diagonally_dominant_agrees_with_spa(rng):
    for _ in range(10):
        n = int(rng.integers(3, 8))
        th = rng.uniform(size=(n, n))
        p = rng.permutation(n)
        th[np.arange(n), p] *= 100
        v = classify_vertex(th)
        assert v.verdict == "unique_minimum" and v.sigma == tuple(int(x) for x in p)
        assert np.array_equal(np.round(run_spa(th).gamma), permutation_matrix(v.sigma))


def test_classify_not_minimum_means_interior_or_other_vertex(rng):
    for n in range(3, 6):
        g = run_spa(np.ones((n, n))).gamma
        assert np.min(np.abs(g - np.round(g))) > 1e-3


def test_sinkhorn_examples():
    r = sinkhorn(EX)
    assert np.allclose(r.theta_prime, [[0.75, 0.25], [0.25, 0.75]], atol=1e-12)
    ds = np.full((3, 3), 1 / 3)
    r = sinkhorn(ds)
    assert np.allclose(r.d1, r.d1[0]) and np.allclose(r.d1 * r.d2, r.d1[0] * r.d2[0])
    assert np.allclose(r.theta_prime, ds)
    with pytest.raises(PositivityError):
        sinkhorn(np.eye(2))


@settings(max_examples=30)
@given(positive_matrices(2, 8, 0.01, 10.0))
def test_sinkhorn_properties(a):
    r = sinkhorn(a)
    assert r.converged
    assert np.max(np.abs(r.theta_prime.sum(axis=0) - 1)) <= 1e-10
    assert np.max(np.abs(r.theta_prime.sum(axis=1) - 1)) <= 1e-10
    recon = r.d1[:, None] * r.theta_prime * r.d2[None, :]
    assert np.allclose(recon, a, rtol=1e-8, atol=0)
    lhs = perm_ryser(a).log
    rhs = r.log_scale + perm_ryser(r.theta_prime).log
    assert abs(math.expm1(lhs - rhs)) <= 1e-8


def test_regular_bound():
    assert regular_bethe_bound(2, 4).value == pytest.approx(729 / 256, rel=1e-14)
    for n in (1, 3, 7):
        assert regular_bethe_bound(n, 1).value == pytest.approx(1.0)
    assert regular_bethe_bound(3, 2).value == pytest.approx(1.0)


def test_regular_degree():
    assert regular_degree(EX) == 4
    assert regular_degree(np.ones((3, 3)) * 2) == 6
    assert regular_degree(np.array([[1.0, 2.0], [1.0, 2.0]])) is None
    assert regular_degree(np.full((2, 2), 0.5)) is None


def test_bounds_report_worked_example():
    r = bounds_report(EX)
    assert r.perm == pytest.approx(10.0)
    assert r.perm_bethe == pytest.approx(9.0, rel=1e-6)
    assert r.regular_bound == pytest.approx(729 / 256)
    assert r.gurvits_ok and r.conjecture_ok and r.chain_ok
    assert set(r.to_dict()) >= {"log_perm", "log_perm_bethe", "log_perm_frac", "ratio", "chain_ok"}


def test_bounds_report_kron_equality_case():
    r = bounds_report(np.kron(np.eye(3), np.ones((2, 2))))
    assert r.ratio == pytest.approx(8.0, rel=1e-6)
    assert r.conjecture_ok


def test_bounds_report_all_ones_ratio():
    r = bounds_report(np.ones((10, 10)))
    assert r.ratio == pytest.approx(math.sqrt(2 * math.pi * 10 / math.e), rel=0.1)


@settings(max_examples=20)
@given(positive_matrices(2, 6, 1.0, 6.0).map(np.round))
def test_chain_for_integer_regular(a):
    # symmetrise into a constant-line-sum integer matrix
    n = a.shape[0]
    b = a + a.T
    b = b + np.diag(b.sum(axis=1).max() - b.sum(axis=1))
    d = regular_degree(b)
    assert d is not None
    r = run_spa(b).log_perm_bethe.log
    assert r >= regular_bethe_bound(n, d).log + math.log1p(-1e-6)
