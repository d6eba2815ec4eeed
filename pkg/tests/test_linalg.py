import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from distsddm.generators import path_graph, random_sddm
from distsddm.linalg import (
    ConvergenceError,
    CapExceeded,
    DisconnectedGraphError,
    InvariantViolation,
    PSDViolation,
    SDDMError,
    Splitting,
    StructuralError,
    WeightedGraph,
    approx_alpha,
    check_inverse_identity,
    condition_bound,
    condition_number,
    direct_solve,
    ground_shift,
    ground_submatrix,
    is_eps_approx,
    laplacian_from_graph,
    loewner_leq,
    m_norm,
    measured_alpha,
    reduce_step,
    spectral_radius,
    standard_splitting,
    validate_sddm,
)

from .conftest import sddm_instances


# -- graphs -----------------------------------------------------------------


def test_graph_normalises_edges():
    G = WeightedGraph(3, ((2, 0, 1.5), (0, 1, 2.0)))
    assert G.edges == ((0, 1, 2.0), (0, 2, 1.5))


@pytest.mark.parametrize(
    "edges",
    [((0, 0, 1.0),), ((0, 1, 0.0),), ((0, 1, -1.0),), ((0, 1, 1.0), (1, 0, 2.0)), ((0, 5, 1.0),)],
)
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(StructuralError):
        WeightedGraph(3, edges)


def test_laplacian_rejects_disconnected_graph():
    with pytest.raises(DisconnectedGraphError) as info:
        laplacian_from_graph(WeightedGraph(4, ((0, 1, 1.0), (2, 3, 1.0))))
    assert info.value.components == [[0, 1], [2, 3]]


def test_laplacian_single_edge():
    L = laplacian_from_graph(WeightedGraph(2, ((0, 1, 2.0),)))
    np.testing.assert_array_equal(L, [[2, -2], [-2, 2]])


def test_laplacian_triangle_and_star():
    tri = laplacian_from_graph(WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0))))
    np.testing.assert_array_equal(np.diag(tri), [2, 2, 2])
    assert np.all(tri[~np.eye(3, dtype=bool)] == -1)
    star = laplacian_from_graph(WeightedGraph(4, ((0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0))))
    assert star[0, 0] == 3


def test_laplacian_passes_sign_and_dominance_but_is_singular():
    L = laplacian_from_graph(path_graph(4))
    res = validate_sddm(L)
    assert {v.rule for v in res.violations} == {"positive definiteness"}


# -- validation and splitting ----------------------------------------------------


def test_validate_accepts_dominant(two_by_two):
    assert validate_sddm(two_by_two).ok


def test_validate_flags_dominance():
    res = validate_sddm(np.array([[1.0, -2.0], [-2.0, 1.0]]))
    assert not res.ok
    assert any(v.row == 0 and v.rule == "dominance" for v in res.violations)


def test_validate_flags_sign():
    res = validate_sddm(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert any(v.rule == "off-diagonal sign" for v in res.violations)


@pytest.mark.parametrize("M", [np.ones((2, 3)), np.array([[2.0, -1.0], [-0.5, 2.0]])])
def test_validate_structural_errors(M):
    with pytest.raises(StructuralError):
        validate_sddm(M)


def test_validate_dominance_only_above_cap():
    # singular Laplacian passes when the eigen check is disabled only if a row is strictly dominant
    L = laplacian_from_graph(path_graph(5))
    assert not validate_sddm(L, eigen_cap=2).ok
    assert validate_sddm(ground_shift(L, 0.1), eigen_cap=2).ok


def test_standard_splitting_examples(two_by_two, path3_plus_identity):
    S = standard_splitting(two_by_two)
    np.testing.assert_array_equal(S.D, [2, 2])
    np.testing.assert_array_equal(S.A, [[0, 1], [1, 0]])
    S = standard_splitting(np.diag([3.0, 5.0]))
    np.testing.assert_array_equal(S.D, [3, 5])
    assert not S.A.any()
    # path-3 Laplacian + I built from the graph
    M = ground_shift(laplacian_from_graph(path_graph(3)), 1.0)
    np.testing.assert_array_equal(M, path3_plus_identity)
    S = standard_splitting(M)
    np.testing.assert_array_equal(S.D, [2, 3, 2])
    np.testing.assert_array_equal(S.A, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])


def test_standard_splitting_rejects_invalid():
    with pytest.raises(SDDMError):
        standard_splitting(np.array([[1.0, -2.0], [-2.0, 1.0]]))


def test_splitting_roundtrip_exact():
    for M in sddm_instances(50):
        S = standard_splitting(M)
        assert np.array_equal(S.M, M)


def test_splitting_is_immutable(two_by_two):
    S = standard_splitting(two_by_two)
    with pytest.raises(ValueError):
        S.A[0, 1] = 5.0


def test_ground_submatrix_drops_row_and_column():
    L = laplacian_from_graph(path_graph(4))
    M, keep = ground_submatrix(L, 1)
    assert keep == [0, 2, 3]
    assert validate_sddm(M).ok


# -- norms ------------------------------------------------------------------


def test_m_norm_examples(two_by_two):
    assert m_norm(two_by_two, [1, 0]) == pytest.approx(math.sqrt(2))
    assert m_norm(two_by_two, [0, 0]) == 0
    assert m_norm(two_by_two, [1, 1]) == pytest.approx(math.sqrt(2))


def test_m_norm_rejects_indefinite():
    with pytest.raises(PSDViolation):
        m_norm(np.array([[1.0, 2.0], [2.0, 1.0]]), [1, -1])


def test_is_eps_approx_examples(two_by_two):
    eps = 1e-3
    x = np.array([1.0, 1.0])
    assert is_eps_approx(x, x, two_by_two, eps)
    # ||(0, delta)||_M / ||(1,1)||_M = |delta| for this M, so delta = 2 eps doubles the allowed error
    delta = 2 * eps
    assert m_norm(two_by_two, [0, delta]) / m_norm(two_by_two, x) == pytest.approx(2 * eps)
    assert not is_eps_approx(np.array([1.0, 1.0 + delta]), x, two_by_two, eps)
    assert not is_eps_approx(np.array([0.1, 0.0]), np.zeros(2), two_by_two, eps)


# -- Loewner order ------------------------------------------------------------


def test_loewner_examples():
    I = np.eye(3)
    assert loewner_leq(I, 2 * I)
    assert not loewner_leq(2 * I, I)
    assert loewner_leq(I, I)
    with pytest.raises(StructuralError):
        loewner_leq(np.eye(2), np.eye(3))


def test_approx_alpha_examples():
    I = np.eye(2)
    assert approx_alpha(I, 2 * I, math.log(2))
    assert not approx_alpha(I, 2 * I, 0.5)


def test_measured_alpha_is_tight(rng):
    for _ in range(20):
        n = 6
        B = rng.standard_normal((n, n))
        X = B @ B.T + np.eye(n)
        C = rng.standard_normal((n, n))
        Y = X + 0.3 * (C @ C.T)
        a = measured_alpha(X, Y)
        assert approx_alpha(X, Y, a)
        assert not approx_alpha(X, Y, a * 0.99 - 1e-6)


# -- spectra -----------------------------------------------------------------


def test_spectral_radius_examples(path3_plus_identity):
    assert spectral_radius(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0, rel=1e-10)
    assert spectral_radius(np.diag([0.3, -0.7])) == pytest.approx(0.7, rel=1e-10)
    S = standard_splitting(path3_plus_identity)
    oracle = np.max(np.abs(np.linalg.eigvals(S.DinvA())))
    rho = spectral_radius(S.DinvA())
    assert rho == pytest.approx(oracle, rel=1e-10)
    assert rho < 1 - 1 / condition_number(path3_plus_identity)


def test_spectral_radius_nonconvergence_carries_estimate():
    M = np.diag([1.0, -1.0 + 1e-12, 0.5])
    with pytest.raises(ConvergenceError) as info:
        spectral_radius(np.kron(np.eye(1), M), max_iter=1, eigen_cap=0, tol=1e-16)
    assert info.value.last_estimate > 0


@given(st.integers(min_value=2, max_value=25), st.integers(min_value=0, max_value=2**31))
def test_spectral_radius_matches_eigensolve(n, seed):
    M = random_sddm(n, np.random.default_rng(seed))
    P = standard_splitting(M).DinvA()
    assert spectral_radius(P) == pytest.approx(np.max(np.abs(np.linalg.eigvals(P))), rel=1e-10, abs=1e-14)


def test_condition_number_examples(two_by_two):
    assert condition_number(np.eye(4)) == pytest.approx(1.0)
    assert condition_number(np.diag([1.0, 10.0])) == pytest.approx(10.0)
    assert condition_number(two_by_two) == pytest.approx(3.0)


def test_condition_number_laplacian_uses_nonzero_eigenvalues():
    # path-3 Laplacian eigenvalues are 0, 1, 3
    assert condition_number(laplacian_from_graph(path_graph(3))) == pytest.approx(3.0)


def test_condition_number_cap():
    with pytest.raises(CapExceeded):
        condition_number(np.eye(5), eigen_cap=4)


def test_condition_bound_examples():
    assert condition_bound(path_graph(4)) == 64
    G = WeightedGraph(3, ((0, 1, 5.0), (1, 2, 1.0)))
    assert condition_bound(G) == 135
    assert condition_bound(path_graph(2), submatrix=True) == 16


# -- splitting identities --------------------------------------------------------


def test_reduce_step_examples(two_by_two, path3_plus_identity):
    np.testing.assert_array_equal(reduce_step(standard_splitting(np.diag([2.0, 3.0]))), np.diag([2.0, 3.0]))
    # oracle: D - A D^-1 A evaluated densely
    S = standard_splitting(two_by_two)
    oracle = np.diag(S.D) - S.A @ np.diag(1 / S.D) @ S.A
    np.testing.assert_allclose(reduce_step(S), oracle, rtol=0, atol=1e-15)
    np.testing.assert_allclose(reduce_step(S), [[1.5, 0.0], [0.0, 1.5]], atol=1e-15)
    assert validate_sddm(reduce_step(standard_splitting(path3_plus_identity))).ok


def test_reduce_step_closure_on_random_corpus():
    for M in sddm_instances(100, seed=3):
        assert validate_sddm(reduce_step(standard_splitting(M))).ok


def test_reduce_step_signals_corruption():
    S = Splitting(np.array([1.0, 1.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))  # singular D - A
    with pytest.raises(InvariantViolation):
        reduce_step(S)


def test_inverse_identity(two_by_two):
    assert check_inverse_identity(standard_splitting(np.diag([2.0, 4.0])))
    assert check_inverse_identity(standard_splitting(two_by_two), tol=1e-12)
    for M in sddm_instances(100, seed=4):
        assert check_inverse_identity(standard_splitting(M), tol=1e-10)


def test_direct_solve_examples(two_by_two, rng):
    np.testing.assert_allclose(direct_solve(two_by_two, [1, 1]), [1, 1], atol=1e-14)
    np.testing.assert_allclose(direct_solve(np.diag([2.0, 4.0]), [2, 4]), [1, 1], atol=1e-14)
    M = random_sddm(20, rng)
    x = rng.standard_normal(20)
    np.testing.assert_allclose(direct_solve(M, M @ x), x, atol=1e-9)
