import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from distsddm.chain import (
    C_CONST,
    EPS_TARGET,
    auto_chain,
    build_chain,
    chain_length,
    chain_matrices,
    gamma_bound,
    measured_eps_d,
    minimal_certified_length,
    richardson_steps,
    verify_chain,
)
from distsddm.generators import path_graph, random_sddm
from distsddm.linalg import condition_number, ground_shift, laplacian_from_graph, standard_splitting


def test_constant_c():
    cbrt2 = 2 ** (1 / 3)
    raw = 2 * math.log(cbrt2 / (cbrt2 - 1))
    assert 3 < raw < 4
    assert C_CONST == 4
    assert EPS_TARGET == pytest.approx(0.23105, abs=1e-5)


@pytest.mark.parametrize("kappa,d", [(1, 2), (2, 3), (3, 4), (100, 9), (128, 9), (128.0001, 10)])
def test_chain_length_examples(kappa, d):
    assert chain_length(kappa) == d


def test_chain_length_examples_bound_values():
    # kappa = 2: gamma = (1/2)^8
    assert -math.log1p(-gamma_bound(2, 3)) == pytest.approx(0.003914, abs=1e-6)
    for kappa in (1.5, 2, 10, 100, 1e4):
        d = chain_length(kappa)
        eps = -math.log1p(-gamma_bound(kappa, d))
        assert eps <= math.log(math.e**C_CONST / (math.e**C_CONST - 1)) + 1e-15
        assert eps < EPS_TARGET


def test_chain_length_domain():
    with pytest.raises(ValueError):
        chain_length(0.5)


@given(st.floats(min_value=1, max_value=1e8), st.floats(min_value=0, max_value=1e3))
def test_chain_length_monotone(kappa, extra):
    assert chain_length(kappa) <= chain_length(kappa + extra)
    d = chain_length(kappa)
    assert 2**d >= C_CONST * kappa
    assert d == 1 or 2 ** (d - 1) < C_CONST * kappa


def test_build_chain_zero_A():
    C = build_chain(standard_splitting(np.diag([2.0, 5.0])), 3, kappa=2.5)
    assert C.gamma == 0.0 and C.eps_d_bound == 0.0
    cert = verify_chain(C)
    assert cert.ok and cert.identity_error == 0.0
    assert cert.measured_eps == pytest.approx(0.0, abs=1e-12)


def test_build_chain_two_by_two(two_by_two):
    S = standard_splitting(two_by_two)
    C = auto_chain(S)
    assert C.kappa_used == pytest.approx(3.0)
    assert C.d == 4
    assert C.gamma == pytest.approx((2 / 3) ** 16, rel=1e-12)
    assert C.eps_d_bound == pytest.approx(-math.log(1 - (2 / 3) ** 16), rel=1e-12)
    cert = verify_chain(C)
    assert cert.identity_ok and cert.identity_error <= 1e-12
    assert cert.ok


def test_build_chain_path3():
    M = ground_shift(laplacian_from_graph(path_graph(3)), 1.0)
    C = auto_chain(standard_splitting(M))
    assert C.eps_d_bound < 0.231


def test_verify_chain_random_instances(rng):
    for _ in range(20):
        M = random_sddm(10, rng)
        C = auto_chain(standard_splitting(M))
        cert = verify_chain(C)
        assert cert.ok
        assert cert.measured_eps <= C.eps_d_bound
        # oracle: eigenvalues of D^-1/2 (D - A_d) D^-1/2
        D = C.base.D
        Ad = chain_matrices(C)[-1]
        s = 1 / np.sqrt(D)
        lam = np.linalg.eigvalsh(s[:, None] * (np.diag(D) - (Ad + Ad.T) / 2) * s[None, :])
        assert cert.measured_eps == pytest.approx(max(-math.log(lam.min()), math.log(lam.max()), 0.0), abs=1e-9)


def test_spectral_radius_of_top_power(rng):
    for _ in range(20):
        M = random_sddm(12, rng)
        S = standard_splitting(M)
        kappa = condition_number(M)
        d = chain_length(kappa)
        P = np.linalg.matrix_power(S.DinvA(), 2**d)
        assert np.max(np.abs(np.linalg.eigvals(P))) <= (1 - 1 / kappa) ** (2**d) + 1e-12


def test_overridden_short_chain_reports_target(two_by_two):
    S = standard_splitting(two_by_two)
    C = build_chain(S, 1)
    cert = verify_chain(C)
    assert cert.ok  # measured eps still within the (loose) bound
    assert not C.certified_by_bound
    assert not cert.below_target  # (1/2)^2 -> eps = ln(4/3) > ln2/3


def test_minimal_certified_length(two_by_two):
    S = standard_splitting(two_by_two)
    d = minimal_certified_length(S)
    assert measured_eps_d(S, d) < EPS_TARGET
    assert d == 1 or measured_eps_d(S, d - 1) >= EPS_TARGET
    assert d <= chain_length(3.0)


def test_richardson_steps():
    assert richardson_steps(1e-6, 0.0) == 1
    rho = 1 - math.exp(-0.1)
    assert richardson_steps(1e-2, 0.1) == math.ceil(math.log(200) / -math.log(rho))
    with pytest.raises(ValueError):
        richardson_steps(0.7, 0.1)
