import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sawlab import superint
from sawlab.errors import CapExceeded
from sawlab.report import PASS
from sawlab.superint import Form


@pytest.fixture
def cov():
    return superint.random_covariance(3, seed=7)


def test_fermions_anticommute():
    M = 2
    psi, psibar = Form.psi(M, 0), Form.psibar(M, 0)
    assert (psi * psi).terms == {}
    assert (psi * psibar + psibar * psi).terms == {}
    assert (Form.psi(M, 1) * psi).is_close(-(psi * Form.psi(M, 1)))
    assert Form.tau(M, 0).is_even()
    assert not psi.is_even()


def test_bosons_commute_and_differentiate():
    M = 1
    phi, phibar = Form.phi(M, 0), Form.phibar(M, 0)
    assert (phi * phibar).is_close(phibar * phi)
    assert (phi ** 2 * phibar).derivative_phi(0).is_close(2 * phi * phibar)
    assert phibar.derivative_phi(0).terms == {}

    with pytest.raises(ValueError):
        phi + Form.phi(2, 0)


def test_ryser_matches_the_naive_permanent():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert abs(superint.permanent(B) - superint.naive_permanent(B)) < 1e-9
    assert superint.permanent(np.ones((3, 3))) == 6
    assert superint.permanent(np.zeros((0, 0))) == 1


def test_wick_pairing():
    C = np.array([[2, 0.5], [0.5, 1]], dtype=complex)
    assert superint.wick_permanent(C, [0], [1]) == 0.5
    assert abs(superint.wick_permanent(C, [0, 1], [0, 1]) - (2 + 0.25)) < 1e-12
    assert superint.boson_moment(C, (2, 2, 0, 0)) == 2 * 4
    assert superint.boson_moment(C, (1, 0, 0, 0)) == 0

    with pytest.raises(ValueError):
        superint.wick_permanent(C, [0, 0], [0, 1])
    with pytest.raises(ValueError):
        superint.wick_permanent(C, [0], [0, 1])


def test_covariance_validation():
    with pytest.raises(ValueError):
        superint.covariance_from([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(ValueError):
        superint.covariance_from([[-1]])
    with pytest.raises(CapExceeded):
        superint.covariance_from(np.eye(3), cap=2)
    with pytest.raises(ValueError):
        superint.random_covariance(0, seed=1)

    cov = superint.covariance_from([[2, 0.5], [0.5, 1]])
    assert np.allclose(cov.A @ cov.C, np.eye(2))
    assert cov.M == 2


def test_normalisation_and_wick_rule(cov):
    assert superint.norm_check(cov).outcome == PASS
    assert superint.wick_check(cov).outcome == PASS
    value = superint.superexpectation(cov, Form.phibar(3, 0) * Form.phi(3, 2))
    assert abs(value - cov.C[0, 2]) < 1e-9


def test_integration_by_parts(cov):
    M = cov.M
    F = Form.phi(M, 0) * Form.phibar(M, 1) + Form.tau(M, 2)
    assert superint.integration_by_parts_check(cov, 1, F).outcome == PASS


def test_self_avoiding_walk_representation(cov):
    assert superint.saw_representation_check(cov, 0, 2).outcome == PASS
    with pytest.raises(ValueError):
        superint.saw_representation_check(cov, 1, 1)


def test_self_avoiding_sum_on_two_sites():
    C = np.array([[1, 2], [3, 4]], dtype=complex)
    assert superint.self_avoiding_sum(C, 0, 1, []) == 2


def test_loop_model(cov):
    assert superint.loop_model_check(cov, 0, 1, [2]).outcome == PASS
    with pytest.raises(ValueError):
        superint.loop_model_expansion(cov.C, 0, 1, [0])


def test_determinant_and_tau_localisation(cov):
    assert superint.determinant_identity_check(cov).outcome == PASS
    polynomial = {(0, 0, 0): 2, (1, 0, 0): 1, (1, 1, 0): 3, (0, 0, 2): -1}
    assert superint.tau_localisation_check(cov, polynomial).outcome == PASS
    with pytest.raises(ValueError):
        superint.tau_polynomial(3, {(1, 0): 1})


sites = st.integers(min_value=0, max_value=2)


@given(sites, sites)
def test_generators_anticommute(x, y):
    M = 3
    left = Form.psi(M, x) * Form.psibar(M, y)
    right = Form.psibar(M, y) * Form.psi(M, x)
    assert left.is_close(-right)


@given(sites, sites, sites, sites)
def test_even_forms_commute(x, y, u, v):
    M = 3
    first = Form.psi(M, x) * Form.psibar(M, y) + Form.tau(M, x)
    second = Form.psi(M, u) * Form.psibar(M, v)
    assert (first * second).is_close(second * first)


@pytest.mark.slow
def test_identities_over_many_seeded_covariances():
    for M in range(2, 6):
        for seed in range(100):
            cov = superint.random_covariance(M, seed)
            norm = superint.norm_check(cov)
            assert norm.outcome == PASS
            assert float(norm.witnesses[0]["residual"]) < 1e-10
            assert superint.saw_representation_check(cov, 0, M - 1).outcome == PASS
    for M in (6, 7):
        for seed in range(10):
            cov = superint.random_covariance(M, seed)
            assert superint.saw_representation_check(cov, 0, M - 1).outcome == PASS


def test_ryser_matches_the_naive_permanent_up_to_four():
    rng = np.random.default_rng(11)
    for k in range(1, 5):
        for _ in range(5):
            B = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
            assert abs(superint.permanent(B) - superint.naive_permanent(B)) < 1e-12


exponents = st.tuples(*[st.integers(min_value=0, max_value=2)] * 3)
polynomials = st.dictionaries(exponents, st.integers(min_value=-3, max_value=3), min_size=1, max_size=4)


@given(polynomials)
@settings(max_examples=20, deadline=None)
def test_tau_polynomials_localise_at_zero(polynomial):
    cov = superint.random_covariance(3, seed=5)
    assert superint.tau_localisation_check(cov, polynomial).outcome == PASS
