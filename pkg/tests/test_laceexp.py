from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sawlab import laceexp
from sawlab.errors import GeometryError
from sawlab.lattice import zd_nearest, zd_spread_out
from sawlab.laceexp import GraphOnInterval, Lace
from sawlab.report import FAIL, INCONCLUSIVE, PASS

Z1 = zd_nearest(1)
Z2 = zd_nearest(2)
Z3 = zd_nearest(3)


def test_connectivity_of_graphs_on_intervals():
    assert laceexp.is_connected(GraphOnInterval.of(0, 3, [(0, 3)]))
    assert laceexp.is_connected(GraphOnInterval.of(0, 4, [(0, 2), (1, 4)]))
    assert not laceexp.is_connected(GraphOnInterval.of(0, 4, [(0, 2), (2, 4)]))
    assert not laceexp.is_connected(GraphOnInterval.of(0, 0, []))

    with pytest.raises(GeometryError):
        GraphOnInterval.of(0, 2, [(1, 3)])


def test_lace_of_a_connected_graph():
    graph = GraphOnInterval.of(0, 5, [(0, 2), (0, 3), (1, 4), (2, 5), (3, 5)])
    lace = laceexp.lace_of(graph)
    assert lace.edges == ((0, 3), (2, 5))
    assert laceexp.is_lace(lace.graph())
    assert not laceexp.is_lace(graph)

    with pytest.raises(GeometryError):
        laceexp.lace_of(GraphOnInterval.of(0, 3, [(0, 1)]))


def test_compatible_edges():
    lace = Lace(0, 3, ((0, 3),))
    assert laceexp.compatible_edges(lace) == frozenset({(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)})

    two = Lace(0, 3, ((0, 2), (1, 3)))
    compatible = laceexp.compatible_edges(two)
    assert (0, 3) not in compatible
    assert (1, 2) in compatible


def test_iter_laces_agrees_with_brute_force():
    for b in range(1, 6):
        generated = {lace.edges for lace in laceexp.iter_laces(0, b)}
        brute = {tuple(sorted(g.edges)) for g in laceexp.all_graphs(0, b) if laceexp.is_lace(g)}
        assert {tuple(sorted(edges)) for edges in generated} == brute
    sizes = {lace.size for lace in laceexp.iter_laces(0, 5, n_max=2)}
    assert sizes == {1, 2}


def test_coincidences():
    sites = [(0, 0), (1, 0), (0, 0), (1, 0)]
    assert laceexp.coincidences(sites) == [(0, 2), (1, 3)]


def test_pi_from_laces_matches_the_recursion():
    for spec, m_max in ((Z1, 6), (Z2, 6), (Z3, 4)):
        reports = laceexp.check_pi_paths(spec, m_max)
        assert [r.check_id for r in reports] == ["lace.recursion", "lace.nonnegative", "lace.pi_one_vanishes"]
        assert all(r.outcome == PASS for r in reports)


def test_small_orders_of_pi_on_the_square_lattice():
    table = laceexp.pi_via_laces(Z2, 4)
    assert table.at(1) == {}
    assert table[(2, (0, 0))] == -4
    assert table.coefficient(2, 1, (0, 0)) == 4
    assert table.coefficient(3, 2, (1, 0)) == 1
    assert table.hat(1)[2] == 4
    assert table.hat(1)[4] == 8


def test_recursion_solves_for_the_same_pi():
    recursion = laceexp.pi_via_recursion(Z2, 5)
    laces = laceexp.pi_via_laces(Z2, 5)
    assert recursion.at(1) == {}
    assert recursion[(2, (0, 0))] == -4
    for m in range(1, 6):
        assert recursion.at(m) == {x: v for x, v in laces.at(m).items() if v}


def test_pi_hat_totals_agree_with_laces():
    laces = laceexp.pi_via_laces(Z2, 6).hat()
    totals = laceexp.pi_hat_totals(Z2, 6)
    assert laces.coeffs == totals.coeffs
    pi_hat = laceexp.pi_hat_series(Z2, 6, lace_m_max=5)
    assert pi_hat.total.order == 6
    assert pi_hat.one_loop.order == 5


def test_one_over_d_coefficients():
    for spec in (Z2, Z3, zd_nearest(4)):
        assert laceexp.one_over_d_coefficients(spec).outcome == PASS
    with pytest.raises(ValueError):
        laceexp.one_over_d_coefficients(Z2, 4)


def test_graph_identities_on_walks():
    assert laceexp.graph_identity_check(Z2, 4).outcome == PASS
    assert laceexp.graph_identity_check(Z1, 5).outcome == PASS


def test_chebyshev():
    assert laceexp.chebyshev(0, Fraction(1, 3)) == 1
    assert laceexp.chebyshev(2, Fraction(1, 3)) == 2 * Fraction(1, 9) - 1
    assert laceexp.chebyshev(3, Fraction(1, 2)) == -1


def test_fourier_identity_with_rational_cosines():
    for cosines in ([1, 1], [0, 0], [Fraction(1, 3), Fraction(-1, 2)]):
        assert laceexp.ghat_identity_check(Z2, 6, cosines).outcome == PASS
    assert laceexp.ghat_identity_check(zd_spread_out(1, 2), 4, [Fraction(1, 5)]).outcome == PASS
    with pytest.raises(ValueError):
        laceexp.ghat_identity_check(Z2, 4, [2, 0])


def test_zc_fixed_point_lands_near_the_critical_point():
    estimate = laceexp.zc_fixed_point(Z3, 6)
    assert estimate.converged
    assert 0.212 < estimate.z < 0.215
    assert abs(estimate.mu * estimate.z - 1) < 1e-12
    assert estimate.stopped == laceexp.CONVERGED
    assert laceexp.zc_report(Z3, 6).outcome == PASS


def test_reference_connective_constants():
    assert abs(laceexp.reference_mu(Z2) - mpmath.mpf("2.63815853")) < 1e-12
    assert abs(laceexp.reference_mu(zd_nearest(5)) - mpmath.mpf("8.9")) < 1e-12
    assert laceexp.reference_mu(Z1) is None
    assert laceexp.reference_mu(zd_spread_out(2, 1)) is None


def test_zc_on_the_square_lattice_is_never_refuted():
    estimate = laceexp.zc_fixed_point(Z2, 10)
    assert abs(estimate.z - mpmath.mpf("0.3790522")) < 0.05
    report = laceexp.zc_report(Z2, 10)
    assert report.outcome != FAIL
    assert report.witnesses[0]["in_band"] is True
    if not estimate.converged:
        assert report.outcome == INCONCLUSIVE
        assert report.witnesses[0]["stopped"] == estimate.stopped


@pytest.mark.slow
def test_zc_in_five_dimensions_matches_the_one_over_d_expansion():
    estimate = laceexp.zc_fixed_point(zd_nearest(5), 6)
    assert estimate.converged
    assert abs(estimate.mu - mpmath.mpf("8.9")) < 0.05
    assert laceexp.zc_report(zd_nearest(5), 6).outcome == PASS


@st.composite
def graphs(draw):
    b = draw(st.integers(min_value=1, max_value=6))
    pairs = [(s, t) for s in range(b + 1) for t in range(s + 1, b + 1)]
    return GraphOnInterval.of(0, b, draw(st.sets(st.sampled_from(pairs))))


@given(graphs())
def test_lace_of_a_random_graph(graph):
    if not laceexp.is_connected(graph):
        with pytest.raises(GeometryError):
            laceexp.lace_of(graph)
        return
    lace = laceexp.lace_of(graph)
    assert set(lace.edges) <= set(graph.edges)
    assert laceexp.is_lace(lace.graph())
    assert laceexp.lace_of(lace.graph()) == lace


@pytest.mark.slow
@pytest.mark.parametrize("spec, m_max", [(Z2, 8), (Z3, 6)])
def test_pi_paths_agree_at_acceptance_orders(spec, m_max):
    assert all(r.outcome == PASS for r in laceexp.check_pi_paths(spec, m_max))
