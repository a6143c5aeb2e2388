from fractions import Fraction

import mpmath
import pytest

from sawlab import series
from sawlab.lattice import origin, zd_nearest, zd_spread_out
from sawlab.powerseries import SeriesTrunc
from sawlab.report import FAIL, PASS

Z1 = zd_nearest(1)
Z2 = zd_nearest(2)
Z3 = zd_nearest(3)


def test_generating_functions():
    assert series.susceptibility_series(Z2, 1, 4).coeffs == (1, 4, 12, 36, 100)
    assert series.two_point_series(Z2, (1, 0), 3).coeffs == (0, 1, 0, 2)
    assert series.bridge_series(Z2, 4).coeffs == (1, 1, 3, 7, 17)


def test_bubble_has_no_odd_terms_on_bipartite_lattices():
    bubble = series.bubble_series(Z2, 6)
    assert bubble[0] == 1
    assert bubble[1] == 0
    assert bubble[2] == 4
    assert series.bubble_parity_check(Z2, 6).outcome == PASS
    assert series.bubble_parity_check(zd_spread_out(1, 2), 4).outcome == PASS


def test_susceptibility_ode():
    for spec in (Z1, Z2, Z3, zd_spread_out(2, 1)):
        assert series.susceptibility_ode_check(spec, 5).outcome == PASS


@pytest.mark.slow
def test_susceptibility_ode_at_acceptance_orders():
    assert series.susceptibility_ode_check(Z2, 8).outcome == PASS
    assert series.susceptibility_ode_check(Z3, 6).outcome == PASS


def test_susceptibility_ode_rejects_counts_that_are_not_walk_counts(monkeypatch):
    made_up = SeriesTrunc.of([1, 4, 13, 35, 101, 999, 7])
    monkeypatch.setattr(series, "susceptibility_series", lambda *args, **kwargs: made_up)
    report = series.susceptibility_ode_check(Z2, 6)
    assert report.outcome == FAIL
    assert report.witnesses[0]["power"] == "2"


def test_guard_and_tails():
    assert series.check_guard(Z2, "1/4") == Fraction(1, 4)
    with pytest.raises(ValueError):
        series.check_guard(Z2, Fraction(1, 3))
    with pytest.raises(ValueError):
        series.check_guard(Z2, -1)
    assert series.geometric_tail(Z2, Fraction(1, 6), 1) == Fraction(4, 3) * Fraction(1, 4) / Fraction(1, 2)
    assert series.polynomial_tail(2, Fraction(9, 10), 1) is None
    assert series.polynomial_tail(0, Fraction(1, 2), 0) == 1


def test_fourier_two_point():
    evaluation = series.fourier_two_point(Z2, Fraction(1, 10), [0, 0], 8)
    chi = series.susceptibility_series(Z2, 1, 8).evaluate(Fraction(1, 10))
    assert abs(evaluation.value - mpmath.mpf(chi.numerator) / chi.denominator) < 1e-12
    low, high = evaluation.interval
    assert low < evaluation.value < high
    assert series.fourier_tail_check(Z2, Fraction(1, 10), ["1/2", 0], 8).outcome == PASS

    with pytest.raises(ValueError):
        series.fourier_two_point(Z2, Fraction(1, 10), [0], 4)


def test_one_dimensional_closed_form():
    assert series.ghat_onedim(0, "1/3") == 1
    assert abs(series.ghat_onedim("1/2", 0) - 3) < 1e-12
    assert series.onedim_check("1/3", "1/4", 30).outcome == PASS


def test_one_dimensional_closed_form_on_a_grid():
    pairs = [(Fraction(i, 10), Fraction(j, 10)) for i in range(1, 6) for j in range(10)]
    assert len(pairs) == 50
    for z, k in pairs:
        assert series.onedim_check(z, k, 40).outcome == PASS


def test_random_walk_reference_integrals():
    m = series.srw_reference(3, series.RETURN_INTEGRAL)
    assert m.classification == series.FINITE
    assert abs(m.value - mpmath.mpf("1.516386059151978")) < 1e-12
    assert abs(m.escape_probability - 1 / m.value) < 1e-12
    assert series.srw_reference(2, series.RETURN_INTEGRAL).classification == series.DIVERGENT
    assert series.srw_reference(4, series.INTERSECTION_INTEGRAL).classification == series.DIVERGENT
    assert series.srw_reference(5, series.INTERSECTION_INTEGRAL).classification == series.FINITE
    assert series.srw_check(3).outcome == PASS
    assert series.srw_check(1).outcome == PASS

    with pytest.raises(ValueError):
        series.srw_reference(3, "bogus")


@pytest.mark.parametrize("d, m_value, digits", [(3, "1.516386059151978", 12), (6, "1.116963", 5)])
def test_random_walk_integrals_stay_bounded_in_higher_dimensions(d, m_value, digits):
    m = series.srw_reference(d, series.RETURN_INTEGRAL)
    green = series.srw_reference(d, series.GREEN_VALUE)
    assert abs(m.value - mpmath.mpf(m_value)) < mpmath.mpf(10) ** -digits
    assert abs(green.value - (m.value - 1)) < 1e-12
    assert m.error < 1e-12
    report = series.srw_check(d)
    assert report.outcome == PASS
    assert mpmath.mpf(report.witnesses[0]["residual"]) < 1e-12


def test_intersection_integral_dominates_the_squared_return_integral():
    for d in (5, 6):
        m = series.srw_reference(d, series.RETURN_INTEGRAL).value
        intersection = series.srw_reference(d, series.INTERSECTION_INTEGRAL).value
        assert m ** 2 < intersection < mpmath.inf


def test_simon_lieb_inequality():
    x = origin(2)
    assert series.simon_lieb_check(Z2, 1, 1, x, x, 6).outcome == PASS
    assert series.simon_lieb_check(Z2, "1/2", 1, x, (2, 1), 6).outcome == PASS
    assert series.simon_lieb_check(Z1, 1, 2, (0,), (5,), 8).outcome == PASS


def test_torus_is_dominated_by_the_full_lattice():
    assert series.torus_domination_check(Z2, 1, 1, 6).outcome == PASS
    assert series.torus_domination_check(Z2, 1, 0, 4).outcome == PASS


def test_susceptibility_lower_bound_from_bridges():
    assert series.chi_lower_bound_check(Z2, 7).outcome == PASS


def test_diagrammatic_bounds_at_small_fugacity():
    reports = series.diagrammatic_bound_check(Z3, Fraction(1, 50), 6)
    assert [r.check_id for r in reports] == [
        "series.pi_bound_1",
        "series.pi_cos_bound_1",
        "series.pi_bound_2",
        "series.pi_cos_bound_2",
    ]
    assert all(r.outcome == PASS for r in reports)
    assert [r.witnesses[0].get("trivial") for r in reports] == [True, True, None, None]


def test_diagrammatic_bounds_never_fail_on_a_true_statement():
    reports = series.diagrammatic_bound_check(Z2, Fraction(1, 4), 6)
    assert reports[0].outcome == PASS
    assert all(r.outcome != FAIL for r in reports)


@pytest.mark.slow
def test_simon_lieb_on_the_three_by_three_box():
    x = origin(2)
    for y in ((0, 0), (1, 1), (2, 1), (3, 0)):
        assert series.simon_lieb_check(Z2, 1, 1, x, y, 8).outcome == PASS


@pytest.mark.slow
def test_diagrammatic_bounds_at_an_eighth():
    reports = series.diagrammatic_bound_check(Z2, Fraction(1, 8), 10)
    assert all(r.outcome != FAIL for r in reports)
    assert reports[0].outcome == PASS
