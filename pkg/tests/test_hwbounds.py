import mpmath
import pytest

from sawlab import hwbounds, walks
from sawlab.errors import GeometryError
from sawlab.lattice import zd_nearest, zd_spread_out
from sawlab.report import PASS
from sawlab.walks import Walk

Z2 = zd_nearest(2)
Z3 = zd_nearest(3)


def test_distinct_partitions():
    table = hwbounds.distinct_partitions(10)
    assert table.values == (1, 1, 1, 2, 2, 3, 4, 5, 6, 8, 10)
    assert table.a_max == 10
    with pytest.raises(ValueError):
        hwbounds.distinct_partitions(0)


def test_unfolding_a_half_space_walk():
    walk = Walk.from_steps([(1, 0), (1, 0), (0, -1), (-1, 0)], 2)
    assert hwbounds.is_half_space(walk)
    assert not hwbounds.is_bridge(walk)
    times, spans = hwbounds.span_decomposition(walk)
    assert (times, spans) == ([3, 4], [2, 1])
    bridge, sequence = hwbounds.unfold(walk)
    assert hwbounds.is_bridge(bridge)
    assert bridge.length == walk.length
    assert bridge.endpoint == (3, -1)
    assert sequence == (2, 1)
    assert list(sequence) == sorted(sequence, reverse=True)
    assert len(set(sequence)) == len(sequence)


def test_bridges_unfold_to_themselves():
    for walk in walks.iter_walks(Z2, 4, half_space=True):
        if hwbounds.is_bridge(walk):
            bridge, spans = hwbounds.unfold(walk)
            assert bridge == walk
            assert len(spans) == 1


def test_unfold_rejects_other_walks():
    with pytest.raises(GeometryError):
        hwbounds.unfold(Walk.from_steps([(-1, 0)], 2))


def test_hw_chain_holds_on_square_and_cubic_lattices():
    for spec, n in ((Z2, 8), (Z3, 5)):
        reports = hwbounds.verify_hw_chain(spec, n)
        assert [r.check_id for r in reports] == ["hw.half_space_split", "hw.unfolding_bound", "hw.assembled"]
        assert all(r.outcome == PASS for r in reports)


def test_unfolding_map_is_injective():
    report = hwbounds.verify_unfolding(Z2, 6)
    assert report.outcome == PASS
    assert report.witnesses[-1]["injective"] is True


def test_polygon_inequality_and_corollary():
    reports = hwbounds.verify_polygon_inequality(Z2, 4)
    assert all(r.outcome == PASS for r in reports)
    with pytest.raises(GeometryError):
        hwbounds.verify_polygon_inequality(zd_spread_out(2, 2), 3)


def test_generating_function_bounds():
    assert hwbounds.verify_bridge_product_bound(Z2, 8).outcome == PASS
    assert hwbounds.verify_chi_bridge_bound(Z2, 8).outcome == PASS


def test_mu_bracket_contains_the_square_lattice_constant():
    bracket = hwbounds.mu_bracket(Z2, 7)
    assert bracket.contains(mpmath.mpf("2.6381585303417408684"))
    assert bracket.lower < bracket.upper
    assert hwbounds.mu_bracket_report(Z2, 7).outcome == PASS


def test_kesten_ratios():
    ratios, report = hwbounds.kesten_ratios(Z2, 8)
    assert report.outcome == PASS
    assert ratios[0] == 36 / 4
    assert all(4 <= r <= 9 for r in ratios)


def test_threshold_scan_is_informational():
    threshold = hwbounds.hw_threshold_scan(Z2, 8)
    assert threshold is None or 0 <= threshold <= 8


def test_polygon_counts_and_supermultiplicativity():
    q = hwbounds.polygon_counts(Z2, 10)
    assert q == {2: 1, 4: 1, 6: 2, 8: 7, 10: 28}
    report = hwbounds.verify_polygon_supermultiplicativity(Z2, 10)
    assert report.outcome == PASS
    assert any(row["convention"] for row in report.witnesses)


def test_square_lattice_strict_bounds():
    report = hwbounds.square_lattice_strict_bounds(7)
    assert report.outcome == PASS
    lower, upper = report.witnesses
    assert lower["n"] == "4"
    assert upper["n"] == "7"


def test_walk_invariants():
    reports = hwbounds.verify_walk_invariants(Z2, 8)
    assert {r.check_id for r in reports} == {
        "walks.submultiplicative",
        "walks.sandwich",
        "walks.monotone",
        "walks.bridge_supermultiplicative",
        "walks.half_space_dominates",
    }
    assert all(r.outcome == PASS for r in reports)

    weak = hwbounds.verify_walk_invariants(Z2, 6, lam="1/2")
    assert [r.check_id for r in weak] == ["walks.submultiplicative"]
    assert weak[0].outcome == PASS


@pytest.mark.slow
def test_mu_bracket_at_fourteen_steps():
    bracket = hwbounds.mu_bracket(Z2, 14)
    assert bracket.lower < mpmath.mpf("2.63815853") < bracket.upper
    assert bracket.lower < mpmath.mpf("2.679193")


@pytest.mark.slow
def test_hw_chain_and_polygon_inequality_at_acceptance_lengths():
    assert all(r.outcome == PASS for r in hwbounds.verify_hw_chain(Z2, 12))
    assert all(r.outcome == PASS for r in hwbounds.verify_polygon_inequality(Z2, 8))
