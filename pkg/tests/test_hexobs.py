import mpmath
import pytest

from sawlab import hexobs
from sawlab.errors import BudgetExceeded, GeometryError
from sawlab.lattice import STRIP_START, HexVertex, MidEdge, strip_domain
from sawlab.report import FAIL, PASS


def test_critical_fugacity():
    zc = hexobs.critical_z()
    assert abs(zc - mpmath.mpf("0.5411961001461969844")) < 1e-15
    assert hexobs.fugacity("zc") == zc
    assert hexobs.fugacity("1/2") == mpmath.mpf(0.5)


def test_tally_agrees_with_walk_stream():
    domain = hexobs.single_hexagon()
    tally = hexobs.walk_tally(domain, STRIP_START)
    streamed = list(hexobs.iter_mid_edge_walks(domain, STRIP_START))
    assert sum(tally.values()) == len(streamed)
    for walk in streamed:
        assert tally[(walk.end, walk.length, walk.winding)] >= 1
    assert streamed[0].length == 0
    assert max(walk.length for walk in streamed) == 6


def test_start_must_be_on_the_boundary():
    domain = hexobs.single_hexagon()
    inner = MidEdge.of(HexVertex(1, 0), HexVertex(2, 1))
    with pytest.raises(GeometryError):
        hexobs.walk_tally(domain, inner)


def test_observable_at_the_start_is_one():
    domain = hexobs.single_hexagon()
    values = hexobs.observable(domain, STRIP_START, z="1/3")
    assert values[STRIP_START].value == 1
    assert values[STRIP_START].unsigned == 1
    for value in values.values():
        assert abs(value.value) <= value.unsigned + 1e-30


def test_vertex_relation_at_the_critical_point():
    assert hexobs.vertex_identity_check(hexobs.single_hexagon(), STRIP_START).outcome == PASS
    strip = strip_domain(1, 1)
    assert hexobs.vertex_identity_check(strip, strip.start).outcome == PASS
    assert hexobs.vertex_identity_check(strip, strip.start, z="1/2").outcome == FAIL


@pytest.mark.parametrize("precision_bits, ceiling", [(53, "1e-12"), (106, "1e-28")])
def test_vertex_relation_tolerance_follows_the_precision(precision_bits, ceiling):
    for domain in (hexobs.single_hexagon(), strip_domain(1, 1)):
        report = hexobs.vertex_identity_check(domain, domain.start, precision_bits=precision_bits)
        assert report.outcome == PASS
        witness = report.witnesses[0]
        assert mpmath.mpf(witness["residual"]) < mpmath.mpf(ceiling)
        assert mpmath.mpf(witness["tolerance"]) <= mpmath.mpf(ceiling) * (1 + mpmath.mpf(10) ** -9)


@pytest.mark.parametrize("z, sigma", [("1/2", hexobs.CRITICAL_SIGMA), ("zc", "1/2")])
def test_vertex_relation_breaks_away_from_the_critical_parameters(z, sigma):
    for domain in (hexobs.single_hexagon(), strip_domain(1, 1)):
        report = hexobs.vertex_identity_check(domain, domain.start, z=z, sigma=sigma, precision_bits=53)
        assert report.outcome == FAIL
        assert mpmath.mpf(report.witnesses[0]["residual"]) > 1e-3


def test_boundary_sum_vanishes():
    strip = strip_domain(2, 1)
    assert hexobs.boundary_sum_check(strip, strip.start).outcome == PASS


def test_strip_identity():
    for T, L in ((1, 1), (2, 1), (1, 2)):
        assert hexobs.strip_identity_check(T, L).outcome == PASS
    assert hexobs.strip_identity_check(1, 1, precision_bits=53).outcome == PASS
    sums = hexobs.strip_sums(1, 1, z=0)
    assert (sums.A, sums.B, sums.E) == (0, 0, 0)


@pytest.mark.slow
@pytest.mark.parametrize("T, L", [(1, 3), (2, 2)])
def test_strip_identity_on_larger_strips(T, L):
    report = hexobs.strip_identity_check(T, L)
    assert report.outcome == PASS
    assert mpmath.mpf(report.witnesses[0]["residual"]) < 1e-28
    assert hexobs.strip_identity_check(T, L, precision_bits=53).outcome == PASS


def test_strip_sums_grow_with_fugacity():
    low = hexobs.strip_sums(1, 1, z="1/4")
    high = hexobs.strip_sums(1, 1, z="1/2")
    assert low.A < high.A
    assert low.B < high.B
    assert low.E < high.E


def test_strip_recursion_never_fails():
    report = hexobs.strip_recursion_check(2, 1)
    assert report.outcome != FAIL
    with pytest.raises(ValueError):
        hexobs.strip_recursion_check(1, 1)


def test_winding_to_each_boundary_part():
    profile = hexobs.winding_profile(1, 1)
    assert profile["beta"] == frozenset({0})
    assert profile["epsilon"] | profile["epsilon_bar"] <= frozenset({-2, 2})
    assert profile["alpha"] <= frozenset({-3, 3})


def test_enumeration_respects_the_node_budget():
    with pytest.raises(BudgetExceeded):
        hexobs.walk_tally(strip_domain(2, 2), STRIP_START, node_budget=5)
