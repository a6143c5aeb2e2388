import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sawlab import walks
from sawlab.cache import ResultCache
from sawlab.errors import BudgetExceeded, GeometryError
from sawlab.lattice import lattice_from_string, step_set, zd_nearest, zd_spread_out
from sawlab.walks import EngineOptions, Walk

Z1 = zd_nearest(1)
Z2 = zd_nearest(2)
Z3 = zd_nearest(3)

SQUARE_WALKS = [1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932, 881500, 2374444]
SQUARE_BRIDGES = [1, 1, 3, 7, 17, 41, 101, 251, 631]
SQUARE_HALF_SPACE = [1, 1, 3, 7, 19, 49, 131, 339, 899]


def test_square_lattice_counts():
    counts = walks.count_walks(Z2, 8)
    assert counts.totals.totals() == SQUARE_WALKS[:9]
    assert counts.totals[8] == 5916
    assert counts.by_endpoint[(1, (1, 0))] == 1
    assert sum(counts.by_endpoint.at(8).values()) == 5916


@pytest.mark.slow
def test_square_lattice_counts_to_fourteen():
    assert walks.count_walks(Z2, 14).totals.totals() == SQUARE_WALKS


def test_other_lattices():
    assert walks.count_walks(Z1, 6).totals.totals() == [1, 2, 2, 2, 2, 2, 2]
    assert walks.count_walks(Z3, 4).totals.totals() == [1, 6, 30, 150, 726]
    spread = zd_spread_out(1, 2)
    assert walks.count_walks(spread, 2).totals.totals() == [1, 4, 12]


def test_endpoint_counts_are_symmetric():
    table = walks.count_walks(Z2, 6).by_endpoint
    for (n, (x, y)), value in table.values.items():
        assert table[(n, (-x, y))] == value
        assert table[(n, (y, x))] == value


def test_weak_self_avoidance():
    simple = walks.count_walks(Z2, 5, lam=0).totals.totals()
    assert simple == [4 ** n for n in range(6)]

    half = walks.count_walks(Z2, 4, lam=Fraction(1, 2))
    for n in range(5):
        assert half.by_endpoint.at(n) == walks.naive_count_walks(Z2, n, Fraction(1, 2))
    assert half.totals[2] == 12 + 4 * Fraction(1, 2)


@given(st.integers(min_value=0, max_value=4), st.fractions(min_value=0, max_value=1, max_denominator=7))
@settings(max_examples=20, deadline=None)
def test_engine_matches_brute_force(n, lam):
    engine = walks.count_walks(Z2, n, lam).by_endpoint.at(n)
    assert engine == walks.naive_count_walks(Z2, n, lam)


def _half_spaces_and_bridges(spec, n):
    """Half-space walks and bridges of exactly n steps, by filtering every step sequence."""
    half_space = bridges = 0
    for steps in itertools.product(step_set(spec), repeat=n):
        walk = Walk.from_steps(steps, spec.d)
        if not walk.is_self_avoiding:
            continue
        first = [site[0] for site in walk.sites]
        if all(x > 0 for x in first[1:]):
            half_space += 1
            if all(x <= first[-1] for x in first):
                bridges += 1
    return half_space, bridges


def test_bridges_and_half_space():
    bridges = walks.count_bridges(Z2, 8)
    assert bridges.totals.totals() == SQUARE_BRIDGES
    assert sum(bridges.by_span.at(5).values()) == 41
    assert bridges.by_span[(3, 3)] == 1

    h = walks.count_half_space(Z2, 8).totals()
    c = walks.count_walks(Z2, 8).totals.totals()
    assert h == SQUARE_HALF_SPACE
    assert all(b <= hn <= cn for b, hn, cn in zip(SQUARE_BRIDGES, h, c))


@pytest.mark.parametrize("spec, n_max", [(Z2, 6), (Z3, 5)])
def test_bridges_and_half_space_match_brute_force(spec, n_max):
    h = walks.count_half_space(spec, n_max).totals()
    b = walks.count_bridges(spec, n_max).totals.totals()
    for n in range(1, n_max + 1):
        assert (h[n], b[n]) == _half_spaces_and_bridges(spec, n)


def test_iter_walks_streams_match_counts():
    assert sum(1 for _ in walks.iter_walks(Z2, 4)) == 100
    assert sum(1 for _ in walks.iter_walks(Z2, 3, self_avoiding=False)) == 64
    bridges = [w for w in walks.iter_walks(Z2, 4, half_space=True) if w.endpoint[0] == max(s[0] for s in w.sites)]
    assert len(bridges) == SQUARE_BRIDGES[4]


def test_walks_to_a_site_and_polygons():
    assert walks.count_walks_to(Z2, 3, (1, 0)) == 2
    assert walks.count_walks_to(Z2, 4, (1, 0)) == 0
    assert walks.count_walks_to(Z2, 0, (0, 0)) == 1
    assert walks.count_returns(Z2, 4) == 8
    assert [walks.count_polygons(Z2, m) for m in (4, 6, 8, 10)] == [1, 2, 7, 28]

    with pytest.raises(ValueError):
        walks.count_polygons(Z2, 2)
    with pytest.raises(GeometryError):
        walks.count_walks_to(Z2, 3, (1, 0, 0))


def test_restricted_walks():
    domain = [(0, 0), (1, 0)]
    inside = walks.count_restricted(Z2, 3, 1, domain, (0, 0), (1, 0))
    assert inside.totals() == [0, 1, 0, 0]

    weak = walks.count_restricted(Z2, 2, 0, domain, (0, 0), (0, 0))
    assert weak.totals() == [1, 0, 1]

    with pytest.raises(GeometryError):
        walks.restricted_tables(Z2, 2, 1, domain, (5, 5))


def test_torus_counts():
    torus = walks.count_torus_walks(Z2, 1, 3).totals()
    assert torus == [1, 4, 12, 32]

    with pytest.raises(ValueError):
        walks.count_torus_walks(Z2, 0, 3)


def test_extension_profile():
    assert walks.extension_profile(Z2, 1, 2) == (3, 3)
    fewest, most = walks.extension_profile(Z2, 2, 4)
    assert fewest <= most
    assert most == 9


def test_node_budget_is_enforced():
    with pytest.raises(BudgetExceeded) as info:
        walks.count_walks(Z2, 10, options=EngineOptions(node_budget=50))
    assert info.value.budget == 50


def test_threads_do_not_change_results():
    serial = walks.count_walks(Z2, 7)
    parallel = walks.count_walks(Z2, 7, options=EngineOptions(threads=2, prefix_depth=2))
    assert parallel.by_endpoint.values == serial.by_endpoint.values


def test_cached_counts_round_trip(tmp_path):
    with ResultCache(str(tmp_path)) as cache:
        options = EngineOptions(cache=cache)
        first = walks.count_walks(Z2, 6, Fraction(1, 3), options)
        assert cache.misses == 1
        second = walks.count_walks(Z2, 6, Fraction(1, 3), options)
        assert cache.hits == 1
    assert second.by_endpoint.values == first.by_endpoint.values
    assert second.totals.totals() == first.totals.totals()


def test_hexagonal_lattice_is_rejected():
    with pytest.raises(GeometryError):
        walks.count_walks(lattice_from_string("hex"), 3)


@pytest.mark.slow
@pytest.mark.parametrize("spec, n_max", [(Z2, 10), (Z3, 7)])
def test_engine_matches_brute_force_at_acceptance_lengths(spec, n_max):
    table = walks.count_walks(spec, n_max).by_endpoint
    for n in range(n_max + 1):
        assert table.at(n) == walks.naive_count_walks(spec, n)


@pytest.mark.slow
def test_worker_count_does_not_change_sixteen_step_counts():
    serial = walks.count_walks(Z2, 16)
    assert serial.totals[16] == 17245012
    for threads in (2, 8):
        parallel = walks.count_walks(Z2, 16, options=EngineOptions(threads=threads))
        assert parallel.by_endpoint.values == serial.by_endpoint.values
