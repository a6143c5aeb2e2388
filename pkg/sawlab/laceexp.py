"""Lace expansion combinatorics.

Graphs live on integer intervals [a, b]; an edge st is a pair a <= s < t <= b. A graph is
connected when the open intervals (s, t) of its edges cover (a, b). Laces are the minimally
connected graphs. The expansion coefficients pi_m^(N)(x) are computed twice: directly from laces
and compatible edges over all m-step walks, and by solving the convolution recursion
c_n = c_1 * c_{n-1} + sum_m pi_m * c_{n-m} for pi_m.
"""
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import mpmath

from sawlab import walks
from sawlab.errors import GeometryError
from sawlab.lattice import ZD_NEAREST, LatticeSpec, Site, step_set
from sawlab.powerseries import SeriesTrunc
from sawlab.report import FAIL, INCONCLUSIVE, PASS, CheckReport, inequality_report, make_report

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass(frozen=True)
class GraphOnInterval:
    a: int
    b: int
    edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self):
        if self.a > self.b:
            raise GeometryError("Interval is empty", (self.a, self.b))
        for s, t in self.edges:
            if not self.a <= s < t <= self.b:
                raise GeometryError("Edge outside the interval", (s, t))

    @staticmethod
    def of(a: int, b: int, edges: Iterable[Edge]) -> "GraphOnInterval":
        return GraphOnInterval(a, b, frozenset((min(s, t), max(s, t)) for s, t in edges))


def is_connected(graph: GraphOnInterval) -> bool:
    """True iff (a, b) is covered by the open intervals of the edges."""
    a, b = graph.a, graph.b
    if a == b:
        return False
    for c in range(a, b):
        # the unit gap (c, c+1) must be covered
        if not any(s <= c and c + 1 <= t for s, t in graph.edges):
            return False
    for c in range(a + 1, b):
        if not any(s < c < t for s, t in graph.edges):
            return False
    return True


@dataclass(frozen=True)
class Lace:
    a: int
    b: int
    edges: Tuple[Edge, ...]

    @property
    def size(self) -> int:
        return len(self.edges)

    def graph(self) -> GraphOnInterval:
        return GraphOnInterval(self.a, self.b, frozenset(self.edges))


def lace_of(graph: GraphOnInterval) -> Lace:
    """The lace of a connected graph: t_1 = max{t : a t in G}, then repeatedly
    t_{i+1} = max{t : s t in G, s < t_i} and s_{i+1} = min{s : s t_{i+1} in G}."""
    if not is_connected(graph):
        raise GeometryError("lace_of needs a connected graph", sorted(graph.edges))
    a, b = graph.a, graph.b
    t = max(t for s, t in graph.edges if s == a)
    chosen = [(a, t)]
    while t < b:
        t_next = max(t2 for s2, t2 in graph.edges if s2 < t)
        s_next = min(s2 for s2, t2 in graph.edges if t2 == t_next)
        chosen.append((s_next, t_next))
        t = t_next
    return Lace(a, b, tuple(chosen))


def is_lace(graph: GraphOnInterval) -> bool:
    return is_connected(graph) and set(lace_of(graph).edges) == set(graph.edges)


def compatible_edges(lace: Lace) -> FrozenSet[Edge]:
    """C(L) = {st not in L : the lace of L + st is L}, by the defining test."""
    own = set(lace.edges)
    compatible = set()
    for s, t in itertools.combinations(range(lace.a, lace.b + 1), 2):
        if (s, t) in own:
            continue
        if lace_of(GraphOnInterval(lace.a, lace.b, frozenset(own | {(s, t)}))).edges == lace.edges:
            compatible.add((s, t))
    return frozenset(compatible)


def iter_laces(a: int, b: int, n_max: Optional[int] = None) -> Iterator[Lace]:
    """Every lace on [a, b], generated from s_1 = a, t_N = b, s_{l+1} < t_l <= s_{l+2}."""
    if a >= b:
        return

    def extend(edges: List[Edge]) -> Iterator[Lace]:
        s_last, t_last = edges[-1]
        if t_last == b:
            yield Lace(a, b, tuple(edges))
            return
        if n_max is not None and len(edges) >= n_max:
            return
        floor = edges[-2][1] if len(edges) > 1 else a
        for s in range(max(s_last + 1, floor), t_last):
            for t in range(t_last + 1, b + 1):
                edges.append((s, t))
                yield from extend(edges)
                edges.pop()

    for t in range(a + 1, b + 1):
        yield from extend([(a, t)])


def all_graphs(a: int, b: int) -> Iterator[GraphOnInterval]:
    pairs = list(itertools.combinations(range(a, b + 1), 2))
    for size in range(len(pairs) + 1):
        for chosen in itertools.combinations(pairs, size):
            yield GraphOnInterval(a, b, frozenset(chosen))


# ---------------------------------------------------------------------------
# pi tables


@dataclass(frozen=True)
class PiTable:
    """pi_m^(N)(x) from laces (``by_lace``) and the signed pi_m(x) = sum_N (-1)^N pi_m^(N)(x)."""

    lattice: str
    m_max: int
    signed: Mapping[Tuple[int, Site], int]
    by_lace: Mapping[Tuple[int, int, Site], int] = field(default_factory=dict)
    n_max: Optional[int] = None

    def __getitem__(self, index: Tuple[int, Site]) -> int:
        return self.signed.get(index, 0)

    def coefficient(self, m: int, n: int, x: Site) -> int:
        return self.by_lace.get((m, n, x), 0)

    def at(self, m: int) -> Dict[Site, int]:
        return {x: value for (order, x), value in self.signed.items() if order == m}

    def hat(self, n: Optional[int] = None) -> SeriesTrunc:
        """sum_x pi_m(x) by order m, or sum_x pi_m^(N)(x) for a fixed N."""
        coeffs = [0] * (self.m_max + 1)
        if n is None:
            for (m, _), value in self.signed.items():
                coeffs[m] += value
        else:
            for (m, order, _), value in self.by_lace.items():
                if order == n:
                    coeffs[m] += value
        return SeriesTrunc.of(coeffs)


def coincidences(sites: Sequence[Site]) -> List[Edge]:
    """Pairs s < t with w(s) = w(t), i.e. U_st = -1."""
    times: Dict[Site, List[int]] = defaultdict(list)
    for t, site in enumerate(sites):
        times[site].append(t)
    return sorted(pair for visits in times.values() for pair in itertools.combinations(visits, 2))


@lru_cache(maxsize=None)
def _lace_masks(m: int, n_max: Optional[int]) -> Tuple[Tuple[int, int, int], ...]:
    """(N, lace mask, compatible mask) for every lace on [0, m], over the pair index of [0, m]."""
    index = {pair: i for i, pair in enumerate(itertools.combinations(range(m + 1), 2))}
    masks = []
    for lace in iter_laces(0, m, n_max):
        lace_mask = sum(1 << index[edge] for edge in lace.edges)
        compatible_mask = sum(1 << index[edge] for edge in compatible_edges(lace))
        masks.append((lace.size, lace_mask, compatible_mask))
    logger.debug("%d laces on [0, %d]", len(masks), m)
    return tuple(masks)


def pi_via_laces(spec: LatticeSpec, m_max: int, n_max: Optional[int] = None) -> PiTable:
    """pi_m^(N)(x) = sum over m-step walks to x of the laces L with N edges such that every
    edge of L is a coincidence and no compatible edge is."""
    if m_max < 1:
        raise ValueError("m_max must be positive", m_max)
    by_lace: Dict[Tuple[int, int, Site], int] = defaultdict(int)
    for m in range(1, m_max + 1):
        index = {pair: i for i, pair in enumerate(itertools.combinations(range(m + 1), 2))}
        laces = _lace_masks(m, n_max)
        patterns: Dict[Tuple[int, Site], int] = defaultdict(int)
        for walk in walks.iter_walks(spec, m, self_avoiding=False):
            pairs = coincidences(walk.sites)
            if pairs:
                patterns[(sum(1 << index[pair] for pair in pairs), walk.endpoint)] += 1
        for (mask, x), multiplicity in patterns.items():
            for n, lace_mask, compatible_mask in laces:
                if lace_mask & ~mask == 0 and compatible_mask & mask == 0:
                    by_lace[(m, n, x)] += multiplicity
    signed: Dict[Tuple[int, Site], int] = defaultdict(int)
    for (m, n, x), value in by_lace.items():
        signed[(m, x)] += (-1) ** n * value
    return PiTable(
        lattice=spec.name,
        m_max=m_max,
        signed={k: v for k, v in signed.items() if v},
        by_lace=dict(by_lace),
        n_max=n_max,
    )


def _convolve(f: Mapping[Site, int], g: Mapping[Site, int]) -> Dict[Site, int]:
    out: Dict[Site, int] = defaultdict(int)
    for x, fx in f.items():
        for y, gy in g.items():
            out[tuple(a + b for a, b in zip(x, y))] += fx * gy
    return out


def pi_via_recursion(
    spec: LatticeSpec, m_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> PiTable:
    """Solve c_n(x) = (c_1 * c_{n-1})(x) + sum_{m=1}^{n} (pi_m * c_{n-m})(x) for pi_n."""
    table = walks.count_walks(spec, m_max, 1, options).by_endpoint
    c = [table.at(n) for n in range(m_max + 1)]
    pi: List[Dict[Site, int]] = [{}]
    for n in range(1, m_max + 1):
        current: Dict[Site, int] = defaultdict(int, c[n])
        for x, value in _convolve(c[1], c[n - 1]).items():
            current[x] -= value
        for m in range(1, n):
            for x, value in _convolve(pi[m], c[n - m]).items():
                current[x] -= value
        pi.append({x: v for x, v in current.items() if v})
    signed = {(m, x): v for m in range(1, m_max + 1) for x, v in pi[m].items()}
    return PiTable(lattice=spec.name, m_max=m_max, signed=signed)


def pi_hat_totals(spec: LatticeSpec, m_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS) -> SeriesTrunc:
    """sum_x pi_m(x) from the spatially summed recursion c_n = |Omega| c_{n-1} + sum_m p_m c_{n-m}."""
    c = walks.count_walks(spec, m_max, 1, options).totals.totals()
    omega = len(step_set(spec))
    p = [0]
    for n in range(1, m_max + 1):
        p.append(c[n] - omega * c[n - 1] - sum(p[m] * c[n - m] for m in range(1, n)))
    return SeriesTrunc.of(p)


@dataclass(frozen=True)
class PiHat:
    total: SeriesTrunc
    one_loop: SeriesTrunc
    two_loop: SeriesTrunc


def pi_hat_series(
    spec: LatticeSpec,
    m_max: int,
    lace_m_max: Optional[int] = None,
    options: walks.EngineOptions = walks.DEFAULT_OPTIONS,
) -> PiHat:
    """Pi_z(0) to order m_max, and its one- and two-edge lace parts to order lace_m_max."""
    lace_m_max = m_max if lace_m_max is None else min(lace_m_max, m_max)
    laces = pi_via_laces(spec, lace_m_max, n_max=2)
    return PiHat(total=pi_hat_totals(spec, m_max, options), one_loop=laces.hat(1), two_loop=laces.hat(2))


def check_pi_paths(
    spec: LatticeSpec, m_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> List[CheckReport]:
    """Laces against recursion, nonnegativity of pi^(N), and pi_1 = 0."""
    laces = pi_via_laces(spec, m_max)
    recursion = pi_via_recursion(spec, m_max, options)
    inputs = {"lattice": spec.name, "m_max": m_max}
    keys = sorted(set(laces.signed) | set(recursion.signed))
    rows = [
        dict(m=m, x=str(x), laces=laces[(m, x)], recursion=recursion[(m, x)], holds=laces[(m, x)] == recursion[(m, x)])
        for m, x in keys
    ]
    reports = [inequality_report("lace.recursion", inputs, rows or [dict(m=0, holds=True)])]
    negative = [(key, value) for key, value in laces.by_lace.items() if value < 0]
    reports.append(
        make_report("lace.nonnegative", inputs, FAIL if negative else PASS,
                    [dict(m=k[0], n=k[1], x=str(k[2]), value=v) for k, v in negative[:1]])
    )
    first = {x: v for (m, x), v in recursion.signed.items() if m == 1}
    reports.append(make_report("lace.pi_one_vanishes", inputs, FAIL if first else PASS,
                               [dict(x=str(x), value=v) for x, v in list(first.items())[:1]]))
    return reports


def one_over_d_coefficients(spec: LatticeSpec, m_max: int = 5) -> CheckReport:
    """[z^2], [z^4] of Pi^(1) against 2d, 2d(2d-2) and [z^3], [z^5] of Pi^(2) against 2d, 3 2d(2d-2)."""
    if m_max < 5:
        raise ValueError("Need m_max >= 5 for the quoted coefficients", m_max)
    laces = pi_via_laces(spec, m_max, n_max=2)
    one, two = laces.hat(1), laces.hat(2)
    d2 = 2 * spec.d
    expected = [
        ("one_loop", 2, one[2], d2),
        ("one_loop", 4, one[4], d2 * (d2 - 2)),
        ("two_loop", 3, two[3], d2),
        ("two_loop", 5, two[5], 3 * d2 * (d2 - 2)),
        ("one_loop", 1, one[1], 0),
    ]
    rows = [dict(part=part, power=k, computed=v, expected=e, holds=v == e) for part, k, v, e in expected]
    return inequality_report("lace.one_over_d", {"lattice": spec.name, "m_max": m_max}, rows)


# ---------------------------------------------------------------------------
# Graph identities on actual walks


def _u(sites: Sequence[Site], s: int, t: int) -> int:
    return -1 if sites[s] == sites[t] else 0


def _k(sites: Sequence[Site], a: int, b: int) -> int:
    """K[a, b] = prod_{a <= s < t <= b} (1 + U_st)."""
    return 0 if len(set(sites[a: b + 1])) < b - a + 1 else 1


def _k_by_graphs(sites: Sequence[Site], a: int, b: int) -> int:
    """K[a, b] as a sum over all graphs on [a, b]; only subsets of the coincidences contribute."""
    pairs = [(s, t) for s, t in itertools.combinations(range(a, b + 1), 2) if sites[s] == sites[t]]
    return sum((-1) ** size * len(list(itertools.combinations(pairs, size))) for size in range(len(pairs) + 1))


def _j_by_graphs(sites: Sequence[Site], a: int, b: int) -> int:
    pairs = [(s, t) for s, t in itertools.combinations(range(a, b + 1), 2) if sites[s] == sites[t]]
    total = 0
    for size in range(1, len(pairs) + 1):
        for chosen in itertools.combinations(pairs, size):
            if is_connected(GraphOnInterval(a, b, frozenset(chosen))):
                total += (-1) ** size
    return total


def _j_by_laces(sites: Sequence[Site], a: int, b: int) -> int:
    total = 0
    for lace in iter_laces(a, b):
        weight = 1
        for s, t in lace.edges:
            weight *= _u(sites, s, t)
        if weight == 0:
            continue
        for s, t in compatible_edges(lace):
            weight *= 1 + _u(sites, s, t)
        total += weight
    return total


def graph_identity_check(spec: LatticeSpec, b_max: int = 5) -> CheckReport:
    """For every walk of length b <= b_max: K[0,b] summed over graphs is 1{self-avoiding};
    J[a,b] over connected graphs equals J[a,b] over laces; K[a,b] = K[a+1,b] + sum_j J[a,j] K[j,b]."""
    rows = []
    for b in range(1, b_max + 1):
        mismatches = 0
        total = 0
        for walk in walks.iter_walks(spec, b, self_avoiding=False):
            sites = walk.sites
            total += 1
            ok = _k_by_graphs(sites, 0, b) == _k(sites, 0, b)
            for a in range(b):
                j = {end: _j_by_graphs(sites, a, end) for end in range(a + 1, b + 1)}
                ok = ok and all(j[end] == _j_by_laces(sites, a, end) for end in j)
                recursion = _k(sites, a + 1, b) + sum(j[end] * _k(sites, end, b) for end in j)
                ok = ok and recursion == _k(sites, a, b)
            mismatches += not ok
        rows.append(dict(b=b, walks=total, mismatches=mismatches, holds=mismatches == 0))
    return inequality_report("lace.graph_identity", {"lattice": spec.name, "b_max": b_max}, rows)


# ---------------------------------------------------------------------------
# Fourier identity with exact rational cosines


def chebyshev(n: int, c: Fraction) -> Fraction:
    """T_n(c) = cos(n k) when c = cos k."""
    previous, current = Fraction(1), Fraction(c)
    if n == 0:
        return previous
    for _ in range(n - 1):
        previous, current = current, 2 * c * current - previous
    return current


def fourier_at(values: Mapping[Site, int], cosines: Sequence[Fraction]) -> Fraction:
    """sum_x f(x) prod_j cos(k_j x_j) for a table symmetric under coordinate sign flips."""
    return sum(
        (value * _cos_product(x, cosines) for x, value in values.items()),
        Fraction(0),
    )


def _cos_product(x: Site, cosines: Sequence[Fraction]) -> Fraction:
    product = Fraction(1)
    for coordinate, c in zip(x, cosines):
        product *= chebyshev(abs(coordinate), c)
    return product


def ghat_identity_check(
    spec: LatticeSpec,
    m_max: int,
    cosines: Sequence[Fraction],
    options: walks.EngineOptions = walks.DEFAULT_OPTIONS,
) -> CheckReport:
    """(1 - z c1hat(k) - Pihat_z(k)) Ghat_z(k) = 1 + O(z^{m_max+1}) with Pi taken from laces."""
    cosines = [Fraction(c) for c in cosines]
    if len(cosines) != spec.d or any(abs(c) > 1 for c in cosines):
        raise ValueError("Need one cosine in [-1, 1] per dimension", cosines)
    table = walks.count_walks(spec, m_max, 1, options).by_endpoint
    laces = pi_via_laces(spec, m_max)
    g = SeriesTrunc.of(fourier_at(table.at(n), cosines) for n in range(m_max + 1))
    c1 = fourier_at(table.at(1), cosines)
    pi = SeriesTrunc.of([Fraction(0)] + [fourier_at(laces.at(m), cosines) for m in range(1, m_max + 1)])
    denominator = SeriesTrunc.constant(1, m_max) - SeriesTrunc.monomial(1, m_max, c1) - pi
    product = denominator * g
    expected = SeriesTrunc.constant(1, m_max)
    rows = [dict(power=k, coefficient=product[k], expected=expected[k], holds=product[k] == expected[k])
            for k in range(m_max + 1)]
    inputs = {"lattice": spec.name, "m_max": m_max, "cosines": ",".join(str(c) for c in cosines)}
    return inequality_report("lace.ghat_identity", inputs, rows)


# ---------------------------------------------------------------------------
# Critical point from the truncated expansion


# Published connective constants of nearest-neighbour Z^d; above d = 4 the 1/d expansion is used.
REFERENCE_MU = {2: "2.63815853", 3: "4.684039", 4: "6.774043"}
ZC_BAND = "0.05"

CONVERGED = "converged"
NOT_CONTRACTING = "not_contracting"
LEFT_INTERVAL = "left_interval"
OUT_OF_ITERATIONS = "out_of_iterations"


@dataclass(frozen=True)
class ZcEstimate:
    z: mpmath.mpf
    mu: mpmath.mpf
    differences: Tuple[mpmath.mpf, ...]
    converged: bool
    stopped: str = CONVERGED


def reference_mu(spec: LatticeSpec) -> Optional[mpmath.mpf]:
    """mu of nearest-neighbour Z^d, or None where no reference is kept."""
    if spec.kind != ZD_NEAREST or spec.d < 2:
        return None
    if spec.d in REFERENCE_MU:
        return mpmath.mpf(REFERENCE_MU[spec.d])
    two_d = mpmath.mpf(2 * spec.d)
    return two_d - 1 - 1 / two_d


def zc_fixed_point(
    spec: LatticeSpec,
    m_max: int,
    iterations: int = 200,
    precision_bits: int = 106,
    options: walks.EngineOptions = walks.DEFAULT_OPTIONS,
) -> ZcEstimate:
    """Iterate z <- (1 - Pihat_z(0)) / |Omega| from z = 1/|Omega| with Pihat truncated at m_max.

    Heuristic: the truncation error is not bounded. A run that leaves (0, 1) or stops contracting
    is returned with ``converged = False`` and the reason in ``stopped``.
    """
    pi = pi_hat_totals(spec, m_max, options)
    omega = len(step_set(spec))
    differences = []
    with mpmath.workprec(precision_bits):
        z = mpmath.mpf(1) / omega
        tolerance = mpmath.mpf(2) ** (-precision_bits + 8)
        stopped = OUT_OF_ITERATIONS
        for _ in range(iterations):
            z_next = (1 - pi.evaluate(z)) / omega
            step = abs(z_next - z)
            differences.append(step)
            z = z_next
            if not 0 < z < 1:
                logger.warning("Fixed-point iteration for %s left (0, 1): z = %s", spec.name, z)
                stopped = LEFT_INTERVAL
                break
            if step < tolerance:
                stopped = CONVERGED
                break
            if len(differences) > 2 and differences[-1] > differences[-2] > differences[-3]:
                logger.warning("Fixed-point iteration for %s is not contracting", spec.name)
                stopped = NOT_CONTRACTING
                break
        return ZcEstimate(z=+z, mu=1 / z, differences=tuple(differences[-5:]), converged=stopped == CONVERGED,
                          stopped=stopped)


def zc_report(spec: LatticeSpec, m_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS) -> CheckReport:
    """Pass when the iteration converges inside the band around the reference z_c, fail when it converges
    outside it, inconclusive when it does not converge."""
    estimate = zc_fixed_point(spec, m_max, options=options)
    witness = dict(z=estimate.z, mu=estimate.mu, last_difference=estimate.differences[-1], stopped=estimate.stopped)
    mu = reference_mu(spec)
    in_band: Optional[bool] = None
    if mu is not None:
        reference_z = 1 / mu
        in_band = abs(estimate.z - reference_z) <= mpmath.mpf(ZC_BAND)
        witness.update(reference_z=reference_z, band=ZC_BAND, in_band=in_band)
    if not estimate.converged:
        outcome = INCONCLUSIVE
    else:
        outcome = FAIL if in_band is False else PASS
    return make_report("lace.zc_fixed_point", {"lattice": spec.name, "m_max": m_max}, outcome, [witness])
