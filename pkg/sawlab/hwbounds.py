"""Hammersley-Welsh machinery: distinct partitions, unfolding, and the bound chain."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import mpmath

from sawlab import walks
from sawlab.config import parse_lambda
from sawlab.errors import GeometryError
from sawlab.lattice import ZD_NEAREST, LatticeSpec, unit_vector
from sawlab.powerseries import SeriesTrunc
from sawlab.report import FAIL, PASS, CheckReport, inequality_report, make_report

logger = logging.getLogger(__name__)

BRACKET_DIGITS = 50
THRESHOLD_CONSTANT = Fraction(261, 100)


@dataclass(frozen=True)
class DistinctPartitionTable:
    """P_D(A) for 0 <= A <= a_max; P_D(0) = 1 counts the empty partition."""

    values: Tuple[int, ...]

    def __getitem__(self, a: int) -> int:
        return self.values[a]

    @property
    def a_max(self) -> int:
        return len(self.values) - 1


def distinct_partitions(a_max: int) -> DistinctPartitionTable:
    if a_max < 1:
        raise ValueError("a_max must be at least 1", a_max)
    counts = [1] + [0] * a_max
    for part in range(1, a_max + 1):
        for total in range(a_max, part - 1, -1):
            counts[total] += counts[total - part]
    return DistinctPartitionTable(tuple(counts))


def is_half_space(walk: walks.Walk) -> bool:
    start = walk.sites[0][0]
    return walk.is_self_avoiding and all(site[0] > start for site in walk.sites[1:])


def is_bridge(walk: walks.Walk) -> bool:
    start, end = walk.sites[0][0], walk.sites[-1][0]
    return walk.is_self_avoiding and all(start < site[0] <= end for site in walk.sites[1:])


def span_decomposition(walk: walks.Walk) -> Tuple[List[int], List[int]]:
    """Break times n_1 < ... < n_K = n and spans A_1 > ... > A_K of a half-space walk.

    n_1 is the last time the first coordinate is maximal; afterwards the walk alternately runs
    to its last minimum and its last maximum over the remaining times.
    """
    first = [site[0] for site in walk.sites]
    n = walk.length
    times: List[int] = []
    spans: List[int] = []
    previous = 0
    upward = True
    while previous < n:
        tail = first[previous:]
        extreme = max(tail) if upward else min(tail)
        last = previous + max(i for i, value in enumerate(tail) if value == extreme)
        spans.append(abs(extreme - first[previous]))
        times.append(last)
        previous = last
        upward = not upward
    return times, spans


def unfold(walk: walks.Walk) -> Tuple[walks.Walk, Tuple[int, ...]]:
    """Map a half-space walk to a bridge by reflecting successive pieces across w_1 = const.

    Returns the bridge and the strictly decreasing span sequence; a bridge maps to itself.
    """
    if not is_half_space(walk):
        raise GeometryError("unfold needs a half-space walk", walk.sites)
    if walk.length == 0:
        return walk, ()
    times, spans = span_decomposition(walk)
    steps = walk.steps()
    unfolded = []
    piece = 0
    for t, step in enumerate(steps, start=1):
        if t > times[piece]:
            piece += 1
        sign = -1 if piece % 2 else 1
        unfolded.append((sign * step[0],) + tuple(step[1:]))
    bridge = walks.Walk.from_steps(unfolded, len(walk.sites[0]))
    shift = walk.sites[0]
    bridge = walks.Walk(tuple(tuple(a + b for a, b in zip(site, shift)) for site in bridge.sites))
    return bridge, tuple(spans)


# ---------------------------------------------------------------------------
# Count tables


@dataclass(frozen=True)
class _Counts:
    c: List[int]
    h: List[int]
    b: List[int]
    bridges: walks.BridgeCounts


def _counts(spec: LatticeSpec, n_walks: int, n_half: int, options: walks.EngineOptions) -> _Counts:
    c = walks.count_walks(spec, n_walks, 1, options).totals.totals()
    h = walks.count_half_space(spec, n_half, options).totals()
    bridges = walks.count_bridges(spec, n_half, options)
    return _Counts(c=c, h=h, b=bridges.totals.totals(), bridges=bridges)


def verify_hw_chain(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> List[CheckReport]:
    """Three exact checks for every n <= n_max.

    c_n <= sum_m h_{n-m} h_{m+1};  h_n <= P_D(n) b_n;  c_n <= b_{n+1} sum_m P_D(n-m) P_D(m+1).
    """
    counts = _counts(spec, n_max, n_max + 1, options)
    partitions = distinct_partitions(n_max + 1)
    inputs = {"lattice": spec.name, "n_max": n_max}

    split_rows, unfold_rows, assembled_rows = [], [], []
    for n in range(n_max + 1):
        rhs = sum(counts.h[n - m] * counts.h[m + 1] for m in range(n + 1))
        split_rows.append(dict(n=n, lhs=counts.c[n], rhs=rhs, holds=counts.c[n] <= rhs))
        bound = partitions[n] * counts.b[n]
        unfold_rows.append(dict(n=n, lhs=counts.h[n], rhs=bound, holds=counts.h[n] <= bound))
        assembled = counts.b[n + 1] * sum(partitions[n - m] * partitions[m + 1] for m in range(n + 1))
        assembled_rows.append(dict(n=n, lhs=counts.c[n], rhs=assembled, holds=counts.c[n] <= assembled))
    return [
        inequality_report("hw.half_space_split", inputs, split_rows),
        inequality_report("hw.unfolding_bound", inputs, unfold_rows),
        inequality_report("hw.assembled", inputs, assembled_rows),
    ]


def verify_unfolding(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> CheckReport:
    """Unfold every half-space walk of length <= n_max and check the map's properties.

    Each image is a bridge of the same length whose span is the sum of a strictly decreasing
    span sequence; (bridge, sequence) determines the walk; h_n <= sum_A P_D(A) b_{n,A}.
    """
    partitions = distinct_partitions(max(1, n_max))
    by_span = walks.count_bridges(spec, n_max, options).by_span
    rows = []
    for n in range(1, n_max + 1):
        images = set()
        half_space = 0
        sound = True
        for walk in walks.iter_walks(spec, n, self_avoiding=True, half_space=True):
            half_space += 1
            bridge, spans = unfold(walk)
            sound = sound and (
                is_bridge(bridge)
                and bridge.length == n
                and bridge.endpoint[0] == sum(spans)
                and all(a > b for a, b in zip(spans, spans[1:]))
                and (len(spans) == 1) == is_bridge(walk)
            )
            images.add((bridge.sites, spans))
        bound = sum(partitions[a] * count for a, count in by_span.at(n).items())
        injective = len(images) == half_space
        rows.append(
            dict(
                n=n,
                lhs=half_space,
                rhs=bound,
                images_are_bridges=sound,
                injective=injective,
                holds=sound and injective and half_space <= bound,
            )
        )
    return inequality_report("hw.unfolding", {"lattice": spec.name, "n_max": n_max}, rows)


def verify_polygon_inequality(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> List[CheckReport]:
    """sum_x b_n(x)^2 <= 2d (n+1)^2 c_{2n+1}(e_1) for 1 <= n <= n_max, and its corollary
    2d c_{2n+1}(e_1) >= b_n^2 / (n (n+1)^2 (2n+1)^{d-1})."""
    if spec.kind != ZD_NEAREST:
        raise GeometryError("The polygon inequality is stated for nearest-neighbour walks", spec.name)
    d = spec.d
    bridges = walks.count_bridges(spec, n_max, options)
    squared_rows, corollary_rows = [], []
    for n in range(1, n_max + 1):
        ends = bridges.by_endpoint.at(n)
        lhs = sum(count * count for count in ends.values())
        returns = walks.count_walks_to(spec, 2 * n + 1, unit_vector(d, 0), options)
        rhs = 2 * d * (n + 1) ** 2 * returns
        squared_rows.append(dict(n=n, lhs=lhs, rhs=rhs, holds=lhs <= rhs))
        b_n = bridges.totals[n]
        floor = Fraction(b_n * b_n, n * (n + 1) ** 2 * (2 * n + 1) ** (d - 1))
        corollary_rows.append(dict(n=n, lhs=2 * d * returns, rhs=floor, holds=2 * d * returns >= floor))
    inputs = {"lattice": spec.name, "n_max": n_max}
    return [
        inequality_report("hw.bridge_endpoints_squared", inputs, squared_rows),
        inequality_report("hw.polygon_corollary", inputs, corollary_rows),
    ]


def verify_bridge_product_bound(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> CheckReport:
    """h_n <= [z^n] prod_{A>=1} (1 + sum_m b_{m,A} z^m)."""
    counts = _counts(spec, 0, n_max, options)
    product = SeriesTrunc.constant(1, n_max)
    for a in range(1, n_max + 1):
        factor = [1] + [counts.bridges.by_span[(m, a)] for m in range(1, n_max + 1)]
        product = product * SeriesTrunc.of(factor)
    rows = [dict(n=n, lhs=counts.h[n], rhs=product[n], holds=counts.h[n] <= product[n]) for n in range(n_max + 1)]
    return inequality_report("hw.bridge_product", {"lattice": spec.name, "n_max": n_max}, rows)


def verify_chi_bridge_bound(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> CheckReport:
    """c_n <= [z^{n+1}] exp(2(B(z) - 1)), the coefficientwise form of chi(z) <= exp(2(B(z) - 1)) / z."""
    counts = _counts(spec, n_max, n_max + 1, options)
    bridge_series = SeriesTrunc.of(counts.b)
    bound = ((bridge_series - 1) * 2).exp()
    rows = []
    for n in range(n_max + 1):
        rhs = bound[n + 1]
        rows.append(dict(n=n, lhs=counts.c[n], rhs=rhs, holds=counts.c[n] <= rhs))
    return inequality_report("hw.chi_bridge", {"lattice": spec.name, "n_max": n_max}, rows)


@dataclass(frozen=True)
class MuBracket:
    n: int
    lower: mpmath.mpf
    upper: mpmath.mpf

    def contains(self, value) -> bool:
        return self.lower <= mpmath.mpf(value) <= self.upper


def _root(value: int, n: int) -> mpmath.mpf:
    return mpmath.exp(mpmath.log(value) / n)


def mu_bracket(spec: LatticeSpec, n: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS) -> MuBracket:
    """[b_n^{1/n}, c_n^{1/n}], which contains the connective constant for every n >= 1."""
    if n < 1:
        raise ValueError("mu_bracket needs n >= 1", n)
    c = walks.count_walks(spec, n, 1, options).totals[n]
    b = walks.count_bridges(spec, n, options).totals[n]
    with mpmath.workdps(BRACKET_DIGITS):
        return MuBracket(n=n, lower=+_root(b, n), upper=+_root(c, n))


def mu_bracket_report(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> CheckReport:
    rows = []
    previous = None
    for n in range(1, n_max + 1):
        bracket = mu_bracket(spec, n, options)
        nested = previous is None or bracket.lower >= previous
        previous = bracket.lower
        rows.append(dict(n=n, lower=bracket.lower, upper=bracket.upper,
                         holds=bool(bracket.lower <= bracket.upper and nested)))
    return inequality_report("hw.mu_bracket", {"lattice": spec.name, "n_max": n_max}, rows)


def hw_threshold_scan(
    spec: LatticeSpec,
    n_max: int,
    constant: Fraction = THRESHOLD_CONSTANT,
    options: walks.EngineOptions = walks.DEFAULT_OPTIONS,
) -> Optional[int]:
    """Smallest n with c_m <= b_{m+1} exp(constant sqrt(m)) for every computed m in [n, n_max].

    Informational only: the threshold in the asymptotic statement is not explicit.
    """
    counts = _counts(spec, n_max, n_max + 1, options)
    with mpmath.workdps(BRACKET_DIGITS):
        factor = mpmath.mpf(constant.numerator) / constant.denominator
        holds = [counts.c[m] <= counts.b[m + 1] * mpmath.exp(factor * mpmath.sqrt(m)) for m in range(n_max + 1)]
    threshold = None
    for n in range(n_max, -1, -1):
        if not holds[n]:
            break
        threshold = n
    logger.info("Threshold scan on %s with B = %s: %s", spec.name, constant, threshold)
    return threshold


def kesten_ratios(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> Tuple[List[Fraction], CheckReport]:
    """c_{n+2}/c_n for 1 <= n <= n_max - 2, checked against [d^2, (2d-1)^2]."""
    if spec.kind != ZD_NEAREST:
        raise GeometryError("Ratio bounds are stated for nearest-neighbour walks", spec.name)
    c = walks.count_walks(spec, n_max, 1, options).totals.totals()
    d = spec.d
    ratios, rows = [], []
    for n in range(1, n_max - 1):
        ratio = Fraction(c[n + 2], c[n])
        ratios.append(ratio)
        rows.append(dict(n=n, ratio=ratio, holds=d * d <= ratio <= (2 * d - 1) ** 2))
    return ratios, inequality_report("hw.kesten_ratio", {"lattice": spec.name, "n_max": n_max}, rows)


def polygon_counts(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> Dict[int, int]:
    """q_m for even 4 <= m <= n_max, plus the convention q_2 = 1."""
    counts = {2: 1}
    for m in range(4, n_max + 1, 2):
        counts[m] = walks.count_polygons(spec, m, options)
    return counts


def verify_polygon_supermultiplicativity(
    spec: LatticeSpec, n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> CheckReport:
    """q_m q_n / (d-1) <= q_{m+n} for even m, n with m + n <= n_max.

    Rows using q_2 are flagged since q_2 = 1 is a convention, not a count.
    """
    if spec.kind != ZD_NEAREST or spec.d < 2:
        raise GeometryError("Polygon supermultiplicativity needs Z^d with d >= 2", spec.name)
    q = polygon_counts(spec, n_max, options)
    rows = []
    for m in range(2, n_max + 1, 2):
        for n in range(m, n_max - m + 1, 2):
            lhs = Fraction(q[m] * q[n], spec.d - 1)
            rows.append(dict(m=m, n=n, lhs=lhs, rhs=q[m + n], convention=m == 2, holds=lhs <= q[m + n]))
    return inequality_report("hw.polygon_supermultiplicative", {"lattice": spec.name, "n_max": n_max}, rows)


def square_lattice_strict_bounds(n_max: int, options: walks.EngineOptions = walks.DEFAULT_OPTIONS) -> CheckReport:
    """2 < mu < 3 on Z^2: the first n with b_n > 2^n and the first n with c_n < 3^n."""
    spec = LatticeSpec(ZD_NEAREST, d=2)
    c = walks.count_walks(spec, n_max, 1, options).totals.totals()
    b = walks.count_bridges(spec, n_max, options).totals.totals()
    lower = next((n for n in range(1, n_max + 1) if b[n] > 2 ** n), None)
    upper = next((n for n in range(1, n_max + 1) if c[n] < 3 ** n), None)
    inputs = {"lattice": spec.name, "n_max": n_max}
    if lower is None or upper is None:
        return make_report("hw.strict_bounds", inputs, FAIL, [dict(lower_n=lower or "none", upper_n=upper or "none")])
    witnesses = [
        dict(bound="lower", n=lower, count=b[lower], power=2 ** lower),
        dict(bound="upper", n=upper, count=c[upper], power=3 ** upper),
    ]
    return make_report("hw.strict_bounds", inputs, PASS, witnesses)


def verify_walk_invariants(
    spec: LatticeSpec, n_max: int, lam=1, options: walks.EngineOptions = walks.DEFAULT_OPTIONS
) -> List[CheckReport]:
    """Submultiplicativity and the elementary sandwich/monotonicity facts about the counts."""
    c = walks.count_walks(spec, n_max, lam, options).totals.totals()
    inputs = {"lattice": spec.name, "n_max": n_max, "lambda": parse_lambda(lam)}
    sub_rows = [
        dict(n=n, m=m, lhs=c[n + m], rhs=c[n] * c[m], holds=c[n + m] <= c[n] * c[m])
        for n in range(1, n_max + 1)
        for m in range(n, n_max - n + 1)
    ]
    reports = [inequality_report("walks.submultiplicative", inputs, sub_rows)]
    if spec.kind == ZD_NEAREST and parse_lambda(lam) == 1:
        d = spec.d
        sandwich = [
            dict(n=n, lower=d ** n, count=c[n], upper=2 * d * (2 * d - 1) ** (n - 1),
                 holds=d ** n <= c[n] <= 2 * d * (2 * d - 1) ** (n - 1))
            for n in range(1, n_max + 1)
        ]
        reports.append(inequality_report("walks.sandwich", inputs, sandwich))
        monotone = [dict(n=n, lhs=c[n], rhs=c[n + 2], holds=c[n + 2] >= c[n]) for n in range(n_max - 1)]
        reports.append(inequality_report("walks.monotone", inputs, monotone))
        b = walks.count_bridges(spec, n_max, options).totals.totals()
        h = walks.count_half_space(spec, n_max, options).totals()
        super_rows = [
            dict(n=n, m=m, lhs=b[n] * b[m], rhs=b[n + m], holds=b[n + m] >= b[n] * b[m])
            for n in range(1, n_max + 1)
            for m in range(n, n_max - n + 1)
        ]
        reports.append(inequality_report("walks.bridge_supermultiplicative", inputs, super_rows))
        reports.append(
            inequality_report(
                "walks.half_space_dominates",
                inputs,
                [dict(n=n, lhs=b[n], rhs=h[n], holds=b[n] <= h[n]) for n in range(n_max + 1)],
            )
        )
    return reports

