"""The parafermionic observable of self-avoiding walks on the hexagonal lattice.

Walks start at a boundary mid-edge ``a`` of a finite domain, pass through distinct vertices of the
domain and end at a mid-edge. Each walk is tallied once by (end mid-edge, number of visited
vertices, turn total), where the turn total counts left turns minus right turns in units of pi/3.
Every observable and strip sum is a finite sum over that tally, so one enumeration serves any z
and sigma.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Set, Tuple, Union

import mpmath

from sawlab.config import ZC_TOKEN, config_db, parse_rational
from sawlab.errors import BudgetExceeded, GeometryError
from sawlab.lattice import (
    STRIP_PARTS,
    STRIP_START,
    HexDomain,
    HexVertex,
    MidEdge,
    hex_continuations,
    hexagon_cluster,
    strip_domain,
)
from sawlab.parallel import run_tasks
from sawlab.report import FAIL, INCONCLUSIVE, PASS, CheckReport, make_report, residual_report

logger = logging.getLogger(__name__)

CRITICAL_SIGMA = Fraction(5, 8)
_NODE_BUDGET = config_db.defaults_db["sawlab"]["node_budget"]

Tally = Mapping[Tuple[MidEdge, int, int], int]


@dataclass(frozen=True)
class MidEdgeWalk:
    mid_edges: Tuple[MidEdge, ...]
    vertices: Tuple[HexVertex, ...]
    turns: Tuple[int, ...]

    @property
    def length(self) -> int:
        """Number of visited vertices."""
        return len(self.vertices)

    @property
    def winding(self) -> int:
        """Total rotation in units of pi/3."""
        return sum(self.turns)

    @property
    def end(self) -> MidEdge:
        return self.mid_edges[-1]


@dataclass(frozen=True)
class ObservableValue:
    mid_edge: MidEdge
    value: mpmath.mpc
    unsigned: mpmath.mpf


@dataclass(frozen=True)
class StripSums:
    A: mpmath.mpf
    B: mpmath.mpf
    E: mpmath.mpf


def critical_z(precision_bits: int = 106) -> mpmath.mpf:
    """z_c = 1 / sqrt(2 + sqrt(2)), i.e. 1 / (2 cos(pi/8))."""
    with mpmath.workprec(precision_bits):
        return 1 / mpmath.sqrt(2 + mpmath.sqrt(2))


def fugacity(z: Union[str, Fraction, int, mpmath.mpf], precision_bits: int = 106) -> mpmath.mpf:
    if isinstance(z, str) and z.strip().lower() == ZC_TOKEN:
        return critical_z(precision_bits)
    if isinstance(z, mpmath.mpf):
        return z
    z = parse_rational(z)
    with mpmath.workprec(precision_bits):
        return mpmath.mpf(z.numerator) / z.denominator


def _check_start(domain: HexDomain, a: MidEdge) -> None:
    if a not in domain.boundary:
        raise GeometryError("Start mid-edge must lie on the boundary", a.doubled_position)


# ---------------------------------------------------------------------------
# Enumeration


def iter_mid_edge_walks(domain: HexDomain, a: MidEdge) -> Iterator[MidEdgeWalk]:
    """Every self-avoiding mid-edge walk from ``a`` inside ``domain``, the empty walk first."""
    _check_start(domain, a)
    yield MidEdgeWalk((a,), (), ())
    first = domain.inside(a)

    def extend(current: MidEdge, via: HexVertex, mids: List[MidEdge], vertices: List[HexVertex],
               turns: List[int], visited: Set[HexVertex]) -> Iterator[MidEdgeWalk]:
        vertices.append(via)
        visited.add(via)
        for exit_, turn in hex_continuations(current, via):
            mids.append(exit_)
            turns.append(turn)
            yield MidEdgeWalk(tuple(mids), tuple(vertices), tuple(turns))
            nxt = exit_.other(via)
            if nxt in domain.vertices and nxt not in visited:
                yield from extend(exit_, nxt, mids, vertices, turns, visited)
            mids.pop()
            turns.pop()
        visited.discard(via)
        vertices.pop()

    yield from extend(a, first, [a], [], [], set())


def _tally_branch(task: Tuple[HexDomain, MidEdge, int, int]) -> Tuple[Dict[Tuple[MidEdge, int, int], int], int]:
    domain, a, branch, node_budget = task
    first = domain.inside(a)
    exit_, turn = hex_continuations(a, first)[branch]
    tally: Dict[Tuple[MidEdge, int, int], int] = defaultdict(int)
    visited = {first}
    nodes = [0]

    def extend(current: MidEdge, via: HexVertex, length: int, winding: int):
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise BudgetExceeded("Enumeration exceeded the node budget", node_budget)
        for nxt_edge, step_turn in hex_continuations(current, via):
            total = winding + step_turn
            tally[(nxt_edge, length, total)] += 1
            nxt = nxt_edge.other(via)
            if nxt in domain.vertices and nxt not in visited:
                visited.add(nxt)
                extend(nxt_edge, nxt, length + 1, total)
                visited.discard(nxt)

    tally[(exit_, 1, turn)] += 1
    nxt = exit_.other(first)
    if nxt in domain.vertices:
        visited.add(nxt)
        extend(exit_, nxt, 2, turn)
    return dict(tally), nodes[0]


@lru_cache(maxsize=32)
def walk_tally(domain: HexDomain, a: MidEdge, node_budget: int = _NODE_BUDGET, threads: int = 1) -> Tally:
    """Counts of walks from ``a`` by (end mid-edge, visited vertices, turn total)."""
    _check_start(domain, a)
    results = run_tasks(_tally_branch, [(domain, a, branch, node_budget) for branch in (0, 1)], threads)
    tally: Dict[Tuple[MidEdge, int, int], int] = defaultdict(int)
    tally[(a, 0, 0)] = 1
    nodes = 0
    for branch_tally, branch_nodes in results:
        nodes += branch_nodes
        for key, count in branch_tally.items():
            tally[key] += count
    if nodes > node_budget:
        raise BudgetExceeded("Enumeration exceeded the node budget", node_budget)
    logger.debug("Hexagonal enumeration from %s visited %d nodes", a.doubled_position, nodes)
    return dict(tally)


# ---------------------------------------------------------------------------
# Observable and identities


def observable(
    domain: HexDomain,
    a: MidEdge,
    z=ZC_TOKEN,
    sigma=CRITICAL_SIGMA,
    precision_bits: int = 106,
    node_budget: int = _NODE_BUDGET,
    threads: int = 1,
) -> Dict[MidEdge, ObservableValue]:
    """F_z(x) = sum over walks a -> x of exp(-i sigma W(a, x)) z^l for every reached mid-edge x."""
    tally = walk_tally(domain, a, node_budget, threads)
    sigma = parse_rational(sigma)
    with mpmath.workprec(precision_bits):
        zf = fugacity(z, precision_bits)
        values: Dict[MidEdge, mpmath.mpc] = defaultdict(lambda: mpmath.mpc(0))
        unsigned: Dict[MidEdge, mpmath.mpf] = defaultdict(lambda: mpmath.mpf(0))
        for (mid_edge, length, winding), count in sorted(tally.items()):
            weight = count * zf ** length
            phase = mpmath.expjpi(-mpmath.mpf(sigma.numerator) / sigma.denominator * winding / 3)
            values[mid_edge] += weight * phase
            unsigned[mid_edge] += weight
        return {x: ObservableValue(x, +values[x], +unsigned[x]) for x in values}


def _unit(heading: int) -> mpmath.mpc:
    return mpmath.expjpi(mpmath.mpf(heading) / 3)


# Residual ceilings for exact identities, by working precision.
_TOLERANCE_CAPS = ((106, "1e-28"), (53, "1e-12"))


def _tolerance(precision_bits: int) -> mpmath.mpf:
    tolerance = mpmath.mpf(2) ** (16 - precision_bits)
    for bits, cap in _TOLERANCE_CAPS:
        if precision_bits >= bits:
            return min(tolerance, mpmath.mpf(cap))
    return tolerance


def vertex_identity_check(
    domain: HexDomain,
    a: MidEdge,
    z=ZC_TOKEN,
    sigma=CRITICAL_SIGMA,
    precision_bits: int = 106,
    node_budget: int = _NODE_BUDGET,
) -> CheckReport:
    """max_v |(p - v) F(p) + (q - v) F(q) + (r - v) F(r)| over the vertices of the domain."""
    values = observable(domain, a, z, sigma, precision_bits, node_budget)
    with mpmath.workprec(precision_bits):
        worst, worst_vertex = mpmath.mpf(0), None
        for v in sorted(domain.vertices):
            total = mpmath.mpc(0)
            for w in v.neighbours():
                p = MidEdge.of(v, w)
                if p in values:
                    total += _unit(p.heading_from(v)) * values[p].value
            if abs(total) >= worst:
                worst, worst_vertex = abs(total), v
        inputs = {"vertices": len(domain.vertices), "z": str(z), "sigma": parse_rational(sigma),
                  "precision_bits": precision_bits}
        return residual_report("hex.vertex", inputs, worst, _tolerance(precision_bits),
                               vertex=str(tuple(worst_vertex)) if worst_vertex else "")


def boundary_sum_check(
    domain: HexDomain,
    a: MidEdge,
    z=ZC_TOKEN,
    sigma=CRITICAL_SIGMA,
    precision_bits: int = 106,
    node_budget: int = _NODE_BUDGET,
) -> CheckReport:
    """|sum over boundary mid-edges x of (x - v_x) F(x)|, v_x the endpoint inside the domain."""
    values = observable(domain, a, z, sigma, precision_bits, node_budget)
    with mpmath.workprec(precision_bits):
        total = mpmath.mpc(0)
        for x in sorted(domain.boundary):
            if x in values:
                total += _unit(x.heading_from(domain.inside(x))) * values[x].value
        inputs = {"vertices": len(domain.vertices), "z": str(z), "sigma": parse_rational(sigma),
                  "precision_bits": precision_bits}
        return residual_report("hex.boundary_sum", inputs, abs(total), _tolerance(precision_bits))


@lru_cache(maxsize=32)
def _strip(T: int, L: int) -> HexDomain:
    return strip_domain(T, L)


def strip_sums(T: int, L: int, z=ZC_TOKEN, precision_bits: int = 106, node_budget: int = _NODE_BUDGET,
               threads: int = 1) -> StripSums:
    """A: walks to alpha other than a, B: walks to beta, E: walks to epsilon or epsilon_bar."""
    domain = _strip(T, L)
    tally = walk_tally(domain, domain.start, node_budget, threads)
    with mpmath.workprec(precision_bits):
        zf = fugacity(z, precision_bits)
        sums = {name: mpmath.mpf(0) for name in STRIP_PARTS}
        for (mid_edge, length, _), count in sorted(tally.items()):
            part = domain.part_of(mid_edge)
            if part is None or mid_edge == domain.start:
                continue
            sums[part] += count * zf ** length
        return StripSums(A=sums["alpha"], B=sums["beta"], E=sums["epsilon"] + sums["epsilon_bar"])


def _prefactors(precision_bits: int) -> Tuple[mpmath.mpf, mpmath.mpf]:
    with mpmath.workprec(precision_bits):
        return mpmath.cospi(mpmath.mpf(3) / 8), mpmath.cospi(mpmath.mpf(1) / 4)


def strip_identity_check(T: int, L: int, precision_bits: int = 106, node_budget: int = _NODE_BUDGET,
                         threads: int = 1) -> CheckReport:
    """|c_alpha A + B + c_epsilon E - 1| at z_c."""
    sums = strip_sums(T, L, ZC_TOKEN, precision_bits, node_budget, threads)
    c_alpha, c_epsilon = _prefactors(precision_bits)
    with mpmath.workprec(precision_bits):
        residual = abs(c_alpha * sums.A + sums.B + c_epsilon * sums.E - 1)
        return residual_report("hex.strip", {"T": T, "L": L, "precision_bits": precision_bits}, residual,
                               _tolerance(precision_bits), A=sums.A, B=sums.B, E=sums.E)


def strip_recursion_check(T_max: int, L: int, precision_bits: int = 106, node_budget: int = _NODE_BUDGET,
                          threads: int = 1) -> CheckReport:
    """A_{T+1} - A_T <= z_c B_{T+1}^2 for T < T_max, on brackets of the L -> infinity limits:
    A_T in [A_{T,L}, (1 - B_{T,L}) / c_alpha] and B_T in [B_{T,L}, 1 - c_alpha A_{T,L}]."""
    if T_max < 2:
        raise ValueError("Need T_max >= 2", T_max)
    c_alpha, _ = _prefactors(precision_bits)
    inputs = {"T_max": T_max, "L": L, "precision_bits": precision_bits}
    with mpmath.workprec(precision_bits):
        zc = critical_z(precision_bits)
        brackets = []
        for T in range(1, T_max + 1):
            sums = strip_sums(T, L, ZC_TOKEN, precision_bits, node_budget, threads)
            brackets.append(((sums.A, (1 - sums.B) / c_alpha), (sums.B, 1 - c_alpha * sums.A)))
        rows, outcome = [], PASS
        for T in range(1, T_max):
            (a_lo, a_hi), _ = brackets[T - 1]
            (a_next_lo, a_next_hi), (b_next_lo, b_next_hi) = brackets[T]
            if a_next_hi - a_lo <= zc * b_next_lo ** 2:
                verdict = PASS
            elif a_next_lo - a_hi > zc * b_next_hi ** 2:
                verdict = FAIL
            else:
                verdict = INCONCLUSIVE
            rows.append(dict(T=T, gap_upper=a_next_hi - a_lo, bound_lower=zc * b_next_lo ** 2, verdict=verdict))
            if verdict == FAIL:
                return make_report("hex.recursion", inputs, FAIL, [rows[-1]])
            if verdict == INCONCLUSIVE:
                outcome = INCONCLUSIVE
        if outcome == INCONCLUSIVE:
            logger.warning("Strip brackets at L = %d are too loose to decide the recursion", L)
        return make_report("hex.recursion", inputs, outcome, rows)


def winding_profile(T: int, L: int, node_budget: int = _NODE_BUDGET) -> Dict[str, FrozenSet[int]]:
    """Turn totals (units of pi/3) of the walks ending on each boundary part, a excluded."""
    domain = _strip(T, L)
    profile: Dict[str, Set[int]] = {name: set() for name in STRIP_PARTS}
    for mid_edge, _, winding in walk_tally(domain, domain.start, node_budget):
        part = domain.part_of(mid_edge)
        if part is not None and mid_edge != domain.start:
            profile[part].add(winding)
    return {name: frozenset(windings) for name, windings in profile.items()}


def single_hexagon(start: Optional[MidEdge] = None) -> HexDomain:
    """The face to the right of the origin mid-edge, started there unless told otherwise."""
    return hexagon_cluster([(3, 0)], start=start or STRIP_START)
