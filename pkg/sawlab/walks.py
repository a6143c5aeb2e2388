"""Exact enumeration of walks on Z^d.

All counts come from depth-first searches over rooted walks. Sites are encoded as integers in
a cube large enough that no walk of the requested length can leave it, and occupation is kept
in a ``bytearray`` so that the self-avoidance test is a single index lookup.

The search tree is cut at a fixed prefix depth; every prefix becomes an independent task and
the task tallies are summed in task order (see :mod:`sawlab.parallel`). Counts that are
invariant under the lattice symmetries are enumerated with the first step fixed to one
representative per symmetry orbit and unfolded afterwards.
"""
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from sawlab import cache as result_cache
from sawlab.config import config_db, parse_lambda
from sawlab.errors import BudgetExceeded, GeometryError
from sawlab.lattice import (
    ZD_NEAREST,
    LatticeSpec,
    Site,
    Step,
    origin,
    step_orbits,
    step_set,
)
from sawlab.parallel import run_tasks

logger = logging.getLogger(__name__)

Exact = Union[int, Fraction]

_DEFAULTS = config_db.defaults_db["sawlab"]
_DENSE_ROW_LIMIT = 1 << 18


@dataclass(frozen=True)
class EngineOptions:
    threads: int = 1
    node_budget: int = _DEFAULTS["node_budget"]
    prefix_depth: int = _DEFAULTS["prefix_depth"]
    cache: Optional[result_cache.ResultCache] = field(default=None, compare=False)


DEFAULT_OPTIONS = EngineOptions()


def options_from_config(run_config, cache: Optional[result_cache.ResultCache] = None) -> EngineOptions:
    return EngineOptions(
        threads=run_config.threads,
        node_budget=run_config.node_budget,
        prefix_depth=run_config.prefix_depth,
        cache=cache,
    )


@dataclass(frozen=True)
class Walk:
    """An ordered site sequence; ``sites[0]`` is the root."""

    sites: Tuple[Site, ...]

    @property
    def length(self) -> int:
        return len(self.sites) - 1

    @cached_property
    def occupied(self) -> FrozenSet[Site]:
        return frozenset(self.sites)

    @property
    def is_self_avoiding(self) -> bool:
        return len(self.occupied) == len(self.sites)

    @property
    def endpoint(self) -> Site:
        return self.sites[-1]

    @staticmethod
    def from_steps(steps: Iterable[Step], d: int) -> "Walk":
        sites = [origin(d)]
        for step in steps:
            sites.append(tuple(a + b for a, b in zip(sites[-1], step)))
        return Walk(tuple(sites))

    def steps(self) -> List[Step]:
        return [tuple(b - a for a, b in zip(u, w)) for u, w in zip(self.sites, self.sites[1:])]


@dataclass(frozen=True)
class CountTable:
    """Exact counts indexed by ``(n,)``, ``(n, endpoint)`` or ``(n, span)``."""

    quantity: str
    lattice: str
    n_max: int
    values: Mapping[tuple, Exact]
    lam: Fraction = Fraction(1)

    def __getitem__(self, index) -> Exact:
        if not isinstance(index, tuple):
            index = (index,)
        return self.values.get(index, 0)

    def at(self, n: int) -> Dict[Any, Exact]:
        """Entries of length ``n`` keyed by endpoint or span."""
        return {index[1]: value for index, value in self.values.items() if index[0] == n and len(index) == 2}

    def totals(self) -> List[Exact]:
        sums: List[Exact] = [0] * (self.n_max + 1)
        for index, value in self.values.items():
            sums[index[0]] += value
        return sums

    def sorted_items(self) -> List[Tuple[tuple, Exact]]:
        return sorted(self.values.items(), key=lambda item: (item[0][0], _sort_key(item[0][1:])))

    def to_record(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "lattice": self.lattice,
            "n_max": self.n_max,
            "lam": result_cache.encode_value(self.lam),
            "entries": [
                [index[0], list(index[1]) if len(index) > 1 and isinstance(index[1], tuple) else
                 (index[1] if len(index) > 1 else None), result_cache.encode_value(value)]
                for index, value in self.sorted_items()
            ],
        }

    @staticmethod
    def from_record(record: Mapping[str, Any]) -> "CountTable":
        values: Dict[tuple, Exact] = {}
        for n, key, text in record["entries"]:
            if key is None:
                index: tuple = (n,)
            elif isinstance(key, list):
                index = (n, tuple(key))
            else:
                index = (n, key)
            values[index] = result_cache.decode_value(text)
        return CountTable(
            quantity=record["quantity"],
            lattice=record["lattice"],
            n_max=record["n_max"],
            values=values,
            lam=Fraction(record["lam"]),
        )


def _sort_key(rest: tuple):
    return tuple(rest)


@dataclass(frozen=True)
class WalkCounts:
    totals: CountTable
    by_endpoint: CountTable


@dataclass(frozen=True)
class BridgeCounts:
    totals: CountTable
    by_span: CountTable
    by_endpoint: CountTable


# ---------------------------------------------------------------------------
# Integer site encoding


class _Box:
    """Sites of the cube [-radius, radius]^d as integers; coordinate 0 is the least significant."""

    def __init__(self, d: int, radius: int):
        self.d = d
        self.radius = radius
        self.width = 2 * radius + 1
        self.size = self.width ** d
        self.origin = self.encode(origin(d))

    def encode(self, site: Sequence[int]) -> int:
        index = 0
        for coordinate in reversed(site):
            index = index * self.width + coordinate + self.radius
        return index

    def decode(self, index: int) -> Site:
        coordinates = []
        for _ in range(self.d):
            index, digit = divmod(index, self.width)
            coordinates.append(digit - self.radius)
        return tuple(coordinates)

    def offset(self, step: Sequence[int]) -> int:
        return sum(c * self.width ** i for i, c in enumerate(step))


def _new_row(size: int):
    return [0] * size if size <= _DENSE_ROW_LIMIT else defaultdict(int)


def _sparse(row) -> Dict[int, int]:
    if isinstance(row, list):
        return {j: c for j, c in enumerate(row) if c}
    return {j: c for j, c in row.items() if c}


SAW = "saw"
WEIGHTED = "weighted"
HALF_SPACE = "halfspace"
TARGET = "target"


@dataclass(frozen=True)
class _Job:
    mode: str
    d: int
    steps: Tuple[Step, ...]
    range: int
    nearest: bool
    n: int
    first_steps: Tuple[int, ...]
    node_budget: int
    target: Optional[Site] = None

    @cached_property
    def box(self) -> _Box:
        return _Box(self.d, max(1, self.n * self.range))

    @cached_property
    def offsets(self) -> Tuple[int, ...]:
        return tuple(self.box.offset(step) for step in self.steps)

    @cached_property
    def reach(self) -> List[int]:
        """Fewest steps from each encoded site to the target."""
        box = self.box
        target = self.target or origin(self.d)
        reach = [0] * box.size
        for index in range(box.size):
            site = box.decode(index)
            if self.nearest:
                reach[index] = sum(abs(a - b) for a, b in zip(site, target))
            else:
                gap = max(abs(a - b) for a, b in zip(site, target))
                reach[index] = -(-gap // self.range)
        return reach


def _job(spec: LatticeSpec, mode: str, n: int, options: EngineOptions, first_steps=None, target=None) -> _Job:
    steps = tuple(step_set(spec))
    if first_steps is None:
        first_steps = tuple(range(len(steps)))
    return _Job(
        mode=mode,
        d=spec.d,
        steps=steps,
        range=spec.range,
        nearest=spec.kind == ZD_NEAREST,
        n=n,
        first_steps=tuple(first_steps),
        node_budget=options.node_budget,
        target=target,
    )


# ---------------------------------------------------------------------------
# Prefix phase: a plain recursive search over small depths that tallies the shallow nodes and
# returns the leaves as tasks.


def _empty_tallies(job: _Job) -> Dict[str, Any]:
    if job.mode == HALF_SPACE:
        return {"h": defaultdict(int), "span": defaultdict(int), "bx": defaultdict(int)}
    return {"rows": defaultdict(int), "hits": 0}


def _expand_prefixes(job: _Job, depth: int) -> Tuple[Dict[str, Any], List[Tuple[int, ...]]]:
    box = job.box
    tallies = _empty_tallies(job)
    leaves: List[Tuple[int, ...]] = []
    counts: Dict[int, int] = defaultdict(int)
    counts[box.origin] = 1

    def walk(prefix: Tuple[int, ...], index: int, x1: int, top: int, inter: int):
        level = len(prefix)
        if level == depth:
            leaves.append(prefix)
            return
        candidates = job.first_steps if level == 0 else range(len(job.steps))
        for k in candidates:
            j = index + job.offsets[k]
            seen = counts[j]
            if seen and job.mode != WEIGHTED:
                continue
            nx1 = x1 + job.steps[k][0]
            if job.mode == HALF_SPACE and nx1 <= 0:
                continue
            if job.mode == TARGET and job.reach[j] > job.n - level - 1:
                continue
            nxt = level + 1
            if job.mode == HALF_SPACE:
                tallies["h"][nxt] += 1
                if nx1 >= top:
                    tallies["span"][(nxt, nx1)] += 1
                    tallies["bx"][(nxt, j)] += 1
            elif job.mode == TARGET:
                if nxt == job.n:
                    tallies["hits"] += 1
            else:
                tallies["rows"][(nxt, (inter + seen) * box.size + j)] += 1
            counts[j] += 1
            walk(prefix + (k,), j, nx1, max(top, nx1), inter + seen)
            counts[j] -= 1

    walk((), box.origin, 0, 0, 0)
    return tallies, leaves


# ---------------------------------------------------------------------------
# Task phase: specialised searches below one prefix.


def _replay(job: _Job, prefix: Sequence[int]) -> Tuple[bytearray, int, int, int, int]:
    box = job.box
    visited = bytearray(box.size)
    index = box.origin
    visited[index] = 1
    x1 = top = inter = 0
    for k in prefix:
        index += job.offsets[k]
        inter += visited[index]
        visited[index] += 1
        x1 += job.steps[k][0]
        top = max(top, x1)
    return visited, index, x1, top, inter


def _over_budget(job: _Job):
    raise BudgetExceeded("Enumeration exceeded the node budget", job.node_budget)


def _task_saw(job: _Job, prefix: Sequence[int]):
    visited, start, _, _, _ = _replay(job, prefix)
    n = job.n
    offsets = job.offsets
    rows: Dict[int, Any] = {depth: _new_row(job.box.size) for depth in range(len(prefix) + 1, n + 1)}
    budget = job.node_budget
    nodes = [0]

    def extend(i: int, depth: int):
        nxt = depth + 1
        row = rows[nxt]
        deeper = nxt < n
        for off in offsets:
            j = i + off
            if visited[j]:
                continue
            row[j] += 1
            if deeper:
                visited[j] = 1
                extend(j, nxt)
                visited[j] = 0
        nodes[0] += 1
        if nodes[0] > budget:
            _over_budget(job)

    if len(prefix) < n:
        extend(start, len(prefix))
    return {"rows": {depth: _sparse(row) for depth, row in rows.items()}}, nodes[0]


def _task_weighted(job: _Job, prefix: Sequence[int]):
    visited, start, _, _, inter0 = _replay(job, prefix)
    n = job.n
    size = job.box.size
    offsets = job.offsets
    rows: Dict[int, Dict[int, int]] = {depth: defaultdict(int) for depth in range(len(prefix) + 1, n + 1)}
    budget = job.node_budget
    nodes = [0]

    def extend(i: int, depth: int, inter: int):
        nxt = depth + 1
        row = rows[nxt]
        deeper = nxt < n
        for off in offsets:
            j = i + off
            seen = visited[j]
            weight = inter + seen
            row[weight * size + j] += 1
            if deeper:
                visited[j] = seen + 1
                extend(j, nxt, weight)
                visited[j] = seen
        nodes[0] += 1
        if nodes[0] > budget:
            _over_budget(job)

    if len(prefix) < n:
        extend(start, len(prefix), inter0)
    return {"rows": {depth: dict(row) for depth, row in rows.items()}}, nodes[0]


def _task_half_space(job: _Job, prefix: Sequence[int]):
    visited, start, x10, top0, _ = _replay(job, prefix)
    n = job.n
    moves = list(zip(job.offsets, (step[0] for step in job.steps)))
    h: Dict[int, int] = defaultdict(int)
    span: Dict[Tuple[int, int], int] = defaultdict(int)
    bx: Dict[Tuple[int, int], int] = defaultdict(int)
    budget = job.node_budget
    nodes = [0]

    def extend(i: int, depth: int, x1: int, top: int):
        nxt = depth + 1
        deeper = nxt < n
        for off, dx in moves:
            j = i + off
            x = x1 + dx
            if x <= 0 or visited[j]:
                continue
            h[nxt] += 1
            if x >= top:
                span[(nxt, x)] += 1
                bx[(nxt, j)] += 1
                new_top = x
            else:
                new_top = top
            if deeper:
                visited[j] = 1
                extend(j, nxt, x, new_top)
                visited[j] = 0
        nodes[0] += 1
        if nodes[0] > budget:
            _over_budget(job)

    if len(prefix) < n:
        extend(start, len(prefix), x10, top0)
    return {"h": dict(h), "span": dict(span), "bx": dict(bx)}, nodes[0]


def _task_target(job: _Job, prefix: Sequence[int]):
    visited, start, _, _, _ = _replay(job, prefix)
    n = job.n
    offsets = job.offsets
    reach = job.reach
    budget = job.node_budget
    nodes = [0]
    hits = [0]

    def extend(i: int, depth: int):
        nxt = depth + 1
        remaining = n - nxt
        for off in offsets:
            j = i + off
            if visited[j] or reach[j] > remaining:
                continue
            if remaining == 0:
                hits[0] += 1
            else:
                visited[j] = 1
                extend(j, nxt)
                visited[j] = 0
        nodes[0] += 1
        if nodes[0] > budget:
            _over_budget(job)

    if len(prefix) < n:
        extend(start, len(prefix))
    return {"hits": hits[0]}, nodes[0]


_TASKS = {SAW: _task_saw, WEIGHTED: _task_weighted, HALF_SPACE: _task_half_space, TARGET: _task_target}


def _run_task(task: Tuple[_Job, Tuple[int, ...]]):
    job, prefix = task
    return _TASKS[job.mode](job, prefix)


def _search(job: _Job, options: EngineOptions) -> Dict[str, Any]:
    """Run the prefix phase and then all tasks; return merged tallies keyed like the prefix phase."""
    depth = min(options.prefix_depth, job.n)
    tallies, leaves = _expand_prefixes(job, depth)
    logger.debug("%s search to n=%d: %d tasks at prefix depth %d", job.mode, job.n, len(leaves), depth)
    total_nodes = 0
    if depth < job.n:
        results = run_tasks(_run_task, [(job, leaf) for leaf in leaves], options.threads)
        for result, nodes in results:
            total_nodes += nodes
            _merge(job, tallies, result)
    if total_nodes > job.node_budget:
        _over_budget(job)
    logger.debug("%s search to n=%d visited %d interior nodes", job.mode, job.n, total_nodes)
    return tallies


def _merge(job: _Job, tallies: Dict[str, Any], result: Dict[str, Any]) -> None:
    if job.mode == HALF_SPACE:
        for key in ("h", "span"):
            for index, count in result[key].items():
                tallies[key][index] += count
        for index, count in result["bx"].items():
            tallies["bx"][index] += count
    elif job.mode == TARGET:
        tallies["hits"] += result["hits"]
    else:
        rows = tallies["rows"]
        for depth, row in result["rows"].items():
            for key, count in row.items():
                rows[(depth, key)] += count


def _exact(value: Exact) -> Exact:
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


# ---------------------------------------------------------------------------
# Public counting operations


def _check_zd(spec: LatticeSpec):
    if not spec.is_zd:
        raise GeometryError("Operation needs a Z^d lattice", spec.name)


def _check_length(n: int):
    if n < 0:
        raise ValueError("Walk length must be non-negative", n)


def _cached(options: EngineOptions, key: str):
    if options.cache is None:
        return None
    return options.cache.get(key)


def _store(options: EngineOptions, key: str, record: Dict[str, Any]) -> None:
    if options.cache is not None:
        options.cache.put(key, record)


def count_walks(spec: LatticeSpec, n: int, lam=1, options: EngineOptions = DEFAULT_OPTIONS) -> WalkCounts:
    """c_k^(lam) and c_k^(lam)(x) for every k <= n.

    With lam = 1 only self-avoiding walks count. For lam < 1 every walk is weighted by
    prod_{s<t} (1 + lam U_st), i.e. (1 - lam) to the number of self-intersection pairs.
    """
    _check_zd(spec)
    _check_length(n)
    lam = parse_lambda(lam)
    key = result_cache.cache_key(spec.name, "walks", n, lam)
    record = _cached(options, key)
    if record is not None:
        by_endpoint = CountTable.from_record(record)
        return WalkCounts(_totals_of(by_endpoint, "cN"), by_endpoint)

    mode = SAW if lam == 1 else WEIGHTED
    q = 1 - lam
    steps = step_set(spec)
    values: Dict[tuple, Exact] = defaultdict(int)
    values[(0, origin(spec.d))] = 1
    for rep, orbit in step_orbits(spec).items():
        job = _job(spec, mode, n, options, first_steps=(steps.index(rep),))
        tallies = _search(job, options)
        box = job.box
        reduced: Dict[Tuple[int, Site], Exact] = defaultdict(int)
        for (depth, key_), count in tallies["rows"].items():
            inter, index = divmod(key_, box.size)
            weight = count if mode == SAW or inter == 0 else count * q ** inter
            if weight:
                reduced[(depth, box.decode(index))] += weight
        for _, symmetry in orbit:
            for (depth, site), weight in reduced.items():
                values[(depth, symmetry(site))] += weight
    values = {index: _exact(value) for index, value in values.items() if value}
    by_endpoint = CountTable("cNx", spec.name, n, values, lam)
    _store(options, key, by_endpoint.to_record())
    return WalkCounts(_totals_of(by_endpoint, "cN"), by_endpoint)


def _totals_of(table: CountTable, quantity: str) -> CountTable:
    totals = table.totals()
    return CountTable(quantity, table.lattice, table.n_max, {(k,): v for k, v in enumerate(totals)}, table.lam)


def _half_space_tables(spec: LatticeSpec, n: int, options: EngineOptions) -> Tuple[CountTable, BridgeCounts]:
    _check_zd(spec)
    _check_length(n)
    key = result_cache.cache_key(spec.name, "halfspace", n)
    record = _cached(options, key)
    if record is not None:
        h = CountTable.from_record(record["hN"])
        by_span = CountTable.from_record(record["bNA"])
        by_endpoint = CountTable.from_record(record["bNx"])
        return h, BridgeCounts(_totals_of(by_span, "bN"), by_span, by_endpoint)

    job = _job(spec, HALF_SPACE, n, options)
    tallies = _search(job, options)
    box = job.box
    h_values: Dict[tuple, Exact] = {(0,): 1}
    h_values.update({(depth,): count for depth, count in tallies["h"].items()})
    span_values: Dict[tuple, Exact] = {(0, 0): 1}
    span_values.update(dict(tallies["span"]))
    x_values: Dict[tuple, Exact] = {(0, origin(spec.d)): 1}
    for (depth, index), count in tallies["bx"].items():
        x_values[(depth, box.decode(index))] = count
    h = CountTable("hN", spec.name, n, h_values)
    by_span = CountTable("bNA", spec.name, n, span_values)
    by_endpoint = CountTable("bNx", spec.name, n, x_values)
    _store(options, key, {"hN": h.to_record(), "bNA": by_span.to_record(), "bNx": by_endpoint.to_record()})
    return h, BridgeCounts(_totals_of(by_span, "bN"), by_span, by_endpoint)


def count_bridges(spec: LatticeSpec, n: int, options: EngineOptions = DEFAULT_OPTIONS) -> BridgeCounts:
    """Bridges 0 = w_1(0) < w_1(i) <= w_1(k) of every length k <= n, by span and by endpoint. b_0 = 1."""
    return _half_space_tables(spec, n, options)[1]


def count_half_space(spec: LatticeSpec, n: int, options: EngineOptions = DEFAULT_OPTIONS) -> CountTable:
    """Half-space walks w_1(i) > w_1(0) for i >= 1, every length k <= n. h_0 = 1."""
    return _half_space_tables(spec, n, options)[0]


def count_walks_to(spec: LatticeSpec, n: int, target: Sequence[int], options: EngineOptions = DEFAULT_OPTIONS) -> int:
    """Number of n-step self-avoiding walks from the origin to ``target``."""
    _check_zd(spec)
    _check_length(n)
    target = tuple(target)
    if len(target) != spec.d:
        raise GeometryError("Target has the wrong dimension", target)
    if n == 0:
        return 1 if not any(target) else 0
    key = result_cache.cache_key(spec.name, "walks_to", n, 1, result_cache.domain_hash([target]))
    record = _cached(options, key)
    if record is not None:
        return int(record["count"])
    job = _job(spec, TARGET, n, options, target=target)
    if max(abs(c) for c in target) > job.box.radius:
        return 0
    hits = _search(job, options)["hits"]
    _store(options, key, {"count": str(hits)})
    return hits


def count_returns(spec: LatticeSpec, m: int, options: EngineOptions = DEFAULT_OPTIONS) -> int:
    """m-step self-avoiding returns: w(0) = w(m) = 0, all other sites distinct."""
    _check_zd(spec)
    if m < 2:
        raise ValueError("Self-avoiding returns need at least two steps", m)
    total = 0
    for rep, orbit in step_orbits(spec).items():
        total += len(orbit) * count_walks_to(spec, m - 1, rep, options)
    return total


def count_polygons(spec: LatticeSpec, length: int, options: EngineOptions = DEFAULT_OPTIONS) -> int:
    """Self-avoiding polygons of ``length`` steps modulo translation and orientation.

    q_m = (number of m-step self-avoiding returns) / (2m); on Z^d this is 2d c_{m-1}(e_1) / (2m).
    The convention q_2 = 1 is not a count and is handled by callers.
    """
    _check_zd(spec)
    if length < 3 or (spec.kind == ZD_NEAREST and length < 4):
        raise ValueError("Polygon length too small", length)
    returns = count_returns(spec, length, options)
    quotient, remainder = divmod(returns, 2 * length)
    if remainder:
        raise GeometryError("Return count is not divisible by 2m; enumeration is inconsistent", (returns, length))
    return quotient


def _validate_domain(spec: LatticeSpec, domain: Iterable[Sequence[int]]) -> FrozenSet[Site]:
    sites = frozenset(tuple(site) for site in domain)
    if any(len(site) != spec.d for site in sites):
        raise GeometryError("Domain sites have the wrong dimension", spec.d)
    return sites


def restricted_tables(
    spec: LatticeSpec,
    n: int,
    lam,
    domain: Iterable[Sequence[int]],
    x: Sequence[int],
    options: EngineOptions = DEFAULT_OPTIONS,
) -> CountTable:
    """lam-weighted counts of walks from x that stay in ``domain``, by length and endpoint."""
    _check_zd(spec)
    _check_length(n)
    lam = parse_lambda(lam)
    sites = _validate_domain(spec, domain)
    x = tuple(x)
    if x not in sites:
        raise GeometryError("Start site must lie in the domain", x)
    q = 1 - lam
    steps = step_set(spec)
    tally: Dict[Tuple[int, Site, int], int] = defaultdict(int)
    tally[(0, x, 0)] = 1
    visits: Dict[Site, int] = defaultdict(int)
    visits[x] = 1
    nodes = [0]

    def extend(site: Site, depth: int, inter: int):
        nxt = depth + 1
        for step in steps:
            y = tuple(a + b for a, b in zip(site, step))
            if y not in sites:
                continue
            seen = visits[y]
            if seen and lam == 1:
                continue
            tally[(nxt, y, inter + seen)] += 1
            if nxt < n:
                visits[y] = seen + 1
                extend(y, nxt, inter + seen)
                visits[y] = seen
        nodes[0] += 1
        if nodes[0] > options.node_budget:
            raise BudgetExceeded("Enumeration exceeded the node budget", options.node_budget)

    if n > 0:
        extend(x, 0, 0)
    values: Dict[tuple, Exact] = defaultdict(int)
    for (depth, y, inter), count in tally.items():
        weight = count if inter == 0 else count * q ** inter
        if weight:
            values[(depth, y)] += weight
    return CountTable("restricted", spec.name, n, {k: _exact(v) for k, v in values.items()}, lam)


def count_restricted(
    spec: LatticeSpec,
    n: int,
    lam,
    domain: Iterable[Sequence[int]],
    x: Sequence[int],
    y: Sequence[int],
    options: EngineOptions = DEFAULT_OPTIONS,
) -> CountTable:
    """lam-weighted counts of k-step walks x -> y inside ``domain`` for k <= n, indexed by (k,)."""
    table = restricted_tables(spec, n, lam, domain, x, options)
    y = tuple(y)
    values = {(k,): table[(k, y)] for k in range(n + 1) if table[(k, y)]}
    return CountTable("restricted", spec.name, n, values, table.lam)


def count_torus_walks(spec: LatticeSpec, R: int, n: int, lam=1, options: EngineOptions = DEFAULT_OPTIONS) -> CountTable:
    """lam-weighted walk counts on the torus Z^d / R'Z^d, R' = 2R + 1, by length."""
    _check_zd(spec)
    _check_length(n)
    if R < 1:
        raise ValueError("Torus needs R >= 1 (period at least 3)", R)
    lam = parse_lambda(lam)
    period = 2 * R + 1
    q = 1 - lam
    steps = step_set(spec)
    tally: Dict[Tuple[int, int], int] = defaultdict(int)
    tally[(0, 0)] = 1
    start = origin(spec.d)
    visits: Dict[Site, int] = defaultdict(int)
    visits[start] = 1
    nodes = [0]

    def extend(site: Site, depth: int, inter: int):
        nxt = depth + 1
        for step in steps:
            y = tuple((a + b) % period for a, b in zip(site, step))
            seen = visits[y]
            if seen and lam == 1:
                continue
            tally[(nxt, inter + seen)] += 1
            if nxt < n:
                visits[y] = seen + 1
                extend(y, nxt, inter + seen)
                visits[y] = seen
        nodes[0] += 1
        if nodes[0] > options.node_budget:
            raise BudgetExceeded("Enumeration exceeded the node budget", options.node_budget)

    if n > 0:
        extend(start, 0, 0)
    values: Dict[tuple, Exact] = defaultdict(int)
    for (depth, inter), count in tally.items():
        weight = count if inter == 0 else count * q ** inter
        if weight:
            values[(depth,)] += weight
    return CountTable("torus", f"{spec.name}-t{period}", n, {k: _exact(v) for k, v in values.items()}, lam)


def extension_profile(spec: LatticeSpec, n: int, m: int, options: EngineOptions = DEFAULT_OPTIONS) -> Tuple[int, int]:
    """Fewest and most m-step self-avoiding extensions over all n-step self-avoiding walks."""
    _check_zd(spec)
    if not 0 <= n <= m:
        raise ValueError("Need 0 <= n <= m", (n, m))
    job = _job(spec, SAW, m, options)
    _, prefixes = _expand_prefixes(job, n)
    if n == m:
        return 1, 1
    counts = []
    for result, _ in run_tasks(_run_task, [(job, prefix) for prefix in prefixes], options.threads):
        counts.append(sum(result["rows"][m].values()))
    return min(counts), max(counts)


# ---------------------------------------------------------------------------
# Streams and oracles


def iter_walks(spec: LatticeSpec, n: int, self_avoiding: bool = True, half_space: bool = False) -> Iterator[Walk]:
    """Yield every n-step walk from the origin, in lexicographic step order."""
    _check_zd(spec)
    _check_length(n)
    steps = step_set(spec)
    start = origin(spec.d)

    def extend(path: List[Site], occupied: set) -> Iterator[Walk]:
        if len(path) == n + 1:
            yield Walk(tuple(path))
            return
        here = path[-1]
        for step in steps:
            y = tuple(a + b for a, b in zip(here, step))
            if self_avoiding and y in occupied:
                continue
            if half_space and y[0] <= 0:
                continue
            path.append(y)
            fresh = y not in occupied
            occupied.add(y)
            yield from extend(path, occupied)
            path.pop()
            if fresh:
                occupied.discard(y)

    yield from extend([start], {start})


def naive_count_walks(spec: LatticeSpec, n: int, lam=1) -> Dict[Site, Exact]:
    """Brute force over all |Omega|^n step sequences: c_n^(lam)(x) for exactly n steps."""
    _check_zd(spec)
    _check_length(n)
    lam = parse_lambda(lam)
    counts: Dict[Site, Exact] = defaultdict(int)
    for steps in itertools.product(step_set(spec), repeat=n):
        walk = Walk.from_steps(steps, spec.d)
        weight: Exact = 1
        for s, t in itertools.combinations(range(n + 1), 2):
            if walk.sites[s] == walk.sites[t]:
                weight *= 1 - lam
        if weight:
            counts[walk.endpoint] += weight
    return {x: _exact(v) for x, v in counts.items()}
