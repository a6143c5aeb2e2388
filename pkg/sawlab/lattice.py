"""Lattices, step sets and hexagonal mid-edge geometry.

Z^d lattices are described by a :class:`LatticeSpec` and walked through their step sets.
The hexagonal lattice is embedded with doubled Cartesian integer coordinates: for unit edge
length a vertex at (x, y) is stored as (X, Y) = (2x, 2y/sqrt(3)). Headings are integers mod 6
in units of pi/3, so every geometric quantity stays in integer arithmetic.
"""
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from sawlab.errors import GeometryError

Site = Tuple[int, ...]
Step = Tuple[int, ...]

ZD_NEAREST = "zd"
ZD_SPREAD_OUT = "zd-so"
HEXAGONAL = "hex"


@dataclass(frozen=True)
class LatticeSpec:
    kind: str
    d: int = 2
    range: int = 1

    def __post_init__(self):
        if self.kind not in (ZD_NEAREST, ZD_SPREAD_OUT, HEXAGONAL):
            raise GeometryError("Lattice kind is unknown", self.kind)
        if self.kind != HEXAGONAL and (self.d < 1 or self.range < 1):
            raise GeometryError("Dimension and range must be positive", (self.d, self.range))

    @property
    def name(self) -> str:
        """Compact string used in cache keys and reports: "z2", "zd3-so2", "hex"."""
        if self.kind == HEXAGONAL:
            return "hex"
        if self.kind == ZD_NEAREST:
            return f"z{self.d}"
        return f"zd{self.d}-so{self.range}"

    @property
    def is_zd(self) -> bool:
        return self.kind != HEXAGONAL

    @property
    def is_bipartite(self) -> bool:
        return self.kind == ZD_NEAREST

    def __str__(self):
        return self.name


def zd_nearest(d: int) -> LatticeSpec:
    return LatticeSpec(ZD_NEAREST, d=d)


def zd_spread_out(d: int, range_: int) -> LatticeSpec:
    return LatticeSpec(ZD_SPREAD_OUT, d=d, range=range_)


def lattice_from_string(text: str) -> LatticeSpec:
    """Parse "z2", "zd3", "zd3-so2" or "hex"."""
    text = text.strip().lower()
    if text == "hex":
        return LatticeSpec(HEXAGONAL)
    try:
        if text.startswith("zd") and "-so" in text:
            dim, range_ = text[2:].split("-so")
            return zd_spread_out(int(dim), int(range_))
        if text.startswith("zd"):
            return zd_nearest(int(text[2:]))
        if text.startswith("z"):
            return zd_nearest(int(text[1:]))
    except ValueError:
        pass
    raise GeometryError("Cannot parse lattice", text)


def step_set(spec: LatticeSpec) -> List[Step]:
    """All steps of a Z^d lattice in lexicographic order."""
    if not spec.is_zd:
        raise GeometryError("Hexagonal walks move between mid-edges; use hex_continuations", spec.name)
    if spec.kind == ZD_NEAREST:
        steps = []
        for axis in range(spec.d):
            for sign in (-1, 1):
                steps.append(tuple(sign if i == axis else 0 for i in range(spec.d)))
        return sorted(steps)
    span = range(-spec.range, spec.range + 1)
    return [step for step in itertools.product(span, repeat=spec.d) if any(step)]


def unit_vector(d: int, axis: int = 0) -> Site:
    return tuple(1 if i == axis else 0 for i in range(d))


def origin(d: int) -> Site:
    return (0,) * d


def l1_norm(x: Sequence[int]) -> int:
    return sum(abs(c) for c in x)


@dataclass(frozen=True)
class SignedPermutation:
    """Lattice symmetry x -> (signs[i] * x[perm[i]])_i."""

    perm: Tuple[int, ...]
    signs: Tuple[int, ...]

    def __call__(self, x: Sequence[int]) -> Site:
        return tuple(s * x[p] for p, s in zip(self.perm, self.signs))


def step_orbits(spec: LatticeSpec) -> Dict[Step, List[Tuple[Step, SignedPermutation]]]:
    """Group the step set into orbits of the signed-permutation group.

    Returns ``{representative: [(step, g), ...]}`` with ``g(representative) == step``. The
    representative of an orbit has non-negative coordinates in non-increasing order.
    """
    orbits: Dict[Step, List[Tuple[Step, SignedPermutation]]] = {}
    for step in step_set(spec):
        rep = tuple(sorted((abs(c) for c in step), reverse=True))
        orbits.setdefault(rep, []).append((step, _carry(rep, step)))
    return orbits


def _carry(rep: Step, step: Step) -> SignedPermutation:
    unused = list(range(len(rep)))
    perm, signs = [], []
    for coordinate in step:
        j = next(j for j in unused if rep[j] == abs(coordinate))
        unused.remove(j)
        perm.append(j)
        signs.append(-1 if coordinate < 0 else 1)
    return SignedPermutation(tuple(perm), tuple(signs))


# ---------------------------------------------------------------------------
# Hexagonal lattice

# Heading k points along exp(i k pi / 3); vectors are in doubled coordinates.
HEADING_VECTORS: Tuple[Tuple[int, int], ...] = ((2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1))
_HEADING_OF_VECTOR = {vector: k for k, vector in enumerate(HEADING_VECTORS)}
_A_HEADINGS = (1, 3, 5)
_B_HEADINGS = (0, 2, 4)

ORIENTATIONS = ("horizontal", "up-slant", "down-slant")


class HexVertex(NamedTuple):
    x: int
    y: int

    @property
    def sublattice(self) -> str:
        residue = (self.x - 3 * self.y) % 6
        if residue == 1:
            return "A"
        if residue == 5:
            return "B"
        raise GeometryError("Not a hexagonal lattice vertex", tuple(self))

    def headings(self) -> Tuple[int, int, int]:
        return _A_HEADINGS if self.sublattice == "A" else _B_HEADINGS

    def neighbour(self, heading: int) -> "HexVertex":
        if heading % 6 not in self.headings():
            raise GeometryError("No edge in this direction", (tuple(self), heading))
        dx, dy = HEADING_VECTORS[heading % 6]
        return HexVertex(self.x + dx, self.y + dy)

    def neighbours(self) -> List["HexVertex"]:
        return [self.neighbour(k) for k in self.headings()]


def heading_between(u: HexVertex, w: HexVertex) -> int:
    """Heading of the edge from u to w."""
    try:
        return _HEADING_OF_VECTOR[(w.x - u.x, w.y - u.y)]
    except KeyError:
        raise GeometryError("Vertices are not adjacent", (tuple(u), tuple(w)))


@dataclass(frozen=True, order=True)
class MidEdge:
    """Centre of the edge {u, w}; stored with u < w."""

    u: HexVertex
    w: HexVertex

    def __post_init__(self):
        heading_between(self.u, self.w)

    @staticmethod
    def of(u: HexVertex, w: HexVertex) -> "MidEdge":
        return MidEdge(u, w) if u < w else MidEdge(w, u)

    @property
    def orientation(self) -> str:
        return ORIENTATIONS[heading_between(self.u, self.w) % 3]

    @property
    def doubled_position(self) -> Tuple[int, int]:
        return (self.u.x + self.w.x, self.u.y + self.w.y)

    def other(self, v: HexVertex) -> HexVertex:
        if v == self.u:
            return self.w
        if v == self.w:
            return self.u
        raise GeometryError("Vertex is not incident to mid-edge", (tuple(v), self.doubled_position))

    def heading_from(self, v: HexVertex) -> int:
        """Heading of the half-edge from v to this mid-edge."""
        return heading_between(v, self.other(v))


def hex_continuations(current: MidEdge, via: HexVertex) -> List[Tuple[MidEdge, int]]:
    """The two non-backtracking exits of a walk entering ``via`` through ``current``.

    Returns ``[(left exit, +1), (right exit, -1)]``; each turn winds by +-pi/3.
    """
    arrival = (current.heading_from(current.other(via))) % 6
    exits = []
    for turn in (1, -1):
        heading = (arrival + turn) % 6
        exits.append((MidEdge.of(via, via.neighbour(heading)), turn))
    return exits


def hex_mid_edges(vertices: Iterable[HexVertex]) -> FrozenSet[MidEdge]:
    return frozenset(MidEdge.of(v, w) for v in vertices for w in v.neighbours())


@dataclass(frozen=True)
class HexDomain:
    """A finite set of hexagonal vertices with its mid-edges and boundary.

    ``parts`` labels boundary mid-edges (``alpha``, ``beta``, ``epsilon``, ``epsilon_bar``)
    when the domain is a strip; ``start`` is the distinguished boundary mid-edge ``a``.
    """

    vertices: FrozenSet[HexVertex]
    mid_edges: FrozenSet[MidEdge]
    boundary: FrozenSet[MidEdge]
    parts: Mapping[str, FrozenSet[MidEdge]] = field(default_factory=dict, compare=False)
    start: Optional[MidEdge] = None

    def inside(self, mid_edge: MidEdge) -> HexVertex:
        """The endpoint of a boundary mid-edge lying in the domain."""
        return mid_edge.u if mid_edge.u in self.vertices else mid_edge.w

    def part_of(self, mid_edge: MidEdge) -> Optional[str]:
        for name, members in self.parts.items():
            if mid_edge in members:
                return name
        return None


def hex_domain(
    vertices: Iterable[HexVertex],
    parts: Optional[Mapping[str, FrozenSet[MidEdge]]] = None,
    start: Optional[MidEdge] = None,
) -> HexDomain:
    vertex_set = frozenset(HexVertex(*v) for v in vertices)
    if not vertex_set:
        raise GeometryError("A domain needs at least one vertex", vertex_set)
    for vertex in vertex_set:
        vertex.sublattice  # raises on non-lattice points
    mid_edges = hex_mid_edges(vertex_set)
    boundary = frozenset(m for m in mid_edges if (m.u in vertex_set) != (m.w in vertex_set))
    if start is not None and start not in boundary:
        raise GeometryError("Start mid-edge must lie on the boundary", start.doubled_position)
    return HexDomain(vertex_set, mid_edges, boundary, dict(parts or {}), start)


def is_connected(vertices: FrozenSet[HexVertex]) -> bool:
    if not vertices:
        return False
    seed = min(vertices)
    seen = {seed}
    queue = deque([seed])
    while queue:
        v = queue.popleft()
        for w in v.neighbours():
            if w in vertices and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(vertices)


def is_simply_connected(domain: HexDomain) -> bool:
    """Connected, and its complement is connected (checked inside a padded bounding box)."""
    if not is_connected(domain.vertices):
        return False
    xs = [v.x for v in domain.vertices]
    ys = [v.y for v in domain.vertices]
    x_lo, x_hi, y_lo, y_hi = min(xs) - 4, max(xs) + 4, min(ys) - 2, max(ys) + 2
    complement = set()
    for x in range(x_lo, x_hi + 1):
        for y in range(y_lo, y_hi + 1):
            if (x - 3 * y) % 6 in (1, 5):
                v = HexVertex(x, y)
                if v not in domain.vertices:
                    complement.add(v)
    seed = HexVertex(*min(complement))
    seen = {seed}
    queue = deque([seed])
    while queue:
        v = queue.popleft()
        for w in v.neighbours():
            if w in complement and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(complement)


STRIP_PARTS = ("alpha", "beta", "epsilon", "epsilon_bar")
_PART_OF_EXIT_HEADING = {3: "alpha", 0: "beta", 2: "epsilon", 4: "epsilon_bar"}
STRIP_START = MidEdge.of(HexVertex(-1, 0), HexVertex(1, 0))


def strip_cut(L: int) -> int:
    return 6 * L + 1


def strip_domain(T: int, L: int) -> HexDomain:
    """The strip S_{T,L}.

    T vertical zigzag columns j = 0..T-1 (A-vertices at X = 1 + 3j, B-vertices at X = 2 + 3j),
    cut above by 3Y - X <= 6L + 1 and below by -3Y - X <= 6L + 1. The start mid-edge ``a`` is
    the horizontal mid-edge at the origin. Boundary mid-edges are labelled by the heading of
    the half-edge leaving the domain: pi -> alpha, 0 -> beta, 2pi/3 -> epsilon, 4pi/3 -> epsilon_bar.
    """
    if T < 1 or L < 1:
        raise GeometryError("Strip dimensions must be positive", (T, L))
    cut = strip_cut(L)
    vertices = []
    for column in range(T):
        for x, parity in ((1 + 3 * column, column % 2), (2 + 3 * column, (column + 1) % 2)):
            y_max = (cut + x) // 3
            for y in range(-y_max, y_max + 1):
                if y % 2 == parity and 3 * y - x <= cut and -3 * y - x <= cut:
                    vertices.append(HexVertex(x, y))
    bare = hex_domain(vertices)

    members: Dict[str, set] = {name: set() for name in STRIP_PARTS}
    for mid_edge in bare.boundary:
        v = bare.inside(mid_edge)
        heading = mid_edge.heading_from(v)
        if heading not in _PART_OF_EXIT_HEADING:
            raise GeometryError("Unexpected boundary heading in strip", (mid_edge.doubled_position, heading))
        members[_PART_OF_EXIT_HEADING[heading]].add(mid_edge)
    parts = {name: frozenset(edges) for name, edges in members.items()}
    return hex_domain(vertices, parts=parts, start=STRIP_START)


def hexagon_vertices(centre: Tuple[int, int]) -> List[HexVertex]:
    """The six vertices of the hexagonal face centred at ``centre`` (doubled coordinates)."""
    cx, cy = centre
    corners = [HexVertex(cx + dx, cy + dy) for dx, dy in HEADING_VECTORS]
    for corner in corners:
        corner.sublattice  # raises when centre is not a face centre
    return corners


def hexagon_cluster(centres: Iterable[Tuple[int, int]], start: Optional[MidEdge] = None) -> HexDomain:
    """Union of hexagonal faces. Face centres satisfy X - 3Y = 3 (mod 6); (3, 0) is the face
    to the right of the origin mid-edge."""
    vertices = set()
    for centre in centres:
        vertices.update(hexagon_vertices(centre))
    return hex_domain(vertices, start=start)
