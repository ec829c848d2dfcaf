# core/models.py
"""
Domain model: coloured bipartite graphs, Latin arrays, Steiner triple
systems, linear 3-graphs, rainbow matchings, and the value objects passed
between the nibble, expansion, augmentation and solver services.

Identifiers are plain ints. A root instance uses dense ids 0..k-1; derived
subgraphs (residuals, parts of a split) keep their parent's ids, so a
matching found on a subgraph is already expressed in the root's ids.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np

from core.errors import (
    InvalidGraphError,
    InvalidLatinArrayError,
    InvalidMatchingError,
    InvalidSteinerSystemError,
    NonLinearHypergraphError,
    NotAPartitionError,
    ValidationError,
)


class Side(Enum):
    X = "x"
    Y = "y"

    @property
    def other(self) -> "Side":
        return Side.Y if self is Side.X else Side.X


class Edge(NamedTuple):
    """A coloured edge (x, y, c)."""
    x: int
    y: int
    c: int

    def endpoint(self, side: Side) -> int:
        return self.x if side is Side.X else self.y

    def to_dict(self) -> Dict[str, int]:
        return {"x": int(self.x), "y": int(self.y), "c": int(self.c)}


# ---------------------------------------------------------------------------
# Coloured bipartite graph
# ---------------------------------------------------------------------------

class ColoredBipartiteGraph:
    """
    Simple bipartite graph with a proper edge colouring.

    Immutable after construction. Lookups of "the c-coloured edge at v" and
    "the colour of xy" are dict hits.
    """

    def __init__(self, xs: Iterable[int], ys: Iterable[int], colors: Iterable[int],
                 edges: Iterable[Sequence[int]], names: Optional[Dict[str, Dict[int, str]]] = None,
                 validate: bool = True):
        self.xs: Tuple[int, ...] = tuple(sorted(set(int(v) for v in xs)))
        self.ys: Tuple[int, ...] = tuple(sorted(set(int(v) for v in ys)))
        self.colors: Tuple[int, ...] = tuple(sorted(set(int(c) for c in colors)))
        self.names = names or {}

        self._x_set = frozenset(self.xs)
        self._y_set = frozenset(self.ys)
        self._c_set = frozenset(self.colors)

        self._at_x: Dict[int, Dict[int, Edge]] = {x: {} for x in self.xs}
        self._at_y: Dict[int, Dict[int, Edge]] = {y: {} for y in self.ys}
        self._nbr_x: Dict[int, Dict[int, int]] = {x: {} for x in self.xs}
        self._nbr_y: Dict[int, Dict[int, int]] = {y: {} for y in self.ys}
        self._by_color: Dict[int, List[Edge]] = {c: [] for c in self.colors}

        edge_list: List[Edge] = []
        for raw in edges:
            e = Edge(int(raw[0]), int(raw[1]), int(raw[2]))
            if validate:
                self._check_edge(e)
            self._at_x[e.x][e.c] = e
            self._at_y[e.y][e.c] = e
            self._nbr_x[e.x][e.y] = e.c
            self._nbr_y[e.y][e.x] = e.c
            self._by_color[e.c].append(e)
            edge_list.append(e)
        self._edges: Tuple[Edge, ...] = tuple(sorted(edge_list))

    def _check_edge(self, e: Edge) -> None:
        if e.x not in self._x_set or e.y not in self._y_set or e.c not in self._c_set:
            raise InvalidGraphError(f"Edge {tuple(e)} references an unknown vertex or colour",
                                    {"edge": e.to_dict()})
        if e.y in self._nbr_x[e.x]:
            raise InvalidGraphError(f"Parallel edges between x={e.x} and y={e.y}",
                                    {"x": e.x, "y": e.y})
        clash = self._at_x[e.x].get(e.c) or self._at_y[e.y].get(e.c)
        if clash is not None:
            raise InvalidGraphError(f"Colour {e.c} repeats at a vertex: {tuple(clash)} and {tuple(e)}",
                                    {"color": e.c, "edges": [clash.to_dict(), e.to_dict()]})

    # --- sizes ---

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def m(self) -> int:
        return len(self.colors)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    def vertices(self, side: Side) -> Tuple[int, ...]:
        return self.xs if side is Side.X else self.ys

    def has_vertex(self, side: Side, v: int) -> bool:
        return v in (self._x_set if side is Side.X else self._y_set)

    def has_color(self, c: int) -> bool:
        return c in self._c_set

    # --- lookups ---

    def edge_color(self, x: int, y: int) -> Optional[int]:
        return self._nbr_x.get(x, {}).get(y)

    def has_edge(self, e: Edge) -> bool:
        return self.edge_color(e.x, e.y) == e.c

    def edge_at(self, side: Side, v: int, c: int) -> Optional[Edge]:
        table = self._at_x if side is Side.X else self._at_y
        return table.get(v, {}).get(c)

    def neighbors(self, side: Side, v: int) -> Dict[int, int]:
        """Map neighbour -> colour of the joining edge."""
        table = self._nbr_x if side is Side.X else self._nbr_y
        return table.get(v, {})

    def edges_at(self, side: Side, v: int) -> List[Edge]:
        table = self._at_x if side is Side.X else self._at_y
        return list(table.get(v, {}).values())

    def degree(self, side: Side, v: int) -> int:
        return len(self.neighbors(side, v))

    def colors_at(self, side: Side, v: int) -> FrozenSet[int]:
        table = self._at_x if side is Side.X else self._at_y
        return frozenset(table.get(v, {}))

    def edges_of_color(self, c: int) -> List[Edge]:
        return list(self._by_color.get(c, []))

    def color_size(self, c: int) -> int:
        return len(self._by_color.get(c, []))

    def vertices_of_color(self, c: int) -> Tuple[FrozenSet[int], FrozenSet[int]]:
        es = self._by_color.get(c, [])
        return frozenset(e.x for e in es), frozenset(e.y for e in es)

    def is_complete(self) -> bool:
        return self.num_edges == len(self.xs) * len(self.ys)

    # --- derived graphs ---

    def induced(self, xs: Optional[Iterable[int]] = None, ys: Optional[Iterable[int]] = None,
                colors: Optional[Iterable[int]] = None) -> "ColoredBipartiteGraph":
        """Subgraph on the given vertices and colours (None keeps the whole side)."""
        keep_x = self._x_set if xs is None else frozenset(xs) & self._x_set
        keep_y = self._y_set if ys is None else frozenset(ys) & self._y_set
        keep_c = self._c_set if colors is None else frozenset(colors) & self._c_set
        if len(keep_c) * 2 < len(self._c_set):
            pool = (e for c in keep_c for e in self._by_color[c])
        else:
            pool = iter(self._edges)
        kept = [e for e in pool if e.x in keep_x and e.y in keep_y and e.c in keep_c]
        return ColoredBipartiteGraph(keep_x, keep_y, keep_c, kept, names=self.names, validate=False)

    def restrict_colors(self, colors: Iterable[int]) -> "ColoredBipartiteGraph":
        return self.induced(colors=colors)

    # --- serialisation ---

    def to_dict(self) -> Dict[str, Any]:
        return {
            "X": list(self.xs),
            "Y": list(self.ys),
            "C": list(self.colors),
            "edges": [[e.x, e.y, e.c] for e in self._edges],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ColoredBipartiteGraph":
        return cls(data["X"], data["Y"], data["C"], data.get("edges", []))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ColoredBipartiteGraph):
            return NotImplemented
        return (self.xs, self.ys, self.colors, self._edges) == (other.xs, other.ys, other.colors, other._edges)

    def __hash__(self) -> int:
        return hash((self.xs, self.ys, self.colors, self._edges))

    def __repr__(self) -> str:
        return f"ColoredBipartiteGraph(|X|={len(self.xs)}, |Y|={len(self.ys)}, |C|={len(self.colors)}, e={self.num_edges})"


# ---------------------------------------------------------------------------
# Rainbow matching
# ---------------------------------------------------------------------------

class RainbowMatching:
    """Edges pairwise disjoint in vertices and colours, indexed both ways."""

    def __init__(self, edges: Iterable[Sequence[int]] = ()):
        self._by_x: Dict[int, Edge] = {}
        self._by_y: Dict[int, Edge] = {}
        self._by_c: Dict[int, Edge] = {}
        for raw in edges:
            self.add(Edge(int(raw[0]), int(raw[1]), int(raw[2])))

    def add(self, e: Edge) -> None:
        clash = self._by_x.get(e.x) or self._by_y.get(e.y) or self._by_c.get(e.c)
        if clash is not None:
            raise InvalidMatchingError(f"Edge {tuple(e)} conflicts with {tuple(clash)}",
                                       {"edge": e.to_dict(), "conflict": clash.to_dict()})
        self._by_x[e.x] = e
        self._by_y[e.y] = e
        self._by_c[e.c] = e

    def remove(self, e: Edge) -> None:
        if self._by_x.get(e.x) != e:
            raise InvalidMatchingError(f"Edge {tuple(e)} is not in the matching", {"edge": e.to_dict()})
        del self._by_x[e.x]
        del self._by_y[e.y]
        del self._by_c[e.c]

    def update(self, edges: Iterable[Edge]) -> None:
        for e in edges:
            self.add(e)

    def edge_at(self, side: Side, v: int) -> Optional[Edge]:
        return (self._by_x if side is Side.X else self._by_y).get(v)

    def edge_of_color(self, c: int) -> Optional[Edge]:
        return self._by_c.get(c)

    def partner(self, side: Side, v: int) -> Optional[int]:
        e = self.edge_at(side, v)
        if e is None:
            return None
        return e.y if side is Side.X else e.x

    def covers(self, side: Side, v: int) -> bool:
        return v in (self._by_x if side is Side.X else self._by_y)

    def uses_color(self, c: int) -> bool:
        return c in self._by_c

    @property
    def edges(self) -> List[Edge]:
        return sorted(self._by_x.values())

    @property
    def colors(self) -> Set[int]:
        return set(self._by_c)

    def vertices(self, side: Side) -> Set[int]:
        return set(self._by_x if side is Side.X else self._by_y)

    def copy(self) -> "RainbowMatching":
        clone = RainbowMatching()
        clone._by_x = dict(self._by_x)
        clone._by_y = dict(self._by_y)
        clone._by_c = dict(self._by_c)
        return clone

    def symmetric_difference(self, other: "RainbowMatching") -> Set[Edge]:
        return set(self._by_x.values()) ^ set(other._by_x.values())

    def union(self, other: "RainbowMatching") -> "RainbowMatching":
        merged = self.copy()
        merged.update(other.edges)
        return merged

    def to_list(self) -> List[Dict[str, int]]:
        return [e.to_dict() for e in self.edges]

    @classmethod
    def from_list(cls, rows: Iterable[Dict[str, int]]) -> "RainbowMatching":
        return cls((r["x"], r["y"], r["c"]) for r in rows)

    def __len__(self) -> int:
        return len(self._by_x)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)

    def __contains__(self, e: object) -> bool:
        return isinstance(e, tuple) and len(e) == 3 and self._by_x.get(e[0]) == e

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RainbowMatching):
            return NotImplemented
        return self._by_x == other._by_x

    def __repr__(self) -> str:
        return f"RainbowMatching(size={len(self)})"


def matching_violations(edges: Iterable[Sequence[int]]) -> List[Dict[str, Any]]:
    """Every repeated vertex or colour in an edge list, one entry per repeat."""
    seen: Dict[Tuple[str, int], Tuple[int, ...]] = {}
    problems: List[Dict[str, Any]] = []
    for raw in edges:
        e = tuple(int(v) for v in raw)
        for key in (("x", e[0]), ("y", e[1]), ("color", e[2])):
            if key in seen:
                problems.append({"kind": f"duplicate-{key[0]}", key[0]: key[1],
                                 "edges": [list(seen[key]), list(e)]})
            else:
                seen[key] = e
    return problems


# ---------------------------------------------------------------------------
# Latin arrays, Steiner systems, linear 3-graphs
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class LatinArray:
    """n×n grid with no symbol repeated in a row or a column."""
    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.int64)
        if self.cells.ndim != 2 or self.cells.shape[0] != self.cells.shape[1]:
            raise InvalidLatinArrayError(f"Latin array must be square, got shape {self.cells.shape}",
                                         {"shape": list(self.cells.shape)})
        witness = self.first_repeat()
        if witness is not None:
            raise InvalidLatinArrayError(
                f"Symbol {witness['symbol']} repeats in {witness['line']} at cells {witness['cells']}", witness)

    def first_repeat(self) -> Optional[Dict[str, Any]]:
        n = self.n
        for i in range(n):
            seen: Dict[int, int] = {}
            for j in range(n):
                s = int(self.cells[i, j])
                if s in seen:
                    return {"line": "row", "symbol": s, "cells": [[i, seen[s]], [i, j]]}
                seen[s] = j
        for j in range(n):
            seen = {}
            for i in range(n):
                s = int(self.cells[i, j])
                if s in seen:
                    return {"line": "column", "symbol": s, "cells": [[seen[s], j], [i, j]]}
                seen[s] = i
        return None

    @property
    def n(self) -> int:
        return int(self.cells.shape[0])

    @property
    def symbols(self) -> Tuple[int, ...]:
        return tuple(int(s) for s in np.unique(self.cells))

    @property
    def is_square(self) -> bool:
        """Latin square: exactly n symbols (each then appears once per row)."""
        return len(self.symbols) == self.n

    def cell(self, i: int, j: int) -> int:
        return int(self.cells[i, j])

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "cells": self.cells.tolist()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatinArray):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __repr__(self) -> str:
        return f"LatinArray(n={self.n}, symbols={len(self.symbols)})"


@dataclass(eq=False)
class SteinerTripleSystem:
    """Every vertex pair lies in exactly one triple; n ≡ 1 or 3 (mod 6)."""
    n: int
    triples: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self):
        self.triples = tuple(sorted(tuple(sorted(int(v) for v in t)) for t in self.triples))
        if self.n < 0 or (self.n > 0 and self.n % 6 not in (1, 3)):
            raise InvalidSteinerSystemError(f"No STS exists on n={self.n} vertices (need n ≡ 1 or 3 mod 6)",
                                            {"n": self.n})
        owner: Dict[Tuple[int, int], Tuple[int, int, int]] = {}
        for t in self.triples:
            if len(set(t)) != 3 or not all(0 <= v < self.n for v in t):
                raise InvalidSteinerSystemError(f"Malformed triple {list(t)}", {"triple": list(t)})
            for pair in combinations(t, 2):
                if pair in owner:
                    raise InvalidSteinerSystemError(
                        f"Pair {list(pair)} lies in two triples", {"pair": list(pair),
                                                                   "triples": [list(owner[pair]), list(t)]})
                owner[pair] = t
        for pair in combinations(range(self.n), 2):
            if pair not in owner:
                raise InvalidSteinerSystemError(f"Pair {list(pair)} is not covered", {"pair": list(pair)})

    @property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(range(self.n))

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "triples": [list(t) for t in self.triples]}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SteinerTripleSystem):
            return NotImplemented
        return self.n == other.n and self.triples == other.triples

    def __repr__(self) -> str:
        return f"SteinerTripleSystem(n={self.n}, triples={len(self.triples)})"


@dataclass(eq=False)
class LinearHypergraph3:
    """3-uniform hypergraph, every pair in at most one edge; optionally tripartite."""
    vertices: Tuple[int, ...]
    edges: Tuple[Tuple[int, int, int], ...]
    parts: Optional[Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]] = None

    def __post_init__(self):
        self.vertices = tuple(sorted(set(int(v) for v in self.vertices)))
        self.edges = tuple(sorted(tuple(sorted(int(v) for v in e)) for e in self.edges))
        vset = set(self.vertices)
        owner: Dict[Tuple[int, int], Tuple[int, int, int]] = {}
        for e in self.edges:
            if len(set(e)) != 3 or not set(e) <= vset:
                raise ValidationError(f"Malformed edge {list(e)}", {"edge": list(e)})
            for pair in combinations(e, 2):
                if pair in owner:
                    raise NonLinearHypergraphError(
                        f"Pair {list(pair)} lies in two edges", {"pair": list(pair),
                                                                 "edges": [list(owner[pair]), list(e)]})
                owner[pair] = e
        if self.parts is not None:
            self.parts = tuple(frozenset(int(v) for v in p) for p in self.parts)
            check_partition(self.vertices, self.parts)
            for e in self.edges:
                if [len(set(e) & p) for p in self.parts] != [1, 1, 1]:
                    raise ValidationError(f"Edge {list(e)} does not meet each part once", {"edge": list(e)})

    @property
    def is_tripartite(self) -> bool:
        return self.parts is not None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}
        if self.parts is not None:
            data["parts"] = [sorted(p) for p in self.parts]
        return data

    def __repr__(self) -> str:
        return f"LinearHypergraph3(v={len(self.vertices)}, e={len(self.edges)}, tripartite={self.is_tripartite})"


def check_partition(universe: Iterable[int], parts: Sequence[Iterable[int]]) -> None:
    """Raise NotAPartitionError unless ``parts`` partition ``universe``."""
    universe = set(universe)
    seen: Dict[int, int] = {}
    for idx, part in enumerate(parts):
        for v in part:
            if v in seen:
                raise NotAPartitionError(f"Vertex {v} lies in parts {seen[v]} and {idx}",
                                         {"vertex": v, "parts": [seen[v], idx]})
            if v not in universe:
                raise NotAPartitionError(f"Vertex {v} is not in the universe", {"vertex": v})
            seen[v] = idx
    missing = sorted(universe - set(seen))
    if missing:
        raise NotAPartitionError(f"Vertex {missing[0]} is in no part", {"vertex": missing[0]})


def triple_matching_violations(triples: Iterable[Sequence[int]],
                               allowed: Optional[Iterable[Sequence[int]]] = None) -> List[Dict[str, Any]]:
    """Overlapping triples and triples that are not edges of ``allowed``."""
    allowed_set = None if allowed is None else {tuple(sorted(t)) for t in allowed}
    owner: Dict[int, Tuple[int, ...]] = {}
    problems: List[Dict[str, Any]] = []
    for raw in triples:
        t = tuple(sorted(int(v) for v in raw))
        if allowed_set is not None and t not in allowed_set:
            problems.append({"kind": "not-an-edge", "triple": list(t)})
        for v in t:
            if v in owner:
                problems.append({"kind": "overlap", "vertex": v, "triples": [list(owner[v]), list(t)]})
            else:
                owner[v] = t
    return problems


# ---------------------------------------------------------------------------
# Random splits and nibble
# ---------------------------------------------------------------------------

class SplitMode(Enum):
    INDEPENDENT = "independent"
    CONDITIONED = "conditioned"


@dataclass
class SplitSpec:
    probabilities: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    mode: SplitMode = SplitMode.INDEPENDENT
    sizes: Optional[Tuple[int, int, int]] = None  # conditioned mode only
    seed: Optional[int] = None


@dataclass
class PartAssignment:
    """Three-way split of X, Y and the colours of a graph."""
    x_parts: Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]
    y_parts: Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]
    c_parts: Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]

    def part_of(self, side: Side, v: int) -> Optional[int]:
        parts = self.x_parts if side is Side.X else self.y_parts
        for i, p in enumerate(parts):
            if v in p:
                return i
        return None

    def color_part(self, c: int) -> Optional[int]:
        for i, p in enumerate(self.c_parts):
            if c in p:
                return i
        return None


@dataclass
class NibbleConfig:
    q: float = 0.1
    max_rounds: int = 400
    stop_fraction: Optional[float] = None  # None → n^-gamma
    gamma: float = 0.25
    seed: Optional[int] = None
    scale: str = "vertices"  # "vertices" (|X| this round) or "degree" (average live degree)

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"q must lie in (0,1), got {self.q}")
        if self.stop_fraction is not None and not 0 < self.stop_fraction < 1:
            raise ValueError(f"stop_fraction must lie in (0,1), got {self.stop_fraction}")
        if self.scale not in ("degree", "vertices"):
            raise ValueError(f"Unknown bite scale '{self.scale}'")


@dataclass
class BiteOutcome:
    chosen: List[Edge]
    matching: RainbowMatching
    collisions: List[Edge]


@dataclass
class NibbleRound:
    round: int
    chosen: int
    gained: int
    uncovered: int
    q: float
    q_hat: Optional[float] = None
    rate: Optional[float] = None


@dataclass
class NibbleResult:
    matching: RainbowMatching
    rounds: List[NibbleRound] = field(default_factory=list)
    stalled: bool = False


@dataclass
class ThreeSplitResult:
    matchings: Tuple[RainbowMatching, RainbowMatching, RainbowMatching]
    graphs: Tuple[ColoredBipartiteGraph, ColoredBipartiteGraph, ColoredBipartiteGraph]
    parts: PartAssignment
    stalled: Tuple[bool, bool, bool] = (False, False, False)

    @property
    def union(self) -> RainbowMatching:
        merged = RainbowMatching()
        for m in self.matchings:
            merged.update(m.edges)
        return merged


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------

@dataclass
class ExpanderParams:
    d: int
    A: float = 1.0
    eps: float = 0.2
    n: int = 0

    def __post_init__(self):
        if self.d < 1 or self.A < 1:
            raise ValueError(f"d and A must be at least 1 (d={self.d}, A={self.A})")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0,1), got {self.eps}")

    def path_cap(self) -> int:
        """ℓ = 8⌈log n / log(d/4A)⌉, clamped to 4⌈log₂ n⌉ (and to odd length ≥ 1)."""
        n = max(self.n, 2)
        clamp = 4 * math.ceil(math.log2(n))
        ratio = self.d / (4 * self.A)
        ell = clamp if ratio <= 1 else min(8 * math.ceil(math.log(n) / math.log(ratio)), clamp)
        ell = max(ell, 1)
        return ell if ell % 2 == 1 else ell - 1


class EdgeTag(Enum):
    D = "D"
    M = "M"


@dataclass
class AlternatingWalk:
    """
    D/M-alternating walk starting with a D edge. ``vertices[i]`` lies on
    ``start`` when i is even and on the other side when i is odd. A closing
    matching edge turns the walk into a cycle.
    """
    start: Side
    vertices: List[int]
    edges: List[Edge]
    tags: List[EdgeTag]
    closing: Optional[Edge] = None

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def colors(self) -> List[int]:
        cs = [e.c for e in self.edges]
        if self.closing is not None:
            cs.append(self.closing.c)
        return cs

    @property
    def is_rainbow(self) -> bool:
        cs = self.colors
        return len(cs) == len(set(cs))

    def side_of(self, index: int) -> Side:
        return self.start if index % 2 == 0 else self.start.other

    def endpoints(self) -> Tuple[Tuple[Side, int], Tuple[Side, int]]:
        last = len(self.vertices) - 1
        return (self.start, self.vertices[0]), (self.side_of(last), self.vertices[last])

    def edges_tagged(self, tag: EdgeTag) -> List[Edge]:
        return [e for e, t in zip(self.edges, self.tags) if t is tag]

    def is_path(self) -> bool:
        seen = set()
        for i, v in enumerate(self.vertices):
            key = (self.side_of(i), v)
            if key in seen:
                return False
            seen.add(key)
        return True

    def replay_errors(self) -> List[str]:
        """Empty when tags alternate from D and every edge joins its pivots."""
        errors = []
        if len(self.vertices) != len(self.edges) + 1 or len(self.tags) != len(self.edges):
            errors.append("vertex/edge/tag counts disagree")
            return errors
        for i, (e, tag) in enumerate(zip(self.edges, self.tags)):
            expected = EdgeTag.D if i % 2 == 0 else EdgeTag.M
            if tag is not expected:
                errors.append(f"edge {i} tagged {tag.value}, expected {expected.value}")
            a, b = self.vertices[i], self.vertices[i + 1]
            x, y = (a, b) if self.side_of(i) is Side.X else (b, a)
            if (e.x, e.y) != (x, y):
                errors.append(f"edge {i} {tuple(e)} does not join {a} and {b}")
        if self.closing is not None:
            first, last = self.endpoints()
            ends = {first, last}
            if {(Side.X, self.closing.x), (Side.Y, self.closing.y)} != ends:
                errors.append("closing edge does not join the walk's endpoints")
        return errors


@dataclass
class ForbiddenSets:
    x: FrozenSet[int] = frozenset()
    y: FrozenSet[int] = frozenset()
    colors: FrozenSet[int] = frozenset()

    def blocks(self, side: Side, v: int) -> bool:
        return v in (self.x if side is Side.X else self.y)

    def size(self) -> int:
        return len(self.x) + len(self.y) + len(self.colors)

    def merged(self, other: "ForbiddenSets") -> "ForbiddenSets":
        return ForbiddenSets(self.x | other.x, self.y | other.y, self.colors | other.colors)


@dataclass
class PathSearchResult:
    walk: Optional[AlternatingWalk]
    forward_frontier: List[int] = field(default_factory=list)
    backward_frontier: List[int] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.walk is not None


@dataclass
class ContainerResult:
    subset: List[int]
    branch: str  # "centers" or "residual"
    neighborhood_size: int
    centers: int


@dataclass
class ProbeReport:
    trials: int
    threshold: float
    padded_min: float
    padded_mean: float
    padded_pass_fraction: float
    unpadded_min: float
    unpadded_mean: float
    unpadded_pass_fraction: float
    container_fallbacks: int
    passed: bool
    samples: List[List[int]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.__dict__)
        data.pop("samples")
        return data


# ---------------------------------------------------------------------------
# Augmentation
# ---------------------------------------------------------------------------

class PlanShape(Enum):
    PATH_WITH_CYCLES = "path-with-cycles"
    CHAIN = "chain"
    PATH = "path"
    CYCLE = "cycle"


class PlanFailure(Enum):
    NO_CONNECTOR = "no-connector"
    NO_CYCLE_C2 = "no-cycle-c2"
    NO_CYCLE_C3 = "no-cycle-c3"
    NO_MAIN_PATH = "no-main-path"


@dataclass
class SwitchPlan:
    shape: PlanShape
    removed: List[Edge]
    added: List[Edge]
    x0: Optional[int] = None
    y0: Optional[int] = None
    connector_x: Optional[Edge] = None  # x0 y1'
    connector_y: Optional[Edge] = None  # x1' y0
    main_path: Optional[AlternatingWalk] = None
    cycle_c2: Optional[AlternatingWalk] = None
    cycle_c3: Optional[AlternatingWalk] = None

    @property
    def gain(self) -> int:
        return len(self.added) - len(self.removed)

    @property
    def edits(self) -> int:
        return len(self.added) + len(self.removed)

    def path_lengths(self) -> Tuple[int, int, int]:
        return tuple(w.length if w is not None else 0
                     for w in (self.main_path, self.cycle_c2, self.cycle_c3))


@dataclass
class PlanResult:
    plan: Optional[SwitchPlan]
    reason: Optional[PlanFailure] = None


@dataclass
class AugmentBudget:
    edit_cap: int
    restarts: int = 3
    wall_clock_s: Optional[float] = None
    fallback_depth: Optional[int] = None
    node_budget: int = 20000

    def __post_init__(self):
        if self.edit_cap <= 0 or self.restarts < 0 or self.node_budget <= 0:
            raise ValueError("Augment budget caps must be positive")
        if self.wall_clock_s is not None and self.wall_clock_s <= 0:
            raise ValueError("wall_clock_s must be positive")

    @classmethod
    def for_scale(cls, n: int, d: int, **kwargs) -> "AugmentBudget":
        n = max(n, 2)
        d = max(d, 2)
        cap = 49 * math.ceil(math.log(n) / math.log(d))
        kwargs.setdefault("fallback_depth", 4 * math.ceil(math.log2(n)))
        return cls(edit_cap=max(cap, 1), **kwargs)


@dataclass
class AugmentTraceRow:
    iteration: int
    plan_shape: str
    p1: int
    p2: int
    p3: int
    ledger: int
    size: int
    pool_deficit: int = 0


@dataclass
class AugmentResult:
    matching: RainbowMatching
    trace: List[AugmentTraceRow] = field(default_factory=list)
    exhausted: bool = False


# ---------------------------------------------------------------------------
# Typicality
# ---------------------------------------------------------------------------

class Predicate(Enum):
    REGULAR = "regular"
    TYPICAL = "typical"
    COLOURED_REGULAR = "coloured-regular"
    COLOURED_TYPICAL = "coloured-typical"
    SHADOW_TYPICAL = "shadow-typical"


@dataclass
class TypicalityWitness:
    check: str
    subject: Any
    measured: float
    low: float
    high: float

    @property
    def slack(self) -> float:
        return min(self.measured - self.low, self.high - self.measured)

    @property
    def inside(self) -> bool:
        return self.low <= self.measured <= self.high

    def to_dict(self) -> Dict[str, Any]:
        return {"check": self.check, "subject": self.subject, "measured": self.measured,
                "low": self.low, "high": self.high, "inside": self.inside}


READING_NOTE = ("coloured-regular = regular + colour shadows G_XC, G_YC regular + |C| band + "
                "per-colour edge counts; coloured-typical adds codegrees and colour-pair intersections")


@dataclass
class TypicalityReport:
    predicate: Predicate
    eps: float
    p: float
    n: float
    witnesses: List[TypicalityWitness] = field(default_factory=list)
    sampled: bool = False
    note: str = READING_NOTE

    @property
    def passed(self) -> bool:
        return all(w.inside for w in self.witnesses)

    @property
    def margin(self) -> float:
        return min((w.slack for w in self.witnesses), default=math.inf)

    def failures(self) -> List[TypicalityWitness]:
        return [w for w in self.witnesses if not w.inside]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "note": self.note,
            "predicate": self.predicate.value,
            "eps": self.eps, "p": self.p, "n": self.n,
            "passed": self.passed,
            "margin": None if math.isinf(self.margin) else self.margin,
            "sampled": self.sampled,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


@dataclass
class DiscrepancyResult:
    measured: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound


@dataclass
class CensusResult:
    count: int
    threshold_degree: float
    allowed: float
    preconditions_met: bool = True

    @property
    def passed(self) -> bool:
        return self.count <= self.allowed


class ColorClass(Enum):
    LARGE = "large"
    TINY = "small-tiny"
    MEDIUM = "small-medium"


@dataclass
class ColorClassification:
    classes: Dict[int, ColorClass]
    eps0: float
    n: int
    large_cutoff: float
    medium_cutoff: float
    t: int

    def of(self, cls: ColorClass) -> List[int]:
        return sorted(c for c, k in self.classes.items() if k is cls)

    @property
    def large(self) -> List[int]:
        return self.of(ColorClass.LARGE)

    @property
    def small(self) -> List[int]:
        return sorted(c for c, k in self.classes.items() if k is not ColorClass.LARGE)

    @property
    def tiny(self) -> List[int]:
        return self.of(ColorClass.TINY)

    @property
    def medium(self) -> List[int]:
        return self.of(ColorClass.MEDIUM)


@dataclass
class SmallColorResult:
    matching: RainbowMatching
    target: int
    branch: str
    trace: List[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return len(self.matching) >= self.target


# ---------------------------------------------------------------------------
# Solvers, oracle, bench, verification
# ---------------------------------------------------------------------------

class InstanceKind(Enum):
    LATIN = "latin"
    ARRAY = "array"
    STEINER = "steiner"
    HYPERGRAPH = "hypergraph"
    GRAPH = "graph"


@dataclass
class SolverConfig:
    k: float = 3.0
    eps0: float = 0.05
    q: float = 0.1
    gamma: float = 0.25
    d: Optional[int] = None
    restarts: int = 4
    kicks: int = 8
    kick_moves: int = 3
    steiner_retries: int = 8
    polish: bool = True
    max_rounds: int = 400
    stop_fraction: Optional[float] = None
    bite_scale: str = "vertices"
    seed: int = 0
    oracle_max_x: int = 9
    exact_finish: bool = True
    oracle_max_sts: int = 15
    node_budget: int = 20000
    wall_clock_s: Optional[float] = None
    probe_pass_fraction: float = 0.9
    mix_steps: Optional[int] = None

    def scale_d(self, n: int) -> int:
        """d, defaulting to ⌈ln n / ln ln n⌉ (at least 2)."""
        if self.d is not None:
            return self.d
        if n < 16:
            return 2
        return max(2, math.ceil(math.log(n) / math.log(math.log(n))))

    def bound_value(self, n: int) -> int:
        """⌈k·ln n / ln ln n⌉, taken as 0 where ln ln n ≤ 0."""
        if n < 3 or math.log(math.log(n)) <= 0:
            return 0
        return math.ceil(self.k * math.log(n) / math.log(math.log(n)))

    def nibble_config(self, seed: Optional[int] = None) -> NibbleConfig:
        return NibbleConfig(q=self.q, max_rounds=self.max_rounds, stop_fraction=self.stop_fraction,
                            gamma=self.gamma, seed=seed, scale=self.bite_scale)


@dataclass
class StageSize:
    name: str
    size: int


@dataclass
class SolveReport:
    instance: str
    kind: InstanceKind
    n: int
    seed: int
    matching: RainbowMatching
    stages: List[StageSize] = field(default_factory=list)
    uncovered_x: List[int] = field(default_factory=list)
    uncovered_y: List[int] = field(default_factory=list)
    uncovered_colors: List[int] = field(default_factory=list)
    uncovered: int = 0
    bound_value: int = 0
    wall_ms: float = 0.0
    exhausted: bool = False
    transversal: Optional[List[Tuple[int, int, int]]] = None
    triples: Optional[List[Tuple[int, int, int]]] = None
    audit: Optional[Dict[str, Any]] = None
    notes: List[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        if self.triples is not None:
            return len(self.triples)
        return len(self.matching)

    @property
    def within_bound(self) -> bool:
        return self.uncovered <= self.bound_value

    def stage_size(self, name: str) -> int:
        for s in self.stages:
            if s.name == name:
                return s.size
        return 0

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "instance": self.instance,
            "kind": self.kind.value,
            "n": self.n,
            "seed": self.seed,
            "size": self.size,
            "stages": [{"name": s.name, "size": s.size} for s in self.stages],
            "matching": self.matching.to_list(),
            "uncovered": self.uncovered,
            "uncovered_x": self.uncovered_x,
            "uncovered_y": self.uncovered_y,
            "uncovered_colors": self.uncovered_colors,
            "bound_value": self.bound_value,
            "within_bound": self.within_bound,
            "wall_ms": round(self.wall_ms, 3),
            "exhausted": self.exhausted,
            "notes": self.notes,
        }
        if self.transversal is not None:
            data["transversal"] = [list(t) for t in self.transversal]
        if self.triples is not None:
            data["triples"] = [list(t) for t in self.triples]
        if self.audit is not None:
            data["audit"] = self.audit
        return data


@dataclass
class OracleResult:
    maximum: int
    witness: List[Tuple[int, ...]]
    nodes: int = 0


@dataclass
class BenchRow:
    n: int
    kind: str
    seed: int
    uncovered: int
    bound_value: int
    within_bound: bool
    wall_ms: float
    nibble_size: int
    greedy_size: int
    augment_size: int


@dataclass
class VerificationResult:
    ok: bool
    artifact: str
    size: int = 0
    violations: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "artifact": self.artifact, "size": self.size, "violations": self.violations}
