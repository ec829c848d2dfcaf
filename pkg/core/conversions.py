# core/conversions.py
"""
Reductions between Latin arrays, coloured bipartite graphs, Steiner triple
systems and linear 3-graphs, plus the lifts that carry a rainbow matching
back to transversals and triple matchings.
"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import NotCompleteError, ValidationError
from core.models import (
    ColoredBipartiteGraph,
    Edge,
    LatinArray,
    LinearHypergraph3,
    RainbowMatching,
    SteinerTripleSystem,
    check_partition,
)

logger = logging.getLogger(__name__)


def latin_to_graph(latin: LatinArray) -> ColoredBipartiteGraph:
    """Row i → x_i, column j → y_j, cell symbol → edge colour."""
    n = latin.n
    rows, cols = np.indices((n, n))
    triples = np.stack([rows.ravel(), cols.ravel(), latin.cells.ravel()], axis=1).tolist()
    return ColoredBipartiteGraph(range(n), range(n), latin.symbols, triples)


def graph_to_latin(graph: ColoredBipartiteGraph) -> LatinArray:
    """Inverse of latin_to_graph for complete balanced graphs."""
    if len(graph.xs) != len(graph.ys):
        raise NotCompleteError(f"Sides differ in size ({len(graph.xs)} vs {len(graph.ys)})",
                               {"x": len(graph.xs), "y": len(graph.ys)})
    n = len(graph.xs)
    cells = np.empty((n, n), dtype=np.int64)
    for i, x in enumerate(graph.xs):
        for j, y in enumerate(graph.ys):
            c = graph.edge_color(x, y)
            if c is None:
                raise NotCompleteError(f"No edge between x={x} and y={y}", {"pair": [x, y]})
            cells[i, j] = c
    return LatinArray(cells)


def matching_to_transversal(matching: RainbowMatching) -> List[Tuple[int, int, int]]:
    """Cells (row, column, symbol) of the partial transversal."""
    return [(e.x, e.y, e.c) for e in matching.edges]


def sts_to_graph(sts: SteinerTripleSystem, parts: Sequence[Iterable[int]]) -> ColoredBipartiteGraph:
    """Edge ab coloured c whenever {a,b,c} is a triple with a∈A, b∈B, c∈C."""
    a_part, b_part, c_part = (frozenset(p) for p in parts)
    check_partition(sts.vertices, (a_part, b_part, c_part))
    return _transversal_graph(sts.triples, a_part, b_part, c_part)


def full_latin_to_hypergraph(latin: LatinArray) -> LinearHypergraph3:
    """
    Rows are vertices 0..n-1, columns n..2n-1 and symbols 2n.. in sorted
    symbol order; every cell becomes the triple (row, column, symbol).
    """
    n = latin.n
    symbol_ids = {s: 2 * n + k for k, s in enumerate(latin.symbols)}
    edges = [(i, n + j, symbol_ids[int(latin.cells[i, j])]) for i in range(n) for j in range(n)]
    rows = frozenset(range(n))
    cols = frozenset(range(n, 2 * n))
    syms = frozenset(symbol_ids.values())
    return LinearHypergraph3(tuple(rows | cols | syms), tuple(edges), (rows, cols, syms))


def hypergraph_to_graph(hypergraph: LinearHypergraph3,
                        parts: Optional[Sequence[Iterable[int]]] = None) -> ColoredBipartiteGraph:
    """Parts (V1, V2, V3) become X, Y and the colours."""
    if parts is None:
        if hypergraph.parts is None:
            raise ValidationError("Hypergraph has no tripartition and none was supplied")
        parts = hypergraph.parts
    p1, p2, p3 = (frozenset(p) for p in parts)
    check_partition(hypergraph.vertices, (p1, p2, p3))
    return _transversal_graph(hypergraph.edges, p1, p2, p3)


def steiner_to_hypergraph(sts: SteinerTripleSystem, drop: Optional[int] = None) -> LinearHypergraph3:
    """The STS as a linear 3-graph, optionally with one vertex and its triples deleted."""
    vertices = [v for v in sts.vertices if v != drop]
    edges = [t for t in sts.triples if drop not in t]
    return LinearHypergraph3(tuple(vertices), tuple(edges))


def lift_to_triples(matching: RainbowMatching) -> List[Tuple[int, int, int]]:
    """A rainbow matching of a transversal graph is a set of disjoint triples."""
    return [tuple(sorted((e.x, e.y, e.c))) for e in matching.edges]


def _transversal_graph(triples: Iterable[Sequence[int]], p1: frozenset, p2: frozenset,
                       p3: frozenset) -> ColoredBipartiteGraph:
    edges: List[Edge] = []
    for t in triples:
        a = [v for v in t if v in p1]
        b = [v for v in t if v in p2]
        c = [v for v in t if v in p3]
        if len(a) == len(b) == len(c) == 1:
            edges.append(Edge(a[0], b[0], c[0]))
    logger.debug(f"📊 Transversal graph: {len(edges)} edges over parts {len(p1)}/{len(p2)}/{len(p3)}")
    return ColoredBipartiteGraph(p1, p2, p3, edges)


def steiner_double_cover(sts: SteinerTripleSystem) -> ColoredBipartiteGraph:
    """X = Y = V(S); a b is an edge coloured c whenever {a,b,c} is a triple (K_{n,n} minus the diagonal)."""
    edges = []
    for t in sts.triples:
        for a, b, c in ((t[0], t[1], t[2]), (t[1], t[2], t[0]), (t[0], t[2], t[1])):
            edges.append(Edge(a, b, c))
            edges.append(Edge(b, a, c))
    return ColoredBipartiteGraph(sts.vertices, sts.vertices, sts.vertices, edges)
