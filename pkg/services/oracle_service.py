# services/oracle_service.py
"""
OracleService - exact maximum rainbow matchings and triple matchings by
backtracking, for instances small enough to enumerate.

Vertices are visited in order; each is either matched or skipped, with used
vertices and colours kept as int bitmasks. A branch is cut as soon as the
remaining vertices cannot beat the incumbent.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

from config.solver_config import SOLVER_CONFIG
from core.conversions import latin_to_graph
from core.errors import TooLargeError
from core.models import (ColoredBipartiteGraph, LatinArray, LinearHypergraph3, OracleResult, Side,
                         SteinerTripleSystem)

logger = logging.getLogger(__name__)

Instance = Union[LatinArray, ColoredBipartiteGraph, SteinerTripleSystem, LinearHypergraph3]


class OracleService:

    def __init__(self, max_x: Optional[int] = None, max_sts: Optional[int] = None):
        defaults = SOLVER_CONFIG['solver']
        self.max_x = max_x if max_x is not None else defaults['oracle_max_x']
        self.max_sts = max_sts if max_sts is not None else defaults['oracle_max_sts']

    def brute_force_max(self, instance: Instance, cap: Optional[int] = None) -> OracleResult:
        """Exact maximum; raises TooLargeError instead of approximating."""
        if isinstance(instance, LatinArray):
            instance = latin_to_graph(instance)
        if isinstance(instance, ColoredBipartiteGraph):
            limit = self.max_x if cap is None else cap
            if len(instance.xs) > limit:
                raise TooLargeError(f"Oracle cap is |X| ≤ {limit}, instance has |X|={len(instance.xs)}",
                                    {"size": len(instance.xs), "cap": limit})
            return self._graph_max(instance)
        if isinstance(instance, SteinerTripleSystem):
            vertices, triples = instance.vertices, instance.triples
        elif isinstance(instance, LinearHypergraph3):
            vertices, triples = instance.vertices, instance.edges
        else:
            raise TypeError(f"Unsupported oracle instance {type(instance).__name__}")
        limit = self.max_sts if cap is None else cap
        if len(vertices) > limit:
            raise TooLargeError(f"Oracle cap is {limit} vertices, instance has {len(vertices)}",
                                {"size": len(vertices), "cap": limit})
        return self._triple_max(vertices, triples)

    def _graph_max(self, graph: ColoredBipartiteGraph) -> OracleResult:
        xs = graph.xs
        y_bit = {y: 1 << i for i, y in enumerate(graph.ys)}
        c_bit = {c: 1 << i for i, c in enumerate(graph.colors)}
        options = [[(y_bit[e.y], c_bit[e.c], e) for e in sorted(graph.edges_at(Side.X, x))] for x in xs]
        ceiling = min(len(graph.xs), len(graph.ys), len(graph.colors))

        best: List[tuple] = []
        chosen: List[tuple] = []
        nodes = 0

        def search(i: int, ymask: int, cmask: int) -> bool:
            nonlocal best, nodes
            nodes += 1
            if len(chosen) + (len(xs) - i) <= len(best):
                return False
            if i == len(xs):
                best = list(chosen)
                return len(best) == ceiling
            for yb, cb, e in options[i]:
                if not (ymask & yb or cmask & cb):
                    chosen.append(tuple(e))
                    done = search(i + 1, ymask | yb, cmask | cb)
                    chosen.pop()
                    if done:
                        return True
            return search(i + 1, ymask, cmask)

        search(0, 0, 0)
        logger.debug(f"📊 Oracle: maximum {len(best)} after {nodes} nodes")
        return OracleResult(maximum=len(best), witness=sorted(best), nodes=nodes)

    def _triple_max(self, vertices: Sequence[int], triples: Sequence[Tuple[int, int, int]]) -> OracleResult:
        index = {v: i for i, v in enumerate(vertices)}
        count = len(vertices)
        through: List[List[Tuple[int, Tuple[int, int, int]]]] = [[] for _ in range(count)]
        for t in triples:
            mask = 0
            for v in t:
                mask |= 1 << index[v]
            through[min(index[v] for v in t)].append((mask, tuple(t)))
        ceiling = count // 3

        best: List[tuple] = []
        chosen: List[tuple] = []
        nodes = 0

        def search(i: int, used: int) -> bool:
            nonlocal best, nodes
            nodes += 1
            while i < count and used >> i & 1:
                i += 1
            free = count - i - bin(used >> i).count("1") if i < count else 0
            if len(chosen) + free // 3 <= len(best):
                return False
            if i == count:
                best = list(chosen)
                return len(best) == ceiling
            for mask, t in through[i]:
                if not used & mask:
                    chosen.append(t)
                    done = search(i + 1, used | mask)
                    chosen.pop()
                    if done:
                        return True
            return search(i + 1, used | (1 << i))

        search(0, 0)
        logger.debug(f"📊 Oracle: maximum {len(best)} triples after {nodes} nodes")
        return OracleResult(maximum=len(best), witness=sorted(best), nodes=nodes)
