# services/small_color_service.py
"""
SmallColorService - rainbow matchings made of small colours.

Arrays with many symbols carry colours far below n edges. Before the large
colours are handed to the switching engine, a matching M0 of small-colour
edges is fixed: greedily one edge per medium colour, a greedy tiny matching,
or the minimum-degree exchange on the tiny-colour subgraph.
"""

import logging
import math
from typing import List, Optional

import numpy as np

from core.errors import PreconditionViolatedError
from core.models import ColorClassification, ColoredBipartiteGraph, Edge, RainbowMatching, Side, SmallColorResult
from services.rng_service import make_rng

logger = logging.getLogger(__name__)


class SmallColorService:

    def min_degree_rainbow_matching(self, graph: ColoredBipartiteGraph, d: int,
                                    rng: Optional[np.random.Generator] = None,
                                    strict: bool = True) -> RainbowMatching:
        """
        Rainbow matching of size ⌈3d/2⌉ in a graph of minimum degree d whose
        colours have at most n/12 edges each (n ≥ 3d + 12).

        A maximal rainbow matching is grown greedily; while it is short, an
        edge ab of the matching is traded for two edges a y' and x' b on
        uncovered vertices with distinct free colours.
        """
        n = max(len(graph.xs), len(graph.ys))
        if strict:
            self._check_preconditions(graph, d, n)
        target = math.ceil(3 * d / 2)
        rng = rng if rng is not None else make_rng(0, "min-degree")

        matching = self._maximal(graph, RainbowMatching(), rng)
        while len(matching) < target and self._exchange(graph, matching):
            matching = self._maximal(graph, matching, rng)
        if len(matching) < target:
            level = logging.WARNING if strict else logging.DEBUG
            logger.log(level, f"⚠️ Minimum-degree matching stopped at {len(matching)} < {target}")
        return matching

    @staticmethod
    def _check_preconditions(graph: ColoredBipartiteGraph, d: int, n: int) -> None:
        if n < 3 * d + 12:
            raise PreconditionViolatedError(f"n={n} is below 3d+12={3 * d + 12}", {"n": n, "d": d})
        for side in (Side.X, Side.Y):
            for v in graph.vertices(side):
                if graph.degree(side, v) < d:
                    raise PreconditionViolatedError(
                        f"Vertex {side.value}{v} has degree {graph.degree(side, v)} < d={d}",
                        {"side": side.value, "vertex": v, "degree": graph.degree(side, v), "d": d})
        for c in graph.colors:
            if graph.color_size(c) > n / 12:
                raise PreconditionViolatedError(
                    f"Colour {c} has {graph.color_size(c)} edges, more than n/12={n / 12:.2f}",
                    {"color": c, "edges": graph.color_size(c)})

    @staticmethod
    def _maximal(graph: ColoredBipartiteGraph, matching: RainbowMatching,
                 rng: np.random.Generator) -> RainbowMatching:
        edges = graph.edges
        for k in rng.permutation(len(edges)):
            e = edges[int(k)]
            if not (matching.covers(Side.X, e.x) or matching.covers(Side.Y, e.y) or matching.uses_color(e.c)):
                matching.add(e)
        return matching

    @staticmethod
    def _exchange(graph: ColoredBipartiteGraph, matching: RainbowMatching) -> bool:
        """Replace one matching edge ab by two edges at a and b; True when done."""
        for ab in matching.edges:
            def free(e: Edge) -> bool:
                return not matching.uses_color(e.c) or e.c == ab.c

            at_a = [e for e in graph.edges_at(Side.X, ab.x) if not matching.covers(Side.Y, e.y) and free(e)]
            at_b = [e for e in graph.edges_at(Side.Y, ab.y) if not matching.covers(Side.X, e.x) and free(e)]
            for ea in sorted(at_a):
                for eb in sorted(at_b):
                    if ea.c != eb.c:
                        matching.remove(ab)
                        matching.add(ea)
                        matching.add(eb)
                        return True
        return False

    def small_color_matching(self, graph: ColoredBipartiteGraph, classification: ColorClassification,
                             target: Optional[int] = None, d: int = 2,
                             rng: Optional[np.random.Generator] = None) -> SmallColorResult:
        """
        Rainbow matching of small-colour edges of size ``target`` (t + 6d by
        default), or the largest the branch reaches. The result's ``feasible``
        flag reports whether the target was met.
        """
        rng = rng if rng is not None else make_rng(0, "small-colours")
        target = classification.t + 6 * d if target is None else target
        tiny, medium = classification.tiny, classification.medium
        matching = RainbowMatching()
        trace: List[str] = []

        if not tiny and not medium:
            branch = "none"
            trace.append("no small colours")
        elif len(medium) >= target:
            branch = "i"
            self._one_per_color(graph, matching, medium, target, rng)
            trace.append(f"one edge per medium colour: {len(matching)}")
        elif len(tiny) >= target:
            branch = "ii"
            self._greedy(graph, matching, tiny, target, rng)
            trace.append(f"greedy tiny matching: {len(matching)}")
            self._one_per_color(graph, matching, medium, target, rng)
            trace.append(f"after mediums: {len(matching)}")
        else:
            branch = "iii"
            tiny_graph = graph.restrict_colors(tiny)
            matching = self.min_degree_rainbow_matching(tiny_graph, d, rng, strict=False)
            while len(matching) > target:
                matching.remove(matching.edges[-1])
            trace.append(f"minimum-degree exchange on tiny colours: {len(matching)}")
            self._one_per_color(graph, matching, medium, target, rng)
            trace.append(f"after mediums: {len(matching)}")

        if len(matching) < target and branch != "none":
            self._greedy(graph, matching, tiny + medium, target, rng)
            trace.append(f"top-up over all small colours: {len(matching)}")

        result = SmallColorResult(matching=matching, target=target, branch=branch, trace=trace)
        if result.feasible:
            logger.info(f"✅ Small-colour matching of size {len(matching)} via branch {branch}")
        else:
            logger.warning(f"⚠️ Small-colour target {target} infeasible, achieved {len(matching)} (branch {branch})")
        return result

    @staticmethod
    def _one_per_color(graph: ColoredBipartiteGraph, matching: RainbowMatching, colors: List[int],
                       target: int, rng: np.random.Generator) -> None:
        for k in rng.permutation(len(colors)):
            if len(matching) >= target:
                return
            c = colors[int(k)]
            if matching.uses_color(c):
                continue
            for e in graph.edges_of_color(c):
                if not (matching.covers(Side.X, e.x) or matching.covers(Side.Y, e.y)):
                    matching.add(e)
                    break

    @staticmethod
    def _greedy(graph: ColoredBipartiteGraph, matching: RainbowMatching, colors: List[int],
                target: int, rng: np.random.Generator) -> None:
        edges = [e for c in colors for e in graph.edges_of_color(c)]
        for k in rng.permutation(len(edges)):
            if len(matching) >= target:
                return
            e = edges[int(k)]
            if not (matching.covers(Side.X, e.x) or matching.covers(Side.Y, e.y) or matching.uses_color(e.c)):
                matching.add(e)
