# services/expansion_service.py
"""
ExpansionService - alternating neighbourhoods, rainbow alternating-path
search with forbidden vertices and colours, container extraction, and the
empirical expander probe.

Walks alternate between a colour-pool subgraph D and a rainbow matching M
and always start with a D edge. Frontiers are processed lowest vertex id
first so results are deterministic.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

import numpy as np

from config.solver_config import SOLVER_CONFIG
from core.errors import PreconditionViolatedError, SizeInfeasibleError, ValidationError
from core.models import (
    AlternatingWalk,
    ColoredBipartiteGraph,
    ContainerResult,
    Edge,
    EdgeTag,
    ExpanderParams,
    ForbiddenSets,
    PathSearchResult,
    ProbeReport,
    RainbowMatching,
    Side,
)

logger = logging.getLogger(__name__)

NO_FORBIDDEN = ForbiddenSets()

# (vertex sequence, edge sequence, colours used)
_HalfPath = Tuple[List[int], List[Edge], frozenset]


def make_edge(side: Side, a: int, b: int, c: int) -> Edge:
    """Edge between a on ``side`` and b on the other side."""
    return Edge(a, b, c) if side is Side.X else Edge(b, a, c)


def shortcut(vertices: List[int], edges: List[Edge], start: Side) -> Tuple[List[int], List[Edge]]:
    """Cut closed sub-walks until no vertex repeats; alternation parity is kept."""
    while True:
        seen: Dict[Tuple[Side, int], int] = {}
        for idx, v in enumerate(vertices):
            key = (start if idx % 2 == 0 else start.other, v)
            if key in seen:
                j = seen[key]
                vertices = vertices[:j] + vertices[idx:]
                edges = edges[:j] + edges[idx:]
                break
            seen[key] = idx
        else:
            return vertices, edges


def walk_from(start: Side, vertices: List[int], edges: List[Edge], closing: Optional[Edge] = None) -> AlternatingWalk:
    tags = [EdgeTag.D if i % 2 == 0 else EdgeTag.M for i in range(len(edges))]
    return AlternatingWalk(start=start, vertices=list(vertices), edges=list(edges), tags=tags, closing=closing)


class ExpansionService:

    def __init__(self, kappa: Optional[float] = None):
        self.kappa = kappa if kappa is not None else SOLVER_CONFIG['expansion']['kappa']

    # --- neighbourhoods ---

    def alt_neighborhood(self, d_graph: ColoredBipartiteGraph, matching: RainbowMatching,
                         sources: Iterable[int], t: int, side: Side = Side.X) -> Set[int]:
        """N^t_{D,M}(S): endpoints of D-first alternating walks of length exactly t."""
        if t < 1:
            raise ValueError(f"t must be at least 1, got {t}")
        frontier = set(sources)
        current = side
        for step in range(t):
            nxt: Set[int] = set()
            for v in frontier:
                if step % 2 == 0:
                    nxt.update(d_graph.neighbors(current, v))
                else:
                    partner = matching.partner(current, v)
                    if partner is not None:
                        nxt.add(partner)
            frontier = nxt
            current = current.other
        return frontier

    def rainbow_alt_neighborhood(self, d_graph: ColoredBipartiteGraph, matching: RainbowMatching,
                                 sources: Iterable[int], t: int,
                                 forbidden: Union[None, ForbiddenSets, Dict[int, ForbiddenSets]] = None,
                                 side: Side = Side.X, cap: Optional[float] = None) -> Set[int]:
        """N̂^t: endpoints of rainbow alternating paths of length t avoiding each source's forbidden sets."""
        if t < 1:
            raise ValueError(f"t must be at least 1, got {t}")
        reached: Set[int] = set()
        for s in sorted(set(sources)):
            fb = self._forbidden_for(forbidden, s)
            if fb.blocks(side, s):
                raise ValidationError(f"Source {s} lies in its own forbidden set", {"source": s})
            if cap is not None and fb.size() > cap:
                logger.warning(f"⚠️ Forbidden sets of source {s} exceed the soft cap ({fb.size()} > {cap:.1f})")
            self._rainbow_dfs(d_graph, matching, fb, t, side, [s], set(), {(side, s)}, reached)
        return reached

    def _rainbow_dfs(self, d_graph, matching, fb, t, current, path, colors, visited, reached) -> None:
        depth = len(path) - 1
        if depth == t:
            reached.add(path[-1])
            return
        v = path[-1]
        if depth % 2 == 0:
            steps = sorted(d_graph.neighbors(current, v).items())
        else:
            e = matching.edge_at(current, v)
            steps = [] if e is None else [(e.endpoint(current.other), e.c)]
        nxt = current.other
        for w, c in steps:
            if c in colors or c in fb.colors or fb.blocks(nxt, w) or (nxt, w) in visited:
                continue
            colors.add(c)
            visited.add((nxt, w))
            path.append(w)
            self._rainbow_dfs(d_graph, matching, fb, t, nxt, path, colors, visited, reached)
            path.pop()
            visited.discard((nxt, w))
            colors.discard(c)

    @staticmethod
    def _forbidden_for(forbidden, source: int) -> ForbiddenSets:
        if forbidden is None:
            return NO_FORBIDDEN
        if isinstance(forbidden, ForbiddenSets):
            return forbidden
        return forbidden.get(source, NO_FORBIDDEN)

    # --- path search ---

    def find_alt_rainbow_path(self, d1: ColoredBipartiteGraph, d2: ColoredBipartiteGraph,
                              matching: RainbowMatching, u: int, v: int, cap: int,
                              forbidden: Optional[ForbiddenSets] = None,
                              u_side: Side = Side.X) -> PathSearchResult:
        """
        Rainbow D-M alternating path of odd length ≤ cap from u to v.

        Grows rainbow half-paths from u under D1 and from v under D2, each
        ending with an M edge, and joins a forward and a backward half that
        cross the same M edge in opposite directions. Every reached vertex
        keeps the first (shortest) half-path found for it.
        """
        fb = forbidden or NO_FORBIDDEN
        v_side = u_side.other
        if cap < 1 or fb.blocks(u_side, u) or fb.blocks(v_side, v):
            return PathSearchResult(walk=None)

        for d_graph in (d1, d2):
            c = d_graph.neighbors(u_side, u).get(v)
            if c is not None and c not in fb.colors and not matching.uses_color(c):
                return PathSearchResult(walk=walk_from(u_side, [u, v], [make_edge(u_side, u, v, c)]))
        if cap < 3:
            return PathSearchResult(walk=None)

        limit = cap + 1
        forward, f_sizes = self._grow(d1, matching, u, u_side, limit, fb, avoid=(v_side, v))
        backward, b_sizes = self._grow(d2, matching, v, v_side, limit, fb, avoid=(u_side, u))

        candidates = []
        for m_edge, (f_verts, f_edges, _) in forward.items():
            half = backward.get(m_edge)
            if half is None:
                continue
            b_verts, b_edges, _ = half
            candidates.append((len(f_edges) + len(b_edges) - 1, tuple(m_edge), f_verts, f_edges, b_verts, b_edges))
        candidates.sort(key=lambda row: (row[0], row[1]))

        for length, _, f_verts, f_edges, b_verts, b_edges in candidates:
            if length > cap:
                break
            vertices = f_verts + list(reversed(b_verts[:-1]))[1:]
            edges = f_edges + list(reversed(b_edges[:-1]))
            vertices, edges = shortcut(vertices, edges, u_side)
            walk = walk_from(u_side, vertices, edges)
            if walk.is_rainbow and walk.length % 2 == 1 and not walk.replay_errors():
                return PathSearchResult(walk=walk, forward_frontier=f_sizes, backward_frontier=b_sizes)
        return PathSearchResult(walk=None, forward_frontier=f_sizes, backward_frontier=b_sizes)

    def _grow(self, d_graph: ColoredBipartiteGraph, matching: RainbowMatching, source: int, side: Side,
              limit: int, fb: ForbiddenSets, avoid: Tuple[Side, int]) -> Tuple[Dict[Edge, _HalfPath], List[int]]:
        """Half-paths source -D- w1 -M- w2 ..., keyed by their last M edge."""
        other = side.other
        paths: Dict[int, _HalfPath] = {source: ([source], [], frozenset())}
        meets: Dict[Edge, _HalfPath] = {}
        frontier = [source]
        sizes = [1]
        depth = 0
        while frontier and depth + 2 <= limit:
            nxt: List[int] = []
            for w in sorted(frontier):
                verts, edges, colors = paths[w]
                on_path = {(side if i % 2 == 0 else other, x) for i, x in enumerate(verts)}
                for w1, c in sorted(d_graph.neighbors(side, w).items()):
                    if c in colors or c in fb.colors or matching.uses_color(c):
                        continue
                    if fb.blocks(other, w1) or (other, w1) in on_path or (other, w1) == avoid:
                        continue
                    m_edge = matching.edge_at(other, w1)
                    if m_edge is None:
                        continue
                    w2 = m_edge.endpoint(side)
                    if m_edge.c in colors or m_edge.c in fb.colors or m_edge.c == c:
                        continue
                    if fb.blocks(side, w2) or (side, w2) in on_path or (side, w2) == avoid:
                        continue
                    grown = (verts + [w1, w2], edges + [make_edge(side, w, w1, c), m_edge], colors | {c, m_edge.c})
                    meets.setdefault(m_edge, grown)
                    if w2 not in paths:
                        paths[w2] = grown
                        nxt.append(w2)
            frontier = nxt
            depth += 2
            sizes.append(len(nxt))
        return meets, sizes

    # --- containers and probes ---

    def container_subset(self, d_graph: ColoredBipartiteGraph, sources: Iterable[int], kappa: float, d: int,
                         side: Side = Side.X, strict: bool = True) -> ContainerResult:
        """
        Star packing: greedily take vertex-disjoint stars of ⌈κd/2⌉ leaves
        centred in S. With at least |S|/2d centres, return ⌈|S|/2d⌉ of them;
        otherwise return all centres.
        """
        sources = sorted(set(sources))
        if strict:
            if len(sources) < 2 * d:
                raise PreconditionViolatedError(f"|S|={len(sources)} is below 2d={2 * d}",
                                                {"S": len(sources), "d": d})
            for s in sources:
                if d_graph.degree(side, s) < kappa * d:
                    raise PreconditionViolatedError(
                        f"Vertex {s} has D-degree {d_graph.degree(side, s)} below κd={kappa * d:.2f}",
                        {"vertex": s, "degree": d_graph.degree(side, s), "required": kappa * d})

        leaves = max(1, math.ceil(kappa * d / 2))
        used: Set[int] = set()
        centers: List[int] = []
        for s in sources:
            free = [w for w in sorted(d_graph.neighbors(side, s)) if w not in used]
            if len(free) >= leaves:
                centers.append(s)
                used.update(free[:leaves])

        need = math.ceil(len(sources) / (2 * d)) if sources else 0
        if centers and len(centers) >= need:
            subset, branch = centers[:need], "centers"
        else:
            subset, branch = centers, "residual"
        neighborhood = set()
        for s in subset:
            neighborhood.update(d_graph.neighbors(side, s))

        ok = len(subset) <= len(sources) / d and len(neighborhood) >= kappa * len(sources) / 4
        if not ok:
            message = (f"Container postcondition failed: |S'|={len(subset)}, |N(S')|={len(neighborhood)}, "
                       f"|S|={len(sources)}, κ={kappa}, d={d}")
            if strict:
                logger.error(f"❌ {message}")
                raise ValidationError(message, {"subset": len(subset), "neighborhood": len(neighborhood)})
            logger.debug(f"⚠️ {message}")
        return ContainerResult(subset=subset, branch=branch, neighborhood_size=len(neighborhood),
                               centers=len(centers))

    def sample_cores(self, d_graph: ColoredBipartiteGraph, params: ExpanderParams, trials: int,
                     rng: np.random.Generator, side: Side = Side.X,
                     kappa: Optional[float] = None) -> Tuple[List[List[int]], List[List[int]], int]:
        """Random S of size ⌈An/d⌉ reduced to cores S′; returns (unpadded, padded, fallbacks)."""
        kappa = self.kappa if kappa is None else kappa
        pool = list(d_graph.vertices(side))
        n = params.n or len(pool)
        size = math.ceil(params.A * n / params.d)
        if size > len(pool):
            raise SizeInfeasibleError(f"An/d={size} exceeds the {len(pool)} vertices available",
                                      {"required": size, "available": len(pool)})
        target = max(1, math.ceil(params.A * n / params.d ** 2))
        unpadded, padded, fallbacks = [], [], 0
        for _ in range(trials):
            chosen = sorted(int(v) for v in rng.choice(pool, size=size, replace=False)) if size else []
            try:
                core = self.container_subset(d_graph, chosen, kappa, params.d, side).subset
            except (PreconditionViolatedError, ValidationError):
                fallbacks += 1
                core = sorted(chosen, key=lambda v: (-d_graph.degree(side, v), v))[:target]
            core = list(core)
            full = core[:target]
            if len(full) < target:
                rest = [v for v in chosen if v not in set(full)]
                extra = rng.choice(rest, size=min(target - len(full), len(rest)), replace=False) if rest else []
                full = full + [int(v) for v in extra]
            unpadded.append(core)
            padded.append(full)
        return unpadded, padded, fallbacks

    def expander_probe(self, d_graph: ColoredBipartiteGraph, matching: RainbowMatching, params: ExpanderParams,
                       trials: int, rng: np.random.Generator, side: Side = Side.X, t: int = 4,
                       kappa: Optional[float] = None, pass_fraction: float = 0.9) -> ProbeReport:
        """Empirical check of the (d, A, ε, n)-expander property on random S."""
        n = params.n or len(d_graph.vertices(side))
        unpadded, padded, fallbacks = self.sample_cores(d_graph, params, trials, rng, side, kappa)
        target_side = side if t % 2 == 0 else side.other
        scale = n if params.n else len(d_graph.vertices(target_side))
        threshold = 1 - params.eps

        def measure(cores):
            return [len(self.alt_neighborhood(d_graph, matching, core, t, side)) / scale if core else 0.0
                    for core in cores]

        pad_vals, raw_vals = measure(padded), measure(unpadded)
        pad_pass = _fraction(pad_vals, threshold)
        report = ProbeReport(
            trials=trials, threshold=threshold,
            padded_min=min(pad_vals, default=0.0), padded_mean=float(np.mean(pad_vals)) if pad_vals else 0.0,
            padded_pass_fraction=pad_pass,
            unpadded_min=min(raw_vals, default=0.0), unpadded_mean=float(np.mean(raw_vals)) if raw_vals else 0.0,
            unpadded_pass_fraction=_fraction(raw_vals, threshold),
            container_fallbacks=fallbacks,
            passed=trials > 0 and pad_pass >= pass_fraction,
            samples=padded,
        )
        logger.info(f"📊 Expander probe: padded min={report.padded_min:.3f} mean={report.padded_mean:.3f} "
                    f"pass={pad_pass:.2f} (threshold {threshold:.2f})")
        return report

    def expander_stability_trial(self, d_graph: ColoredBipartiteGraph, matching: RainbowMatching,
                                 params: ExpanderParams, trials: int, rng: np.random.Generator,
                                 side: Side = Side.X, t: int = 4, pass_fraction: float = 0.9) -> Dict[str, int]:
        """
        Remove ⌊εn/10d²⌋ random edges from M and re-measure the same sampled
        cores at 2ε. Counts trials where the probe passed before, and those
        where it also passed after.
        """
        base = self.expander_probe(d_graph, matching, params, trials, rng, side, t, pass_fraction=pass_fraction)
        n = params.n or len(d_graph.vertices(side))
        edits = math.floor(params.eps * n / (10 * params.d ** 2))
        loose = 1 - 2 * params.eps
        counts = {"trials": trials, "premise": 0, "conclusion": 0, "edits": edits}
        for _ in range(trials):
            perturbed = matching.copy()
            edges = perturbed.edges
            for k in rng.choice(len(edges), size=min(edits, len(edges)), replace=False) if edges else []:
                perturbed.remove(edges[int(k)])
            if not base.passed:
                continue
            counts["premise"] += 1
            values = [len(self.alt_neighborhood(d_graph, perturbed, core, t, side)) / n for core in base.samples]
            if _fraction(values, loose) >= pass_fraction:
                counts["conclusion"] += 1
        return counts


def _fraction(values: List[float], threshold: float) -> float:
    if not values:
        return 0.0
    return sum(1 for v in values if v >= threshold) / len(values)
