# core/solver_engine.py
"""
SolverEngine - end-to-end rainbow matching pipelines.

Wires the nibble, augmentation, small-colour and typicality services into
the solve paths for coloured graphs, Latin squares, arrays with many
symbols, Steiner triple systems and linear 3-graphs.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.conversions import (
    hypergraph_to_graph,
    latin_to_graph,
    lift_to_triples,
    matching_to_transversal,
    steiner_to_hypergraph,
)
from core.errors import ValidationError
from core.models import (
    AugmentBudget,
    ColoredBipartiteGraph,
    InstanceKind,
    LatinArray,
    LinearHypergraph3,
    PartAssignment,
    RainbowMatching,
    Side,
    SolveReport,
    SolverConfig,
    SplitMode,
    SplitSpec,
    StageSize,
    SteinerTripleSystem,
    triple_matching_violations,
)
from generators.split_generator import SplitGenerator
from services.augmentation_service import AugmentationService
from services.expansion_service import ExpansionService
from services.nibble_service import NibbleService
from services.oracle_service import OracleService
from services.rng_service import make_rng
from services.small_color_service import SmallColorService
from services.typicality_service import TypicalityService

Triple = Tuple[int, int, int]


@dataclass
class _Run:
    matching: RainbowMatching
    stages: List[StageSize] = field(default_factory=list)


class SolverEngine:
    """
    Main orchestrator: nibble, greedy completion, switching, kicks.
    Restarts and partitions run from streams derived from one seed.
    """

    def __init__(self, config: Optional[SolverConfig] = None):
        self.logger = logging.getLogger(__name__)
        self.config = config or SolverConfig()

        self.split_generator = SplitGenerator()
        self.typicality_service = TypicalityService()
        self.nibble_service = NibbleService(self.split_generator)
        self.expansion_service = ExpansionService()
        self.augmentation_service = AugmentationService(self.expansion_service, self.split_generator)
        self.small_color_service = SmallColorService()
        self.oracle_service = OracleService()

        self.logger.debug("✅ SolverEngine initialized with all services")

    # --- coloured graphs ---

    def solve_graph(self, graph: ColoredBipartiteGraph, cfg: Optional[SolverConfig] = None,
                    instance: str = "graph", kind: InstanceKind = InstanceKind.GRAPH) -> SolveReport:
        """Best of cfg.restarts independent pipeline runs."""
        cfg = cfg or self.config
        started = time.perf_counter()
        n = min(len(graph.xs), len(graph.ys))
        limit = min(n, len(graph.colors))
        self.logger.info(f"🚀 Solving {instance}: |X|={len(graph.xs)}, |Y|={len(graph.ys)}, |C|={len(graph.colors)}")

        best: Optional[_Run] = None
        for attempt in range(cfg.restarts):
            rng = make_rng(cfg.seed, "solve", attempt)
            run = self._pipeline(graph, cfg, rng)
            if best is None or len(run.matching) > len(best.matching):
                best = run
            if len(best.matching) >= limit:
                break
            self.logger.debug(f"🔁 Restart {attempt + 1}/{cfg.restarts}: best {len(best.matching)}/{limit}")

        if cfg.exact_finish and len(best.matching) < limit and len(graph.xs) <= cfg.oracle_max_x:
            best = self._exact_finish(graph, best, cfg)

        report = self._report(graph, best, cfg, instance, kind, n, started)
        self.logger.info(f"✅ {instance}: size {report.size}, uncovered {report.uncovered} "
                         f"(bound {report.bound_value})")
        return report

    def _pipeline(self, graph: ColoredBipartiteGraph, cfg: SolverConfig, rng: np.random.Generator,
                  seed_matching: Optional[RainbowMatching] = None) -> _Run:
        n = min(len(graph.xs), len(graph.ys))
        d = cfg.scale_d(max(n, 2))
        nibble_cfg = cfg.nibble_config()
        run = _Run(matching=RainbowMatching())
        if n == 0 or not graph.colors:
            return run

        # Step 1: nibble
        parts: Optional[PartAssignment] = None
        if seed_matching is not None:
            matching = seed_matching.copy()
        elif self._all_large(graph, cfg, n):
            split = self.nibble_service.three_split_nibble(graph, nibble_cfg, rng)
            matching, parts = split.union, split.parts
        else:
            matching = self.nibble_service.iterated_nibble(graph, nibble_cfg, rng).matching
        run.stages.append(StageSize("nibble", len(matching)))

        # Step 2: greedy completion
        matching = self.augmentation_service.greedy_extend(graph, matching, rng)
        run.stages.append(StageSize("greedy", len(matching)))

        # Step 3: switching
        budget = AugmentBudget.for_scale(n, d, restarts=2, wall_clock_s=cfg.wall_clock_s,
                                         node_budget=cfg.node_budget)
        result = self.augmentation_service.augment_to_max(graph, matching, budget, rng, parts=parts, d=d)
        matching = result.matching
        run.stages.append(StageSize("augment", len(matching)))

        # Step 4: kicks
        limit = min(n, len(graph.colors))
        for _ in range(cfg.kicks):
            if len(matching) >= limit:
                break
            kicked = self.augmentation_service.perturb(graph, matching, cfg.kick_moves, rng)
            retry = self.augmentation_service.augment_to_max(graph, kicked, budget, rng, d=d)
            if len(retry.matching) > len(matching):
                matching = retry.matching
        run.stages.append(StageSize("kicks", len(matching)))
        run.matching = matching
        return run

    def _exact_finish(self, graph: ColoredBipartiteGraph, run: _Run, cfg: SolverConfig) -> _Run:
        """Small instances: replace a short heuristic answer with the exhaustive maximum."""
        exact = self.oracle_service.brute_force_max(graph, cap=cfg.oracle_max_x)
        if exact.maximum > len(run.matching):
            self.logger.info(f"🔧 Exhaustive search lifted {len(run.matching)} to {exact.maximum}")
            run = _Run(matching=RainbowMatching(exact.witness), stages=list(run.stages))
        run.stages.append(StageSize("exact", len(run.matching)))
        return run

    def _all_large(self, graph: ColoredBipartiteGraph, cfg: SolverConfig, n: int) -> bool:
        if len(graph.xs) != len(graph.ys) or n < 3:
            return False
        classification = self.typicality_service.classify_colors(graph, cfg.eps0, n)
        return not classification.small

    def _report(self, graph: ColoredBipartiteGraph, run: _Run, cfg: SolverConfig, instance: str,
                kind: InstanceKind, n: int, started: float) -> SolveReport:
        matching = run.matching
        limit = min(n, len(graph.colors))
        return SolveReport(
            instance=instance, kind=kind, n=n, seed=cfg.seed, matching=matching, stages=run.stages,
            uncovered_x=[x for x in graph.xs if not matching.covers(Side.X, x)],
            uncovered_y=[y for y in graph.ys if not matching.covers(Side.Y, y)],
            uncovered_colors=sorted(set(graph.colors) - matching.colors),
            uncovered=n - len(matching),
            bound_value=cfg.bound_value(n),
            wall_ms=(time.perf_counter() - started) * 1000,
            exhausted=len(matching) < limit,
        )

    # --- Latin squares and arrays ---

    def solve_latin(self, latin: LatinArray, cfg: Optional[SolverConfig] = None) -> SolveReport:
        """Transversal of a Latin array through its coloured K_{n,n}."""
        graph = latin_to_graph(latin)
        kind = InstanceKind.LATIN if latin.is_square else InstanceKind.ARRAY
        report = self.solve_graph(graph, cfg, instance=f"{kind.value}(n={latin.n})", kind=kind)
        report.transversal = matching_to_transversal(report.matching)
        return report

    def solve_many_symbols(self, latin: LatinArray, cfg: Optional[SolverConfig] = None) -> SolveReport:
        """
        Arrays with small colours: fix a small-colour matching M0 first, nibble
        on the large colours away from M0 and the small-heavy vertices, then
        switch on everything M0 leaves free.
        """
        cfg = cfg or self.config
        graph = latin_to_graph(latin)
        n = latin.n
        classification = self.typicality_service.classify_colors(graph, cfg.eps0, n)
        if not classification.small:
            self.logger.info("🔧 No small colours, routing to the Latin square path")
            return self.solve_latin(latin, cfg)

        started = time.perf_counter()
        d = cfg.scale_d(n)
        small = set(classification.small)
        threshold = 2 * math.sqrt(cfg.eps0) * n
        v_small = {side: {v for v in graph.vertices(side)
                          if len(graph.colors_at(side, v) & small) > threshold} for side in (Side.X, Side.Y)}
        self.logger.info(f"🚀 Many-symbol solve n={n}: t={classification.t}, {len(small)} small colours, "
                         f"{len(v_small[Side.X]) + len(v_small[Side.Y])} small-heavy vertices")

        best: Optional[_Run] = None
        notes: List[str] = []
        for attempt in range(cfg.restarts):
            rng = make_rng(cfg.seed, "many-symbols", attempt)
            small_result = self.small_color_service.small_color_matching(graph, classification, d=d, rng=rng)
            m0 = small_result.matching
            free_x = set(graph.xs) - m0.vertices(Side.X)
            free_y = set(graph.ys) - m0.vertices(Side.Y)
            h = graph.induced(free_x, free_y, set(graph.colors) - m0.colors)
            g = h.induced(free_x - v_small[Side.X], free_y - v_small[Side.Y], set(classification.large))

            seed = self.nibble_service.iterated_nibble(g, cfg.nibble_config(), rng).matching
            inner = self._pipeline(h, cfg, rng, seed_matching=seed)
            run = _Run(matching=m0.union(inner.matching),
                       stages=[StageSize("small", len(m0))]
                       + [StageSize(s.name, s.size + len(m0)) for s in inner.stages])
            if not small_result.feasible:
                notes.append(f"attempt {attempt}: small-colour target {small_result.target} "
                             f"not met ({len(m0)}, branch {small_result.branch})")
            if best is None or len(run.matching) > len(best.matching):
                best = run
            if len(best.matching) >= n:
                break

        report = self._report(graph, best, cfg, f"array(n={n})", InstanceKind.ARRAY, n, started)
        report.transversal = matching_to_transversal(report.matching)
        report.notes.extend(notes)
        self.logger.info(f"✅ array(n={n}): size {report.size}, uncovered {report.uncovered}")
        return report

    # --- Steiner systems and linear 3-graphs ---

    def solve_steiner(self, sts: SteinerTripleSystem, cfg: Optional[SolverConfig] = None) -> SolveReport:
        """Disjoint triples of an STS via random thirds and the transversal graph."""
        return self._solve_untripartite(steiner_to_hypergraph(sts), cfg, f"steiner(n={sts.n})",
                                        InstanceKind.STEINER)

    def solve_hypergraph(self, hypergraph: LinearHypergraph3, cfg: Optional[SolverConfig] = None) -> SolveReport:
        """Matching in a linear 3-graph; without a tripartition one is drawn at random."""
        if hypergraph.parts is None:
            return self._solve_untripartite(hypergraph, cfg, f"hypergraph(v={len(hypergraph.vertices)})",
                                            InstanceKind.HYPERGRAPH)
        cfg = cfg or self.config
        n = min(len(p) for p in hypergraph.parts)
        return self._solve_triples(hypergraph, cfg, f"hypergraph(v={len(hypergraph.vertices)})",
                                   InstanceKind.HYPERGRAPH, n, tripartite=True)

    def _solve_untripartite(self, hypergraph: LinearHypergraph3, cfg: Optional[SolverConfig], instance: str,
                            kind: InstanceKind) -> SolveReport:
        cfg = cfg or self.config
        n = len(hypergraph.vertices)
        notes = []
        if n % 3 == 1 and n > 1:
            # Any vertex will do; every vertex of an STS has the same degree.
            drop = hypergraph.vertices[0]
            hypergraph = LinearHypergraph3(tuple(v for v in hypergraph.vertices if v != drop),
                                           tuple(e for e in hypergraph.edges if drop not in e))
            notes.append(f"deleted vertex {drop} so the remaining vertices split into exact thirds")
        report = self._solve_triples(hypergraph, cfg, instance, kind, n, tripartite=False)
        report.notes = notes + report.notes
        return report

    def _solve_triples(self, hypergraph: LinearHypergraph3, cfg: SolverConfig, instance: str,
                       kind: InstanceKind, n: int, tripartite: bool) -> SolveReport:
        started = time.perf_counter()
        self.logger.info(f"🚀 Solving {instance}: {len(hypergraph.edges)} triples")
        retries = cfg.steiner_retries
        best = None
        for attempt in range(retries):
            rng = make_rng(cfg.seed, "triples", attempt)
            if tripartite:
                parts = hypergraph.parts
            else:
                spec = SplitSpec(mode=SplitMode.CONDITIONED)
                parts = self.split_generator.random_split(hypergraph.vertices, spec, rng)
            graph = hypergraph_to_graph(hypergraph, parts)
            run = self._pipeline(graph, cfg, rng)
            triples = lift_to_triples(run.matching)
            lifted = len(triples)
            if cfg.polish:
                triples = self.polish_triples(hypergraph, triples, rng=rng)
            run.stages.append(StageSize("polish", len(triples)))
            if best is None or len(triples) > len(best[1]):
                best = (run, triples, parts, graph, lifted)
            target = n if tripartite else len(hypergraph.vertices) // 3
            if len(best[1]) >= target:
                break

        run, triples, parts, graph, lifted = best
        violations = triple_matching_violations(triples, hypergraph.edges)
        if violations:
            self.logger.error(f"❌ Lifted triples failed the disjointness audit: {violations[0]}")
            raise ValidationError("Lifted triple matching is not a matching of the hypergraph",
                                  {"violations": violations})

        covered = 3 * len(triples)
        if tripartite:
            uncovered, bound = n - len(triples), cfg.bound_value(n)
        else:
            uncovered, bound = n - covered, 3 * cfg.bound_value(n)
        used = {v for t in triples for v in t}
        shadow = self._shadow_audit(hypergraph, parts)
        report = SolveReport(
            instance=instance, kind=kind, n=n, seed=cfg.seed, matching=run.matching, stages=run.stages,
            uncovered_x=sorted(v for v in graph.xs if v not in used),
            uncovered_y=sorted(v for v in graph.ys if v not in used),
            uncovered_colors=sorted(v for v in graph.colors if v not in used),
            uncovered=uncovered, bound_value=bound,
            wall_ms=(time.perf_counter() - started) * 1000,
            exhausted=uncovered > (0 if tripartite else n % 3),
            triples=sorted(triples),
            audit={"disjoint": True, "lifted": lifted, "polished": len(triples), "shadow": shadow},
        )
        self.logger.info(f"✅ {instance}: {len(triples)} disjoint triples, {uncovered} uncovered (bound {bound})")
        return report

    def _shadow_audit(self, hypergraph: LinearHypergraph3, parts) -> Dict:
        """Shadow typicality of the partition actually used, at its measured density."""
        parts = [frozenset(p) for p in parts]
        sizes = [len(p) for p in parts]
        if min(sizes) < 2:
            return {"passed": None, "reason": "parts too small"}
        pairs = set()
        for e in hypergraph.edges:
            for a in e:
                for b in e:
                    if a < b:
                        pairs.add((a, b))
        cross = sizes[0] * sizes[1] + sizes[0] * sizes[2] + sizes[1] * sizes[2]
        hit = sum(1 for a, b in pairs if _part(parts, a) != _part(parts, b))
        p = hit / cross if cross else 0.0
        if p <= 0:
            return {"passed": False, "p": 0.0}
        report = self.typicality_service.check_shadow(hypergraph, eps=0.5, p=p, parts=parts)
        return {"passed": report.passed, "p": round(p, 6), "eps": 0.5,
                "margin": None if math.isinf(report.margin) else round(report.margin, 6),
                "failures": len(report.failures())}

    def polish_triples(self, hypergraph: LinearHypergraph3, triples: Sequence[Triple], depth: Optional[int] = None,
                       rng: Optional[np.random.Generator] = None) -> List[Triple]:
        """
        Local improvement of a triple matching: from an uncovered vertex, add a
        triple meeting at most one chosen triple, evict that one and continue
        from a vertex it frees. A chain ending on a triple that meets nothing
        grows the matching by one.
        """
        rng = rng if rng is not None else make_rng(self.config.seed, "polish")
        n = len(hypergraph.vertices)
        depth = depth if depth is not None else min(4 * math.ceil(math.log2(max(n, 2))), 24)
        through: Dict[int, List[Triple]] = {v: [] for v in hypergraph.vertices}
        for e in hypergraph.edges:
            for v in e:
                through[v].append(e)

        owner: Dict[int, Triple] = {}
        for t in triples:
            for v in t:
                owner[v] = tuple(t)

        improved = True
        while improved:
            improved = False
            free = [v for v in hypergraph.vertices if v not in owner]
            visited = set()
            nodes = [0]
            for k in rng.permutation(len(free)):
                v = free[int(k)]
                if v in owner or v in visited:
                    continue
                if self._polish_step(through, owner, v, depth, rng, visited, set(), nodes):
                    improved = True
                    break
                if nodes[0] >= self.config.node_budget:
                    break
        return sorted({t for t in owner.values()})

    def _polish_step(self, through, owner, v, depth, rng, visited, locked, nodes) -> bool:
        nodes[0] += 1
        visited.add(v)
        options = through.get(v, [])
        for t in options:
            if all(u not in owner for u in t):
                for u in t:
                    owner[u] = t
                return True
        if depth <= 0 or nodes[0] >= self.config.node_budget:
            return False
        for k in rng.permutation(len(options)):
            t = options[int(k)]
            hit = {owner[u] for u in t if u in owner}
            if len(hit) != 1:
                continue
            evicted = hit.pop()
            if evicted in locked:
                continue
            for u in evicted:
                del owner[u]
            for u in t:
                owner[u] = t
            locked.add(t)
            for w in evicted:
                if w in owner or w in visited:
                    continue
                if self._polish_step(through, owner, w, depth - 1, rng, visited, locked, nodes):
                    return True
            locked.discard(t)
            for u in t:
                del owner[u]
            for u in evicted:
                owner[u] = evicted
        return False


def _part(parts: Sequence[frozenset], v: int) -> int:
    for i, p in enumerate(parts):
        if v in p:
            return i
    return -1
