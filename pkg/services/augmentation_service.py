# services/augmentation_service.py
"""
AugmentationService - grows a rainbow matching one edge per iteration.

Each iteration targets an uncovered pair (x0, y0) and tries to build a
three-part switch plan: connectors x0y1' and x1'y0 into the main part, an
alternating path P1 between the freed vertices x1 and y1 inside the main
part, and alternating cycles P2 / P3 in the other two parts that free the
connector colours when the matching already uses them. When no plan exists
the service falls back to a randomized ejection-chain search over all
unused colours.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from config.solver_config import SOLVER_CONFIG
from core.errors import InconsistentPlanError, InvalidMatchingError, MatchingNotInGraphError, PreconditionViolatedError
from core.models import (
    AlternatingWalk,
    AugmentBudget,
    AugmentResult,
    AugmentTraceRow,
    ColoredBipartiteGraph,
    Edge,
    EdgeTag,
    ForbiddenSets,
    PartAssignment,
    PlanFailure,
    PlanResult,
    PlanShape,
    RainbowMatching,
    Side,
    SwitchPlan,
)
from generators.split_generator import SplitGenerator
from services.expansion_service import ExpansionService, walk_from

logger = logging.getLogger(__name__)

Pools = Tuple[frozenset, frozenset, frozenset, frozenset, frozenset, frozenset]

_CONNECTOR_TRIES = 4


def odd_cap(n: int) -> int:
    """Largest odd length ≤ 4⌈log₂ n⌉."""
    cap = 4 * math.ceil(math.log2(max(n, 2)))
    return cap if cap % 2 == 1 else cap - 1


def part_matching(matching: RainbowMatching, parts: PartAssignment, i: int,
                  drop: Sequence[Edge] = ()) -> RainbowMatching:
    """M_i: edges of ``matching`` with both endpoints in part i."""
    xs, ys = parts.x_parts[i], parts.y_parts[i]
    dropped = set(drop)
    return RainbowMatching(e for e in matching.edges if e.x in xs and e.y in ys and e not in dropped)


@dataclass
class _Connector:
    outer: int       # x0 or y0
    inner: int       # y1' or x1'
    color: int       # c2 or c3
    main_edge: Edge  # x1y1' or x1'y1
    blocker: Optional[Edge]  # matching edge currently holding the colour


@dataclass
class _ChainSearch:
    work: RainbowMatching
    rng: np.random.Generator
    budget: int
    nodes: int = 0
    visited: Set[Tuple[Side, int]] = field(default_factory=set)
    locked: Set[Edge] = field(default_factory=set)


class AugmentationService:

    def __init__(self, expansion: Optional[ExpansionService] = None,
                 split_generator: Optional[SplitGenerator] = None):
        self.expansion = expansion or ExpansionService()
        self.split_generator = split_generator or SplitGenerator()
        settings = SOLVER_CONFIG['augmentation']
        self.pool_count = settings['pool_count']
        self.pair_attempts = settings['pair_attempts']

    # --- applying switches ---

    def switch_along(self, matching: RainbowMatching,
                     walk: Union[AlternatingWalk, SwitchPlan]) -> RainbowMatching:
        """
        Remove the walk's (or plan's) matching edges and add its other edges.

        Returns a new matching; ``matching`` itself is never touched, so a
        rejected switch leaves it exactly as it was.
        """
        if isinstance(walk, SwitchPlan):
            removed, added = list(walk.removed), list(walk.added)
        else:
            errors = walk.replay_errors()
            if errors:
                raise InconsistentPlanError(f"Walk does not replay: {errors[0]}", {"errors": errors})
            removed = walk.edges_tagged(EdgeTag.M) + ([walk.closing] if walk.closing is not None else [])
            added = walk.edges_tagged(EdgeTag.D)

        result = matching.copy()
        for e in removed:
            if e not in result:
                raise InconsistentPlanError(f"Edge {tuple(e)} is marked for removal but is not in the matching",
                                            {"edge": e.to_dict()})
            result.remove(e)
        try:
            result.update(added)
        except InvalidMatchingError as e:
            raise InconsistentPlanError(f"Switch would break the rainbow matching: {e.message}", e.details) from e
        return result

    # --- switch plans ---

    def build_switch_plan(self, graph: ColoredBipartiteGraph, matching: RainbowMatching, x0: int, y0: int,
                          parts: PartAssignment, pools: Sequence[frozenset],
                          junk: Optional[Set[tuple]] = None, main: int = 0,
                          cap: Optional[int] = None) -> PlanResult:
        """
        Search for a plan covering the uncovered pair (x0, y0).

        Pools D¹..D⁶ are disjoint sets of unused colours; P1 runs on D¹/D²
        inside part ``main``, P2 on D³/D⁴ inside the next part, P3 on D⁵/D⁶
        inside the last. ``junk`` memoizes failed searches and is only valid
        for the matching it was filled against.
        """
        if matching.covers(Side.X, x0) or matching.covers(Side.Y, y0):
            raise PreconditionViolatedError(f"({x0}, {y0}) is not an uncovered pair", {"x0": x0, "y0": y0})
        junk = junk if junk is not None else set()
        cap = cap or odd_cap(graph.n)
        pools = list(pools) + [frozenset()] * (6 - len(pools))
        reserved = frozenset().union(*pools)

        c = graph.edge_color(x0, y0)
        if c is not None and not matching.uses_color(c):
            edge = Edge(x0, y0, c)
            return PlanResult(SwitchPlan(PlanShape.PATH, removed=[], added=[edge], x0=x0, y0=y0,
                                          main_path=walk_from(Side.X, [x0, y0], [edge])))

        r, s, u = main % 3, (main + 1) % 3, (main + 2) % 3
        x_side = self._connectors(graph, matching, parts, Side.X, x0, r, s, reserved, junk)
        y_side = self._connectors(graph, matching, parts, Side.Y, y0, r, u, reserved, junk)
        if not x_side or not y_side:
            return PlanResult(None, PlanFailure.NO_CONNECTOR)

        reason = PlanFailure.NO_CONNECTOR
        for cx in x_side[:_CONNECTOR_TRIES]:
            for cy in y_side[:_CONNECTOR_TRIES]:
                if cx.color == cy.color or cx.main_edge == cy.main_edge:
                    continue
                x1, y1 = cx.main_edge.x, cy.main_edge.y
                if ("p1", x1, y1) in junk or ("cycle", cx.blocker) in junk or ("cycle", cy.blocker) in junk:
                    continue
                taken = frozenset({cx.color, cy.color})

                cycle_c2 = self._freeing_cycle(graph, matching, parts, s, cx.blocker, pools[2], pools[3], taken, cap)
                if cx.blocker is not None and cycle_c2 is None:
                    junk.add(("cycle", cx.blocker))
                    reason = PlanFailure.NO_CYCLE_C2
                    continue
                cycle_c3 = self._freeing_cycle(graph, matching, parts, u, cy.blocker, pools[4], pools[5], taken, cap)
                if cy.blocker is not None and cycle_c3 is None:
                    junk.add(("cycle", cy.blocker))
                    reason = PlanFailure.NO_CYCLE_C3
                    continue

                main_m = part_matching(matching, parts, r, drop=(cx.main_edge, cy.main_edge))
                fb = ForbiddenSets(x=frozenset({x0, cy.inner}), y=frozenset({y0, cx.inner}), colors=taken)
                found = self.expansion.find_alt_rainbow_path(
                    self._pool_graph(graph, parts, r, pools[0]), self._pool_graph(graph, parts, r, pools[1]),
                    main_m, x1, y1, cap, fb)
                if not found.found:
                    junk.add(("p1", x1, y1))
                    reason = PlanFailure.NO_MAIN_PATH
                    continue

                plan = self._assemble(x0, y0, cx, cy, found.walk, cycle_c2, cycle_c3)
                try:
                    self.switch_along(matching, plan)
                except InconsistentPlanError as e:
                    logger.debug(f"⚠️ Discarding inconsistent plan for ({x0}, {y0}): {e}")
                    continue
                return PlanResult(plan)
        return PlanResult(None, reason)

    def _connectors(self, graph: ColoredBipartiteGraph, matching: RainbowMatching, parts: PartAssignment,
                    side: Side, v: int, main: int, free_part: int, reserved: frozenset,
                    junk: Set[tuple]) -> List[_Connector]:
        """Edges v w into a matched vertex w of the main part whose colour can be freed in ``free_part``."""
        other = side.other
        main_x, main_y = parts.x_parts[main], parts.y_parts[main]
        free_x, free_y = parts.x_parts[free_part], parts.y_parts[free_part]
        found = []
        for w, c in sorted(graph.neighbors(side, v).items()):
            held = matching.edge_at(other, w)
            if held is None or held.x not in main_x or held.y not in main_y:
                continue
            if c in reserved:
                continue
            blocker = matching.edge_of_color(c)
            if blocker is not None:
                if blocker.x not in free_x or blocker.y not in free_y or ("cycle", blocker) in junk:
                    continue
            found.append(_Connector(outer=v, inner=w, color=c, main_edge=held, blocker=blocker))
        # connectors whose colour is already free need no cycle
        found.sort(key=lambda k: (k.blocker is not None, k.inner))
        return found

    def _freeing_cycle(self, graph: ColoredBipartiteGraph, matching: RainbowMatching, parts: PartAssignment,
                       part: int, blocker: Optional[Edge], pool_a: frozenset, pool_b: frozenset,
                       taken: frozenset, cap: int) -> Optional[AlternatingWalk]:
        """Alternating path from x to y of the blocking edge xy, closed by that edge."""
        if blocker is None:
            return None
        inner = part_matching(matching, parts, part, drop=(blocker,))
        found = self.expansion.find_alt_rainbow_path(
            self._pool_graph(graph, parts, part, pool_a), self._pool_graph(graph, parts, part, pool_b),
            inner, blocker.x, blocker.y, cap, ForbiddenSets(colors=taken))
        if not found.found:
            return None
        walk = found.walk
        walk.closing = blocker
        return walk

    @staticmethod
    def _pool_graph(graph: ColoredBipartiteGraph, parts: PartAssignment, i: int,
                    pool: frozenset) -> ColoredBipartiteGraph:
        return graph.induced(parts.x_parts[i], parts.y_parts[i], pool)

    @staticmethod
    def _assemble(x0: int, y0: int, cx: _Connector, cy: _Connector, main_path: AlternatingWalk,
                  cycle_c2: Optional[AlternatingWalk], cycle_c3: Optional[AlternatingWalk]) -> SwitchPlan:
        connector_x = Edge(x0, cx.inner, cx.color)
        connector_y = Edge(cy.inner, y0, cy.color)
        removed = [cx.main_edge, cy.main_edge] + main_path.edges_tagged(EdgeTag.M)
        added = [connector_x, connector_y] + main_path.edges_tagged(EdgeTag.D)
        for cycle in (cycle_c2, cycle_c3):
            if cycle is not None:
                removed += cycle.edges_tagged(EdgeTag.M) + [cycle.closing]
                added += cycle.edges_tagged(EdgeTag.D)
        return SwitchPlan(PlanShape.PATH_WITH_CYCLES, removed=removed, added=added, x0=x0, y0=y0,
                          connector_x=connector_x, connector_y=connector_y, main_path=main_path,
                          cycle_c2=cycle_c2, cycle_c3=cycle_c3)

    def draw_pools(self, unused: Sequence[int], d: int, rng: np.random.Generator,
                   widen: bool = False) -> Tuple[Pools, int]:
        """
        Six disjoint pools of at most d unused colours each (every unused
        colour spread over the six when ``widen``). Returns the pools and the
        shortfall against 6d.
        """
        shuffled = [int(c) for c in rng.permutation(np.asarray(sorted(unused), dtype=np.int64))]
        if widen:
            chunks = np.array_split(np.asarray(shuffled, dtype=np.int64), self.pool_count)
            pools = tuple(frozenset(int(c) for c in chunk) for chunk in chunks)
        else:
            per = min(d, len(shuffled) // self.pool_count)
            pools = tuple(frozenset(shuffled[i * per:(i + 1) * per]) for i in range(self.pool_count))
        deficit = max(0, self.pool_count * d - sum(len(p) for p in pools))
        return pools, deficit

    # --- fallback search ---

    def ejection_chain(self, graph: ColoredBipartiteGraph, matching: RainbowMatching, depth: int,
                       node_budget: int, rng: np.random.Generator) -> Optional[RainbowMatching]:
        """
        Bounded-depth rainbow augmenting search over all unused colours.

        From an uncovered vertex, add an edge that conflicts with at most one
        matching edge, evict that edge and continue from the vertex it frees.
        An edge with no conflict ends the chain one larger than it began.
        """
        starts = [(Side.X, x) for x in graph.xs if not matching.covers(Side.X, x)]
        starts += [(Side.Y, y) for y in graph.ys if not matching.covers(Side.Y, y)]
        if not starts:
            return None
        search = _ChainSearch(work=matching.copy(), rng=rng, budget=node_budget)
        for k in rng.permutation(len(starts)):
            side, v = starts[int(k)]
            if (side, v) in search.visited:
                continue
            if self._chain_step(graph, search, side, v, depth):
                return search.work
            if search.nodes >= search.budget:
                logger.debug(f"⚠️ Ejection chain search hit its node budget ({node_budget})")
                break
        return None

    def _chain_step(self, graph: ColoredBipartiteGraph, search: _ChainSearch, side: Side, v: int,
                    depth: int) -> bool:
        search.nodes += 1
        search.visited.add((side, v))
        work = search.work
        other = side.other
        edges = sorted(graph.edges_at(side, v))

        for e in edges:
            if not work.covers(other, e.endpoint(other)) and not work.uses_color(e.c):
                work.add(e)
                return True
        if depth <= 0 or search.nodes >= search.budget:
            return False

        for k in search.rng.permutation(len(edges)):
            e = edges[int(k)]
            w = e.endpoint(other)
            by_vertex = work.edge_at(other, w)
            by_color = work.edge_of_color(e.c)
            conflicts = {f for f in (by_vertex, by_color) if f is not None}
            if len(conflicts) != 1:
                continue
            kicked = conflicts.pop()
            if kicked in search.locked:
                continue
            if kicked == by_vertex:
                freed = [(side, kicked.endpoint(side))]
            else:
                freed = [(Side.X, kicked.x), (Side.Y, kicked.y)]
            work.remove(kicked)
            work.add(e)
            search.locked.add(e)
            for next_side, nxt in freed:
                if (next_side, nxt) in search.visited:
                    continue
                if self._chain_step(graph, search, next_side, nxt, depth - 1):
                    return True
                if search.nodes >= search.budget:
                    break
            search.locked.discard(e)
            work.remove(e)
            work.add(kicked)
            if search.nodes >= search.budget:
                return False
        return False

    # --- main loop ---

    def augment_to_max(self, graph: ColoredBipartiteGraph, matching: RainbowMatching, budget: AugmentBudget,
                       rng: np.random.Generator, parts: Optional[PartAssignment] = None,
                       d: int = 2) -> AugmentResult:
        """
        Switch plans first, ejection chains second; rotate the split, the pools
        and the main part when both fail, at most ``budget.restarts`` times in
        a row. Every iteration adds one edge and at most ``budget.edit_cap``
        edits, so |M' △ M| ≤ iterations · edit_cap.
        """
        for e in matching.edges:
            if not graph.has_edge(e):
                raise MatchingNotInGraphError(f"Matching edge {tuple(e)} is not an edge of the graph",
                                              {"edge": e.to_dict()})
        start = matching
        current = matching.copy()
        result = AugmentResult(matching=current)
        limit = min(len(graph.xs), len(graph.ys), len(graph.colors))
        if len(current) >= limit:
            return result

        parts = parts or self.split_generator.split_graph(graph, rng)
        depth = min(budget.fallback_depth or 4 * math.ceil(math.log2(max(graph.n, 2))), (budget.edit_cap - 1) // 2)
        deadline = time.monotonic() + budget.wall_clock_s if budget.wall_clock_s else None
        junk: Set[tuple] = set()
        stuck = 0
        iteration = 0

        while len(current) < limit:
            if deadline is not None and time.monotonic() > deadline:
                logger.warning(f"⚠️ Augmentation hit its wall-clock cap at size {len(current)}")
                result.exhausted = True
                break

            shape, plan, deficit = self._try_plans(graph, current, parts, d, rng, junk, budget.edit_cap, iteration)
            if plan is not None:
                nxt = self.switch_along(current, plan)
            else:
                nxt = self.ejection_chain(graph, current, max(depth, 0), budget.node_budget, rng)
                shape = PlanShape.CHAIN
                if nxt is not None and len(nxt.symmetric_difference(current)) > budget.edit_cap:
                    nxt = None

            if nxt is None or len(nxt) <= len(current):
                if stuck >= budget.restarts:
                    result.exhausted = True
                    break
                stuck += 1
                parts = self.split_generator.split_graph(graph, rng)
                junk.clear()
                logger.debug(f"🔁 Augmentation stuck at {len(current)}, rotating split ({stuck}/{budget.restarts})")
                continue

            stuck = 0
            junk.clear()
            iteration += 1
            lengths = plan.path_lengths() if plan is not None else (len(nxt.symmetric_difference(current)), 0, 0)
            current = nxt
            result.trace.append(AugmentTraceRow(
                iteration=iteration, plan_shape=shape.value, p1=lengths[0], p2=lengths[1], p3=lengths[2],
                ledger=len(current.symmetric_difference(start)), size=len(current), pool_deficit=deficit))
            result.matching = current

        result.matching = current
        status = "exhausted" if result.exhausted else "complete"
        logger.debug(f"📊 Augmentation {status}: {len(start)} → {len(current)} in {iteration} iterations")
        return result

    def _try_plans(self, graph: ColoredBipartiteGraph, matching: RainbowMatching, parts: PartAssignment,
                   d: int, rng: np.random.Generator, junk: Set[tuple], edit_cap: int,
                   iteration: int) -> Tuple[PlanShape, Optional[SwitchPlan], int]:
        unused = sorted(set(graph.colors) - matching.colors)
        pairs = self.pair_order(graph, matching, rng)[:self.pair_attempts]
        deficit = 0
        for widen in (False, True):
            pools, shortfall = self.draw_pools(unused, d, rng, widen=widen)
            if not widen:
                deficit = shortfall
            for k, (x0, y0) in enumerate(pairs):
                outcome = self.build_switch_plan(graph, matching, x0, y0, parts, pools, junk,
                                                 main=(iteration + k) % 3)
                plan = outcome.plan
                if plan is not None and plan.edits <= edit_cap:
                    return plan.shape, plan, deficit
        return PlanShape.CHAIN, None, deficit

    def pair_order(self, graph: ColoredBipartiteGraph, matching: RainbowMatching,
                   rng: np.random.Generator) -> List[Tuple[int, int]]:
        """Uncovered (x0, y0) pairs, hardest first (fewest unused colours at the endpoints)."""
        unused = set(graph.colors) - matching.colors

        def ranked(side: Side) -> List[int]:
            free = [v for v in graph.vertices(side) if not matching.covers(side, v)]
            ties = rng.random(len(free))
            keyed = sorted(zip(free, ties), key=lambda vt: (len(graph.colors_at(side, vt[0]) & unused), vt[1]))
            return [v for v, _ in keyed]

        xs, ys = ranked(Side.X), ranked(Side.Y)
        pairs = [(i + j, x, y) for i, x in enumerate(xs) for j, y in enumerate(ys)]
        pairs.sort(key=lambda row: row[0])
        return [(x, y) for _, x, y in pairs]

    # --- completion and perturbation ---

    def greedy_extend(self, graph: ColoredBipartiteGraph, matching: RainbowMatching,
                      rng: np.random.Generator) -> RainbowMatching:
        """Random-order greedy: add any edge on uncovered vertices with an unused colour."""
        result = matching.copy()
        edges = graph.edges
        for k in rng.permutation(len(edges)):
            e = edges[int(k)]
            if not (result.covers(Side.X, e.x) or result.covers(Side.Y, e.y) or result.uses_color(e.c)):
                result.add(e)
        return result

    def perturb(self, graph: ColoredBipartiteGraph, matching: RainbowMatching, moves: int,
                rng: np.random.Generator) -> RainbowMatching:
        """Size-preserving random switches: one edge in, the single edge it conflicts with out."""
        result = matching.copy()
        free = [(Side.X, x) for x in graph.xs if not result.covers(Side.X, x)]
        free += [(Side.Y, y) for y in graph.ys if not result.covers(Side.Y, y)]
        done = 0
        for _ in range(20 * moves):
            if done >= moves or not free:
                break
            side, v = free[int(rng.integers(len(free)))]
            if result.covers(side, v):
                free.remove((side, v))
                continue
            options = graph.edges_at(side, v)
            if not options:
                continue
            e = options[int(rng.integers(len(options)))]
            other = side.other
            conflicts = {f for f in (result.edge_at(other, e.endpoint(other)), result.edge_of_color(e.c))
                         if f is not None}
            if len(conflicts) != 1:
                continue
            kicked = conflicts.pop()
            result.remove(kicked)
            result.add(e)
            free.remove((side, v))
            free += [(s, kicked.endpoint(s)) for s in (Side.X, Side.Y) if not result.covers(s, kicked.endpoint(s))]
            done += 1
        return result
