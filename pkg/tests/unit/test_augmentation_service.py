import pytest

from core.conversions import latin_to_graph
from core.errors import InconsistentPlanError, MatchingNotInGraphError, PreconditionViolatedError
from core.models import (
    AugmentBudget,
    ColoredBipartiteGraph,
    Edge,
    PlanFailure,
    PlanShape,
    RainbowMatching,
    Side,
    matching_violations,
)
from generators.latin_generator import LatinGenerator
from services.augmentation_service import AugmentationService, odd_cap, part_matching
from services.expansion_service import walk_from
from services.rng_service import make_rng
from tests.conftest import GADGET_MATCHING


@pytest.fixture
def service():
    return AugmentationService()


@pytest.fixture
def chain_graph():
    """Two-edge maximum reachable only by evicting the single matching edge."""
    graph = ColoredBipartiteGraph([0, 1], [0, 1], [0, 1, 2], [(0, 0, 0), (1, 0, 1), (0, 1, 2)])
    return graph, RainbowMatching([(0, 0, 0)])


class TestSwitchPlan:

    def test_gadget_plan(self, service, gadget_graph, gadget_matching, gadget_parts, gadget_pools):
        outcome = service.build_switch_plan(gadget_graph, gadget_matching, 0, 0, gadget_parts, gadget_pools)
        plan = outcome.plan
        assert plan is not None and plan.shape is PlanShape.PATH_WITH_CYCLES
        assert set(plan.removed) == {Edge(1, 2, 2), Edge(2, 1, 3), Edge(4, 4, 4), Edge(3, 3, 0)}
        assert set(plan.added) == {Edge(0, 2, 0), Edge(2, 0, 1), Edge(1, 1, 5), Edge(3, 4, 6), Edge(4, 3, 7)}
        assert plan.gain == 1
        assert plan.connector_x == Edge(0, 2, 0)
        assert plan.cycle_c2.closing == Edge(3, 3, 0)
        assert plan.cycle_c3 is None
        assert plan.path_lengths() == (1, 3, 0)

    def test_gadget_switch_frees_the_connector_colour(self, service, gadget_graph, gadget_matching,
                                                      gadget_parts, gadget_pools):
        plan = service.build_switch_plan(gadget_graph, gadget_matching, 0, 0, gadget_parts, gadget_pools).plan
        after = service.switch_along(gadget_matching, plan)
        assert len(after) == len(gadget_matching) + 1
        assert 0 in after.colors
        assert matching_violations(after.edges) == []
        assert len(gadget_matching) == 4

    def test_empty_cycle_pools(self, service, gadget_graph, gadget_matching, gadget_parts):
        pools = [frozenset({5})] + [frozenset()] * 5
        outcome = service.build_switch_plan(gadget_graph, gadget_matching, 0, 0, gadget_parts, pools)
        assert outcome.plan is None
        assert outcome.reason is PlanFailure.NO_CYCLE_C2

    def test_free_connector_colours_need_no_cycles(self, service, gadget_graph, gadget_parts, gadget_pools):
        matching = RainbowMatching([e for e in GADGET_MATCHING if e != (3, 3, 0)])
        plan = service.build_switch_plan(gadget_graph, matching, 0, 0, gadget_parts, gadget_pools).plan
        assert plan.cycle_c2 is None and plan.cycle_c3 is None
        assert plan.gain == 1

    def test_missing_main_path(self, service, gadget_graph, gadget_matching, gadget_parts):
        pools = [frozenset(), frozenset(), frozenset({6}), frozenset({7}), frozenset(), frozenset()]
        outcome = service.build_switch_plan(gadget_graph, gadget_matching, 0, 0, gadget_parts, pools)
        assert outcome.reason is PlanFailure.NO_MAIN_PATH

    def test_junk_memo_skips_failed_main_path(self, service, gadget_graph, gadget_matching, gadget_parts,
                                              gadget_pools):
        junk = {("p1", 1, 1)}
        outcome = service.build_switch_plan(gadget_graph, gadget_matching, 0, 0, gadget_parts, gadget_pools, junk)
        assert outcome.plan is None

    def test_covered_pair_is_rejected(self, service, gadget_graph, gadget_matching, gadget_parts, gadget_pools):
        with pytest.raises(PreconditionViolatedError):
            service.build_switch_plan(gadget_graph, gadget_matching, 1, 0, gadget_parts, gadget_pools)

    def test_direct_edge_is_a_path_plan(self, service, gadget_parts):
        graph = ColoredBipartiteGraph(range(5), range(5), range(8), [(0, 0, 6)])
        plan = service.build_switch_plan(graph, RainbowMatching(), 0, 0, gadget_parts, []).plan
        assert plan.shape is PlanShape.PATH
        assert plan.added == [Edge(0, 0, 6)]


class TestSwitchAlong:

    def test_walk_switch(self, service):
        matching = RainbowMatching([(1, 1, 5)])
        walk = walk_from(*_three_step())
        after = service.switch_along(matching, walk)
        assert set(after.edges) == {Edge(0, 1, 0), Edge(1, 0, 1)}
        assert set(matching.edges) == {Edge(1, 1, 5)}

    def test_rejected_switch_leaves_matching_alone(self, service, gadget_graph, gadget_matching, gadget_parts,
                                                   gadget_pools):
        plan = service.build_switch_plan(gadget_graph, gadget_matching, 0, 0, gadget_parts, gadget_pools).plan
        plan.removed.append(Edge(0, 0, 9))
        before = gadget_matching.copy()
        with pytest.raises(InconsistentPlanError):
            service.switch_along(gadget_matching, plan)
        assert gadget_matching == before

    def test_broken_walk(self, service):
        side, vertices, edges = _three_step()
        walk = walk_from(side, vertices, [edges[0], edges[2], edges[1]])
        with pytest.raises(InconsistentPlanError):
            service.switch_along(RainbowMatching([(1, 1, 5)]), walk)


class TestEjectionChain:

    def test_chain_evicts_one_edge(self, service, chain_graph):
        graph, matching = chain_graph
        assert len(service.greedy_extend(graph, matching, make_rng(0))) == 1
        grown = service.ejection_chain(graph, matching, depth=2, node_budget=100, rng=make_rng(0))
        assert set(grown.edges) == {Edge(1, 0, 1), Edge(0, 1, 2)}

    def test_depth_zero_cannot_evict(self, service, chain_graph):
        graph, matching = chain_graph
        assert service.ejection_chain(graph, matching, depth=0, node_budget=100, rng=make_rng(0)) is None

    def test_augment_falls_back_to_chain(self, service, chain_graph):
        graph, matching = chain_graph
        result = service.augment_to_max(graph, matching, AugmentBudget.for_scale(2, 2), make_rng(1))
        assert len(result.matching) == 2
        assert not result.exhausted
        assert [row.plan_shape for row in result.trace] == ["chain"]
        assert result.trace[0].ledger == 3


class TestAugmentToMax:

    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_ledger_and_growth(self, service, n):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(n))
        budget = AugmentBudget.for_scale(n, 2)
        start = RainbowMatching()
        result = service.augment_to_max(graph, start, budget, make_rng(n, "augment"))
        assert matching_violations(result.matching.edges) == []
        assert all(graph.has_edge(e) for e in result.matching)
        assert [row.size for row in result.trace] == list(range(1, len(result.matching) + 1))
        for row in result.trace:
            assert row.ledger <= row.iteration * budget.edit_cap
        assert len(start) == 0

    def test_cyclic_four_stops_at_three(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(4))
        result = service.augment_to_max(graph, RainbowMatching(), AugmentBudget(edit_cap=20, restarts=1),
                                        make_rng(2))
        assert len(result.matching) <= 3
        assert result.exhausted

    def test_foreign_matching(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(3))
        with pytest.raises(MatchingNotInGraphError):
            service.augment_to_max(graph, RainbowMatching([(0, 0, 2)]), AugmentBudget(edit_cap=5), make_rng(0))

    def test_full_matching_returns_at_once(self, service, chain_graph):
        graph, _ = chain_graph
        full = RainbowMatching([(1, 0, 1), (0, 1, 2)])
        result = service.augment_to_max(graph, full, AugmentBudget(edit_cap=5), make_rng(0))
        assert result.matching == full and result.trace == []


class TestHelpers:

    def test_odd_cap(self):
        assert odd_cap(64) == 23
        assert odd_cap(2) == 3

    def test_part_matching(self, gadget_matching, gadget_parts):
        assert set(part_matching(gadget_matching, gadget_parts, 1).edges) == {Edge(3, 3, 0), Edge(4, 4, 4)}
        assert len(part_matching(gadget_matching, gadget_parts, 0, drop=[Edge(1, 2, 2)])) == 1

    def test_pools_are_disjoint(self, service):
        pools, deficit = service.draw_pools(range(20), 2, make_rng(0))
        assert all(len(p) == 2 for p in pools)
        assert sum(len(p) for p in pools) == len(frozenset().union(*pools))
        assert deficit == 0

    def test_pool_deficit(self, service):
        pools, deficit = service.draw_pools(range(20), 5, make_rng(0))
        assert all(len(p) == 3 for p in pools)
        assert deficit == 12
        widened, _ = service.draw_pools(range(20), 5, make_rng(0), widen=True)
        assert frozenset().union(*widened) == frozenset(range(20))

    def test_pair_order_lists_every_uncovered_pair(self, service, gadget_graph, gadget_matching):
        pairs = service.pair_order(gadget_graph, gadget_matching, make_rng(0))
        assert pairs == [(0, 0)]

    def test_greedy_extend_is_maximal(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(6))
        matching = service.greedy_extend(graph, RainbowMatching(), make_rng(3))
        free = [e for e in graph.edges
                if e.x not in {f.x for f in matching} and e.y not in {f.y for f in matching}
                and e.c not in matching.colors]
        assert free == []

    def test_perturb_preserves_size(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(6))
        matching = service.greedy_extend(graph, RainbowMatching(), make_rng(3))
        moved = service.perturb(graph, matching, 3, make_rng(4))
        assert len(moved) == len(matching)
        assert matching_violations(moved.edges) == []
        assert all(graph.has_edge(e) for e in moved)


def _three_step():
    return Side.X, [0, 1, 1, 0], [Edge(0, 1, 0), Edge(1, 1, 5), Edge(1, 0, 1)]
