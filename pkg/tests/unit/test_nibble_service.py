import numpy as np
import pytest

from core.conversions import latin_to_graph
from core.errors import MatchingNotInGraphError
from core.models import ColoredBipartiteGraph, Edge, NibbleConfig, RainbowMatching, matching_violations
from generators.latin_generator import LatinGenerator
from services.nibble_service import NibbleService, bite_yield
from services.rng_service import make_rng


@pytest.fixture
def service():
    return NibbleService()


@pytest.fixture
def cyclic64():
    return latin_to_graph(LatinGenerator().cayley_cyclic(64))


class TestSingleBite:

    def test_bite_is_a_rainbow_matching_of_the_graph(self, service, cyclic64):
        bite = service.single_bite(cyclic64, 0.5, make_rng(1, "bite"))
        assert all(cyclic64.has_edge(e) for e in bite.matching)
        assert matching_violations(bite.matching.edges) == []
        assert set(bite.collisions).isdisjoint(bite.matching.edges)
        assert len(bite.chosen) == len(bite.collisions) + len(bite.matching)

    def test_bite_yield_law(self, service):
        n, q = 100, 1 / 3
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(n))
        rng = make_rng(3, "bite-law")
        sizes = [len(service.single_bite(graph, q, rng).matching) for _ in range(200)]
        assert abs(np.mean(sizes) - bite_yield(n, q)) < 1.5

    def test_empty_graph(self, service):
        graph = ColoredBipartiteGraph([0], [0], [0], [])
        assert len(service.single_bite(graph, 0.5, make_rng(0)).matching) == 0


class TestIteratedNibble:

    def test_covers_most_vertices(self, service, cyclic64):
        result = service.iterated_nibble(cyclic64, NibbleConfig(q=0.1, scale="degree"), make_rng(5, "nibble"))
        assert len(result.matching) >= 32
        assert all(cyclic64.has_edge(e) for e in result.matching)
        assert matching_violations(result.matching.edges) == []

    def test_rounds_are_recorded(self, service, cyclic64):
        result = service.iterated_nibble(cyclic64, NibbleConfig(q=0.2), make_rng(5, "nibble"))
        assert [r.round for r in result.rounds] == list(range(1, len(result.rounds) + 1))
        assert sum(r.gained for r in result.rounds) == len(result.matching)
        assert result.rounds[-1].uncovered == 64 - len(result.matching)

    def test_stop_fraction(self, service, cyclic64):
        result = service.iterated_nibble(cyclic64, NibbleConfig(q=0.2, stop_fraction=0.5, scale="degree"), make_rng(5))
        assert len(result.matching) >= 32

    def test_round_cap(self, service, cyclic64):
        result = service.iterated_nibble(cyclic64, NibbleConfig(q=0.1, max_rounds=2), make_rng(5))
        assert len(result.rounds) <= 2

    def test_reproducible(self, service, cyclic64):
        cfg = NibbleConfig(q=0.1)
        a = service.iterated_nibble(cyclic64, cfg, make_rng(9, "nibble"))
        b = service.iterated_nibble(cyclic64, cfg, make_rng(9, "nibble"))
        assert a.matching == b.matching

    def test_degree_scale_variant(self, service, cyclic64):
        result = service.iterated_nibble(cyclic64, NibbleConfig(q=0.5, scale="degree"), make_rng(2))
        assert matching_violations(result.matching.edges) == []
        assert result.rounds[0].rate == pytest.approx(0.5 / 64)

    def test_default_rate_follows_the_shrinking_vertex_count(self, service, cyclic64):
        result = service.iterated_nibble(cyclic64, NibbleConfig(q=0.2), make_rng(5, "nibble"))
        before = [r.uncovered + r.gained for r in result.rounds]
        assert before[0] == 64
        assert min(before) < 64
        for r, remaining in zip(result.rounds, before):
            assert r.rate == pytest.approx(r.q / remaining)

    def test_bite_rate_on_a_reduced_graph(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(100))
        residual = service.remove_matched(graph, RainbowMatching([(i, i, 2 * i % 100) for i in range(40)]))
        cfg = NibbleConfig(q=0.3, max_rounds=1)
        rng = make_rng(21, "reduced")
        rounds = [service.iterated_nibble(residual, cfg, rng).rounds[0] for _ in range(300)]
        assert all(r.rate == pytest.approx(0.3 / 60) for r in rounds)
        expected = residual.num_edges * 0.3 / 60
        assert abs(np.mean([r.chosen for r in rounds]) - expected) < 1.0

    def test_empty_samples_count_towards_the_stall(self, service):
        graph = ColoredBipartiteGraph(range(4), range(4), range(4), [(i, i, i) for i in range(4)])
        result = service.iterated_nibble(graph, NibbleConfig(q=1e-6), make_rng(3))
        assert result.stalled
        assert len(result.matching) == 0
        assert [r.chosen for r in result.rounds] == [0, 0, 0, 0]
        assert result.rounds[2].q == pytest.approx(5e-7)

    def test_config_rejects_bad_q(self):
        with pytest.raises(ValueError):
            NibbleConfig(q=1.0)


class TestResidual:

    def test_remove_matched(self, service, cyclic64):
        matching = RainbowMatching([cyclic64.edges[0]])
        residual = service.remove_matched(cyclic64, matching)
        e = cyclic64.edges[0]
        assert e.x not in residual.xs and e.y not in residual.ys and e.c not in residual.colors
        assert residual.num_edges == 63 * 63 - 63

    def test_remove_foreign_edge(self, service, cyclic64):
        with pytest.raises(MatchingNotInGraphError):
            service.remove_matched(cyclic64, RainbowMatching([Edge(0, 0, 5)]))

    def test_regularity_trial_is_a_fraction(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(20))
        fraction = service.residual_regularity_trial(graph, 0.3, 0.5, 3, make_rng(4))
        assert 0.0 <= fraction <= 1.0


class TestThreeSplit:

    def test_part_matchings_stay_in_their_parts(self, service, cyclic64):
        result = service.three_split_nibble(cyclic64, NibbleConfig(q=0.1), make_rng(8, "three-split"))
        for matching, graph in zip(result.matchings, result.graphs):
            assert all(graph.has_edge(e) for e in matching)
        assert matching_violations(result.union.edges) == []
        assert len(result.union) == sum(len(m) for m in result.matchings)
