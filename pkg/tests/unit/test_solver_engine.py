import numpy as np
import pytest

from core.conversions import full_latin_to_hypergraph, latin_to_graph, steiner_to_hypergraph
from core.models import InstanceKind, LatinArray, SolverConfig, matching_violations, triple_matching_violations
from core.solver_engine import SolverEngine
from generators.latin_generator import LatinGenerator
from services.oracle_service import OracleService
from services.rng_service import make_rng


@pytest.fixture
def engine(fast_config):
    return SolverEngine(fast_config)


class TestLatin:

    def test_odd_cyclic_square_has_a_transversal(self, engine):
        report = engine.solve_latin(LatinGenerator().cayley_cyclic(5))
        assert report.size == 5
        assert report.uncovered == 0 and not report.exhausted
        assert sorted(c for _, _, c in report.transversal) == list(range(5))

    def test_cyclic_four_misses_one_cell(self, engine):
        report = engine.solve_latin(LatinGenerator().cayley_cyclic(4))
        assert report.size == 3
        assert report.exhausted
        assert report.within_bound
        assert len(report.uncovered_x) == len(report.uncovered_y) == len(report.uncovered_colors) == 1

    def test_stages_are_monotone(self, engine):
        report = engine.solve_latin(LatinGenerator().random_latin(12, 4, mix_steps=500))
        sizes = [s.size for s in report.stages]
        assert [s.name for s in report.stages] == ["nibble", "greedy", "augment", "kicks"]
        assert sizes == sorted(sizes)
        assert matching_violations(report.matching.edges) == []

    def test_same_seed_same_answer(self, fast_config):
        latin = LatinGenerator().random_latin(10, 2, mix_steps=400)
        a = SolverEngine(fast_config).solve_latin(latin)
        b = SolverEngine(fast_config).solve_latin(latin)
        assert a.matching == b.matching

    def test_report_document(self, engine):
        data = engine.solve_latin(LatinGenerator().cayley_cyclic(3)).to_dict()
        assert data["kind"] == "latin"
        assert data["size"] == 3
        assert len(data["transversal"]) == 3
        assert {"stages", "uncovered", "bound_value", "within_bound", "notes"} <= set(data)


class TestExactFinish:

    def test_small_squares_reach_the_exhaustive_maximum(self):
        engine = SolverEngine(SolverConfig(restarts=1, kicks=0, seed=3))
        oracle = OracleService()
        for n in range(4, 9):
            for seed in range(4):
                latin = LatinGenerator().random_latin(n, 500 + seed, mix_steps=20 * n * n)
                report = engine.solve_latin(latin)
                assert report.size == oracle.brute_force_max(latin).maximum
                assert matching_violations(report.transversal) == []
                assert all(latin.cell(i, j) == s for i, j, s in report.transversal)

    def test_short_answer_gets_an_exact_stage(self, engine):
        report = engine.solve_latin(LatinGenerator().cayley_cyclic(4))
        assert report.stages[-1].name == "exact"
        assert report.size == 3

    def test_exact_finish_can_be_switched_off(self):
        report = SolverEngine(SolverConfig(exact_finish=False)).solve_latin(LatinGenerator().cayley_cyclic(4))
        assert "exact" not in [s.name for s in report.stages]

    def test_exact_finish_respects_the_oracle_cap(self):
        report = SolverEngine(SolverConfig(oracle_max_x=3)).solve_latin(LatinGenerator().cayley_cyclic(4))
        assert "exact" not in [s.name for s in report.stages]

    def test_complete_answers_skip_the_exact_stage(self, engine):
        report = engine.solve_latin(LatinGenerator().cayley_cyclic(5))
        assert "exact" not in [s.name for s in report.stages]


class TestManySymbols:

    def test_without_small_colours_routes_to_latin(self, engine):
        report = engine.solve_many_symbols(LatinGenerator().cayley_cyclic(5))
        assert report.kind is InstanceKind.LATIN

    def test_all_symbols_distinct(self, engine):
        latin = LatinArray(np.arange(36).reshape(6, 6))
        report = engine.solve_many_symbols(latin)
        assert report.kind is InstanceKind.ARRAY
        assert report.size == 6
        assert report.stages[0].name == "small"
        assert report.notes

    def test_fresh_rows(self, engine):
        generator = LatinGenerator()
        array = generator.augment_fresh_symbols(generator.cayley_cyclic(12), 2)
        report = engine.solve_many_symbols(array)
        assert report.kind is InstanceKind.ARRAY
        assert report.size >= 10
        assert matching_violations(report.transversal) == []
        assert all(array.cell(i, j) == s for i, j, s in report.transversal)


class TestTriples:

    def test_affine_plane_of_order_three(self, engine, steiner_generator):
        report = engine.solve_steiner(steiner_generator.bose_sts(9))
        assert report.size == 3
        assert report.uncovered == 0
        assert report.audit["disjoint"] is True

    def test_single_triple(self, engine, steiner_generator):
        report = engine.solve_steiner(steiner_generator.bose_sts(3))
        assert report.triples == [(0, 1, 2)]

    def test_fano_plane(self, engine, fano):
        report = engine.solve_steiner(fano)
        assert report.size == 1
        assert report.uncovered == 4
        assert report.exhausted
        assert any("deleted vertex" in note for note in report.notes)

    def test_larger_steiner_system(self, engine, steiner_generator):
        sts = steiner_generator.steiner(27)
        report = engine.solve_steiner(sts)
        assert triple_matching_violations(report.triples, sts.triples) == []
        assert report.stage_size("polish") == report.size
        assert report.bound_value == 3 * engine.config.bound_value(27)

    def test_tripartite_hypergraph(self, engine):
        hypergraph = full_latin_to_hypergraph(LatinGenerator().cayley_cyclic(5))
        report = engine.solve_hypergraph(hypergraph)
        assert report.kind is InstanceKind.HYPERGRAPH
        assert report.size == 5
        assert report.n == 5

    def test_untripartite_hypergraph(self, engine, steiner_generator):
        hypergraph = steiner_to_hypergraph(steiner_generator.steiner(15))
        report = engine.solve_hypergraph(hypergraph)
        assert triple_matching_violations(report.triples, hypergraph.edges) == []
        assert report.size >= 3

    def test_polish_grows_a_triple_matching(self, engine, steiner_generator):
        hypergraph = steiner_to_hypergraph(steiner_generator.bose_sts(9))
        polished = engine.polish_triples(hypergraph, [], rng=make_rng(0, "polish"))
        assert len(polished) == 3
        assert triple_matching_violations(polished, hypergraph.edges) == []


class TestGraphs:

    def test_restarts_stop_at_the_limit(self, engine):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(3))
        report = engine.solve_graph(graph)
        assert report.size == 3
        assert report.kind is InstanceKind.GRAPH

    def test_bound_is_zero_for_tiny_orders(self, engine):
        report = engine.solve_latin(LatinGenerator().cayley_cyclic(2))
        assert report.bound_value == 0
        assert report.size == 1
