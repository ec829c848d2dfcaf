import pytest

from core.conversions import full_latin_to_hypergraph, latin_to_graph, steiner_double_cover
from core.errors import PreconditionViolatedError
from core.models import ColoredBipartiteGraph, ColorClass, Predicate
from generators.latin_generator import LatinGenerator
from generators.steiner_generator import SteinerGenerator
from services.rng_service import make_rng
from services.typicality_service import TypicalityService


@pytest.fixture
def service():
    return TypicalityService(rng=make_rng(0, "typicality"))


class TestColouredCompleteGraphs:

    @pytest.mark.parametrize("n", [16, 64])
    def test_latin_graph_is_coloured_typical(self, service, n):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(n))
        report = service.check_coloured(graph, eps=1.0, p=1.0, level="typical")
        assert report.predicate is Predicate.COLOURED_TYPICAL
        assert report.passed
        assert all(w.measured == n for w in report.witnesses)

    def test_witness_labels_cover_shadows(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(5))
        checks = {w.check for w in service.check_coloured(graph, eps=0.5, p=1.0, level="typical").witnesses}
        assert {"P2:deg X", "XC:P2:deg C", "YC:P3:codeg C"} <= checks

    def test_unknown_level(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(3))
        with pytest.raises(ValueError):
            service.check_coloured(graph, eps=0.5, p=1.0, level="strong")


class TestSteinerDoubleCover:

    @pytest.mark.parametrize("n", [15, 63])
    def test_double_cover_is_typical(self, service, n):
        graph = steiner_double_cover(SteinerGenerator().steiner(n))
        p = (n - 1) / n
        report = service.check_typical(graph, eps=0.5, p=p)
        assert report.passed
        codegree = [w for w in report.witnesses if w.check == "P3:codeg X"][0]
        assert codegree.measured == n - 2

    def test_sampled_codegrees_agree(self, service):
        graph = steiner_double_cover(SteinerGenerator().steiner(15))
        report = service.check_typical(graph, eps=0.5, p=14 / 15, sample=True)
        assert report.sampled and report.passed


class TestFailures:

    def test_sparse_vertex_breaks_regularity(self, service):
        edges = [(x, y, (x + y) % 6) for x in range(6) for y in range(6) if not (x == 0 and y > 0)]
        graph = ColoredBipartiteGraph(range(6), range(6), range(6), edges)
        report = service.check_regular(graph, eps=0.5, p=1.0)
        assert not report.passed
        worst = report.failures()[0]
        assert worst.subject == {"side": "X", "vertex": 0}
        assert worst.measured == 1

    def test_report_serialises(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(4))
        data = service.check_regular(graph, eps=0.5, p=1.0).to_dict()
        assert data["predicate"] == "regular"
        assert data["passed"] is True


class TestShadow:

    def test_latin_hypergraph_shadows(self, service):
        hypergraph = full_latin_to_hypergraph(LatinGenerator().cayley_cyclic(9))
        report = service.check_shadow(hypergraph, eps=0.5, p=1.0)
        assert report.passed
        assert any(w.check.startswith("V1V3:") for w in report.witnesses)

    def test_shadow_needs_parts(self, service, fano):
        from core.conversions import steiner_to_hypergraph
        with pytest.raises(ValueError):
            service.check_shadow(steiner_to_hypergraph(fano), eps=0.5, p=1.0)


class TestAudits:

    def test_complete_graph_has_no_discrepancy(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(16))
        result = service.discrepancy_audit(graph, range(5), range(8), p=1.0, gamma=0.5)
        assert result.measured == 0 and result.passed

    def test_discrepancy_needs_large_b(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(16))
        with pytest.raises(PreconditionViolatedError):
            service.discrepancy_audit(graph, range(5), range(2), p=0.5, gamma=0.5)

    def test_low_degree_census(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(64))
        census = service.low_degree_census(graph, graph.colors, p=0.25)
        assert census.preconditions_met
        assert census.count == 0 and census.passed

    def test_census_preconditions(self, service):
        graph = latin_to_graph(LatinGenerator().cayley_cyclic(8))
        with pytest.raises(PreconditionViolatedError):
            service.low_degree_census(graph, [0, 1], p=0.5)
        assert not service.low_degree_census(graph, [0, 1], p=0.5, strict=False).preconditions_met


class TestClassification:

    def test_fresh_symbols_are_tiny(self, service):
        generator = LatinGenerator()
        array = generator.augment_fresh_symbols(generator.cayley_cyclic(20), 2)
        result = service.classify_colors(latin_to_graph(array), eps0=0.15)
        assert len(result.large) == 20
        assert len(result.tiny) == 40
        assert result.t == 0

    def test_strict_cutoff_makes_colours_medium(self, service):
        generator = LatinGenerator()
        array = generator.augment_fresh_symbols(generator.cayley_cyclic(20), 2)
        result = service.classify_colors(latin_to_graph(array), eps0=0.05)
        assert result.large == []
        assert result.classes[0] is ColorClass.MEDIUM
        assert result.t == 20
