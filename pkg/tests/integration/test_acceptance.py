"""Desk-scale acceptance runs; deselect with -m "not slow"."""

import math

import pytest

from core.conversions import full_latin_to_hypergraph
from core.models import SolverConfig, triple_matching_violations
from core.solver_engine import SolverEngine
from generators.latin_generator import LatinGenerator
from generators.steiner_generator import SteinerGenerator
from services.bench_service import BenchService, aks_reference
from services.oracle_service import OracleService
from services.verification_service import VerificationService

pytestmark = pytest.mark.slow

MIX_STEPS = 2000


def _bound(n):
    return math.ceil(3 * math.log(n) / math.log(math.log(n)))


@pytest.fixture
def engine():
    return SolverEngine(SolverConfig(restarts=20, seed=11))


@pytest.fixture
def generator():
    return LatinGenerator(mix_steps=MIX_STEPS)


class TestLatinSquares:

    @pytest.mark.parametrize("n", [5, 7, 9, 11, 13, 15])
    def test_odd_cyclic_squares_have_full_transversals(self, engine, generator, n):
        assert engine.solve_latin(generator.cayley_cyclic(n)).size == n

    @pytest.mark.parametrize("n", [4, 6, 8])
    def test_even_cyclic_squares_miss_exactly_one(self, engine, generator, n):
        latin = generator.cayley_cyclic(n)
        assert OracleService().brute_force_max(latin).maximum == n - 1
        assert engine.solve_latin(latin).size == n - 1

    def test_pipeline_agrees_with_the_oracle(self, engine, generator):
        oracle = OracleService()
        agree = 0
        cases = [(n, 1000 + s) for n in range(4, 9) for s in range(40)]
        for n, seed in cases:
            latin = generator.random_latin(n, seed)
            best = oracle.brute_force_max(latin).maximum
            found = engine.solve_latin(latin).size
            assert found <= best
            agree += found == best
        assert len(cases) == 200
        assert agree >= 0.95 * len(cases)

    @pytest.mark.parametrize("n", [32, 64, 128, 256])
    def test_random_squares_within_bound(self, n):
        engine = SolverEngine(SolverConfig(restarts=8, seed=11))
        generator = LatinGenerator(mix_steps=n * n)
        verifier = VerificationService()
        for seed in range(50):
            latin = generator.random_latin(n, seed)
            report = engine.solve_latin(latin)
            assert report.uncovered <= _bound(n), f"seed {seed}"
            assert verifier.verify_transversal(latin, report.transversal).ok

    def test_fresh_rows_admit_full_transversals(self, engine):
        n = 64
        r = SolverConfig().scale_d(n)
        generator = LatinGenerator(mix_steps=n * n)
        verifier = VerificationService()
        full = 0
        for seed in range(50):
            array = generator.augment_fresh_symbols(generator.random_latin(n, seed), r)
            report = engine.solve_many_symbols(array)
            assert verifier.verify_transversal(array, report.transversal).ok
            full += report.size == n
        assert full >= 45


class TestTripleSystems:

    @pytest.mark.parametrize("n", [9, 27, 81, 243, 999])
    def test_bose_systems_within_bound(self, engine, n):
        sts = SteinerGenerator().bose_sts(n)
        report = engine.solve_steiner(sts)
        assert report.uncovered <= 3 * _bound(n)
        assert not triple_matching_violations(report.triples, sts.triples)
        if n >= 81:
            assert report.uncovered < aks_reference(n)

    def test_skolem_system(self, engine):
        sts = SteinerGenerator().skolem_sts(31)
        report = engine.solve_steiner(sts)
        assert report.uncovered <= report.bound_value
        assert "deleted vertex" in report.notes[0]

    def test_latin_hypergraph(self, engine, generator):
        n = 27
        hypergraph = full_latin_to_hypergraph(generator.random_latin(n, 5))
        report = engine.solve_hypergraph(hypergraph)
        assert report.uncovered <= report.bound_value
        assert not triple_matching_violations(report.triples, hypergraph.edges)


def test_bench_rows_are_reproducible():
    service = BenchService(SolverConfig(restarts=2), jobs=2)
    first = service.bench_scaling(["latin", "steiner"], [9, 15], [0, 1], no_timing=True)
    second = service.bench_scaling(["latin", "steiner"], [9, 15], [0, 1], no_timing=True)
    assert first.to_csv(index=False) == second.to_csv(index=False)
