from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from core.errors import BadResidueError, InvalidSplitError, OutOfRangeError
from core.models import SplitMode, SplitSpec
from generators.latin_generator import LatinGenerator, default_mix_steps
from generators.split_generator import SplitGenerator
from services.rng_service import make_rng


class TestLatinGenerator:

    def test_cayley_cyclic(self, latin_generator):
        latin = latin_generator.cayley_cyclic(5)
        assert latin.cell(2, 4) == 1
        assert latin.is_square

    def test_cyclic_rejects_zero(self, latin_generator):
        with pytest.raises(OutOfRangeError):
            latin_generator.cayley_cyclic(0)

    @given(n=st.integers(min_value=1, max_value=9), seed=st.integers(min_value=0, max_value=2 ** 32))
    @settings(max_examples=30, deadline=None)
    def test_random_latin_is_valid(self, n, seed):
        latin = LatinGenerator(mix_steps=4 * n * n).random_latin(n, seed)
        assert latin.n == n and latin.is_square

    def test_random_latin_is_reproducible(self, latin_generator):
        assert latin_generator.random_latin(7, 3, mix_steps=200) == latin_generator.random_latin(7, 3, mix_steps=200)

    def test_default_mixing_is_subcubic(self):
        assert default_mix_steps(64) == 64 * 64 * 5
        assert all(default_mix_steps(n) < n ** 3 for n in range(3, 300))

    def test_default_mixing_gives_a_latin_square(self, latin_generator):
        latin = latin_generator.random_latin(32, 5)
        assert latin.n == 32 and latin.is_square

    def test_different_seeds_differ(self, latin_generator):
        squares = {latin_generator.random_latin(6, s, mix_steps=300).cells.tobytes() for s in range(5)}
        assert len(squares) > 1

    def test_order_three_squares_are_roughly_uniform(self):
        # There are exactly 12 Latin squares of order 3.
        generator = LatinGenerator(mix_steps=60)
        counts = Counter(generator.random_latin(3, seed).cells.tobytes() for seed in range(600))
        assert len(counts) == 12
        assert stats.chisquare(list(counts.values())).pvalue > 1e-4

    def test_fresh_symbols(self, latin_generator):
        base = latin_generator.cayley_cyclic(6)
        array = latin_generator.augment_fresh_symbols(base, 2)
        assert len(set(array.cells[:2].ravel())) == 12
        assert set(array.cells[:2].ravel()).isdisjoint(set(base.symbols))
        assert np.array_equal(array.cells[2:], base.cells[2:])
        assert not array.is_square

    def test_fresh_symbols_range(self, latin_generator):
        with pytest.raises(OutOfRangeError):
            latin_generator.augment_fresh_symbols(latin_generator.cayley_cyclic(3), 4)


class TestSteinerGenerator:

    @pytest.mark.parametrize("n", [3, 9, 15, 21, 27, 81])
    def test_bose(self, steiner_generator, n):
        sts = steiner_generator.bose_sts(n)
        assert len(sts.triples) == n * (n - 1) // 6

    @pytest.mark.parametrize("n", [7, 13, 19, 25, 31])
    def test_skolem(self, steiner_generator, n):
        sts = steiner_generator.skolem_sts(n)
        assert len(sts.triples) == n * (n - 1) // 6

    def test_fano_has_seven_lines(self, fano):
        assert len(fano.triples) == 7

    @pytest.mark.parametrize("n", [5, 8, 11, 16])
    def test_bad_residue(self, steiner_generator, n):
        with pytest.raises(BadResidueError):
            steiner_generator.steiner(n)

    def test_bose_rejects_skolem_residue(self, steiner_generator):
        with pytest.raises(BadResidueError):
            steiner_generator.bose_sts(7)


class TestSplitGenerator:

    def test_conditioned_split_has_exact_thirds(self):
        spec = SplitSpec(mode=SplitMode.CONDITIONED)
        parts = SplitGenerator().random_split(range(99), spec, make_rng(1, "split"))
        assert [len(p) for p in parts] == [33, 33, 33]
        assert frozenset().union(*parts) == frozenset(range(99))

    def test_explicit_sizes(self):
        spec = SplitSpec(mode=SplitMode.CONDITIONED, sizes=(1, 2, 3))
        parts = SplitGenerator().random_split(range(6), spec, make_rng(1, "split"))
        assert [len(p) for p in parts] == [1, 2, 3]

    def test_independent_split_partitions(self):
        parts = SplitGenerator().random_split(range(50), SplitSpec(), make_rng(2, "split"))
        assert sum(len(p) for p in parts) == 50

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(InvalidSplitError):
            SplitGenerator().random_split(range(5), SplitSpec(probabilities=(0.5, 0.5, 0.5)), make_rng(0))

    def test_sizes_must_match_universe(self):
        spec = SplitSpec(mode=SplitMode.CONDITIONED, sizes=(1, 1, 1))
        with pytest.raises(InvalidSplitError):
            SplitGenerator().random_split(range(5), spec, make_rng(0))

    def test_large_conditioned_split_is_exact(self):
        spec = SplitSpec(mode=SplitMode.CONDITIONED)
        parts = SplitGenerator().random_split(range(3000), spec, make_rng(3, "split"))
        assert [len(p) for p in parts] == [1000, 1000, 1000]

    def test_independent_part_sizes_are_binomial(self):
        generator = SplitGenerator()
        sizes = [len(generator.random_split(range(90), SplitSpec(), make_rng(s, "split"))[0]) for s in range(300)]
        assert abs(np.mean(sizes) - 30) < 1.5
