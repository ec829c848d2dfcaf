# generators/latin_generator.py
"""
LatinGenerator - cyclic group tables, Jacobson–Matthews random Latin
squares, and fresh-symbol augmentation of the first rows.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from core.errors import OutOfRangeError
from core.models import LatinArray
from services.rng_service import make_rng

logger = logging.getLogger(__name__)

_CHUNK = 4096


def default_mix_steps(n: int) -> int:
    """n²·⌈ln n⌉ Jacobson–Matthews moves."""
    return n * n * max(1, math.ceil(math.log(max(n, 1))))


class LatinGenerator:
    """Builds Latin arrays; every output passes the LatinArray validator."""

    def __init__(self, mix_steps: Optional[int] = None):
        self.mix_steps = mix_steps

    def cayley_cyclic(self, n: int) -> LatinArray:
        """Addition table of Z_n: cell(i, j) = (i + j) mod n."""
        if n < 1:
            raise OutOfRangeError(f"n must be at least 1, got {n}", {"n": n})
        return LatinArray(np.add.outer(np.arange(n), np.arange(n)) % n)

    def random_latin(self, n: int, seed: int, mix_steps: Optional[int] = None) -> LatinArray:
        """
        Approximately uniform Latin square of order n.

        Starts from a randomly isotoped cyclic table (uniform row, column and
        symbol permutations) and runs the Jacobson–Matthews ±1 chain for
        ``mix_steps`` proper-or-improper moves (default n²·⌈ln n⌉), stopping at the
        first proper square after that.
        """
        if n < 1:
            raise OutOfRangeError(f"n must be at least 1, got {n}", {"n": n})
        rng = make_rng(seed, "random-latin", n)
        base = np.add.outer(np.arange(n), np.arange(n)) % n
        base = base[rng.permutation(n)][:, rng.permutation(n)]
        base = rng.permutation(n)[base]
        if n < 3:
            return LatinArray(base)

        steps = mix_steps if mix_steps is not None else self.mix_steps
        steps = default_mix_steps(n) if steps is None else steps
        cells = _JacobsonMatthewsChain(base, rng).run(steps)
        logger.debug(f"📊 Random Latin square n={n} after {steps} Jacobson–Matthews steps")
        return LatinArray(cells)

    def augment_fresh_symbols(self, latin: LatinArray, r: int) -> LatinArray:
        """Rewrite the first r rows with r·n brand-new distinct symbols."""
        n = latin.n
        if not 0 <= r <= n:
            raise OutOfRangeError(f"r must lie in [0, {n}], got {r}", {"r": r, "n": n})
        cells = latin.cells.copy()
        start = int(cells.max()) + 1 if cells.size else 0
        cells[:r, :] = np.arange(start, start + r * n).reshape(r, n)
        return LatinArray(cells)


class _JacobsonMatthewsChain:
    """
    Incidence-cube walk. For every line of the cube we keep the coordinates
    holding +1 (one entry when proper, two on the lines through the improper
    cell); the single -1 cell, if any, is ``improper``.
    """

    def __init__(self, square: np.ndarray, rng: np.random.Generator):
        n = int(square.shape[0])
        self.n = n
        self.rng = rng
        self.rc: List[List[List[int]]] = [[[int(square[r, c])] for c in range(n)] for r in range(n)]
        self.rs: List[List[List[int]]] = [[[] for _ in range(n)] for _ in range(n)]
        self.cs: List[List[List[int]]] = [[[] for _ in range(n)] for _ in range(n)]
        for r in range(n):
            for c in range(n):
                s = int(square[r, c])
                self.rs[r][s].append(c)
                self.cs[c][s].append(r)
        self.improper: Optional[Tuple[int, int, int]] = None

    def _inc(self, r: int, c: int, s: int) -> None:
        if self.improper == (r, c, s):
            self.improper = None
            return
        self.rc[r][c].append(s)
        self.rs[r][s].append(c)
        self.cs[c][s].append(r)

    def _dec(self, r: int, c: int, s: int) -> None:
        if s in self.rc[r][c]:
            self.rc[r][c].remove(s)
            self.rs[r][s].remove(c)
            self.cs[c][s].remove(r)
        else:
            self.improper = (r, c, s)

    def run(self, steps: int) -> np.ndarray:
        n = self.n
        points = coins = None
        idx = _CHUNK
        done = 0
        while done < steps or self.improper is not None:
            if idx == _CHUNK:
                points = self.rng.integers(0, n, size=(_CHUNK, 3)).tolist()
                coins = self.rng.integers(0, 2, size=(_CHUNK, 3)).tolist()
                idx = 0
            if self.improper is None:
                r, c, s = points[idx]
                idx += 1
                if s in self.rc[r][c]:
                    continue
                r2, c2, s2 = self.cs[c][s][0], self.rs[r][s][0], self.rc[r][c][0]
            else:
                r, c, s = self.improper
                a, b, g = coins[idx]
                idx += 1
                r2, c2, s2 = self.cs[c][s][a], self.rs[r][s][b], self.rc[r][c][g]

            self._inc(r, c, s)
            self._inc(r, c2, s2)
            self._inc(r2, c, s2)
            self._inc(r2, c2, s)
            self._dec(r, c, s2)
            self._dec(r, c2, s)
            self._dec(r2, c, s)
            self._dec(r2, c2, s2)
            done += 1

        cells = np.empty((n, n), dtype=np.int64)
        for r in range(n):
            for c in range(n):
                cells[r, c] = self.rc[r][c][0]
        return cells
