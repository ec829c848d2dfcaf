# generators/steiner_generator.py
"""
SteinerGenerator - Bose (n ≡ 3 mod 6) and Skolem (n ≡ 1 mod 6) constructions.

Both build on a commutative quasigroup over Z_m and lay the points out as
(i, k) with i in the quasigroup and k in Z_3, numbered 3·i + k. Skolem adds
a point at infinity, numbered n - 1.
"""

import logging
from typing import List, Tuple

from core.errors import BadResidueError
from core.models import SteinerTripleSystem

logger = logging.getLogger(__name__)

Triple = Tuple[int, int, int]


class SteinerGenerator:

    def bose_sts(self, n: int) -> SteinerTripleSystem:
        """STS(n) for n = 6t + 3 from the idempotent commutative quasigroup of order 2t + 1."""
        if n < 3 or n % 6 != 3:
            raise BadResidueError(f"Bose construction needs n ≡ 3 (mod 6), got {n}", {"n": n})
        m = n // 3
        half = (m + 1) // 2  # inverse of 2 modulo odd m

        def op(i: int, j: int) -> int:
            return (half * (i + j)) % m

        triples: List[Triple] = [(_pt(i, 0), _pt(i, 1), _pt(i, 2)) for i in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                for k in range(3):
                    triples.append((_pt(i, k), _pt(j, k), _pt(op(i, j), (k + 1) % 3)))
        sts = SteinerTripleSystem(n, tuple(triples))
        logger.debug(f"✅ Bose STS({n}) with {len(sts.triples)} triples")
        return sts

    def skolem_sts(self, n: int) -> SteinerTripleSystem:
        """STS(n) for n = 6t + 1 from the half-idempotent commutative quasigroup of order 2t."""
        if n < 7 or n % 6 != 1:
            raise BadResidueError(f"Skolem construction needs n ≡ 1 (mod 6) and n ≥ 7, got {n}", {"n": n})
        t = (n - 1) // 6
        m = 2 * t
        infinity = n - 1

        def op(i: int, j: int) -> int:
            # Z_2t addition table with symbol 2a renamed a and 2a+1 renamed t+a
            s = (i + j) % m
            return s // 2 if s % 2 == 0 else t + (s - 1) // 2

        triples: List[Triple] = [(_pt(i, 0), _pt(i, 1), _pt(i, 2)) for i in range(t)]
        for i in range(t):
            for k in range(3):
                triples.append((infinity, _pt(t + i, k), _pt(i, (k + 1) % 3)))
        for i in range(m):
            for j in range(i + 1, m):
                for k in range(3):
                    triples.append((_pt(i, k), _pt(j, k), _pt(op(i, j), (k + 1) % 3)))
        sts = SteinerTripleSystem(n, tuple(triples))
        logger.debug(f"✅ Skolem STS({n}) with {len(sts.triples)} triples")
        return sts

    def steiner(self, n: int) -> SteinerTripleSystem:
        """Whichever construction the residue of n admits."""
        if n % 6 == 3:
            return self.bose_sts(n)
        if n % 6 == 1:
            return self.skolem_sts(n)
        raise BadResidueError(f"No STS exists on n={n} vertices (need n ≡ 1 or 3 mod 6)", {"n": n})


def _pt(i: int, k: int) -> int:
    return 3 * i + k
