# generators/split_generator.py
"""
SplitGenerator - random three-way partitions of vertex and colour sets.

Independent mode puts every element in part i with probability p_i.
Conditioned mode keeps drawing independent splits until the part sizes hit
the targets exactly.
"""

import logging
import math
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from core.errors import InvalidSplitError
from core.models import ColoredBipartiteGraph, PartAssignment, SplitMode, SplitSpec

logger = logging.getLogger(__name__)

Parts = Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]

_BATCH = 256
_MAX_BATCHES = 400


class SplitGenerator:

    def random_split(self, universe: Iterable[int], spec: SplitSpec, rng: np.random.Generator) -> Parts:
        """Partition ``universe`` into (P1, P2, P3)."""
        items = np.array(sorted(set(int(u) for u in universe)), dtype=np.int64)
        probs = self._validate(spec, len(items))
        if len(items) == 0:
            return frozenset(), frozenset(), frozenset()

        if spec.mode is SplitMode.INDEPENDENT:
            labels = rng.choice(3, size=len(items), p=probs)
            return self._parts(items, labels)

        targets = np.array(self.target_sizes(len(items), spec))
        for _ in range(_MAX_BATCHES):
            batch = rng.choice(3, size=(_BATCH, len(items)), p=probs)
            counts = np.stack([(batch == k).sum(axis=1) for k in range(3)], axis=1)
            hits = np.flatnonzero((counts == targets).all(axis=1))
            if hits.size:
                return self._parts(items, batch[hits[0]])

        # Every assignment with the target sizes is equally likely under the
        # independent draw, so a shuffled cut samples the same conditional law.
        logger.warning(f"⚠️ Conditioned split of {len(items)} items fell back to a shuffled cut")
        labels = np.repeat(np.arange(3), targets)
        return self._parts(items, rng.permutation(labels))

    def target_sizes(self, total: int, spec: SplitSpec) -> Tuple[int, int, int]:
        if spec.sizes is not None:
            return tuple(int(s) for s in spec.sizes)
        base = [math.floor(total * p) for p in spec.probabilities]
        remainder = total - sum(base)
        order = np.argsort([-(total * p - b) for p, b in zip(spec.probabilities, base)], kind="stable")
        for k in order[:remainder]:
            base[int(k)] += 1
        return tuple(base)

    def split_graph(self, graph: ColoredBipartiteGraph, rng: np.random.Generator,
                    spec: Optional[SplitSpec] = None) -> PartAssignment:
        """Independent thirds of X, Y and C."""
        spec = spec or SplitSpec()
        return PartAssignment(
            x_parts=self.random_split(graph.xs, spec, rng),
            y_parts=self.random_split(graph.ys, spec, rng),
            c_parts=self.random_split(graph.colors, spec, rng),
        )

    def _validate(self, spec: SplitSpec, total: int) -> np.ndarray:
        probs = np.asarray(spec.probabilities, dtype=float)
        if probs.shape != (3,) or (probs <= 0).any() or not math.isclose(probs.sum(), 1.0, abs_tol=1e-9):
            raise InvalidSplitError(f"Part probabilities must be three positive numbers summing to 1, "
                                    f"got {list(spec.probabilities)}", {"probabilities": list(spec.probabilities)})
        if spec.mode is SplitMode.CONDITIONED and spec.sizes is not None:
            if len(spec.sizes) != 3 or any(s < 0 for s in spec.sizes) or sum(spec.sizes) != total:
                raise InvalidSplitError(f"Conditioned sizes {list(spec.sizes)} do not sum to |universe|={total}",
                                        {"sizes": list(spec.sizes), "universe": total})
        return probs / probs.sum()

    @staticmethod
    def _parts(items: np.ndarray, labels: Sequence[int]) -> Parts:
        labels = np.asarray(labels)
        return tuple(frozenset(int(v) for v in items[labels == k]) for k in range(3))
