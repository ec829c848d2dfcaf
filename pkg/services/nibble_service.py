# services/nibble_service.py
"""
NibbleService - the semirandom rainbow matching machinery.

A bite samples every edge independently, then keeps only the sampled edges
that share no vertex and no colour with another sampled edge. The iterated
nibble repeats bites on the residual graph (matched vertices and used
colours deleted) until few vertices remain uncovered.
"""

import logging
import math
from typing import Optional

import numpy as np

from core.errors import MatchingNotInGraphError
from core.models import (
    BiteOutcome,
    ColoredBipartiteGraph,
    Edge,
    NibbleConfig,
    NibbleResult,
    NibbleRound,
    RainbowMatching,
    Side,
    ThreeSplitResult,
)
from generators.split_generator import SplitGenerator
from services.rng_service import child_seed, make_rng
from services.typicality_service import TypicalityService

logger = logging.getLogger(__name__)


def bite_yield(n: int, q: float) -> float:
    """Expected single-bite matching size qn(1 - q/n)^{3(n-1)} on a coloured K_{n,n}."""
    return q * n * (1 - q / n) ** (3 * (n - 1))


def _edge_array(graph: ColoredBipartiteGraph) -> np.ndarray:
    return np.asarray(graph.edges, dtype=np.int64).reshape(-1, 3)


def _collision_free(chosen: np.ndarray) -> np.ndarray:
    """Mask of rows whose x, y and colour each occur exactly once in ``chosen``."""
    keep = np.ones(len(chosen), dtype=bool)
    for col in range(3):
        _, inverse, counts = np.unique(chosen[:, col], return_inverse=True, return_counts=True)
        keep &= counts[inverse.ravel()] == 1
    return keep


class NibbleService:

    def __init__(self, split_generator: Optional[SplitGenerator] = None):
        self.split_generator = split_generator or SplitGenerator()

    def single_bite(self, graph: ColoredBipartiteGraph, q: float, rng: np.random.Generator,
                    scale: Optional[float] = None) -> BiteOutcome:
        """Sample each edge with probability q/scale (scale defaults to |X|) and drop collisions."""
        edges = _edge_array(graph)
        scale = float(len(graph.xs)) if scale is None else float(scale)
        if len(edges) == 0 or scale <= 0:
            return BiteOutcome(chosen=[], matching=RainbowMatching(), collisions=[])
        mask = rng.random(len(edges)) < min(1.0, q / scale)
        chosen = edges[mask]
        keep = _collision_free(chosen)
        kept = [Edge(*row) for row in chosen[keep].tolist()]
        return BiteOutcome(
            chosen=[Edge(*row) for row in chosen.tolist()],
            matching=RainbowMatching(kept),
            collisions=[Edge(*row) for row in chosen[~keep].tolist()],
        )

    def remove_matched(self, graph: ColoredBipartiteGraph, matching: RainbowMatching) -> ColoredBipartiteGraph:
        """Delete the vertices and colours of ``matching`` from ``graph``."""
        for e in matching.edges:
            if not graph.has_edge(e):
                raise MatchingNotInGraphError(f"Matching edge {tuple(e)} is not an edge of the graph",
                                              {"edge": e.to_dict()})
        return graph.induced(
            xs=set(graph.xs) - matching.vertices(Side.X),
            ys=set(graph.ys) - matching.vertices(Side.Y),
            colors=set(graph.colors) - matching.colors,
        )

    def iterated_nibble(self, graph: ColoredBipartiteGraph, cfg: NibbleConfig,
                        rng: Optional[np.random.Generator] = None) -> NibbleResult:
        """
        Bites on successively reduced graphs until at most stop_fraction·n
        vertices are uncovered, max_rounds pass, or the bites stall.

        The per-edge rate is q/|X| over the vertices still uncovered, or q over
        the average live degree with scale="degree". Two consecutive rounds
        that gain nothing (an empty sample counts) halve q once; a second such
        pair stops the nibble and flags it as stalled.
        """
        rng = rng if rng is not None else make_rng(cfg.seed or 0, "nibble")
        edges = _edge_array(graph)
        alive = np.ones(len(edges), dtype=bool)
        n_x, n_y = len(graph.xs), len(graph.ys)
        n0 = min(n_x, n_y)
        result = NibbleResult(matching=RainbowMatching())
        if n0 == 0 or len(edges) == 0:
            return result

        stop = cfg.stop_fraction if cfg.stop_fraction is not None else (n0 ** (-cfg.gamma) if n0 > 1 else 0.0)
        q = cfg.q
        zero_streak = 0
        halved = False

        for round_no in range(1, cfg.max_rounds + 1):
            uncovered = n0 - len(result.matching)
            if uncovered <= stop * n0:
                break
            live = edges[alive]
            if len(live) == 0:
                break
            rem_x = n_x - len(result.matching)
            rem_y = n_y - len(result.matching)
            if cfg.scale == "degree":
                scale = max(len(live) / max(rem_x, 1), 1.0)
            else:
                scale = float(max(rem_x, 1))
            density = len(live) / max(rem_x * rem_y, 1)

            rate = min(1.0, q / scale)
            chosen = live[rng.random(len(live)) < rate]
            gained = chosen[_collision_free(chosen)] if len(chosen) else chosen
            q_hat = (25 * q ** 4 / density) ** (1 / 3) if density > 0 else None
            result.rounds.append(NibbleRound(round_no, len(chosen), len(gained), uncovered - len(gained),
                                             q, q_hat, rate))

            if len(gained) == 0:
                zero_streak += 1
                if zero_streak >= 2:
                    if halved:
                        result.stalled = True
                        logger.warning(f"⚠️ Nibble stalled at round {round_no} with {uncovered} uncovered")
                        break
                    q /= 2
                    halved = True
                    zero_streak = 0
                    logger.debug(f"🔁 Nibble halving q to {q} at round {round_no}")
                continue

            zero_streak = 0
            result.matching.update(Edge(*row) for row in gained.tolist())
            alive &= ~(np.isin(edges[:, 0], gained[:, 0])
                       | np.isin(edges[:, 1], gained[:, 1])
                       | np.isin(edges[:, 2], gained[:, 2]))

        logger.debug(f"📊 Nibble: {len(result.matching)}/{n0} after {len(result.rounds)} rounds")
        return result

    def three_split_nibble(self, graph: ColoredBipartiteGraph, cfg: NibbleConfig,
                           rng: Optional[np.random.Generator] = None) -> ThreeSplitResult:
        """Split vertices and colours into thirds and nibble each induced part."""
        rng = rng if rng is not None else make_rng(cfg.seed or 0, "three-split")
        parts = self.split_generator.split_graph(graph, rng)
        graphs = tuple(graph.induced(parts.x_parts[i], parts.y_parts[i], parts.c_parts[i]) for i in range(3))
        results = [self.iterated_nibble(g, cfg, make_rng(child_seed(rng), "part", i)) for i, g in enumerate(graphs)]
        for i, r in enumerate(results):
            if r.stalled:
                logger.info(f"⚠️ Part {i + 1} nibble stalled at {len(r.matching)} edges")
        return ThreeSplitResult(
            matchings=tuple(r.matching for r in results),
            graphs=graphs,
            parts=parts,
            stalled=tuple(r.stalled for r in results),
        )

    def residual_regularity_trial(self, graph: ColoredBipartiteGraph, q: float, eps: float,
                                  trials: int, rng: np.random.Generator,
                                  typicality: Optional[TypicalityService] = None) -> float:
        """
        Fraction of trials in which one bite leaves a residual that is
        (ε/10, p', n')-regular, with n' = |X'| and p' its measured density.
        """
        typicality = typicality or TypicalityService()
        passes = 0
        for _ in range(trials):
            bite = self.single_bite(graph, q, rng)
            residual = self.remove_matched(graph, bite.matching)
            n_res = len(residual.xs)
            if n_res == 0:
                continue
            p_res = residual.num_edges / (n_res * max(len(residual.ys), 1)) or 1e-9
            if typicality.check_regular(residual, eps / 10, min(p_res, 1.0), n_res).passed:
                passes += 1
        fraction = passes / trials if trials else math.nan
        logger.info(f"📊 Residual regularity held in {passes}/{trials} bites")
        return fraction
