# services/typicality_service.py
"""
TypicalityService - decides the pseudorandomness predicates on concrete
instances and reports the extremal witness of every check.

Bands are closed intervals value·(1 ± n^-ε). A coloured graph is checked
on itself and on its colour shadows G_XC (x ~ c when x sees colour c) and
G_YC: the shadows' sizes give the |C| band, their colour-side degrees are
the per-colour edge counts and their colour-side codegrees are the
colour-pair intersections |V(c) ∩ V(c') ∩ X|.
"""

import logging
import math
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy import sparse

from config.solver_config import SOLVER_CONFIG
from core.errors import PreconditionViolatedError
from core.models import (
    CensusResult,
    ColorClass,
    ColorClassification,
    ColoredBipartiteGraph,
    DiscrepancyResult,
    LinearHypergraph3,
    Predicate,
    Side,
    TypicalityReport,
    TypicalityWitness,
)

logger = logging.getLogger(__name__)


class TypicalityService:
    """Exhaustive (or sampled, for large n) checks of sizes, degrees and codegrees."""

    def __init__(self, sample_above: Optional[int] = None, sample_pairs: Optional[int] = None,
                 rng: Optional[np.random.Generator] = None):
        cfg = SOLVER_CONFIG['typicality']
        self.sample_above = sample_above if sample_above is not None else cfg['sample_above']
        self.sample_pairs = sample_pairs if sample_pairs is not None else cfg['sample_pairs']
        self.rng = rng if rng is not None else np.random.default_rng(0)

    # --- uncoloured predicates ---

    def check_regular(self, graph: ColoredBipartiteGraph, eps: float, p: float,
                      n: Optional[float] = None) -> TypicalityReport:
        n = self._scale(graph, n)
        report = TypicalityReport(Predicate.REGULAR, eps, p, n)
        self._bipartite(report, _incidence(graph), ("X", "Y"), graph.xs, graph.ys, "", codegrees=False)
        return report

    def check_typical(self, graph: ColoredBipartiteGraph, eps: float, p: float,
                      n: Optional[float] = None, sample: Optional[bool] = None) -> TypicalityReport:
        n = self._scale(graph, n)
        report = TypicalityReport(Predicate.TYPICAL, eps, p, n)
        self._bipartite(report, _incidence(graph), ("X", "Y"), graph.xs, graph.ys, "", codegrees=True,
                        sample=sample)
        return report

    # --- coloured predicates ---

    def check_coloured(self, graph: ColoredBipartiteGraph, eps: float, p: float, n: Optional[float] = None,
                       level: str = "regular", sample: Optional[bool] = None) -> TypicalityReport:
        if level not in ("regular", "typical"):
            raise ValueError(f"level must be 'regular' or 'typical', got {level}")
        n = self._scale(graph, n)
        typical = level == "typical"
        predicate = Predicate.COLOURED_TYPICAL if typical else Predicate.COLOURED_REGULAR
        report = TypicalityReport(predicate, eps, p, n)

        self._bipartite(report, _incidence(graph), ("X", "Y"), graph.xs, graph.ys, "", codegrees=typical,
                        sample=sample)
        for side, label in ((Side.X, "X"), (Side.Y, "Y")):
            shadow = _colour_shadow(graph, side)
            self._bipartite(report, shadow, (label, "C"), graph.vertices(side), graph.colors,
                            f"{label}C:", codegrees=typical, sample=sample)
        failed = len(report.failures())
        logger.debug(f"📊 {predicate.value} check: {len(report.witnesses)} witnesses, {failed} outside band")
        return report

    def check_shadow(self, hypergraph: LinearHypergraph3, eps: float, p: float, n: Optional[float] = None,
                     parts: Optional[Sequence[Iterable[int]]] = None,
                     sample: Optional[bool] = None) -> TypicalityReport:
        """Every part pair's shadow graph must be (ε,p,n)-typical."""
        parts = parts if parts is not None else hypergraph.parts
        if parts is None:
            raise ValueError("check_shadow needs a tripartition")
        parts = [sorted(p) for p in parts]
        n = float(n) if n is not None else float(min(len(p) for p in parts))
        report = TypicalityReport(Predicate.SHADOW_TYPICAL, eps, p, n)
        for i, j in combinations(range(3), 2):
            rows, cols = parts[i], parts[j]
            row_idx = {v: k for k, v in enumerate(rows)}
            col_idx = {v: k for k, v in enumerate(cols)}
            pairs = []
            for e in hypergraph.edges:
                a = [v for v in e if v in row_idx]
                b = [v for v in e if v in col_idx]
                if a and b:
                    pairs.append((row_idx[a[0]], col_idx[b[0]]))
            matrix = _matrix(pairs, len(rows), len(cols))
            labels = (f"V{i + 1}", f"V{j + 1}")
            self._bipartite(report, matrix, labels, rows, cols, f"{labels[0]}{labels[1]}:", codegrees=True,
                            sample=sample)
        return report

    # --- discrepancy and degree census ---

    def discrepancy_audit(self, graph: ColoredBipartiteGraph, a_set: Iterable[int], b_set: Iterable[int],
                          p: float, gamma: float, n: Optional[float] = None,
                          eps: Optional[float] = None) -> DiscrepancyResult:
        """|e(A,B) - p|A||B|| against 2|A|^½|B|γ^½n^½p."""
        a_set, b_set = set(a_set), set(b_set)
        n = self._scale(graph, n)
        if not a_set or not b_set:
            return DiscrepancyResult(measured=0.0, bound=0.0)
        if len(b_set) < 1.0 / (gamma * p * p):
            raise PreconditionViolatedError(
                f"|B|={len(b_set)} is below γ⁻¹p⁻²={1.0 / (gamma * p * p):.2f}",
                {"B": len(b_set), "required": 1.0 / (gamma * p * p)})
        if eps is not None and 8 * n ** (-eps) > gamma:
            raise PreconditionViolatedError(f"8n^-ε={8 * n ** (-eps):.4f} exceeds γ={gamma}",
                                            {"lhs": 8 * n ** (-eps), "gamma": gamma})
        count = sum(1 for a in a_set for b in graph.neighbors(Side.X, a) if b in b_set)
        measured = abs(count - p * len(a_set) * len(b_set))
        bound = 2 * math.sqrt(len(a_set)) * len(b_set) * math.sqrt(gamma) * math.sqrt(n) * p
        return DiscrepancyResult(measured=float(measured), bound=float(bound))

    def low_degree_census(self, graph: ColoredBipartiteGraph, colors: Iterable[int], p: float,
                          d: Optional[int] = None, n: Optional[float] = None, eps: float = 1.0,
                          strict: bool = True) -> CensusResult:
        """Vertices of G[D] with degree below pd/2, against 32p⁻²n/d."""
        colors = set(colors)
        d = len(colors) if d is None else d
        n = self._scale(graph, n)
        met = d > 0 and 16 <= 8 * p * p * d <= n ** eps
        if not met and strict:
            raise PreconditionViolatedError(f"Need 16 ≤ 8p²d ≤ n^ε, got 8p²d={8 * p * p * d:.2f}, "
                                            f"n^ε={n ** eps:.2f}", {"lhs": 8 * p * p * d, "rhs": n ** eps})
        sub = graph.restrict_colors(colors)
        threshold = p * d / 2
        count = sum(1 for side in (Side.X, Side.Y) for v in sub.vertices(side) if sub.degree(side, v) < threshold)
        allowed = 32 * n / (p * p * d) if d > 0 else math.inf
        return CensusResult(count=count, threshold_degree=threshold, allowed=allowed, preconditions_met=met)

    # --- colour classification ---

    def classify_colors(self, graph: ColoredBipartiteGraph, eps0: float,
                        n: Optional[float] = None) -> ColorClassification:
        if not 0 < eps0 < 1:
            raise ValueError(f"eps0 must lie in (0,1), got {eps0}")
        n = int(round(self._scale(graph, n)))
        large_cutoff = (1 - eps0) * n
        medium_cutoff = n / 12
        classes: Dict[int, ColorClass] = {}
        for c in graph.colors:
            size = graph.color_size(c)
            if size > large_cutoff:
                classes[c] = ColorClass.LARGE
            elif size < medium_cutoff:
                classes[c] = ColorClass.TINY
            else:
                classes[c] = ColorClass.MEDIUM
        n_large = sum(1 for k in classes.values() if k is ColorClass.LARGE)
        result = ColorClassification(classes=classes, eps0=eps0, n=n, large_cutoff=large_cutoff,
                                     medium_cutoff=medium_cutoff, t=max(0, n - n_large))
        logger.debug(f"📊 Colours: {n_large} large, {len(result.medium)} medium, {len(result.tiny)} tiny, t={result.t}")
        return result

    # --- internals ---

    @staticmethod
    def _scale(graph: ColoredBipartiteGraph, n: Optional[float]) -> float:
        return float(n) if n is not None else float(len(graph.xs))

    def _bipartite(self, report: TypicalityReport, matrix: sparse.csr_matrix, labels: Sequence[str],
                   rows: Sequence[int], cols: Sequence[int], prefix: str, codegrees: bool,
                   sample: Optional[bool] = None) -> None:
        n, eps, p = report.n, report.eps, report.p
        spread = n ** (-eps)

        def band(value: float):
            return value * (1 - spread), value * (1 + spread)

        low, high = band(n)
        for label, size in zip(labels, (len(rows), len(cols))):
            report.witnesses.append(TypicalityWitness(f"{prefix}P1:|{label}|", {"side": label}, float(size), low, high))

        low, high = band(p * n)
        degree_sets = ((labels[0], rows, np.asarray(matrix.sum(axis=1)).ravel()),
                       (labels[1], cols, np.asarray(matrix.sum(axis=0)).ravel()))
        for label, ids, degrees in degree_sets:
            if len(ids) == 0:
                continue
            k = _worst(degrees, low, high)
            report.witnesses.append(TypicalityWitness(
                f"{prefix}P2:deg {label}", {"side": label, "vertex": int(ids[k])}, float(degrees[k]), low, high))

        if not codegrees:
            return
        low, high = band(p * p * n)
        for label, ids, side_matrix in ((labels[0], rows, matrix), (labels[1], cols, matrix.T.tocsr())):
            if len(ids) < 2:
                continue
            use_sample = sample if sample is not None else len(ids) > self.sample_above
            if use_sample:
                report.sampled = True
                pair, value = self._sampled_codegree(side_matrix, low, high)
            else:
                pair, value = _exhaustive_codegree(side_matrix, low, high)
            report.witnesses.append(TypicalityWitness(
                f"{prefix}P3:codeg {label}", {"side": label, "pair": [int(ids[pair[0]]), int(ids[pair[1]])]},
                float(value), low, high))

    def _sampled_codegree(self, matrix: sparse.csr_matrix, low: float, high: float):
        size = matrix.shape[0]
        us = self.rng.integers(0, size, size=self.sample_pairs)
        vs = self.rng.integers(0, size - 1, size=self.sample_pairs)
        vs = np.where(vs >= us, vs + 1, vs)
        values = np.asarray(matrix[us].multiply(matrix[vs]).sum(axis=1)).ravel()
        k = _worst(values, low, high)
        return (int(us[k]), int(vs[k])), float(values[k])


def _incidence(graph: ColoredBipartiteGraph) -> sparse.csr_matrix:
    x_idx = {x: k for k, x in enumerate(graph.xs)}
    y_idx = {y: k for k, y in enumerate(graph.ys)}
    return _matrix([(x_idx[e.x], y_idx[e.y]) for e in graph.edges], len(graph.xs), len(graph.ys))


def _colour_shadow(graph: ColoredBipartiteGraph, side: Side) -> sparse.csr_matrix:
    v_idx = {v: k for k, v in enumerate(graph.vertices(side))}
    c_idx = {c: k for k, c in enumerate(graph.colors)}
    pairs = [(v_idx[e.endpoint(side)], c_idx[e.c]) for e in graph.edges]
    return _matrix(pairs, len(v_idx), len(c_idx))


def _matrix(pairs: List, n_rows: int, n_cols: int) -> sparse.csr_matrix:
    if not pairs:
        return sparse.csr_matrix((n_rows, n_cols), dtype=np.int64)
    rows, cols = zip(*pairs)
    data = np.ones(len(pairs), dtype=np.int64)
    matrix = sparse.csr_matrix((data, (rows, cols)), shape=(n_rows, n_cols))
    matrix.data[:] = 1  # shadows may see one pair several times
    return matrix


def _worst(values: np.ndarray, low: float, high: float) -> int:
    slack = np.minimum(values - low, high - values)
    return int(np.argmin(slack))


def _exhaustive_codegree(matrix: sparse.csr_matrix, low: float, high: float):
    co = (matrix @ matrix.T).toarray().astype(float)
    size = co.shape[0]
    slack = np.minimum(co - low, high - co)
    slack[np.diag_indices(size)] = np.inf
    flat = int(np.argmin(slack))
    u, v = divmod(flat, size)
    return (u, v), co[u, v]
