# services/verification_service.py
"""
VerificationService - re-checks a claimed matching against its instance.

Uses only the model validators; none of the search code is imported, so a
bug in the solver cannot hide itself here.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from core.conversions import latin_to_graph
from core.models import (
    ColoredBipartiteGraph,
    LatinArray,
    LinearHypergraph3,
    SteinerTripleSystem,
    VerificationResult,
    matching_violations,
    triple_matching_violations,
)
from services.instance_io_service import Instance, InstanceIOService

logger = logging.getLogger(__name__)


class VerificationService:

    def __init__(self, io: Optional[InstanceIOService] = None):
        self.io = io or InstanceIOService()

    def verify_paths(self, instance_path: str, matching_path: str) -> VerificationResult:
        instance = self.io.load_instance(instance_path)
        document = self.io.load_matching(matching_path)
        return self.verify(instance, document)

    def verify(self, instance: Instance, document: Dict[str, Any]) -> VerificationResult:
        """Dispatch on the instance type; every violation found is listed."""
        if isinstance(instance, (SteinerTripleSystem, LinearHypergraph3)):
            triples = document.get("triples")
            if triples is None:
                triples = [sorted(row) for row in self.io.edge_rows(document)]
            result = self.verify_triples(instance, triples)
        elif isinstance(instance, LatinArray):
            cells = document.get("transversal")
            if cells is None:
                cells = self.io.edge_rows(document)
            result = self.verify_transversal(instance, cells)
        else:
            result = self.verify_rainbow(instance, self.io.edge_rows(document))

        if result.ok:
            logger.info(f"✅ Verified {result.artifact} of size {result.size}")
        else:
            logger.error(f"❌ {result.artifact} failed verification with {len(result.violations)} violation(s)")
        return result

    @staticmethod
    def verify_rainbow(graph: ColoredBipartiteGraph, edges: Sequence[Tuple[int, int, int]]) -> VerificationResult:
        violations: List[Dict[str, Any]] = matching_violations(edges)
        for x, y, c in edges:
            actual = graph.edge_color(x, y)
            if actual is None:
                violations.append({"kind": "not-an-edge", "edge": [x, y, c]})
            elif actual != c:
                violations.append({"kind": "wrong-color", "edge": [x, y, c], "actual": actual})
        return VerificationResult(ok=not violations, artifact="rainbow-matching", size=len(edges),
                                  violations=violations)

    def verify_transversal(self, latin: LatinArray, cells: Sequence[Sequence[int]]) -> VerificationResult:
        rows = [tuple(int(v) for v in cell) for cell in cells]
        outside = [{"kind": "outside-array", "cell": list(r)} for r in rows
                   if not (0 <= r[0] < latin.n and 0 <= r[1] < latin.n)]
        inside = [r for r in rows if 0 <= r[0] < latin.n and 0 <= r[1] < latin.n]
        result = self.verify_rainbow(latin_to_graph(latin), inside)
        result.violations = outside + result.violations
        return VerificationResult(ok=not result.violations, artifact="transversal", size=len(rows),
                                  violations=result.violations)

    @staticmethod
    def verify_triples(system, triples: Sequence[Sequence[int]]) -> VerificationResult:
        allowed = system.triples if isinstance(system, SteinerTripleSystem) else system.edges
        violations = triple_matching_violations(triples, allowed)
        return VerificationResult(ok=not violations, artifact="triple-matching", size=len(triples),
                                  violations=violations)
