# services/instance_io_service.py
"""
InstanceIOService - reads and writes instances, matchings and reports.

Every JSON document carries ``schema_version`` and ``kind`` (see
docs/json_schemas.md). Latin arrays may also be read from a headerless CSV
grid. Output is written with sorted keys so identical results give
identical bytes.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from config.settings import SCHEMA_VERSION
from core.errors import InstanceFormatError, RainbowError
from core.models import ColoredBipartiteGraph, LatinArray, LinearHypergraph3, RainbowMatching, SteinerTripleSystem

logger = logging.getLogger(__name__)

Instance = Union[LatinArray, SteinerTripleSystem, LinearHypergraph3, ColoredBipartiteGraph]

KINDS = ("latin", "array", "steiner", "hypergraph", "graph")


class InstanceIOService:

    # --- raw JSON ---

    def read_json(self, path: str) -> Dict[str, Any]:
        file_path = Path(path)
        if not file_path.is_file():
            raise InstanceFormatError(f"File not found: {path}", {"path": path})
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise InstanceFormatError(f"{path} is not valid JSON: {e}", {"path": path, "line": e.lineno})
        if not isinstance(data, dict):
            raise InstanceFormatError(f"{path} must hold a JSON object", {"path": path})
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise InstanceFormatError(f"{path} has schema_version {version}, expected {SCHEMA_VERSION}",
                                      {"path": path, "schema_version": version})
        return data

    def write_json(self, data: Dict[str, Any], path: Optional[str] = None) -> str:
        """Write to ``path`` (stdout when None or '-'); returns the text."""
        payload = {"schema_version": SCHEMA_VERSION, **data}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if path in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text)
            logger.info(f"✅ Wrote {path}")
        return text

    # --- instances ---

    def load_instance(self, path: str, kind: Optional[str] = None) -> Instance:
        """Load an instance; ``kind`` falls back to the document's own kind field."""
        if path.endswith(".csv"):
            return self._load_latin_csv(path)
        data = self.read_json(path)
        kind = kind or data.get("kind")
        if kind not in KINDS:
            raise InstanceFormatError(f"Unknown instance kind '{kind}' in {path}", {"path": path, "kind": kind})
        try:
            return self.instance_from_dict(data, kind)
        except RainbowError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise InstanceFormatError(f"Malformed {kind} instance in {path}: {e}", {"path": path, "kind": kind})

    @staticmethod
    def instance_from_dict(data: Dict[str, Any], kind: str) -> Instance:
        if kind in ("latin", "array"):
            return LatinArray(data["cells"])
        if kind == "steiner":
            return SteinerTripleSystem(int(data["n"]), tuple(tuple(t) for t in data["triples"]))
        if kind == "hypergraph":
            parts = data.get("parts")
            return LinearHypergraph3(tuple(data["vertices"]), tuple(tuple(e) for e in data["edges"]),
                                     tuple(frozenset(p) for p in parts) if parts else None)
        return ColoredBipartiteGraph.from_dict(data)

    def dump_instance(self, instance: Instance, path: Optional[str] = None, kind: Optional[str] = None) -> str:
        if isinstance(instance, LatinArray):
            kind = kind or ("latin" if instance.is_square else "array")
        elif isinstance(instance, SteinerTripleSystem):
            kind = "steiner"
        elif isinstance(instance, LinearHypergraph3):
            kind = "hypergraph"
        else:
            kind = "graph"
        return self.write_json({"kind": kind, **instance.to_dict()}, path)

    def _load_latin_csv(self, path: str) -> LatinArray:
        if not Path(path).is_file():
            raise InstanceFormatError(f"File not found: {path}", {"path": path})
        try:
            frame = pd.read_csv(path, header=None)
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise InstanceFormatError(f"Cannot parse {path}: {e}", {"path": path})
        return LatinArray(frame.to_numpy(dtype="int64"))

    # --- matchings ---

    def load_matching(self, path: str) -> Dict[str, Any]:
        """Raw matching document: 'edges' rows, a Latin 'transversal' or hypergraph 'triples'."""
        data = self.read_json(path)
        if "edges" not in data and "matching" in data:
            data = {**data, "edges": data["matching"]}
        if not {"edges", "transversal", "triples"} & set(data):
            raise InstanceFormatError(f"{path} holds no edges, transversal or triples", {"path": path})
        return data

    def dump_matching(self, matching: RainbowMatching, path: Optional[str] = None,
                      extra: Optional[Dict[str, Any]] = None) -> str:
        return self.write_json({"kind": "matching", "edges": matching.to_list(), **(extra or {})}, path)

    @staticmethod
    def edge_rows(data: Dict[str, Any]):
        """Edges as (x, y, c) tuples, accepting both object and list rows."""
        rows = []
        for row in data.get("edges", []):
            if isinstance(row, dict):
                rows.append((int(row["x"]), int(row["y"]), int(row["c"])))
            else:
                rows.append(tuple(int(v) for v in row))
        return rows
