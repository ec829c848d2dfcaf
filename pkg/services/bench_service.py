# services/bench_service.py
"""
BenchService - the scaling study: solve every (kind, n, seed) cell of a
grid and compare the uncovered count against ⌈k·ln n / ln ln n⌉.

Cells are independent and fan out over a process pool when jobs > 1. Rows
are sorted by (kind, n, seed) before writing, so the CSV does not depend on
completion order.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields, replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from config.solver_config import SOLVER_CONFIG
from core.conversions import full_latin_to_hypergraph
from core.errors import OutOfRangeError, RainbowError, UsageError
from core.models import BenchRow, SolveReport, SolverConfig
from generators.latin_generator import LatinGenerator
from generators.steiner_generator import SteinerGenerator

logger = logging.getLogger(__name__)

BENCH_KINDS = ("latin", "array", "steiner", "hypergraph")
BENCH_COLUMNS = [f.name for f in fields(BenchRow)]
SUMMARY_COLUMNS = ["kind", "n", "runs", "max_uncovered", "bound_value", "all_within", "aks_reference"]

Cell = Tuple[str, int, int]


def aks_reference(n: int, c: Optional[float] = None) -> float:
    """c·n^{1/2}(ln n)^{3/2}, the classical nibble cover bound for Steiner systems."""
    c = SOLVER_CONFIG['bench']['aks_constant'] if c is None else c
    if n < 2:
        return 0.0
    return c * math.sqrt(n) * math.log(n) ** 1.5


def solve_cell(kind: str, n: int, seed: int, cfg: SolverConfig) -> SolveReport:
    """Generate the instance for one grid cell and solve it."""
    # Imported here so worker processes build their own engine.
    from core.solver_engine import SolverEngine

    cfg = replace(cfg, seed=seed)
    engine = SolverEngine(cfg)
    latin_generator = LatinGenerator(cfg.mix_steps)
    if kind == "latin":
        return engine.solve_latin(latin_generator.random_latin(n, seed), cfg)
    if kind == "array":
        r = cfg.scale_d(n)
        array = latin_generator.augment_fresh_symbols(latin_generator.random_latin(n, seed), r)
        return engine.solve_many_symbols(array, cfg)
    if kind == "steiner":
        return engine.solve_steiner(SteinerGenerator().steiner(n), cfg)
    if kind == "hypergraph":
        return engine.solve_hypergraph(full_latin_to_hypergraph(latin_generator.random_latin(n, seed)), cfg)
    raise UsageError(f"Unknown bench kind '{kind}' (choose from {', '.join(BENCH_KINDS)})", {"kind": kind})


def to_row(kind: str, report: SolveReport) -> BenchRow:
    return BenchRow(
        n=report.n, kind=kind, seed=report.seed, uncovered=report.uncovered,
        bound_value=report.bound_value, within_bound=report.within_bound,
        wall_ms=round(report.wall_ms, 3),
        nibble_size=report.stage_size("nibble"),
        greedy_size=report.stage_size("greedy"),
        augment_size=report.stage_size("augment"),
    )


def _run_cell(args: Tuple[str, int, int, SolverConfig]) -> BenchRow:
    kind, n, seed, cfg = args
    return to_row(kind, solve_cell(kind, n, seed, cfg))


class BenchService:

    def __init__(self, config: Optional[SolverConfig] = None, jobs: int = 1):
        self.config = config or SolverConfig()
        if jobs < 1:
            raise OutOfRangeError(f"--jobs must be at least 1, got {jobs}", {"jobs": jobs})
        self.jobs = jobs

    def grid(self, kinds: Iterable[str], ns: Iterable[int], seeds: Iterable[int]) -> List[Cell]:
        kinds, ns, seeds = list(kinds), list(ns), list(seeds)
        for kind in kinds:
            if kind not in BENCH_KINDS:
                raise UsageError(f"Unknown bench kind '{kind}' (choose from {', '.join(BENCH_KINDS)})",
                                 {"kind": kind})
        for n in ns:
            if n < 1:
                raise OutOfRangeError(f"Grid sizes must be positive, got {n}", {"n": n})
        return sorted((kind, n, seed) for kind in kinds for n in ns for seed in seeds)

    def bench_scaling(self, kinds: Iterable[str], ns: Iterable[int], seeds: Iterable[int],
                      no_timing: bool = False) -> pd.DataFrame:
        """One row per cell, columns in BenchRow field order, sorted by (kind, n, seed)."""
        cells = self.grid(kinds, ns, seeds)
        if not cells:
            logger.warning("⚠️ Empty bench grid, writing header only")
            return pd.DataFrame(columns=BENCH_COLUMNS)

        logger.info(f"🚀 Bench: {len(cells)} cells on {self.jobs} worker(s)")
        tasks = [(kind, n, seed, self.config) for kind, n, seed in cells]
        try:
            if self.jobs == 1:
                rows = [_run_cell(t) for t in tasks]
            else:
                with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                    rows = list(pool.map(_run_cell, tasks))
        except RainbowError as e:
            logger.error(f"❌ Bench failed: {e}")
            raise

        frame = pd.DataFrame([asdict(r) for r in rows], columns=BENCH_COLUMNS)
        if no_timing:
            frame["wall_ms"] = 0.0
        frame = frame.sort_values(["kind", "n", "seed"], kind="mergesort").reset_index(drop=True)
        within = int(frame["within_bound"].sum())
        logger.info(f"📊 Bench finished: {within}/{len(frame)} runs within bound")
        return frame

    @staticmethod
    def summarize(frame: pd.DataFrame) -> pd.DataFrame:
        """Per (kind, n): max uncovered, the bound, whether every run met it, and the Steiner reference."""
        if frame.empty:
            return pd.DataFrame(columns=SUMMARY_COLUMNS)
        summary = (frame.groupby(["kind", "n"], sort=True)
                   .agg(runs=("seed", "size"), max_uncovered=("uncovered", "max"),
                        bound_value=("bound_value", "max"), all_within=("within_bound", "all"))
                   .reset_index())
        summary["aks_reference"] = [round(aks_reference(n), 3) if kind == "steiner" else float("nan")
                                    for kind, n in zip(summary["kind"], summary["n"])]
        return summary[SUMMARY_COLUMNS]

    def write(self, frame: pd.DataFrame, out: Optional[str]) -> Optional[str]:
        """Rows to ``out`` (stdout when None or '-'); the summary goes next to a file path."""
        text = frame.to_csv(index=False, lineterminator="\n")
        if out in (None, "-"):
            print(text, end="")
            return None
        path = Path(out)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            summary_path = summary_path_for(path)
            summary_path.write_text(self.summarize(frame).to_csv(index=False, lineterminator="\n"),
                                    encoding="utf-8")
        except OSError as e:
            raise UsageError(f"Cannot write bench output to {path}: {e}", {"path": str(path)})
        logger.info(f"✅ Bench rows written to {path}, summary to {summary_path}")
        return str(summary_path)


def summary_path_for(path: Path) -> Path:
    """bench.csv → bench.summary.csv"""
    return path.with_name(f"{path.stem}.summary.csv")


def parse_grid(values: Sequence[str]) -> List[int]:
    """Accept '16 32', '16,32' or a mix."""
    out: List[int] = []
    for value in values:
        for part in str(value).split(","):
            part = part.strip()
            if part:
                try:
                    out.append(int(part))
                except ValueError:
                    raise UsageError(f"Not an integer: {part!r}", {"value": part})
    return out
