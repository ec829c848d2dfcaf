# rainbow_cli.py
"""
Rainbow matching toolkit - command line entry point.

Subcommands: gen, solve, oracle, typicality, nibble, expand, augment, bench,
verify. Logs go to stderr; data goes to stdout or to the given paths. The
exit status is 0 on success, 1 on a validation failure, 2 on a usage error
and 3 when a precondition makes the request infeasible.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import List, Optional

import pandas as pd

from config.settings import DEFAULT_JOBS, LOG_FORMAT, LOG_LEVEL, RAINBOW_SEED
from config.solver_config import SOLVER_CONFIG
from core.conversions import latin_to_graph, steiner_double_cover
from core.errors import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, RainbowError, UsageError
from core.models import (
    AugmentBudget,
    ColoredBipartiteGraph,
    ExpanderParams,
    LatinArray,
    LinearHypergraph3,
    RainbowMatching,
    Side,
    SolverConfig,
    SplitMode,
    SplitSpec,
    SteinerTripleSystem,
)
from generators.latin_generator import LatinGenerator
from generators.split_generator import SplitGenerator
from generators.steiner_generator import SteinerGenerator
from services.bench_service import BENCH_KINDS, BenchService, parse_grid
from services.config_service import ConfigService
from services.instance_io_service import KINDS, InstanceIOService
from services.rng_service import make_rng
from services.verification_service import VerificationService

logger = logging.getLogger("rainbow_cli")

SOLVE_KINDS = ("latin", "array", "steiner", "hypergraph", "graph")
GEN_KINDS = ("cyclic", "random-latin", "fresh-augment", "bose", "skolem")
PREDICATES = ("regular", "typical", "coloured-regular", "coloured-typical", "shadow")


# --- helpers ---

def _config(args: argparse.Namespace):
    overrides = {key: getattr(args, key, None) for key in ("seed", "restarts", "k", "eps0", "d", "kicks")}
    if getattr(args, "no_polish", False):
        overrides["polish"] = False
    return ConfigService().build(getattr(args, "cfg", None), overrides)


def _as_graph(instance) -> ColoredBipartiteGraph:
    if isinstance(instance, LatinArray):
        return latin_to_graph(instance)
    if isinstance(instance, SteinerTripleSystem):
        return steiner_double_cover(instance)
    if isinstance(instance, ColoredBipartiteGraph):
        return instance
    raise UsageError(f"A {type(instance).__name__} has no coloured bipartite graph form here")


def _density(graph: ColoredBipartiteGraph) -> float:
    cells = len(graph.xs) * len(graph.ys)
    return graph.num_edges / cells if cells else 0.0


# --- subcommands ---

def cmd_gen(args: argparse.Namespace, io: InstanceIOService) -> int:
    latin_generator = LatinGenerator(args.mix_steps)
    if args.kind == "cyclic":
        instance = latin_generator.cayley_cyclic(args.n)
    elif args.kind == "random-latin":
        instance = latin_generator.random_latin(args.n, args.seed)
    elif args.kind == "fresh-augment":
        base = latin_generator.random_latin(args.n, args.seed)
        r = args.r if args.r is not None else SolverConfig().scale_d(args.n)
        instance = latin_generator.augment_fresh_symbols(base, r)
    elif args.kind == "bose":
        instance = SteinerGenerator().bose_sts(args.n)
    else:
        instance = SteinerGenerator().skolem_sts(args.n)
    io.dump_instance(instance, args.out)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, io: InstanceIOService) -> int:
    from core.solver_engine import SolverEngine

    cfg = _config(args)
    instance = io.load_instance(args.input, args.kind)
    engine = SolverEngine(cfg)
    if isinstance(instance, LatinArray):
        report = engine.solve_many_symbols(instance, cfg) if args.kind == "array" else engine.solve_latin(instance, cfg)
    elif isinstance(instance, SteinerTripleSystem):
        report = engine.solve_steiner(instance, cfg)
    elif isinstance(instance, LinearHypergraph3):
        report = engine.solve_hypergraph(instance, cfg)
    else:
        report = engine.solve_graph(instance, cfg)
    payload = {"document": "report", **report.to_dict()}
    if RAINBOW_SEED is not None:
        payload["env_seed"] = RAINBOW_SEED
    io.write_json(payload, args.report)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, io: InstanceIOService) -> int:
    from services.oracle_service import OracleService

    cfg = _config(args)
    instance = io.load_instance(args.input, args.kind)
    result = OracleService(cfg.oracle_max_x, cfg.oracle_max_sts).brute_force_max(instance, args.cap)
    io.write_json({"kind": "oracle", "maximum": result.maximum, "witness": [list(w) for w in result.witness],
                   "nodes": result.nodes}, args.out)
    return EXIT_OK


def cmd_typicality(args: argparse.Namespace, io: InstanceIOService) -> int:
    from services.typicality_service import TypicalityService

    instance = io.load_instance(args.input, args.kind)
    service = TypicalityService()
    sample = True if args.sample else None
    if args.pred == "shadow":
        if isinstance(instance, SteinerTripleSystem):
            instance = LinearHypergraph3(instance.vertices, instance.triples)
        if not isinstance(instance, LinearHypergraph3):
            raise UsageError("The shadow predicate needs a Steiner system or a hypergraph")
        parts = instance.parts or SplitGenerator().random_split(
            instance.vertices, SplitSpec(mode=SplitMode.CONDITIONED), make_rng(args.seed, "typicality-split"))
        report = service.check_shadow(instance, args.eps, args.p if args.p is not None else 1.0, args.n,
                                      parts=parts, sample=sample)
    else:
        graph = _as_graph(instance)
        p = args.p if args.p is not None else _density(graph)
        if args.pred == "regular":
            report = service.check_regular(graph, args.eps, p, args.n)
        elif args.pred == "typical":
            report = service.check_typical(graph, args.eps, p, args.n, sample=sample)
        else:
            level = "typical" if args.pred == "coloured-typical" else "regular"
            report = service.check_coloured(graph, args.eps, p, args.n, level=level, sample=sample)
    io.write_json({"kind": "typicality", **report.to_dict()}, args.out)
    return EXIT_OK


def cmd_nibble(args: argparse.Namespace, io: InstanceIOService) -> int:
    from services.nibble_service import NibbleService

    cfg = _config(args)
    graph = _as_graph(io.load_instance(args.input, args.kind))
    nibble_cfg = cfg.nibble_config(seed=cfg.seed)
    changes = {"q": args.q, "max_rounds": args.rounds, "stop_fraction": args.stop}
    nibble_cfg = replace(nibble_cfg, **{k: v for k, v in changes.items() if v is not None})
    result = NibbleService().iterated_nibble(graph, nibble_cfg, make_rng(cfg.seed, "nibble"))
    if args.stats:
        frame = pd.DataFrame([vars(r) for r in result.rounds],
                             columns=["round", "chosen", "gained", "uncovered", "q", "q_hat"])
        frame.to_csv(args.stats, index=False, lineterminator="\n")
        logger.info(f"✅ Nibble statistics written to {args.stats}")
    io.dump_matching(result.matching, args.out, {"stalled": result.stalled, "rounds": len(result.rounds)})
    return EXIT_OK


def cmd_expand(args: argparse.Namespace, io: InstanceIOService) -> int:
    from services.augmentation_service import AugmentationService
    from services.expansion_service import ExpansionService

    graph = _as_graph(io.load_instance(args.input, args.kind))
    rng = make_rng(args.seed, "expand")
    if args.matching:
        matching = RainbowMatching(io.edge_rows(io.load_matching(args.matching)))
    else:
        matching = AugmentationService().greedy_extend(graph, RainbowMatching(), rng)
    d_graph = graph.restrict_colors(set(graph.colors) - matching.colors) if args.unused_only else graph
    params = ExpanderParams(d=args.d, A=args.A, eps=args.eps, n=len(graph.xs))
    service = ExpansionService()
    report = service.expander_probe(d_graph, matching, params, args.trials, rng, Side.X, args.t,
                                    pass_fraction=args.pass_fraction)
    payload = {"kind": "probe", **report.to_dict()}
    if args.stability:
        payload["stability"] = service.expander_stability_trial(d_graph, matching, params, args.trials, rng,
                                                                Side.X, args.t, args.pass_fraction)
    io.write_json(payload, args.out)
    return EXIT_OK


def cmd_augment(args: argparse.Namespace, io: InstanceIOService) -> int:
    from services.augmentation_service import AugmentationService

    cfg = _config(args)
    graph = _as_graph(io.load_instance(args.input_graph))
    matching = RainbowMatching(io.edge_rows(io.load_matching(args.input_matching)))
    n = max(min(len(graph.xs), len(graph.ys)), 2)
    d = cfg.scale_d(n)
    budget = AugmentBudget.for_scale(n, d, restarts=args.restarts if args.restarts is not None else 3,
                                     wall_clock_s=cfg.wall_clock_s, node_budget=cfg.node_budget)
    if args.budget is not None:
        budget = replace(budget, edit_cap=args.budget)
    result = AugmentationService().augment_to_max(graph, matching, budget, make_rng(cfg.seed, "augment"), d=d)
    if args.trace:
        rows = [{"iter": r.iteration, "plan_shape": r.plan_shape, "p1": r.p1, "p2": r.p2, "p3": r.p3,
                 "ledger": r.ledger} for r in result.trace]
        pd.DataFrame(rows, columns=["iter", "plan_shape", "p1", "p2", "p3", "ledger"]).to_csv(
            args.trace, index=False, lineterminator="\n")
        logger.info(f"✅ Augmentation trace written to {args.trace}")
    io.dump_matching(result.matching, args.out, {"exhausted": result.exhausted, "start_size": len(matching)})
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, io: InstanceIOService) -> int:
    cfg = _config(args)
    service = BenchService(cfg, jobs=args.jobs)
    frame = service.bench_scaling(args.kinds, parse_grid(args.n), parse_grid(args.seeds), no_timing=args.no_timing)
    service.write(frame, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, io: InstanceIOService) -> int:
    result = VerificationService(io).verify_paths(args.instance, args.matching)
    io.write_json({"kind": "verification", **result.to_dict()}, args.out)
    return EXIT_OK if result.ok else EXIT_VALIDATION


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "typicality": cmd_typicality,
    "nibble": cmd_nibble,
    "expand": cmd_expand,
    "augment": cmd_augment,
    "bench": cmd_bench,
    "verify": cmd_verify,
}


# --- parser ---

def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cfg", help="Flat key=value config file")
    p.add_argument("--seed", type=int, help="64-bit seed (default from config)")
    p.add_argument("--restarts", type=int, help="Independent restarts, best kept")
    p.add_argument("--k", type=float, help="Bound constant k in ⌈k·ln n/ln ln n⌉")
    p.add_argument("--eps0", type=float, help="Large-colour threshold ε₀")
    p.add_argument("--d", type=int, help="Pool size d (default ⌈ln n/ln ln n⌉)")
    p.add_argument("--kicks", type=int, help="Perturb-and-augment rounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainbow_cli.py",
        description="Rainbow matchings, Latin transversals and Steiner matchings.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=LOG_LEVEL, help=f"Logging level (default {LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # -- gen --
    p = subparsers.add_parser("gen", help="Generate a Latin square, array or Steiner system")
    p.add_argument("--kind", choices=GEN_KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, help="Fresh rows for fresh-augment (default ⌈ln n/ln ln n⌉)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mix-steps", type=int, help="Jacobson–Matthews steps (default n²·⌈ln n⌉)")
    p.add_argument("--out", help="Output path (default stdout)")

    # -- solve --
    p = subparsers.add_parser("solve", help="Run the full pipeline on an instance")
    p.add_argument("--kind", choices=SOLVE_KINDS, help="Instance kind (default: from the file)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--report", help="Report path (default stdout)")
    p.add_argument("--no-polish", action="store_true", help="Skip the triple polish step")
    _add_solver_flags(p)

    # -- oracle --
    p = subparsers.add_parser("oracle", help="Exact maximum by backtracking (small instances only)")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--cap", type=int, help="Size cap (|X| for graphs, vertices for triple systems)")
    p.add_argument("--out")
    _add_solver_flags(p)

    # -- typicality --
    p = subparsers.add_parser("typicality", help="Regularity / typicality report")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--pred", choices=PREDICATES, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--p", type=float, help="Density (default: measured)")
    p.add_argument("--n", type=float, help="Scale n (default |X|)")
    p.add_argument("--sample", action="store_true", help="Sample codegree pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    # -- nibble --
    p = subparsers.add_parser("nibble", help="Iterated nibble on a coloured graph")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--q", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--stop", type=float, help="Stop once this fraction of n is uncovered")
    p.add_argument("--stats", help="Per-round CSV path")
    p.add_argument("--out")
    _add_solver_flags(p)

    # -- expand --
    p = subparsers.add_parser("expand", help="Empirical expander probe")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--matching", help="Matching file (default: a greedy rainbow matching)")
    p.add_argument("--unused-only", action="store_true", help="D = edges with colours outside C(M)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--trials", type=int, default=SOLVER_CONFIG['expansion']['probe_trials'])
    p.add_argument("--pass-fraction", type=float, default=SOLVER_CONFIG['solver']['probe_pass_fraction'])
    p.add_argument("--stability", action="store_true", help="Also run the perturbation trial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    # -- augment --
    p = subparsers.add_parser("augment", help="Grow a given rainbow matching by switchings")
    p.add_argument("--input-graph", required=True)
    p.add_argument("--input-matching", required=True)
    p.add_argument("--budget", type=int, help="Edit cap per iteration (default 49⌈log n/log d⌉)")
    p.add_argument("--trace", help="Trace CSV path")
    p.add_argument("--out")
    _add_solver_flags(p)

    # -- bench --
    p = subparsers.add_parser("bench", help="Scaling study over a (kind, n, seed) grid")
    p.add_argument("--kinds", nargs="+", choices=BENCH_KINDS, default=["latin"])
    p.add_argument("--n", nargs="*", default=[], help="Sizes, e.g. 16 32 or 16,32")
    p.add_argument("--seeds", nargs="*", default=["0"])
    p.add_argument("--jobs", type=int, default=DEFAULT_JOBS)
    p.add_argument("--no-timing", action="store_true", help="Zero wall_ms for byte-stable output")
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_solver_flags(p)

    # -- verify --
    p = subparsers.add_parser("verify", help="Re-check a matching against its instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--matching", required=True)
    p.add_argument("--out")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format=LOG_FORMAT, stream=sys.stderr, force=True)

    io = InstanceIOService()
    try:
        return COMMANDS[args.command](args, io)
    except RainbowError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        stream = sys.stdout if e.exit_code == EXIT_VALIDATION else sys.stderr
        stream.write(json.dumps(e.to_dict(), indent=2, sort_keys=True, default=str) + "\n")
        return e.exit_code
    except ValueError as e:
        logger.error(f"❌ {args.command} rejected its arguments: {e}")
        sys.stderr.write(json.dumps({"error": "usage", "message": str(e), "details": {}}, indent=2) + "\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
