"""Command-line entry point: ``bench run``, ``bench rank`` and ``bench mo-run``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..design import lhs_design
from ..engine import MaxEvals, MBOControl
from ..multiobjective import MultiControl, mbo_multi
from .functions import get_function, make_pair
from .harness import BenchConfig, aggregate_ranks, read_results, read_timings, run_benchmark


def _csv_list(text: str) -> tuple[str, ...]:
    items = tuple(t.strip() for t in text.split(",") if t.strip())
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _budget(text: str, dim: int) -> int:
    """``44d`` means 44 times the dimension; plain integers are taken as is."""
    text = text.strip().lower()
    n = int(text[:-1]) * dim if text.endswith("d") else int(text)
    if n < 1:
        raise ValueError(f"budget must be positive, got {text!r}")
    return n


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Benchmark model-based optimizers.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded single-objective benchmarks")
    run.add_argument("--problems", type=_csv_list, required=True)
    run.add_argument("--optimizers", type=_csv_list, required=True,
                     help="e.g. mbo:ei,mbo:lcb:2:forest,random")
    run.add_argument("--init", type=int, required=True, help="initial design size")
    run.add_argument("--iters", type=int, required=True, help="sequential iterations")
    run.add_argument("--seeds", type=int, required=True, help="seeds 0..N-1")
    run.add_argument("--out", default="-")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--timings", help="write per-run wall seconds to this CSV")

    rank = sub.add_parser("rank", help="average ranks from a results CSV")
    rank.add_argument("--in", dest="inp", required=True)
    rank.add_argument("--timings", help="timings CSV from `bench run --timings`")

    mo = sub.add_parser("mo-run", help="run a bi-objective optimizer")
    target = mo.add_mutually_exclusive_group(required=True)
    target.add_argument("--pair", type=_csv_list, help="two single-objective functions, e.g. sphere5,rosenbrock5")
    target.add_argument("--problem", help="a registered bi-objective function, e.g. bisphere5")
    mo.add_argument("--algo", choices=("parego", "smsego"), default="parego")
    mo.add_argument("--budget", default="44d", help="total evaluations, e.g. 44d or 200")
    mo.add_argument("--init", default="4d", help="initial design size, e.g. 4d or 20")
    mo.add_argument("--seed", type=int, default=0)
    mo.add_argument("--ref", type=_csv_list, help="reference point for the reported hypervolume")
    mo.add_argument("--out", default="-", help="front CSV destination")
    return parser


def cmd_run(args) -> int:
    config = BenchConfig(args.problems, args.optimizers, tuple(range(args.seeds)), args.init, args.iters)
    result = run_benchmark(config, workers=args.workers)
    _write(result.to_csv() if args.format == "csv" else result.to_json(), args.out)
    if args.timings:
        Path(args.timings).write_text(result.timings_csv())
    return 2 if result.failed else 0


def cmd_rank(args) -> int:
    rows = read_results(Path(args.inp).read_text())
    wall = read_timings(Path(args.timings).read_text()) if args.timings else None
    table = aggregate_ranks(rows, wall)
    print(f"{'optimizer':<24} {'mean_rank':>9} {'cells':>6} {'wall_s':>9}")
    for r in sorted(table, key=lambda r: r.mean_rank):
        wall_s = "" if r.mean_wall_seconds is None else f"{r.mean_wall_seconds:.2f}"
        print(f"{r.optimizer:<24} {r.mean_rank:>9.3f} {r.n_cells:>6} {wall_s:>9}")
    return 2 if any(row["error"] for row in rows) else 0


def cmd_mo_run(args) -> int:
    if args.pair and len(args.pair) != 2:
        raise ValueError("--pair needs exactly two functions")
    fn = make_pair(*args.pair) if args.pair else get_function(args.problem)
    if fn.n_objectives != 2:
        raise ValueError(f"{fn.name} is not bi-objective")
    space = fn.space()
    budget, n_init = _budget(args.budget, fn.dim), _budget(args.init, fn.dim)
    if n_init > budget:
        raise ValueError("initial design exceeds the budget")
    rng = np.random.default_rng(args.seed)
    init = lhs_design(space, n_init, rng)
    ref = tuple(float(v) for v in args.ref) if args.ref else None
    result = mbo_multi(fn.objective(), space, init, MBOControl(termination=(MaxEvals(budget),)),
                       MultiControl(args.algo, ref_point=ref), rng=rng)
    _write(result.front_csv(), args.out)
    print(json.dumps({"problem": fn.name, "algo": args.algo, **result.summary()}),
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0 if result.archive.observed() else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "rank": cmd_rank, "mo-run": cmd_mo_run}
    try:
        return handlers[args.command](args)
    except (ValueError, KeyError, OSError) as err:
        print(f"bench: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
