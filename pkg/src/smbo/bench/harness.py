"""Seeded benchmark runs with shared initial designs and rank aggregation.

Result rows hold no timing information so that repeated runs produce
identical files; wall-clock seconds per run are kept separately.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.stats import rankdata

from ..design import lhs_design
from ..engine import MaxIters, MBOControl, mbo
from ..infill import parse_criterion
from .functions import get_function

logger = logging.getLogger(__name__)

COLUMNS = ("problem", "optimizer", "seed", "eval_index", "y", "best_so_far", "error")
TIMING_COLUMNS = ("problem", "optimizer", "seed", "wall_seconds")


@dataclass(frozen=True)
class OptimizerSpec:
    """``random`` or ``mbo[:criterion...][:gp|forest]``, e.g. ``mbo:ei`` or ``mbo:lcb:2:forest``."""

    label: str
    kind: str
    criterion: Any = None
    surrogate: str = "auto"

    @classmethod
    def parse(cls, text: str) -> "OptimizerSpec":
        parts = text.strip().lower().split(":")
        if parts == ["random"]:
            return cls(text, "random")
        if parts[0] != "mbo":
            raise ValueError(f"unknown optimizer {text!r}")
        surrogate = "auto"
        if len(parts) > 1 and parts[-1] in ("gp", "forest"):
            surrogate = parts.pop()
        criterion = parse_criterion(":".join(parts[1:])) if len(parts) > 1 else None
        return cls(text, "mbo", criterion, surrogate)


@dataclass(frozen=True)
class BenchConfig:
    problems: tuple[str, ...]
    optimizers: tuple[str, ...]
    seeds: tuple[int, ...]
    n_init: int
    n_iters: int
    gp_refit_starts: int | None = 2


@dataclass
class BenchResult:
    rows: list[dict[str, Any]]
    wall_seconds: dict[tuple[str, str, int], float] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(r["error"] for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r[k]) for k in COLUMNS})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.rows, indent=1)

    def timings_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for (p, o, s), secs in sorted(self.wall_seconds.items()):
            w.writerow([p, o, s, f"{secs:.3f}"])
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _stream(*keys) -> np.random.Generator:
    """Generator seeded by a tuple of ints and strings."""
    ints = [k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys]
    return np.random.default_rng(ints)


def shared_design(problem: str, seed: int, n_init: int):
    """The initial design every optimizer gets for one (problem, seed) cell."""
    fn = get_function(problem)
    return lhs_design(fn.space(), n_init, _stream(seed, problem, "design"), seed=seed)


def _run_one(problem: str, optimizer: str, seed: int, n_init: int, n_iters: int,
             refit_starts: int | None) -> tuple[list[dict[str, Any]], float]:
    t0 = time.perf_counter()
    base = {"problem": problem, "optimizer": optimizer, "seed": seed}
    try:
        fn = get_function(problem)
        if fn.n_objectives != 1:
            raise ValueError(f"{problem} is multi-objective; use the multi-objective runner")
        spec = OptimizerSpec.parse(optimizer)
        space = fn.space()
        init = shared_design(problem, seed, n_init)
        rng = _stream(seed, problem, optimizer)
        if spec.kind == "random":
            X = np.vstack([space.to_matrix(init.points), space.sample_matrix(n_iters, rng)])
            ys = [fn(x) for x in X]
        else:
            control = MBOControl(criterion=spec.criterion, surrogate=spec.surrogate,
                                 termination=(MaxIters(n_iters),), gp_refit_starts=refit_starts)
            res = mbo(fn.objective(), space, init, control, rng)
            ys = [r.y if not r.imputed else np.nan for r in res.archive]
        rows, best = [], np.inf
        for i, y in enumerate(ys, start=1):
            if np.isfinite(y):
                best = min(best, float(y))
            rows.append({**base, "eval_index": i, "y": float(y), "best_so_far": best, "error": ""})
    except Exception as exc:  # noqa: BLE001 - a failing run becomes an error row
        logger.error("run %s/%s/%s failed: %s", problem, optimizer, seed, exc)
        rows = [{**base, "eval_index": None, "y": None, "best_so_far": None,
                 "error": f"{type(exc).__name__}: {exc}"}]
    return rows, time.perf_counter() - t0


def run_benchmark(config: BenchConfig, workers: int = 1) -> BenchResult:
    """Run every (problem, optimizer, seed) combination.

    Rows are ordered by problem, optimizer and seed as given in the config,
    independent of how runs are scheduled across workers.
    """
    if config.n_init < 2 or config.n_iters < 0:
        raise ValueError("need n_init >= 2 and n_iters >= 0")
    for o in config.optimizers:
        OptimizerSpec.parse(o)
    jobs = [(p, o, s) for p in config.problems for o in config.optimizers for s in config.seeds]
    args = [(p, o, s, config.n_init, config.n_iters, config.gp_refit_starts) for p, o, s in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, *zip(*args)))
    else:
        outcomes = [_run_one(*a) for a in args]
    rows, wall = [], {}
    for key, (run_rows, secs) in zip(jobs, outcomes):
        rows.extend(run_rows)
        wall[key] = secs
    return BenchResult(rows, wall)


def read_results(text: str) -> list[dict[str, Any]]:
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rows.append({"problem": r["problem"], "optimizer": r["optimizer"], "seed": int(r["seed"]),
                     "eval_index": int(r["eval_index"]) if r["eval_index"] else None,
                     "y": float(r["y"]) if r["y"] else None,
                     "best_so_far": float(r["best_so_far"]) if r["best_so_far"] else None,
                     "error": r["error"]})
    return rows


def final_values(rows: Sequence[dict[str, Any]]) -> dict[tuple[str, str, int], float]:
    """Final best value per run; failed runs count as +inf."""
    out: dict[tuple[str, str, int], float] = {}
    for r in rows:
        key = (r["problem"], r["optimizer"], r["seed"])
        if r["error"] or r["best_so_far"] is None:
            out[key] = np.inf
        elif out.get(key) != np.inf:
            out[key] = r["best_so_far"]          # rows are in eval order; keep the last
    return out


@dataclass(frozen=True)
class RankRow:
    optimizer: str
    mean_rank: float
    n_cells: int
    mean_wall_seconds: float | None = None


def aggregate_ranks(rows: Sequence[dict[str, Any]],
                    wall_seconds: dict[tuple[str, str, int], float] | None = None) -> list[RankRow]:
    """Rank optimizers by final value in each (problem, seed) cell, then average.

    Ties share the mean of their ranks.
    """
    finals = final_values(rows)
    optimizers = sorted({k[1] for k in finals})
    if len(optimizers) < 2:
        raise ValueError("ranking needs at least two optimizers")
    cells = sorted({(k[0], k[2]) for k in finals})
    ranks = {o: [] for o in optimizers}
    for p, s in cells:
        present = [o for o in optimizers if (p, o, s) in finals]
        r = rankdata([finals[(p, o, s)] for o in present], method="average")
        for o, v in zip(present, r):
            ranks[o].append(float(v))
    out = []
    for o in optimizers:
        wall = None
        if wall_seconds:
            secs = [v for k, v in wall_seconds.items() if k[1] == o]
            wall = float(np.mean(secs)) if secs else None
        out.append(RankRow(o, float(np.mean(ranks[o])), len(ranks[o]), wall))
    return out


def read_timings(text: str) -> dict[tuple[str, str, int], float]:
    return {(r["problem"], r["optimizer"], int(r["seed"])): float(r["wall_seconds"])
            for r in csv.DictReader(io.StringIO(text))}
