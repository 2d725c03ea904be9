"""The sequential model-based optimization loop.

initial design -> fit surrogate -> propose points -> evaluate -> check
termination -> ... -> return the final point.
"""

from __future__ import annotations

import copy
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .archive import Archive, ArchiveRow
from .design import Design, default_init_size, lhs_design
from .focus import FocusConfig, focus_search_matrix
from .forest import ForestConfig, RandomForest
from .gp import GaussianProcess, GPConfig, GPFitError
from .infill import (LCB, QLCB, ConstantLiar, CriterionSpec, EQI, archive_stats,
                     criterion_function, dedupe, propose_constant_liar, propose_qlcb)
from .space import ParamSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaxEvals:
    n: int

    def __str__(self):
        return f"max_evals({self.n})"


@dataclass(frozen=True)
class MaxIters:
    n: int

    def __str__(self):
        return f"max_iters({self.n})"


@dataclass(frozen=True)
class WallTime:
    seconds: float

    def __str__(self):
        return f"wall_time({self.seconds:g}s)"


@dataclass(frozen=True)
class EvalTimeBudget:
    seconds: float

    def __str__(self):
        return f"eval_time_budget({self.seconds:g}s)"


@dataclass(frozen=True)
class TargetValue:
    y: float

    def __str__(self):
        return f"target_value({self.y:g})"


TerminationRule = MaxEvals | MaxIters | WallTime | EvalTimeBudget | TargetValue


@dataclass(frozen=True)
class MBOControl:
    """Settings of one optimization run.

    ``criterion=None`` selects LCB with lambda 1 on purely numeric spaces
    and lambda 2 when a categorical parameter is present. The number of
    points per iteration follows from the criterion (qLCB and constant liar
    propose ``m`` points).
    """

    criterion: CriterionSpec | None = None
    focus: FocusConfig = FocusConfig()
    termination: tuple = (MaxIters(10),)
    final_point: str = "best_observed"        # or "model_predicted"
    on_eval_error: str = "impute_worst"       # or "abort"
    surrogate: str = "auto"                   # "gp" or "forest"
    gp: GPConfig = GPConfig()
    gp_refit_starts: int | None = 2
    forest: ForestConfig = ForestConfig()
    noise_sd: float | None = None
    workers: int = 1

    def validate(self) -> None:
        if not self.termination:
            raise ValueError("at least one termination rule is required")
        for rule in self.termination:
            value = getattr(rule, "n", None) if not isinstance(rule, (WallTime, EvalTimeBudget)) else rule.seconds
            if isinstance(rule, TargetValue):
                continue
            if value is None or value < 0 or (not isinstance(rule, MaxIters) and value == 0):
                raise ValueError(f"invalid termination budget {rule}")
        if self.final_point not in ("best_observed", "model_predicted"):
            raise ValueError(f"unknown final point mode {self.final_point!r}")
        if self.on_eval_error not in ("impute_worst", "abort"):
            raise ValueError(f"unknown error policy {self.on_eval_error!r}")
        if self.surrogate not in ("auto", "gp", "forest"):
            raise ValueError(f"unknown surrogate {self.surrogate!r}")

    def describe(self) -> dict[str, Any]:
        return {"criterion": None if self.criterion is None else str(self.criterion),
                "focus": vars(self.focus), "termination": [str(t) for t in self.termination],
                "final_point": self.final_point, "on_eval_error": self.on_eval_error,
                "surrogate": self.surrogate}


def default_criterion(space: ParamSpace) -> CriterionSpec:
    return LCB(2.0) if space.has_discrete else LCB(1.0)


def surrogate_kind(space: ParamSpace, choice: str = "auto") -> str:
    if choice != "auto":
        return choice
    return "gp" if space.is_numeric else "forest"


def make_surrogate(space: ParamSpace, control: MBOControl, rng: np.random.Generator):
    if surrogate_kind(space, control.surrogate) == "gp":
        if not all(p.is_numeric for p in space.params):
            raise ValueError("the GP surrogate needs a purely numeric space")
        return GaussianProcess(space.bounds, control.gp, control.gp_refit_starts, rng)
    return RandomForest(space.categorical_mask, control.forest, rng)


@dataclass
class MBOState:
    space: ParamSpace
    control: MBOControl
    criterion: CriterionSpec
    archive: Archive
    rng: np.random.Generator
    model: Any = None
    iteration: int = 0
    start_time: float = field(default_factory=time.perf_counter)
    diagnostics: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class MBOResult:
    x: dict[str, Any] | None
    y: float
    archive: Archive
    termination: str
    diagnostics: list[dict[str, Any]]
    control: MBOControl
    seed: Any = None

    def summary(self) -> dict[str, Any]:
        return {"termination": self.termination, "best_x": self.x, "best_y": self.y,
                "n_evals": len(self.archive),
                "iterations": max((r.iteration for r in self.archive), default=0),
                "control": self.control.describe(), "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, default=str)


def check_termination(state: MBOState, rules: Sequence[TerminationRule]) -> str | None:
    """Name of the first rule (in list order) that fires, else None."""
    archive = state.archive
    for rule in rules:
        if isinstance(rule, MaxEvals) and len(archive) >= rule.n:
            return str(rule)
        if isinstance(rule, MaxIters) and state.iteration >= rule.n:
            return str(rule)
        if isinstance(rule, WallTime) and time.perf_counter() - state.start_time >= rule.seconds:
            return str(rule)
        if isinstance(rule, EvalTimeBudget) and archive.total_eval_seconds() >= rule.seconds:
            return str(rule)
        if isinstance(rule, TargetValue) and archive.observed():
            if archive.rows[archive.best_index()].y <= rule.y:
                return str(rule)
    return None


def impute_value(archive: Archive) -> Any:
    """Worst observed value plus 10% of the observed range (per objective)."""
    idx = archive.observed()
    if not idx:
        return None
    Y = np.atleast_2d(archive.Y(idx).reshape(len(idx), -1))
    worst = Y.max(0) + 0.1 * (Y.max(0) - Y.min(0))
    return float(worst[0]) if archive.n_objectives == 1 else tuple(float(v) for v in worst)


def _call(objective, x):
    t0 = time.perf_counter()
    try:
        y = objective(x)
        err = None
    except Exception as exc:  # noqa: BLE001 - any objective failure is recorded
        y, err = None, f"{type(exc).__name__}: {exc}"
    return y, err, time.perf_counter() - t0


def evaluate_rows(objective: Callable, space: ParamSpace, archive: Archive, rows, origin: str,
                  iteration: int, on_error: str, workers: int = 1) -> str | None:
    """Evaluate encoded rows and append them to the archive.

    Returns a termination reason when an error aborts the run.
    """
    points = [space.decode(r) for r in rows]
    args = [space.transform(a) for a in points]
    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _call(objective, a), args))
    else:
        results = [_call(objective, a) for a in args]

    for a, (y, err, secs) in zip(points, results):
        if err is None:
            vals = np.atleast_1d(np.asarray(y, dtype=float))
            if vals.size != archive.n_objectives or not np.all(np.isfinite(vals)):
                err = f"objective returned invalid value {y!r}"
            else:
                y = float(vals[0]) if archive.n_objectives == 1 else tuple(float(v) for v in vals)
        if err is None:
            archive.append(ArchiveRow(a, y, secs, origin, iteration))
            continue
        logger.warning("evaluation failed at %s: %s", a, err)
        if on_error == "abort":
            archive.append(ArchiveRow(a, None, secs, origin, iteration, err, False))
            return f"error({err})"
        archive.append(ArchiveRow(a, impute_value(archive), secs, origin, iteration, err, True))
    return None


def _fit(state: MBOState, X, y):
    if state.model is None:
        state.model = make_surrogate(state.space, state.control, state.rng)
    return state.model.fit(X, y)


def propose_points(state: MBOState) -> list[np.ndarray]:
    """Propose the next batch as encoded rows."""
    space, control, spec = state.space, state.control, state.criterion
    m = spec.points
    X, y = state.archive.X(), state.archive.Y()
    diag: dict[str, Any] = {"iteration": state.iteration + 1, "criterion": str(spec), "n_train": len(y)}
    try:
        if len(y) < 2:
            raise GPFitError("fewer than two usable evaluations")
        model = _fit(state, X, y)
        diag.update(model.describe())
    except (GPFitError, np.linalg.LinAlgError, ValueError) as err:
        logger.warning("surrogate fit failed (%s); proposing random points", err)
        diag.update(fallback=True, error=str(err))
        state.diagnostics.append(diag)
        state.model = None
        return list(space.sample_matrix(m, state.rng))

    if isinstance(spec, ConstantLiar):
        def refit(Xn, yn):
            return copy.copy(model).fit(Xn, yn)
        rows, lies, refits = propose_constant_liar(model, refit, X, y, space, control.focus,
                                                   spec.liar, spec.m, state.rng)
        diag.update(lies=lies, refits=refits)
    elif isinstance(spec, QLCB):
        rows = propose_qlcb(model, space, control.focus, spec.lam, spec.m, state.rng)
    else:
        beta = spec.beta if isinstance(spec, EQI) else None
        stats = archive_stats(y, model, X, beta)
        noise_sd = control.noise_sd
        if noise_sd is None:
            noise_sd = math.sqrt(getattr(model, "noise_variance", 0.0))
        crit = criterion_function(spec, model, stats, noise_sd)
        row, value = focus_search_matrix(crit, space, control.focus, state.rng)
        rows = [row]
        diag["criterion_value"] = value
    rows, replaced = dedupe(rows, space, state.rng, existing=X)
    diag["replaced"] = replaced
    state.diagnostics.append(diag)
    return rows


def final_point(archive: Archive, mode: str = "best_observed", control: MBOControl | None = None,
                rng: np.random.Generator | None = None) -> tuple[dict[str, Any], float]:
    """Pick the returned solution: best observed, or best by a final surrogate fit."""
    idx = archive.observed()
    if not idx:
        raise ValueError("every archive row failed; no final point")
    if mode == "best_observed":
        i = archive.best_index()
        return archive.rows[i].x, archive.rows[i].y
    if mode != "model_predicted":
        raise ValueError(f"unknown final point mode {mode!r}")
    control = control or MBOControl()
    rng = rng if rng is not None else np.random.default_rng(0)
    model = make_surrogate(archive.space, control, rng).fit(archive.X(), archive.Y())
    mu = model.predict(archive.X(idx))
    j = int(np.argmin(mu))
    return archive.rows[idx[j]].x, float(mu[j])


def _as_rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def mbo(objective: Callable[[dict[str, Any]], float], space: ParamSpace, init: Design | None = None,
        control: MBOControl | None = None, rng=None) -> MBOResult:
    """Minimize ``objective`` over ``space``.

    ``objective`` receives the assignment with parameter transforms applied.
    Without ``init`` a maximin LHS of ``4 * d`` points is used. ``rng`` is a
    numpy Generator or a seed.
    """
    problems = space.validate()
    if problems:
        raise ValueError("invalid parameter space: " + "; ".join(problems))
    control = control or MBOControl()
    control.validate()
    seed = rng if not isinstance(rng, np.random.Generator) else None
    rng = _as_rng(rng)
    criterion = control.criterion or default_criterion(space)
    state = MBOState(space, control, criterion, Archive(space), rng)

    if init is None:
        init = lhs_design(space, default_init_size(space), rng)
    rows = space.to_matrix(init.points)
    reason = evaluate_rows(objective, space, state.archive, rows, "initial", 0,
                           control.on_eval_error, control.workers)
    while reason is None:
        reason = check_termination(state, control.termination)
        if reason is not None:
            break
        rows = propose_points(state)
        state.iteration += 1
        reason = evaluate_rows(objective, space, state.archive, rows, "sequential", state.iteration,
                               control.on_eval_error, control.workers)
    try:
        x, y = final_point(state.archive, control.final_point, control, rng)
    except ValueError:
        x, y = None, math.nan
    return MBOResult(x, y, state.archive, reason, state.diagnostics, control, seed)
