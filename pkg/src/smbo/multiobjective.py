"""Pareto dominance, 2-D hypervolume, and two multi-objective SMBO variants.

ParEGO scalarizes the objectives with a random augmented Tchebycheff
weighting each iteration and runs single-objective EI on the result. The
SMS-EGO-style variant fits one surrogate per objective and maximizes the
hypervolume gained by an optimistic predicted objective vector.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .archive import Archive
from .design import Design, default_init_size, lhs_design
from .engine import MBOControl, MBOState, check_termination, evaluate_rows, make_surrogate
from .focus import focus_search_matrix
from .gp import GPFitError
from .infill import EI, ArchiveStats, criterion_function, dedupe
from .space import ParamSpace

logger = logging.getLogger(__name__)

PAREGO_RHO = 0.05
PAREGO_STEPS = 10
DOMINATED_EPS = 1e-3


def dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def pareto_front(points) -> np.ndarray:
    """Indices of the nondominated points, in input order."""
    Y = np.asarray(points, dtype=float)
    if Y.size == 0:
        return np.array([], dtype=int)
    Y = Y.reshape(len(Y), -1)
    leq = (Y[:, None, :] <= Y[None, :, :]).all(2)
    lt = (Y[:, None, :] < Y[None, :, :]).any(2)
    dominated = (leq & lt).any(0)            # column j dominated by some row i
    return np.flatnonzero(~dominated)


def _sorted_front(front, ref) -> np.ndarray:
    """Nondominated points strictly inside ``ref``, sorted by the first objective."""
    F = np.asarray(front, dtype=float).reshape(-1, 2)
    F = F[(F < ref).all(1)]
    F = F[pareto_front(F)] if len(F) else F
    return F[np.lexsort((F[:, 1], F[:, 0]))]


def hypervolume_2d(front, ref) -> float:
    """Area dominated by ``front`` and bounded by the reference point.

    Points that do not lie strictly below ``ref`` in both objectives are
    dropped with a warning.
    """
    ref = np.asarray(ref, dtype=float)
    F = np.asarray(front, dtype=float).reshape(-1, 2)
    outside = ~(F < ref).all(1)
    if outside.any():
        warnings.warn(f"{int(outside.sum())} point(s) not below the reference point were discarded",
                      stacklevel=2)
    F = _sorted_front(F, ref)
    area, height = 0.0, ref[1]
    for f1, f2 in F:
        if f2 < height:
            area += (ref[0] - f1) * (height - f2)
            height = f2
    return float(area)


def hypervolume_contribution(front, cand, ref) -> np.ndarray:
    """Area each candidate would add to ``front`` (vectorized over candidates).

    Zero for candidates that are weakly dominated or outside the reference box.
    """
    ref = np.asarray(ref, dtype=float)
    C = np.atleast_2d(np.asarray(cand, dtype=float))
    F = _sorted_front(front, ref)
    # coverage staircase: on [t_j, t_{j+1}) the front covers heights >= H_j
    starts = np.concatenate([[-np.inf], F[:, 0]])
    ends = np.concatenate([F[:, 0], [ref[0]]])
    heights = np.concatenate([[ref[1]], F[:, 1]])
    a, b = C[:, :1], C[:, 1:2]
    width = np.clip(np.minimum(ends, ref[0]) - np.maximum(starts, a), 0.0, None)
    tall = np.clip(np.minimum(heights, ref[1]) - b, 0.0, None)
    return (width * tall).sum(1)


def dominance_penalty(front, cand, eps: float = DOMINATED_EPS) -> np.ndarray:
    """Summed dominance gap of each candidate to the front points dominating it (0 if none)."""
    C = np.atleast_2d(np.asarray(cand, dtype=float))
    F = np.asarray(front, dtype=float)
    if F.size == 0:
        return np.zeros(len(C))
    F = F.reshape(-1, C.shape[1])
    diff = C[:, None, :] - F[None, :, :]                      # (N, m, k)
    dom = (diff >= 0).all(2) & (diff > 0).any(2)
    gap = np.maximum(0.0, diff + eps).sum(2)
    return np.where(dom, gap, 0.0).sum(1)


def reference_point(Y) -> np.ndarray:
    """Componentwise maximum plus 10% of the observed range."""
    Y = np.asarray(Y, dtype=float)
    lo, hi = Y.min(0), Y.max(0)
    return hi + 0.1 * (hi - lo)


# --- ParEGO -----------------------------------------------------------------

def simplex_weights(k: int, steps: int) -> np.ndarray:
    """All weight vectors with entries in {0, 1/steps, ..., 1} summing to 1."""
    combos = [c for c in itertools.product(range(steps + 1), repeat=k - 1) if sum(c) <= steps]
    return np.array([[*c, steps - sum(c)] for c in combos], dtype=float)[:, ::-1] / steps


def draw_weights(k: int, steps: int, rng: np.random.Generator) -> np.ndarray:
    W = simplex_weights(k, steps)
    return W[rng.integers(len(W))]


def normalize_objectives(Y) -> np.ndarray:
    """Scale each objective to [0, 1] by its observed range (a flat objective maps to 0)."""
    Y = np.asarray(Y, dtype=float)
    lo, span = Y.min(0), np.ptp(Y, 0)
    return np.where(span > 0, (Y - lo) / np.where(span > 0, span, 1.0), 0.0)


def tchebycheff(Yn, w, rho: float = PAREGO_RHO) -> np.ndarray:
    """Augmented Tchebycheff scalarization ``max_i w_i y_i + rho * sum_i w_i y_i``."""
    wy = np.atleast_2d(Yn) * np.asarray(w, dtype=float)
    return wy.max(1) + rho * wy.sum(1)


@dataclass(frozen=True)
class MultiControl:
    algorithm: str = "parego"            # or "smsego"
    rho: float = PAREGO_RHO
    weight_steps: int = PAREGO_STEPS
    lam_opt: float = 1.0
    ref_point: tuple | None = None       # reference for the reported hypervolume

    def __post_init__(self):
        if self.algorithm not in ("parego", "smsego"):
            raise ValueError(f"unknown multi-objective algorithm {self.algorithm!r}")


def _fit_or_none(model_factory, X, y):
    try:
        return model_factory().fit(X, y), None
    except (GPFitError, np.linalg.LinAlgError, ValueError) as err:
        logger.warning("surrogate fit failed (%s); proposing a random point", err)
        return None, str(err)


def parego_step(X, Y, space: ParamSpace, control: MBOControl, rng: np.random.Generator,
                rho: float = PAREGO_RHO, steps: int = PAREGO_STEPS, model=None,
                weights=None) -> tuple[np.ndarray, dict[str, Any]]:
    """Propose one encoded row by EI on a randomly weighted scalarization."""
    Y = np.asarray(Y, dtype=float)
    w = draw_weights(Y.shape[1], steps, rng) if weights is None else np.asarray(weights, dtype=float)
    g = tchebycheff(normalize_objectives(Y), w, rho)
    model = model or make_surrogate(space, control, rng)
    fitted, err = _fit_or_none(lambda: model, X, g)
    diag = {"weights": w.tolist()}
    if fitted is None:
        return space.sample_matrix(1, rng)[0], {**diag, "fallback": True, "error": err}
    crit = criterion_function(EI(), fitted, ArchiveStats(g.min(), g.max(), g.mean()))
    row, value = focus_search_matrix(crit, space, control.focus, rng)
    return row, {**diag, "criterion_value": value}


def smsego_criterion(models, front, ref, lam_opt: float = 1.0, eps: float = DOMINATED_EPS):
    """Vectorized criterion: negative hypervolume gain, or a positive penalty if dominated."""
    front = np.asarray(front, dtype=float)

    def crit(Xc):
        opt = np.column_stack([mu - lam_opt * se for mu, se in (m.predict(Xc, return_std=True) for m in models)])
        penalty = dominance_penalty(front, opt, eps)
        gain = hypervolume_contribution(front, opt, ref)
        return np.where(penalty > 0, penalty, -gain)

    return crit


def smsego_step(X, Y, space: ParamSpace, control: MBOControl, rng: np.random.Generator,
                lam_opt: float = 1.0, models=None) -> tuple[np.ndarray, dict[str, Any]]:
    """Propose one encoded row maximizing the optimistic hypervolume gain."""
    Y = np.asarray(Y, dtype=float)
    models = models or [make_surrogate(space, control, rng) for _ in range(Y.shape[1])]
    fitted = []
    for j, model in enumerate(models):
        f, err = _fit_or_none(lambda: model, X, Y[:, j])
        if f is None:
            return space.sample_matrix(1, rng)[0], {"fallback": True, "error": err}
        fitted.append(f)
    front = Y[pareto_front(Y)]
    ref = reference_point(Y)
    row, value = focus_search_matrix(smsego_criterion(fitted, front, ref, lam_opt), space, control.focus, rng)
    return row, {"criterion_value": value, "ref": ref.tolist()}


@dataclass
class MultiResult:
    front_x: list[dict[str, Any]]
    front_y: np.ndarray
    hypervolume: float
    ref_point: np.ndarray
    archive: Archive
    termination: str
    diagnostics: list[dict[str, Any]] = field(default_factory=list)

    def front_csv(self) -> str:
        names = self.archive.space.names
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*names, *self.archive.y_columns()])
        for x, y in zip(self.front_x, self.front_y):
            w.writerow([*("" if x[n] is None else x[n] for n in names), *(repr(float(v)) for v in y)])
        return buf.getvalue()

    def summary(self) -> dict[str, Any]:
        return {"termination": self.termination, "n_evals": len(self.archive),
                "front_size": len(self.front_x), "hypervolume": self.hypervolume,
                "ref_point": self.ref_point.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def front_of(archive: Archive, ref=None) -> tuple[list, np.ndarray, float, np.ndarray]:
    idx = archive.observed()
    if not idx:
        return [], np.empty((0, archive.n_objectives)), 0.0, np.asarray(ref if ref is not None else [])
    Y = archive.Y(idx)
    ref = reference_point(Y) if ref is None else np.asarray(ref, dtype=float)
    keep = pareto_front(Y)
    xs = [archive.rows[idx[i]].x for i in keep]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hv = hypervolume_2d(Y[keep], ref) if Y.shape[1] == 2 else math.nan
    return xs, Y[keep], hv, ref


def mbo_multi(objective: Callable[[dict[str, Any]], Any], space: ParamSpace, init: Design | None = None,
              control: MBOControl | None = None, multi: MultiControl | None = None,
              rng=None, n_objectives: int = 2) -> MultiResult:
    """Approximate the Pareto front of a vector-valued ``objective``.

    Each iteration proposes one point (ParEGO or the SMS-EGO-style step).
    The reported hypervolume uses ``multi.ref_point`` when given, otherwise
    the end-of-run reference (observed max plus 10% of the range).
    """
    problems = space.validate()
    if problems:
        raise ValueError("invalid parameter space: " + "; ".join(problems))
    control = control or MBOControl()
    control.validate()
    multi = multi or MultiControl()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    state = MBOState(space, control, EI(), Archive(space, n_objectives), rng)

    if init is None:
        init = lhs_design(space, default_init_size(space), rng)
    reason = evaluate_rows(objective, space, state.archive, space.to_matrix(init.points), "initial", 0,
                           control.on_eval_error, control.workers)
    models = None
    while reason is None:
        reason = check_termination(state, control.termination)
        if reason is not None:
            break
        X, Y = state.archive.X(), state.archive.Y()
        t0 = time.perf_counter()
        if len(Y) < 2:
            row, diag = space.sample_matrix(1, rng)[0], {"fallback": True}
        elif multi.algorithm == "parego":
            models = models or make_surrogate(space, control, rng)
            row, diag = parego_step(X, Y, space, control, rng, multi.rho, multi.weight_steps, models)
        else:
            models = models or [make_surrogate(space, control, rng) for _ in range(n_objectives)]
            row, diag = smsego_step(X, Y, space, control, rng, multi.lam_opt, models)
        rows, replaced = dedupe([row], space, rng, existing=X)
        state.iteration += 1
        state.diagnostics.append({"iteration": state.iteration, "replaced": replaced,
                                  "propose_seconds": time.perf_counter() - t0, **diag})
        reason = evaluate_rows(objective, space, state.archive, rows, "sequential", state.iteration,
                               control.on_eval_error, control.workers)

    xs, F, hv, ref = front_of(state.archive, multi.ref_point)
    return MultiResult(xs, F, hv, ref, state.archive, reason, state.diagnostics)
