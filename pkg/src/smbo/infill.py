"""Infill criteria and multi-point proposal.

Every criterion is returned in minimize orientation: criteria that are
naturally maximized (EI, EQI, pure uncertainty) come back negated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from .focus import FocusConfig, focus_search_matrix
from .space import ParamSpace

ZERO_SE = 1e-12
LIARS = ("min", "max", "mean", "believer")


@dataclass(frozen=True)
class Mean:
    points = 1

    def __str__(self):
        return "mean"


@dataclass(frozen=True)
class SE:
    points = 1

    def __str__(self):
        return "se"


@dataclass(frozen=True)
class EI:
    points = 1

    def __str__(self):
        return "ei"


@dataclass(frozen=True)
class LCB:
    lam: float = 1.0
    points = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("LCB lambda must be positive")

    def __str__(self):
        return f"lcb:{self.lam:g}"


@dataclass(frozen=True)
class EQI:
    beta: float = 0.75
    points = 1

    def __post_init__(self):
        if not 0.5 < self.beta < 1:
            raise ValueError("EQI beta must lie in (0.5, 1)")

    def __str__(self):
        return f"eqi:{self.beta:g}"


@dataclass(frozen=True)
class QLCB:
    lam: float = 1.0
    m: int = 1

    def __post_init__(self):
        if not self.lam > 0 or self.m < 1:
            raise ValueError("qLCB needs lambda > 0 and m >= 1")

    @property
    def points(self):
        return self.m

    def __str__(self):
        return f"qlcb:{self.lam:g}:{self.m}"


@dataclass(frozen=True)
class ConstantLiar:
    liar: str = "min"
    m: int = 1

    def __post_init__(self):
        if self.liar not in LIARS or self.m < 1:
            raise ValueError(f"liar must be one of {LIARS} and m >= 1")

    @property
    def points(self):
        return self.m

    def __str__(self):
        return f"cl:{self.liar}:{self.m}"


CriterionSpec = Mean | SE | EI | LCB | EQI | QLCB | ConstantLiar


def parse_criterion(text: str) -> CriterionSpec:
    """Parse ``ei``, ``lcb:1.0``, ``eqi:0.75``, ``qlcb:2.0:4``, ``cl:min:4``, ``mean``, ``se``."""
    parts = text.strip().lower().split(":")
    name, args = parts[0], parts[1:]
    try:
        if name == "mean" and not args:
            return Mean()
        if name == "se" and not args:
            return SE()
        if name == "ei" and not args:
            return EI()
        if name == "lcb" and len(args) <= 1:
            return LCB(*(float(a) for a in args))
        if name == "eqi" and len(args) <= 1:
            return EQI(*(float(a) for a in args))
        if name == "qlcb" and len(args) == 2:
            return QLCB(float(args[0]), int(args[1]))
        if name == "cl" and len(args) == 2:
            liar = "believer" if args[0] in ("kb", "believer") else args[0]
            return ConstantLiar(liar, int(args[1]))
    except ValueError as err:
        raise ValueError(f"bad criterion {text!r}: {err}") from None
    raise ValueError(f"unknown criterion {text!r}")


def expected_improvement(mu, se, y_min):
    """Negated closed-form expected improvement over ``y_min``.

    Zero wherever the standard error is (numerically) zero.
    """
    mu, se = np.asarray(mu, dtype=float), np.asarray(se, dtype=float)
    safe = np.where(se > ZERO_SE, se, 1.0)
    diff = y_min - mu
    z = diff / safe
    ei = np.where(se > ZERO_SE, diff * norm.cdf(z) + safe * norm.pdf(z), 0.0)
    ei = -np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def lower_confidence_bound(mu, se, lam: float):
    out = np.asarray(mu, dtype=float) - lam * np.asarray(se, dtype=float)
    return float(out) if out.ndim == 0 else out


def quantile(mu, se, beta: float):
    """Plug-in beta-quantile of the posterior."""
    out = np.asarray(mu, dtype=float) + norm.ppf(beta) * np.asarray(se, dtype=float)
    return float(out) if out.ndim == 0 else out


def expected_quantile_improvement(mu, se, q_min, beta: float, tau: float = 0.0):
    """Negated expected quantile improvement.

    The quantile estimator's standard deviation is
    ``s_q = se^2 / sqrt(se^2 + tau^2)`` for observation noise sd ``tau``.
    """
    se = np.asarray(se, dtype=float)
    q = quantile(mu, se, beta)
    denom = np.sqrt(se**2 + tau**2)
    s_q = np.where(denom > 0, se**2 / np.where(denom > 0, denom, 1.0), 0.0)
    return expected_improvement(q, s_q, q_min)


@dataclass(frozen=True)
class ArchiveStats:
    y_min: float
    y_max: float
    y_mean: float
    q_min: float | None = None


def archive_stats(y, model=None, X=None, beta: float | None = None) -> ArchiveStats:
    y = np.asarray(y, dtype=float)
    q_min = None
    if beta is not None and model is not None:
        mu, se = model.predict(X, return_std=True)
        q_min = float(np.min(quantile(mu, se, beta)))
    return ArchiveStats(float(y.min()), float(y.max()), float(y.mean()), q_min)


def criterion_function(spec: CriterionSpec, model, stats: ArchiveStats,
                       noise_sd: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized single-point criterion over encoded matrices."""

    def crit(X):
        mu, se = model.predict(X, return_std=True)
        if isinstance(spec, Mean):
            return mu
        if isinstance(spec, SE):
            return -se
        if isinstance(spec, (EI, ConstantLiar)):
            return expected_improvement(mu, se, stats.y_min)
        if isinstance(spec, (LCB, QLCB)):
            return lower_confidence_bound(mu, se, spec.lam)
        if isinstance(spec, EQI):
            return expected_quantile_improvement(mu, se, stats.q_min, spec.beta, noise_sd)
        raise TypeError(f"unsupported criterion {spec!r}")

    return crit


def _too_close(row, others: np.ndarray, tol: float) -> bool:
    return len(others) > 0 and bool((np.abs(others - row).max(1) <= tol).any())


def dedupe(rows: Sequence[np.ndarray], space: ParamSpace, rng: np.random.Generator,
           existing: np.ndarray | None = None, tol: float = 1e-9) -> tuple[list[np.ndarray], int]:
    """Replace rows that repeat an earlier row (or an ``existing`` one) by random points.

    Distances are measured in unit-scaled encoded coordinates. Returns the
    new rows and the number of replacements.
    """
    seen = space.unit_matrix(existing) if existing is not None and len(existing) else np.empty((0, space.dim))
    out, replaced = [], 0
    for row in rows:
        while _too_close(space.unit_matrix(row[None])[0], seen, tol):
            row = space.sample_matrix(1, rng)[0]
            replaced += 1
        out.append(row)
        seen = np.vstack([seen, space.unit_matrix(row[None])])
    return out, replaced


def draw_lambdas(lam: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """Exploration weights for qLCB, exponential with mean ``lam``."""
    return rng.exponential(scale=lam, size=m)


def propose_qlcb(model, space: ParamSpace, cfg: FocusConfig, lam: float, m: int,
                 rng: np.random.Generator, lambdas: Sequence[float] | None = None) -> list[np.ndarray]:
    """One LCB optimization per randomly drawn lambda; returns ``m`` distinct encoded rows."""
    lambdas = draw_lambdas(lam, m, rng) if lambdas is None else np.asarray(lambdas, dtype=float)
    rows = []
    for lam_k in lambdas:
        def crit(X, lam_k=lam_k):
            mu, se = model.predict(X, return_std=True)
            return lower_confidence_bound(mu, se, lam_k)
        rows.append(focus_search_matrix(crit, space, cfg, rng)[0])
    rows, _ = dedupe(rows, space, rng)
    return rows


def liar_value(liar: str, y: np.ndarray, model, x: np.ndarray) -> float:
    if liar == "min":
        return float(np.min(y))
    if liar == "max":
        return float(np.max(y))
    if liar == "mean":
        return float(np.mean(y))
    return float(model.predict(x[None])[0])


def propose_constant_liar(model, refit: Callable[[np.ndarray, np.ndarray], object], X: np.ndarray,
                          y: np.ndarray, space: ParamSpace, cfg: FocusConfig, liar: str, m: int,
                          rng: np.random.Generator) -> tuple[list[np.ndarray], list[float], int]:
    """Sequential EI proposals with made-up outcomes for pending points.

    ``model`` is already fitted on ``(X, y)``; ``refit(X, y)`` returns a new
    fitted model. Returns the rows, the injected lie values, and the number
    of refits performed (``m - 1``).
    """
    X, y = np.asarray(X, dtype=float), np.asarray(y, dtype=float)
    rows, lies, refits = [], [], 0
    for k in range(m):
        crit = criterion_function(EI(), model, ArchiveStats(y.min(), y.max(), y.mean()))
        row = focus_search_matrix(crit, space, cfg, rng)[0]
        rows.append(row)
        if k == m - 1:
            break
        lie = liar_value(liar, y, model, row)
        lies.append(lie)
        X, y = np.vstack([X, row]), np.append(y, lie)
        model = refit(X, y)
        refits += 1
    return rows, lies, refits
