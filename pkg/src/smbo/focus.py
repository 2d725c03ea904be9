"""Infill optimizers: focus search and plain random search.

Both work on *encoded matrices* (see :mod:`smbo.space`): the criterion is a
vectorized callable mapping an ``(n, d)`` encoded matrix to ``n`` values,
smaller being better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .space import ParamSpace

Criterion = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FocusConfig:
    n_restart: int = 3
    n_iters: int = 5
    n_points: int = 1000

    def __post_init__(self):
        if min(self.n_restart, self.n_iters, self.n_points) < 1:
            raise ValueError("focus search settings must all be >= 1")


def full_region(space: ParamSpace) -> list[Any]:
    """Working region covering the whole space."""
    return [(p.lower, p.upper) if p.is_numeric else list(range(len(p.levels)))
            for p in space.params]


def shrink_region(space: ParamSpace, region: list[Any], x: np.ndarray,
                  rng: np.random.Generator) -> list[Any]:
    """Focus the working region around the encoded point ``x``.

    Numeric ``[l, u]`` becomes ``[max(l, x - (u-l)/4), min(u, x + (u-l)/4)]``
    (integers rounded outward); a categorical dimension with more than two
    remaining levels loses one random level other than ``x``. Dimensions
    where ``x`` is inactive are left alone.
    """
    out = list(region)
    for j, p in enumerate(space.params):
        v = x[j]
        if p.is_numeric:
            if v == p.sentinel:
                continue
            lo, hi = region[j]
            quarter = 0.25 * (hi - lo)
            new_lo, new_hi = max(lo, v - quarter), min(hi, v + quarter)
            if p.kind == "integer":
                new_lo, new_hi = math.floor(new_lo), math.ceil(new_hi)
            out[j] = (new_lo, new_hi)
        else:
            levels = region[j]
            if v == p.missing_code or len(levels) <= 2:
                continue
            others = [c for c in levels if c != v]
            drop = others[rng.integers(len(others))]
            out[j] = [c for c in levels if c != drop]
    return out


def focus_search_matrix(crit: Criterion, space: ParamSpace, cfg: FocusConfig,
                        rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Run focus search; returns the best encoded row and its criterion value."""
    best_row, best_val = None, np.inf
    for _ in range(cfg.n_restart):
        region = full_region(space)
        for _ in range(cfg.n_iters):
            D = space.sample_matrix(cfg.n_points, rng, region)
            vals = np.asarray(crit(D), dtype=float)
            i = int(np.argmin(vals))
            if best_row is None or vals[i] < best_val:
                best_row, best_val = D[i].copy(), float(vals[i])
            region = shrink_region(space, region, D[i], rng)
    return best_row, best_val


def focus_search(crit: Criterion, space: ParamSpace, cfg: FocusConfig = FocusConfig(),
                 rng: np.random.Generator | None = None) -> tuple[dict[str, Any], float]:
    """Minimize ``crit`` over ``space`` by iteratively shrunk random designs.

    Evaluates exactly ``n_restart * n_iters * n_points`` candidates and
    returns the best assignment seen together with its criterion value.
    """
    rng = rng if rng is not None else np.random.default_rng()
    row, val = focus_search_matrix(crit, space, cfg, rng)
    return space.decode(row), val


def random_opt_matrix(crit: Criterion, space: ParamSpace, budget: int, rng: np.random.Generator,
                      batch: int = 1000) -> tuple[np.ndarray, float]:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    best_row, best_val = None, np.inf
    left = budget
    while left > 0:
        D = space.sample_matrix(min(batch, left), rng)
        vals = np.asarray(crit(D), dtype=float)
        i = int(np.argmin(vals))
        if best_row is None or vals[i] < best_val:
            best_row, best_val = D[i].copy(), float(vals[i])
        left -= len(D)
    return best_row, best_val


def random_opt(crit: Criterion, space: ParamSpace, budget: int,
               rng: np.random.Generator | None = None) -> tuple[dict[str, Any], float]:
    """Best of ``budget`` uniform samples."""
    rng = rng if rng is not None else np.random.default_rng()
    row, val = random_opt_matrix(crit, space, budget, rng)
    return space.decode(row), val
