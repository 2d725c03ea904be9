"""Initial designs: random, grid and maximin Latin hypercube."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.spatial.distance import pdist

from .space import ParamSpace


@dataclass
class Design:
    points: list[dict[str, Any]]
    generator: str = "manual"
    seed: int | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def to_csv(self, space: ParamSpace) -> str:
        """One column per parameter; inactive values become empty cells."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(space.names)
        for a in self.points:
            writer.writerow(["" if a[n] is None else repr(a[n]) if isinstance(a[n], float) else a[n]
                             for n in space.names])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, space: ParamSpace) -> "Design":
        reader = csv.DictReader(io.StringIO(text))
        points = []
        for row in reader:
            a: dict[str, Any] = {}
            for p in space.params:
                cell = row[p.name]
                if cell == "":
                    a[p.name] = None
                elif p.kind == "categorical":
                    a[p.name] = cell
                elif p.kind == "integer":
                    a[p.name] = int(cell)
                else:
                    a[p.name] = float(cell)
            space.check(a)
            points.append(a)
        return cls(points, generator="csv")


def default_init_size(space: ParamSpace) -> int:
    """Default initial design size: four points per parameter."""
    return 4 * space.dim


def random_design(space: ParamSpace, n: int, rng: np.random.Generator,
                  seed: int | None = None) -> Design:
    if n < 1:
        raise ValueError("design size must be at least 1")
    M = space.sample_matrix(n, rng)
    return Design([space.decode(row) for row in M], "random", seed, {"n": n})


def _lhs_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    # one uniform draw inside each of n strata per column, strata permuted per column
    strata = np.argsort(rng.random((n, d)), axis=0)
    return (strata + rng.random((n, d))) / n


def lhs_matrix(space: ParamSpace, n: int, rng: np.random.Generator,
               maximin_restarts: int = 20) -> np.ndarray:
    """Encoded matrix of a best-of-``maximin_restarts`` Latin hypercube."""
    if n < 2:
        raise ValueError("LHS needs at least 2 points")
    if maximin_restarts < 1:
        raise ValueError("maximin_restarts must be >= 1")
    numeric = [j for j, p in enumerate(space.params) if p.is_numeric]
    cats = [j for j, p in enumerate(space.params) if not p.is_numeric]
    best, best_dist = None, -np.inf
    for _ in range(maximin_restarts):
        U = _lhs_unit(n, len(numeric), rng)
        M = np.empty((n, space.dim))
        for col, j in enumerate(numeric):
            p = space.params[j]
            if p.kind == "integer":
                width = p.upper - p.lower + 1
                M[:, j] = np.minimum(p.lower + np.floor(U[:, col] * width), p.upper)
            else:
                M[:, j] = p.lower + U[:, col] * (p.upper - p.lower)
        for j in cats:
            s = len(space.params[j].levels)
            M[:, j] = rng.permutation(np.arange(n) % s)
        # distance ignores requirements: the raw hypercube is what gets spread out
        d2 = pdist(U, "sqeuclidean") if numeric else np.zeros(n * (n - 1) // 2)
        for j in cats:
            d2 += pdist(M[:, [j]], "hamming")
        dist = d2.min()
        if dist > best_dist:
            best, best_dist = M, dist
    return space.mask_inactive(best)


def lhs_design(space: ParamSpace, n: int, rng: np.random.Generator, maximin_restarts: int = 20,
               seed: int | None = None) -> Design:
    """Maximin Latin hypercube design.

    Each numeric dimension gets exactly one point per equal-width bin.
    Categorical dimensions are balanced by cycling their levels in random
    order. Dependent parameters are masked to inactive after sampling.
    """
    M = lhs_matrix(space, n, rng, maximin_restarts)
    return Design([space.decode(row) for row in M], "maximin-lhs", seed,
                  {"n": n, "maximin_restarts": maximin_restarts})


def grid_design(space: ParamSpace, resolution: int, max_points: int = 100_000) -> Design:
    """Full factorial grid: ``resolution`` evenly spaced values per numeric
    parameter (fewer for short integer ranges) and every categorical level.

    Points that coincide after masking inactive parameters are kept once.
    """
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    axes = []
    for p in space.params:
        if p.kind == "categorical":
            axes.append(np.arange(len(p.levels), dtype=float))
        elif p.kind == "integer":
            axes.append(np.unique(np.round(np.linspace(p.lower, p.upper, resolution))))
        else:
            axes.append(np.linspace(p.lower, p.upper, resolution))
    size = int(np.prod([len(a) for a in axes]))
    if size > max_points:
        raise ValueError(f"grid would have {size} points (limit {max_points})")
    M = space.mask_inactive(np.array(list(itertools.product(*axes)), dtype=float))
    _, keep = np.unique(M, axis=0, return_index=True)
    M = M[np.sort(keep)]
    return Design([space.decode(row) for row in M], "grid", None, {"resolution": resolution})
