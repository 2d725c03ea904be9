"""Append-only optimization path."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any

import numpy as np

from .space import ParamSpace


@dataclass(frozen=True)
class ArchiveRow:
    x: dict[str, Any]
    y: Any                  # float, tuple of floats, or None for an unimputed error
    eval_seconds: float
    origin: str             # "initial" or "sequential"
    iteration: int          # 0 for the initial design
    error: str | None = None
    imputed: bool = False


class Archive:
    """All evaluated points in evaluation order."""

    def __init__(self, space: ParamSpace, n_objectives: int = 1):
        self.space = space
        self.n_objectives = n_objectives
        self.rows: list[ArchiveRow] = []

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def append(self, row: ArchiveRow) -> None:
        self.rows.append(row)

    def usable(self) -> list[int]:
        """Indices of rows with a finite (possibly imputed) outcome."""
        return [i for i, r in enumerate(self.rows) if r.y is not None]

    def observed(self) -> list[int]:
        """Indices of rows with a genuine, non-imputed outcome."""
        return [i for i, r in enumerate(self.rows) if r.y is not None and not r.imputed]

    def X(self, idx=None) -> np.ndarray:
        idx = self.usable() if idx is None else idx
        return self.space.to_matrix([self.rows[i].x for i in idx])

    def Y(self, idx=None) -> np.ndarray:
        idx = self.usable() if idx is None else idx
        y = np.array([self.rows[i].y for i in idx], dtype=float)
        return y.reshape(len(idx), self.n_objectives) if self.n_objectives > 1 else y.reshape(len(idx))

    def best_index(self) -> int:
        idx = self.observed()
        if not idx:
            raise ValueError("archive has no successful evaluations")
        return idx[int(np.argmin([self.rows[i].y for i in idx]))]

    def running_best(self) -> np.ndarray:
        """Best non-imputed value after each evaluation (nan before the first)."""
        out, best = [], np.inf
        for r in self.rows:
            if r.y is not None and not r.imputed:
                best = min(best, r.y)
            out.append(best if np.isfinite(best) else np.nan)
        return np.array(out)

    def total_eval_seconds(self) -> float:
        return sum(r.eval_seconds for r in self.rows)

    def y_columns(self) -> list[str]:
        return ["y"] if self.n_objectives == 1 else [f"y{i + 1}" for i in range(self.n_objectives)]

    def to_csv(self) -> str:
        """Columns: iter, origin, parameters..., y..., eval_seconds, error, imputed."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "origin", *self.space.names, *self.y_columns(), "eval_seconds", "error", "imputed"])
        for r in self.rows:
            if r.y is None:
                ys = [""] * self.n_objectives
            else:
                ys = [repr(float(v)) for v in np.atleast_1d(r.y)]
            w.writerow([r.iteration, r.origin,
                        *("" if r.x[n] is None else r.x[n] for n in self.space.names),
                        *ys, f"{r.eval_seconds:.6f}", r.error or "", int(r.imputed)])
        return buf.getvalue()
