"""Random forest surrogate for mixed and hierarchical spaces.

Trees split numeric features on thresholds and categorical features on
level subsets. Inactive parameters arrive already imputed (numeric sentinel
outside the box, categorical missing level), so they are split on like any
other value.

The standard error is the bias-corrected jackknife-after-bootstrap estimate
(Wager, Hastie & Efron, 2014)::

    V_J  = (n - 1) / n * sum_i (tbar_(-i)(x) - tbar(x))^2
    V_JU = V_J - (e - 1) * n / B^2 * sum_b (t_b(x) - tbar(x))^2

where ``tbar_(-i)`` averages the trees whose bootstrap sample left out
training point ``i``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE_LEVELS = 10


@dataclass(frozen=True)
class ForestConfig:
    num_trees: int = 500
    min_node_size: int = 5
    mtry: int | None = None          # defaults to ceil(n_features / 3)
    max_depth: int = 64


@dataclass
class Tree:
    """Flat array representation; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left_set: np.ndarray     # bitmask of categorical codes routed left
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray        # training rows (with bootstrap multiplicity) per node


@dataclass(frozen=True)
class ForestFit:
    trees: list[Tree]
    inbag: np.ndarray        # (num_trees, n) bootstrap counts
    y: np.ndarray
    categorical: np.ndarray
    config: ForestConfig
    # all trees packed into one node table for vectorized prediction
    _feature: np.ndarray
    _threshold: np.ndarray
    _left_set: np.ndarray
    _left: np.ndarray
    _right: np.ndarray
    _value: np.ndarray
    _roots: np.ndarray


def _sse_split_numeric(x, y, w, min_node):
    """Best threshold on one numeric feature; returns (gain, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys, ws = x[order], y[order], w[order]
    cw = np.cumsum(ws)
    cy = np.cumsum(ws * ys)
    total_w, total_y = cw[-1], cy[-1]
    # candidate split after position i: x_i < x_{i+1}
    valid = (xs[:-1] < xs[1:]) & (cw[:-1] >= min_node) & (total_w - cw[:-1] >= min_node)
    if not valid.any():
        return None
    lw, ly = cw[:-1], cy[:-1]
    rw, ry = total_w - lw, total_y - ly
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(valid, ly * ly / lw + ry * ry / rw, -np.inf)
    i = int(np.argmax(gain))  # first max -> lowest threshold
    return gain[i] - total_y * total_y / total_w, 0.5 * (xs[i] + xs[i + 1])


def _sse_split_categorical(x, y, w, min_node):
    """Best level subset on one categorical feature; returns (gain, bitmask) or None."""
    codes = np.unique(x).astype(int)
    if len(codes) < 2:
        return None
    sw = np.array([w[x == c].sum() for c in codes])
    sy = np.array([(w * y)[x == c].sum() for c in codes])
    total_w, total_y = sw.sum(), sy.sum()
    if len(codes) <= MAX_EXHAUSTIVE_LEVELS:
        # subsets containing the first present level, excluding the full set
        rest = range(1, len(codes))
        subsets = [(0,) + c for r in range(0, len(codes) - 1) for c in itertools.combinations(rest, r)]
    else:
        order = np.argsort(sy / sw, kind="stable")
        subsets = [tuple(order[:k]) for k in range(1, len(codes))]
    best = None
    for sub in subsets:
        idx = list(sub)
        lw, ly = sw[idx].sum(), sy[idx].sum()
        rw, ry = total_w - lw, total_y - ly
        if lw < min_node or rw < min_node:
            continue
        gain = ly * ly / lw + ry * ry / rw - total_y * total_y / total_w
        if best is None or gain > best[0]:
            mask = 0
            for k in idx:
                mask |= 1 << int(codes[k])
            best = (gain, mask)
    return best


def _grow_tree(X, y, w, categorical, config: ForestConfig, mtry: int, rng) -> Tree:
    feature, threshold, left_set, left, right, value, count = [], [], [], [], [], [], []

    def new_node(rows):
        ww = w[rows]
        feature.append(-1)
        threshold.append(0.0)
        left_set.append(0)
        left.append(-1)
        right.append(-1)
        value.append(float((ww * y[rows]).sum() / ww.sum()))
        count.append(float(ww.sum()))
        return len(feature) - 1

    root = new_node(np.flatnonzero(w > 0))
    stack = [(root, np.flatnonzero(w > 0), 0)]
    n_features = X.shape[1]
    while stack:
        node, rows, depth = stack.pop()
        yr, wr = y[rows], w[rows]
        if depth >= config.max_depth or wr.sum() < 2 * config.min_node_size or np.ptp(yr) == 0:
            continue
        features = np.sort(rng.choice(n_features, size=mtry, replace=False))
        best = None  # (gain, feature, threshold, mask)
        for f in features:
            xr = X[rows, f]
            if categorical[f]:
                res = _sse_split_categorical(xr, yr, wr, config.min_node_size)
                cand = None if res is None else (res[0], f, 0.0, res[1])
            else:
                res = _sse_split_numeric(xr, yr, wr, config.min_node_size)
                cand = None if res is None else (res[0], f, res[1], 0)
            # strict improvement keeps the lowest feature index on ties
            if cand is not None and cand[0] > 1e-12 * max(1.0, abs(yr).max() ** 2) and (
                    best is None or cand[0] > best[0] * (1 + 1e-12)):
                best = cand
        if best is None:
            continue
        _, f, thr, mask = best
        xr = X[rows, f]
        go_left = ((mask >> xr.astype(np.int64)) & 1).astype(bool) if categorical[f] else xr <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node], threshold[node], left_set[node] = int(f), float(thr), int(mask)
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    return Tree(np.array(feature), np.array(threshold), np.array(left_set, dtype=np.int64),
                np.array(left), np.array(right), np.array(value), np.array(count))


def fit_forest(X, y, config: ForestConfig = ForestConfig(), rng: np.random.Generator | None = None,
               categorical=None) -> ForestFit:
    """Grow ``config.num_trees`` trees on bootstrap resamples.

    ``X`` is an encoded matrix; columns flagged in ``categorical`` hold
    integer level codes (the missing level included).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if n < 2 or len(y) != n:
        raise ValueError("need at least 2 points and matching targets")
    rng = rng if rng is not None else np.random.default_rng(0)
    categorical = np.zeros(p, dtype=bool) if categorical is None else np.asarray(categorical, dtype=bool)
    if categorical.any() and X[:, categorical].max() >= 63:
        raise ValueError("categorical features support at most 62 levels")
    mtry = config.mtry or math.ceil(p / 3)
    mtry = min(max(mtry, 1), p)

    inbag = np.empty((config.num_trees, n), dtype=np.int64)
    trees = []
    for b in range(config.num_trees):
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        inbag[b] = counts
        trees.append(_grow_tree(X, y, counts.astype(float), categorical, config, mtry, rng))

    offsets = np.cumsum([0] + [len(t.feature) for t in trees[:-1]])
    cat = lambda attr, shift=False: np.concatenate(
        [np.where(getattr(t, attr) >= 0, getattr(t, attr) + o, -1) if shift else getattr(t, attr)
         for t, o in zip(trees, offsets)])
    return ForestFit(trees, inbag, y, categorical, config,
                     cat("feature"), cat("threshold"), cat("left_set"), cat("left", True),
                     cat("right", True), cat("value"), offsets)


def tree_predictions(fit: ForestFit, X) -> np.ndarray:
    """Per-tree predictions, shape ``(num_trees, len(X))``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, B = len(X), len(fit._roots)
    node = np.repeat(fit._roots, N)
    col = np.tile(np.arange(N), B)
    codes = X.astype(np.int64)
    pending = np.arange(B * N)
    while len(pending):
        nd = node[pending]
        f = fit._feature[nd]
        internal = f >= 0
        if not internal.all():
            pending, nd, f = pending[internal], nd[internal], f[internal]
            if not len(pending):
                break
        c = col[pending]
        go_left = X[c, f] <= fit._threshold[nd]
        is_cat = fit.categorical[f]
        if is_cat.any():
            go_left[is_cat] = (fit._left_set[nd[is_cat]] >> codes[c[is_cat], f[is_cat]]) & 1 == 1
        node[pending] = np.where(go_left, fit._left[nd], fit._right[nd])
    return fit._value[node].reshape(B, N)


def predict_forest(fit: ForestFit, X, return_flag: bool = False):
    """Forest mean and jackknife-after-bootstrap standard error.

    With a single tree the estimate is undefined; ``se`` is then 0 and the
    returned flag (when requested) is True.
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    T = tree_predictions(fit, np.atleast_2d(X))
    B, n = fit.inbag.shape
    mean = T.mean(0)
    degenerate = B < 2
    if degenerate:
        logger.warning("jackknife standard error undefined for a single tree")
        se = np.zeros_like(mean)
    else:
        oob = (fit.inbag == 0).astype(float)
        n_oob = oob.sum(0)
        use = n_oob > 0
        tbar_i = (T.T @ oob[:, use]) / n_oob[use]                     # (N, n_used)
        v_j = (n - 1) / n * ((tbar_i - mean[:, None]) ** 2).sum(1)
        v_mc = (math.e - 1) * n / B**2 * ((T - mean) ** 2).sum(0)
        se = np.sqrt(np.maximum(v_j - v_mc, 0.0))
    if single:
        out = (float(mean[0]), float(se[0]))
    else:
        out = (mean, se)
    return (*out, degenerate) if return_flag else out


class RandomForest:
    """Forest surrogate with a ``fit``/``predict`` interface."""

    kind = "forest"

    def __init__(self, categorical=None, config: ForestConfig = ForestConfig(),
                 rng: np.random.Generator | None = None):
        self.categorical = categorical
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.fit_: ForestFit | None = None

    def fit(self, X, y) -> "RandomForest":
        self.fit_ = fit_forest(X, y, self.config, self.rng, self.categorical)
        return self

    def predict(self, X, return_std: bool = False):
        mean, se = predict_forest(self.fit_, np.atleast_2d(X))
        return (mean, se) if return_std else mean

    @property
    def noise_variance(self) -> float:
        return 0.0

    def describe(self) -> dict:
        return {"surrogate": "forest", "num_trees": self.config.num_trees,
                "min_node_size": self.config.min_node_size}
