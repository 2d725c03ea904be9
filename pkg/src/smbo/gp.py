"""Kriging surrogate: GP regression with an anisotropic Matern-3/2 kernel.

Inputs are scaled to the unit box before the kernel sees them and targets
are centered by their mean (constant trend). Hyperparameters are fitted by
maximizing the log marginal likelihood with multi-start Nelder-Mead on
log-parameters; the signal variance is profiled out analytically and
clipped to its box.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
LOG_2PI = math.log(2.0 * math.pi)


class GPFitError(RuntimeError):
    """Kernel matrix could not be factorized, even after nugget escalation."""


@dataclass(frozen=True)
class KernelParams:
    lengthscales: tuple[float, ...]
    signal_variance: float
    nugget: float = 1e-8

    def __post_init__(self):
        if any(not ell > 0 for ell in self.lengthscales):
            raise ValueError("lengthscales must be positive")
        if not self.signal_variance > 0:
            raise ValueError("signal variance must be positive")
        if not self.nugget >= 0:
            raise ValueError("nugget must be nonnegative")

    def to_dict(self) -> dict:
        return {"lengthscales": list(self.lengthscales), "signal_variance": self.signal_variance,
                "nugget": self.nugget}


@dataclass(frozen=True)
class GPConfig:
    """Hyperparameter search settings.

    Lengthscale bounds are in unit-scaled input coordinates, variance bounds
    are relative to the empirical target variance.
    """

    n_starts: int = 10
    max_iter: int = 400
    lengthscale_bounds: tuple[float, float] = (1e-3, 1e2)
    variance_bounds: tuple[float, float] = (1e-6, 1e2)
    nugget_bounds: tuple[float, float] = (1e-8, 1e-1)


def _matern_r(r: np.ndarray) -> np.ndarray:
    s = SQRT3 * r
    return (1.0 + s) * np.exp(-s)


def kernel_matern32(u, v, params: KernelParams) -> float:
    """Matern-3/2 covariance between two points."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.shape != (len(params.lengthscales),):
        raise ValueError("dimension mismatch")
    r = np.sqrt(np.sum(((u - v) / np.asarray(params.lengthscales)) ** 2))
    return float(params.signal_variance * _matern_r(r))


def correlation_matrix(A: np.ndarray, B: np.ndarray, lengthscales) -> np.ndarray:
    """Matern-3/2 correlations (unit variance) between rows of A and B."""
    ls = np.asarray(lengthscales, dtype=float)
    A = A / ls
    B = B / ls
    r2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return _matern_r(np.sqrt(np.maximum(r2, 0.0)))


@dataclass(frozen=True)
class GPFit:
    X: np.ndarray           # unit-scaled training inputs
    lower: np.ndarray
    scale: np.ndarray
    y_mean: float
    y: np.ndarray           # centered targets
    params: KernelParams
    chol: np.ndarray        # lower factor of K + nugget * sigma^2 * I
    alpha: np.ndarray       # (K + nugget * sigma^2 * I)^-1 y
    log_likelihood: float

    @property
    def n(self) -> int:
        return len(self.y)

    def scale_inputs(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.lower) / self.scale


def _profiled_nll(theta, D2, y, var_lo, var_hi):
    d = D2.shape[0]
    ls2 = np.exp(2.0 * theta[:d])
    R = _matern_r(np.sqrt(np.tensordot(1.0 / ls2, D2, axes=1)))
    R[np.diag_indices_from(R)] += np.exp(theta[d])
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        return 1e25
    a = solve_triangular(L, y, lower=True, check_finite=False)
    q = a @ a
    n = len(y)
    s2 = min(max(q / n, var_lo), var_hi)
    return 0.5 * (n * math.log(s2) + 2.0 * np.log(np.diag(L)).sum() + q / s2 + n * LOG_2PI)


def log_marginal_likelihood(X, y, params: KernelParams) -> float:
    """Log marginal likelihood of centered targets under fixed hyperparameters.

    ``X`` must already be unit-scaled.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    K = params.signal_variance * correlation_matrix(X, X, params.lengthscales)
    K[np.diag_indices_from(K)] += params.nugget * params.signal_variance
    L = np.linalg.cholesky(K)
    a = solve_triangular(L, y, lower=True)
    return float(-0.5 * (a @ a) - np.log(np.diag(L)).sum() - 0.5 * len(y) * LOG_2PI)


def _target_variance(y: np.ndarray) -> float:
    v = float(np.var(y))
    return v if v > 1e-300 else 1e-12


def _factorize(Xu, yc, params: KernelParams, max_nugget: float):
    nugget = params.nugget
    R = correlation_matrix(Xu, Xu, params.lengthscales)
    while True:
        Rn = R.copy()
        Rn[np.diag_indices_from(Rn)] += nugget
        try:
            L = np.linalg.cholesky(Rn)
            break
        except np.linalg.LinAlgError:
            if nugget >= max_nugget:
                raise GPFitError("kernel matrix not positive definite at maximum nugget") from None
            nugget = min(max(nugget, 1e-12) * 10.0, max_nugget)
            logger.debug("escalating nugget to %g", nugget)
    return L, nugget


def fit_gp(X, y, config: GPConfig = GPConfig(), rng: np.random.Generator | None = None,
           bounds=None, params: KernelParams | None = None,
           init: KernelParams | None = None) -> GPFit:
    """Fit a GP to encoded numeric inputs.

    Parameters
    ----------
    X : array of shape (n, d)
        Encoded inputs in box coordinates.
    y : array of shape (n,)
    config : GPConfig
    rng : numpy Generator
        Source of the random Nelder-Mead starting points.
    bounds : array of shape (d, 2), optional
        Box used for unit scaling; defaults to the data range.
    params : KernelParams, optional
        Use these hyperparameters instead of fitting them.
    init : KernelParams, optional
        Extra starting point (e.g. the previous fit) for the likelihood search.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n < 2 or len(y) != n:
        raise ValueError("need at least 2 points and matching targets")
    if bounds is None:
        lower, upper = X.min(0), X.max(0)
    else:
        bounds = np.asarray(bounds, dtype=float)
        lower, upper = bounds[:, 0], bounds[:, 1]
    scale = np.where(upper > lower, upper - lower, 1.0)
    Xu = (X - lower) / scale
    y_mean = float(y.mean())
    yc = y - y_mean

    if params is None:
        params = _optimize_params(Xu, yc, config, rng or np.random.default_rng(0), init)
    L, nugget = _factorize(Xu, yc, params, config.nugget_bounds[1])
    if nugget != params.nugget:
        params = KernelParams(params.lengthscales, params.signal_variance, nugget)
    sigma = math.sqrt(params.signal_variance)
    chol = sigma * L
    alpha = cho_solve((L, True), yc) / params.signal_variance
    a = solve_triangular(chol, yc, lower=True)
    ll = float(-0.5 * (a @ a) - np.log(np.diag(chol)).sum() - 0.5 * n * LOG_2PI)
    return GPFit(Xu, lower, scale, y_mean, yc, params, chol, alpha, ll)


def _optimize_params(Xu, yc, config: GPConfig, rng, init):
    n, d = Xu.shape
    D2 = (Xu.T[:, :, None] - Xu.T[:, None, :]) ** 2
    var_y = _target_variance(yc)
    var_lo, var_hi = var_y * config.variance_bounds[0], var_y * config.variance_bounds[1]
    lo = np.r_[np.full(d, math.log(config.lengthscale_bounds[0])), math.log(config.nugget_bounds[0])]
    hi = np.r_[np.full(d, math.log(config.lengthscale_bounds[1])), math.log(config.nugget_bounds[1])]

    starts = []
    if init is not None:
        starts.append(np.r_[np.log(init.lengthscales), math.log(max(init.nugget, config.nugget_bounds[0]))])
    starts.append(np.r_[np.full(d, math.log(0.3)), math.log(1e-6)])
    while len(starts) < config.n_starts:
        starts.append(np.r_[rng.uniform(math.log(0.01), math.log(10.0), d),
                            rng.uniform(math.log(config.nugget_bounds[0]), math.log(1e-2))])
    starts = starts[:max(config.n_starts, 1)]

    best_theta, best_val = None, np.inf
    for x0 in starts:
        x0 = np.clip(x0, lo, hi)
        res = minimize(_profiled_nll, x0, args=(D2, yc, var_lo, var_hi), method="Nelder-Mead",
                       bounds=list(zip(lo, hi)),
                       options={"maxiter": config.max_iter, "xatol": 1e-3, "fatol": 1e-6})
        if res.fun < best_val:
            best_theta, best_val = res.x, res.fun
    if best_val >= 1e25:
        raise GPFitError("likelihood undefined at every start")

    ls = np.exp(best_theta[:d])
    nugget = float(np.exp(best_theta[d]))
    R = correlation_matrix(Xu, Xu, ls)
    R[np.diag_indices_from(R)] += nugget
    L = np.linalg.cholesky(R)
    a = solve_triangular(L, yc, lower=True)
    s2 = float(np.clip(a @ a / n, var_lo, var_hi))
    return KernelParams(tuple(float(v) for v in ls), s2, nugget)


def predict_gp(fit: GPFit, X):
    """Posterior mean and standard error.

    Accepts a single point (returns floats) or a matrix of points (returns
    arrays).
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    Xs = fit.scale_inputs(np.atleast_2d(X))
    if Xs.shape[1] != fit.X.shape[1]:
        raise ValueError("dimension mismatch")
    k = fit.params.signal_variance * correlation_matrix(Xs, fit.X, fit.params.lengthscales)
    mean = k @ fit.alpha + fit.y_mean
    v = solve_triangular(fit.chol, k.T, lower=True, check_finite=False)
    var = np.maximum(fit.params.signal_variance - np.einsum("ij,ij->j", v, v), 0.0)
    se = np.sqrt(var)
    if single:
        return float(mean[0]), float(se[0])
    return mean, se


class GaussianProcess:
    """Refittable GP surrogate with a ``fit``/``predict`` interface.

    After the first fit, later fits start the likelihood search from the
    previous optimum and use ``refit_starts`` starting points in total.
    """

    kind = "gp"

    def __init__(self, bounds=None, config: GPConfig = GPConfig(), refit_starts: int | None = None,
                 rng: np.random.Generator | None = None):
        self.bounds = bounds
        self.config = config
        self.refit_starts = refit_starts
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.fit_: GPFit | None = None

    def fit(self, X, y) -> "GaussianProcess":
        config = self.config
        init = None
        if self.fit_ is not None and self.refit_starts is not None:
            init = self.fit_.params
            config = GPConfig(self.refit_starts, config.max_iter, config.lengthscale_bounds,
                              config.variance_bounds, config.nugget_bounds)
        self.fit_ = fit_gp(X, y, config, self.rng, bounds=self.bounds, init=init)
        return self

    def predict(self, X, return_std: bool = False):
        mean, se = predict_gp(self.fit_, np.atleast_2d(X))
        return (mean, se) if return_std else mean

    @property
    def noise_variance(self) -> float:
        p = self.fit_.params
        return p.nugget * p.signal_variance

    def describe(self) -> dict:
        return {"surrogate": "gp", **self.fit_.params.to_dict(), "log_likelihood": self.fit_.log_likelihood}
