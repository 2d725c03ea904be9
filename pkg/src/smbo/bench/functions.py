"""Standard test functions for benchmarking optimizers.

Names are looked up case-insensitively; parametric families take the
dimension as a numeric suffix (``ackley5``, ``rosenbrock10``) and default to
five dimensions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from ..space import ParamSpace, box


@dataclass(frozen=True)
class TestFunction:
    __test__ = False   # keep pytest from collecting this class

    name: str
    dim: int
    fn: Callable[[np.ndarray], Any]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    optimum: float | None = None
    minimizers: tuple[tuple[float, ...], ...] = ()
    n_objectives: int = 1

    def __call__(self, x) -> Any:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"{self.name} expects a point of length {self.dim}, got shape {x.shape}")
        return self.fn(x)

    def space(self) -> ParamSpace:
        return box(self.lower, self.upper)

    def objective(self) -> Callable[[dict[str, float]], Any]:
        """Adapter taking a parameter assignment ``{x1: ..., xd: ...}``."""
        names = [f"x{i + 1}" for i in range(self.dim)]
        return lambda a: self(np.array([a[n] for n in names], dtype=float))


def ackley(x):
    d = len(x)
    return float(-20.0 * np.exp(-0.2 * np.sqrt(np.sum(x**2) / d))
                 - np.exp(np.sum(np.cos(2 * np.pi * x)) / d) + 20.0 + np.e)


def alpine01(x):
    return float(np.sum(np.abs(x * np.sin(x) + 0.1 * x)))


def deflected_corrugated_spring(x, alpha=5.0, k=5.0):
    r2 = np.sum((x - alpha) ** 2)
    return float(0.1 * r2 - np.cos(k * np.sqrt(r2)))


def schwefel(x):
    return float(418.9828872724338 * len(x) - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def griewank(x):
    i = np.arange(1, len(x) + 1)
    return float(1.0 + np.sum(x**2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def sphere(x):
    return float(np.sum(x**2))


def offset_sphere(x):
    return float(np.sum((x - 1.0) ** 2))


def michalewicz(x, m=10):
    i = np.arange(1, len(x) + 1)
    return float(-np.sum(np.sin(x) * np.sin(i * x**2 / np.pi) ** (2 * m)))


def branin(x):
    b, c, t = 5.1 / (4 * np.pi**2), 5 / np.pi, 1 / (8 * np.pi)
    return float((x[1] - b * x[0] ** 2 + c * x[0] - 6) ** 2 + 10 * (1 - t) * np.cos(x[0]) + 10)


def six_hump_camelback(x):
    x1, x2 = x
    return float((4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (-4 + 4 * x2**2) * x2**2)


_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array([[10, 3, 17, 3.5, 1.7, 8],
                  [0.05, 10, 17, 0.1, 8, 14],
                  [3, 3.5, 1.7, 10, 17, 8],
                  [17, 8, 0.05, 10, 0.1, 14]])
_H6_P = 1e-4 * np.array([[1312, 1696, 5569, 124, 8283, 5886],
                         [2329, 4135, 8307, 3736, 1004, 9991],
                         [2348, 1451, 3522, 2883, 3047, 6650],
                         [4047, 8828, 8732, 5743, 1091, 381]])


def hartmann6(x):
    return float(-np.sum(_H6_ALPHA * np.exp(-np.sum(_H6_A * (x - _H6_P) ** 2, axis=1))))


def bisphere(x):
    return (sphere(x), offset_sphere(x))


_MICHALEWICZ_OPT = {2: -1.8013034, 5: -4.687658, 10: -9.66015}


def _family(name: str, d: int) -> TestFunction:
    full = f"{name}_{d}" if name[-1].isdigit() else f"{name}{d}"
    if name == "ackley":
        return TestFunction(full, d, ackley, (-32.768,) * d, (32.768,) * d, 0.0, ((0.0,) * d,))
    if name == "alpine01":
        return TestFunction(full, d, alpine01, (-10.0,) * d, (10.0,) * d, 0.0, ((0.0,) * d,))
    if name == "deflectedcorrugatedspring":
        return TestFunction(full, d, deflected_corrugated_spring, (0.0,) * d, (10.0,) * d, -1.0, ((5.0,) * d,))
    if name == "schwefel":
        return TestFunction(full, d, schwefel, (-500.0,) * d, (500.0,) * d, 0.0, ((420.9687463,) * d,))
    if name == "griewank":
        return TestFunction(full, d, griewank, (-600.0,) * d, (600.0,) * d, 0.0, ((0.0,) * d,))
    if name == "rosenbrock":
        return TestFunction(full, d, rosenbrock, (-5.0,) * d, (10.0,) * d, 0.0, ((1.0,) * d,))
    if name == "sphere":
        return TestFunction(full, d, sphere, (-5.12,) * d, (5.12,) * d, 0.0, ((0.0,) * d,))
    if name == "offsetsphere":
        return TestFunction(full, d, offset_sphere, (-5.12,) * d, (5.12,) * d, 0.0, ((1.0,) * d,))
    if name == "michalewicz":
        return TestFunction(full, d, michalewicz, (0.0,) * d, (np.pi,) * d, _MICHALEWICZ_OPT.get(d))
    if name == "bisphere":
        return TestFunction(full, d, bisphere, (-5.0,) * d, (5.0,) * d, n_objectives=2)
    raise KeyError(name)


FAMILIES = ("ackley", "alpine01", "deflectedcorrugatedspring", "schwefel", "griewank", "rosenbrock",
            "sphere", "offsetsphere", "michalewicz", "bisphere")

FIXED = {
    "branin": TestFunction("branin", 2, branin, (-5.0, 0.0), (10.0, 15.0), 0.397887357729738,
                           ((-np.pi, 12.275), (np.pi, 2.275), (9.42477796, 2.475))),
    "sixhumpcamelback": TestFunction("sixhumpcamelback", 2, six_hump_camelback, (-3.0, -2.0), (3.0, 2.0),
                                     -1.031628453489877, ((0.0898420131, -0.7126564030),
                                                          (-0.0898420131, 0.7126564030))),
    "hartmann6": TestFunction("hartmann6", 6, hartmann6, (0.0,) * 6, (1.0,) * 6, -3.322368011415515,
                              ((0.20168952, 0.15001069, 0.47687398, 0.27533243, 0.31165162, 0.65730054),)),
}
ALIASES = {"camelback": "sixhumpcamelback", "har6": "hartmann6", "dcs": "deflectedcorrugatedspring"}


def get_function(name: str) -> TestFunction:
    """Look up a test function by name, e.g. ``ackley5``, ``branin`` or ``har6``."""
    key = name.strip().lower().replace("_", "").replace("-", "")
    key = ALIASES.get(key, key)
    if key in FIXED:
        return FIXED[key]
    m = re.fullmatch(r"([a-z]+?(?:01)?)(\d*)", key)
    if m:
        fam = ALIASES.get(m.group(1), m.group(1))
        if fam in FAMILIES:
            d = int(m.group(2)) if m.group(2) else 5
            if d < 1 or (fam == "rosenbrock" and d < 2):
                raise ValueError(f"invalid dimension for {fam}: {d}")
            return _family(fam, d)
    raise KeyError(f"unknown test function {name!r}")


def registry(dim: int = 5) -> list[TestFunction]:
    """All single-objective functions, parametric families at dimension ``dim``."""
    singles = [f for f in FAMILIES if f != "bisphere"]
    return [_family(f, dim) for f in singles] + list(FIXED.values())


def make_pair(first: str | TestFunction, second: str | TestFunction) -> TestFunction:
    """Bi-objective problem from two functions of equal dimension on the intersection of their boxes."""
    f, g = (get_function(h) if isinstance(h, str) else h for h in (first, second))
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.name} has {f.dim}, {g.name} has {g.dim}")
    lower = tuple(np.maximum(f.lower, g.lower).tolist())
    upper = tuple(np.minimum(f.upper, g.upper).tolist())
    if any(lo >= hi for lo, hi in zip(lower, upper)):
        raise ValueError(f"{f.name} and {g.name} share no common box")
    return TestFunction(f"{f.name}+{g.name}", f.dim, lambda x: (f.fn(x), g.fn(x)), lower, upper,
                        n_objectives=2)
