"""Mixed, hierarchical parameter spaces.

A space is an ordered tuple of :class:`Param` definitions. Parameters are
continuous, integer or categorical and may carry an activation requirement,
a conjunction of ``parent == value`` tests over earlier parameters.

Assignments are plain dicts mapping every parameter name to a value, with
``None`` marking an inactive parameter.

Internally, batches of assignments are handled as *encoded matrices*: one
float column per parameter, where numeric columns hold the raw box value
(or an out-of-range sentinel when inactive) and categorical columns hold the
level index (or ``len(levels)`` for the reserved missing level).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

MISSING = "__MISSING__"

KINDS = ("continuous", "integer", "categorical")
TRANSFORMS = {
    "none": lambda v: v,
    "log10": lambda v: 10.0**v,
    "log2": lambda v: 2.0**v,
}


@dataclass(frozen=True)
class Param:
    """One dimension of a search space.

    Numeric parameters use ``lower``/``upper``; categorical ones use
    ``levels``. ``requires`` is a tuple of ``(parent, value)`` pairs that must
    all hold for the parameter to be active. ``transform`` is applied to the
    value only when it is handed to the objective.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    levels: tuple[str, ...] = ()
    requires: tuple[tuple[str, Any], ...] = ()
    transform: str = "none"

    @property
    def is_numeric(self) -> bool:
        return self.kind in ("continuous", "integer")

    @property
    def sentinel(self) -> float:
        """Encoded value of the parameter when inactive (numeric only)."""
        return self.upper + 2.0 * (self.upper - self.lower)

    @property
    def missing_code(self) -> int:
        return len(self.levels)

    def contains(self, value: Any) -> bool:
        if self.kind == "categorical":
            return value in self.levels
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            return False
        if not math.isfinite(value) or not self.lower <= value <= self.upper:
            return False
        return self.kind == "continuous" or float(value).is_integer()


def continuous(name: str, lower: float, upper: float, requires: Mapping[str, Any] | None = None,
               transform: str = "none") -> Param:
    return Param(name, "continuous", float(lower), float(upper),
                 requires=tuple((requires or {}).items()), transform=transform)


def integer(name: str, lower: int, upper: int, requires: Mapping[str, Any] | None = None,
            transform: str = "none") -> Param:
    return Param(name, "integer", int(lower), int(upper),
                 requires=tuple((requires or {}).items()), transform=transform)


def categorical(name: str, levels: Sequence[str], requires: Mapping[str, Any] | None = None) -> Param:
    return Param(name, "categorical", levels=tuple(levels), requires=tuple((requires or {}).items()))


@dataclass(frozen=True)
class ParamSpace:
    """Ordered collection of parameters.

    Construction never raises; call :meth:`validate` to get the list of
    invariant violations. Operations other than ``validate`` assume a valid
    space.
    """

    params: tuple[Param, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __init__(self, params: Sequence[Param]):
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "_index", {p.name: i for i, p in enumerate(self.params)})

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self):
        return iter(self.params)

    def __getitem__(self, name: str) -> Param:
        return self.params[self.index(name)]

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def dim(self) -> int:
        return len(self.params)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown parameter {name!r}") from None

    @property
    def is_numeric(self) -> bool:
        """True when every parameter is numeric and unconditionally active."""
        return all(p.is_numeric and not p.requires for p in self.params)

    @property
    def has_discrete(self) -> bool:
        return any(p.kind == "categorical" for p in self.params)

    @property
    def categorical_mask(self) -> np.ndarray:
        return np.array([p.kind == "categorical" for p in self.params], dtype=bool)

    def validate(self) -> list[str]:
        """Return every violated invariant as a human readable string."""
        problems = []
        if not self.params:
            problems.append("space has no parameters")
        seen: dict[str, Param] = {}
        for p in self.params:
            if not isinstance(p.name, str) or not p.name.isidentifier():
                problems.append(f"invalid name {p.name!r}")
            if p.name in seen:
                problems.append(f"duplicate name {p.name!r}")
            if p.kind not in KINDS:
                problems.append(f"{p.name}: unknown kind {p.kind!r}")
            elif p.is_numeric:
                if p.lower is None or p.upper is None or not (
                        math.isfinite(p.lower) and math.isfinite(p.upper)):
                    problems.append(f"{p.name}: bounds must be finite")
                elif not p.lower < p.upper:
                    problems.append(f"{p.name}: empty interval [{p.lower}, {p.upper}]")
                if p.kind == "integer" and p.lower is not None and p.upper is not None and not (
                        float(p.lower).is_integer() and float(p.upper).is_integer()):
                    problems.append(f"{p.name}: integer bounds must be integral")
            else:
                if not p.levels:
                    problems.append(f"{p.name}: empty levels")
                elif len(set(p.levels)) != len(p.levels):
                    problems.append(f"{p.name}: duplicate levels")
                elif MISSING in p.levels:
                    problems.append(f"{p.name}: level {MISSING!r} is reserved")
            if p.transform not in TRANSFORMS:
                problems.append(f"{p.name}: unknown transform {p.transform!r}")
            elif p.transform != "none" and p.kind == "categorical":
                problems.append(f"{p.name}: transform on categorical parameter")
            for parent, value in p.requires:
                if parent == p.name:
                    problems.append(f"{p.name}: requirement references itself")
                elif parent not in seen:
                    problems.append(
                        f"{p.name}: requirement references {parent!r}, which is not declared earlier")
                elif not seen[parent].contains(value):
                    problems.append(f"{p.name}: requirement value {value!r} outside domain of {parent!r}")
            seen.setdefault(p.name, p)
        return problems

    def is_active(self, a: Mapping[str, Any], name: str) -> bool:
        """True iff the requirement chain of ``name`` holds under ``a``."""
        p = self.params[self.index(name)]
        for parent, value in p.requires:
            if not self.is_active(a, parent) or a.get(parent) != value:
                return False
        return True

    def violations(self, a: Mapping[str, Any]) -> list[str]:
        """Problems that make ``a`` an invalid assignment for this space."""
        problems = []
        extra = set(a) - set(self._index)
        if extra:
            problems.append(f"unknown parameters {sorted(extra)}")
        for p in self.params:
            if p.name not in a:
                problems.append(f"{p.name}: missing")
                continue
            active = self.is_active(a, p.name)
            value = a[p.name]
            if active and value is None:
                problems.append(f"{p.name}: active but has no value")
            elif not active and value is not None:
                problems.append(f"{p.name}: inactive but has value {value!r}")
            elif active and not p.contains(value):
                problems.append(f"{p.name}: value {value!r} outside domain")
        return problems

    def check(self, a: Mapping[str, Any]) -> None:
        problems = self.violations(a)
        if problems:
            raise ValueError("invalid assignment: " + "; ".join(problems))

    def sample(self, rng: np.random.Generator) -> dict[str, Any]:
        """Draw one assignment uniformly, masking parameters whose requirement fails."""
        return self.decode(self.sample_matrix(1, rng)[0])

    def sample_matrix(self, n: int, rng: np.random.Generator,
                      region: Sequence[Any] | None = None) -> np.ndarray:
        """Draw ``n`` uniform points as an encoded matrix.

        ``region`` optionally restricts each column: ``(lower, upper)`` for
        numeric parameters, a sequence of allowed level codes for
        categorical ones (see :func:`smbo.focus.full_region`).
        """
        out = np.empty((n, self.dim))
        for j, p in enumerate(self.params):
            r = region[j] if region is not None else None
            if p.kind == "continuous":
                lo, hi = r if r is not None else (p.lower, p.upper)
                out[:, j] = rng.uniform(lo, hi, size=n)
            elif p.kind == "integer":
                lo, hi = r if r is not None else (p.lower, p.upper)
                out[:, j] = rng.integers(int(lo), int(hi), endpoint=True, size=n)
            else:
                codes = np.asarray(r if r is not None else range(len(p.levels)))
                out[:, j] = codes[rng.integers(0, len(codes), size=n)]
        return self.mask_inactive(out)

    def active_matrix(self, M: np.ndarray) -> np.ndarray:
        """Boolean matrix: which entries of encoded matrix ``M`` are active."""
        M = np.atleast_2d(M)
        active = np.ones(M.shape, dtype=bool)
        for j, p in enumerate(self.params):
            for parent, value in p.requires:
                k = self.index(parent)
                q = self.params[k]
                code = q.levels.index(value) if q.kind == "categorical" else float(value)
                active[:, j] &= active[:, k] & (M[:, k] == code)
        return active

    def mask_inactive(self, M: np.ndarray) -> np.ndarray:
        """Overwrite inactive entries of ``M`` with their sentinel/missing code."""
        active = self.active_matrix(M)
        for j, p in enumerate(self.params):
            M[~active[:, j], j] = p.missing_code if p.kind == "categorical" else p.sentinel
        return M

    def encode(self, a: Mapping[str, Any]) -> tuple:
        """Feature vector for the surrogate (separate-class imputation).

        Numeric parameters map to one float, inactive ones to an
        out-of-range sentinel; categorical parameters map to their level, or
        to ``MISSING`` when inactive.
        """
        self.check(a)
        out = []
        for p in self.params:
            v = a[p.name]
            if p.kind == "categorical":
                out.append(MISSING if v is None else v)
            else:
                out.append(p.sentinel if v is None else float(v))
        return tuple(out)

    def to_matrix(self, assignments: Sequence[Mapping[str, Any]]) -> np.ndarray:
        M = np.empty((len(assignments), self.dim))
        for i, a in enumerate(assignments):
            for j, (p, v) in enumerate(zip(self.params, self.encode(a))):
                if p.kind == "categorical":
                    M[i, j] = p.missing_code if v == MISSING else p.levels.index(v)
                else:
                    M[i, j] = v
        return M

    def decode(self, row: Sequence[float]) -> dict[str, Any]:
        """Inverse of the matrix encoding for one row."""
        a: dict[str, Any] = {}
        for p, v in zip(self.params, row):
            if p.kind == "categorical":
                code = int(v)
                a[p.name] = None if code == p.missing_code else p.levels[code]
            elif v == p.sentinel:
                a[p.name] = None
            elif p.kind == "integer":
                a[p.name] = int(round(v))
            else:
                a[p.name] = float(v)
        return a

    def unit_matrix(self, M: np.ndarray) -> np.ndarray:
        """Scale numeric columns of an encoded matrix to box-relative units."""
        U = np.array(M, dtype=float, copy=True)
        for j, p in enumerate(self.params):
            if p.is_numeric:
                U[:, j] = (U[:, j] - p.lower) / (p.upper - p.lower)
        return U

    @property
    def bounds(self) -> np.ndarray:
        """``(dim, 2)`` array of numeric bounds (categoricals get ``[0, s]``)."""
        return np.array([(p.lower, p.upper) if p.is_numeric else (0, len(p.levels))
                         for p in self.params], dtype=float)

    def transform(self, a: Mapping[str, Any]) -> dict[str, Any]:
        """Values as seen by the objective (transforms applied)."""
        return {p.name: (a[p.name] if a[p.name] is None else TRANSFORMS[p.transform](a[p.name]))
                for p in self.params}

    def to_dict(self) -> list[dict[str, Any]]:
        docs = []
        for p in self.params:
            d: dict[str, Any] = {"name": p.name, "type": p.kind}
            if p.kind == "categorical":
                d["levels"] = list(p.levels)
            else:
                d["lower"], d["upper"] = p.lower, p.upper
            if p.requires:
                d["requires"] = [{"param": k, "equals": v} for k, v in p.requires]
            if p.transform != "none":
                d["transform"] = p.transform
            docs.append(d)
        return docs

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, docs: Sequence[Mapping[str, Any]]) -> "ParamSpace":
        params = []
        for d in docs:
            requires = tuple((r["param"], r["equals"]) for r in d.get("requires", ()))
            kind = d["type"]
            if kind == "categorical":
                params.append(Param(d["name"], kind, levels=tuple(d["levels"]), requires=requires,
                                    transform=d.get("transform", "none")))
            else:
                cast = int if kind == "integer" else float
                params.append(Param(d["name"], kind, cast(d["lower"]), cast(d["upper"]),
                                    requires=requires, transform=d.get("transform", "none")))
        return cls(params)

    @classmethod
    def from_json(cls, text: str) -> "ParamSpace":
        """Load and validate a space from its JSON document."""
        space = cls.from_dict(json.loads(text))
        problems = space.validate()
        if problems:
            raise ValueError("invalid parameter space: " + "; ".join(problems))
        return space


def box(lower: Sequence[float], upper: Sequence[float], prefix: str = "x") -> ParamSpace:
    """Continuous box space with parameters ``x1..xd``."""
    return ParamSpace([continuous(f"{prefix}{i + 1}", lo, hi)
                       for i, (lo, hi) in enumerate(zip(lower, upper))])
