"""Sequential model-based optimization for numeric, mixed and hierarchical spaces."""

from .design import Design, grid_design, lhs_design, random_design
from .engine import (EvalTimeBudget, MaxEvals, MaxIters, MBOControl, MBOResult, TargetValue,
                     WallTime, mbo)
from .focus import FocusConfig, focus_search
from .forest import ForestConfig, RandomForest
from .gp import GaussianProcess, GPConfig, KernelParams
from .infill import EI, EQI, LCB, QLCB, SE, ConstantLiar, Mean, parse_criterion
from .multiobjective import MultiControl, dominates, hypervolume_2d, mbo_multi, pareto_front
from .space import Param, ParamSpace, box, categorical, continuous, integer

__all__ = [
    "Design", "grid_design", "lhs_design", "random_design",
    "EvalTimeBudget", "MaxEvals", "MaxIters", "MBOControl", "MBOResult", "TargetValue", "WallTime", "mbo",
    "FocusConfig", "focus_search", "ForestConfig", "RandomForest",
    "GaussianProcess", "GPConfig", "KernelParams",
    "EI", "EQI", "LCB", "QLCB", "SE", "ConstantLiar", "Mean", "parse_criterion",
    "MultiControl", "dominates", "hypervolume_2d", "mbo_multi", "pareto_front",
    "Param", "ParamSpace", "box", "categorical", "continuous", "integer",
]
