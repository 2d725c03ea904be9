"""Test functions and the benchmark harness."""

from .functions import TestFunction, get_function, make_pair, registry
from .harness import BenchConfig, BenchResult, aggregate_ranks, run_benchmark

__all__ = ["TestFunction", "get_function", "make_pair", "registry",
           "BenchConfig", "BenchResult", "aggregate_ranks", "run_benchmark"]
