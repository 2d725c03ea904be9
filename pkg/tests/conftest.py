import numpy as np
import pytest

from smbo.space import ParamSpace, categorical, continuous

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def _report(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def svm_space():
    """Kernel choice with a cost parameter and a radial-only width parameter."""
    return ParamSpace([
        categorical("kernel", ["linear", "radial"]),
        continuous("C", -5, 5, transform="log2"),
        continuous("gamma", -5, 5, requires={"kernel": "radial"}, transform="log2"),
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
