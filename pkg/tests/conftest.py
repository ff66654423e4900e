import sys
from pathlib import Path

import pytest
from hypothesis import settings

from pluripolar import circle_functions as cf

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def rule(family, **params):
    return cf.make_rule({"family": family, "params": params})


@pytest.fixture
def geometric():
    return rule("geometric", rho=0.5)


@pytest.fixture
def exp_power():
    return rule("exp-power", alpha=2 / 3, beta=1.0)


@pytest.fixture
def degree5():
    return rule("explicit-list", coefficients={-5: 0.2, -2: "0.5-0.25j", 0: 1.0, 1: 0.3, 5: "0.1j"})


@pytest.fixture
def log_squared():
    return rule("log-squared-exp", beta=1.0)


def synthetic(sequence, **params):
    return rule("synthetic-norms", sequence=sequence, **params)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
