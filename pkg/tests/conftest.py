import math

import numpy as np
import pytest

from sitsqueeze import RunConfig


def small_config(**over) -> RunConfig:
    """A quick stochastic configuration: short medium, few bands."""
    items = [
        'lineshape.kind="gaussian"', "lineshape.width=0.5", "n_bands=4", 'method="equal_weight"',
        "d_tau=0.025", "tau_min=-8", "tau_max=15", "L=0.2", "n_traj=12", "area_over_pi=2.5",
    ]
    items += [f"{k}={v}" for k, v in over.items()]
    return RunConfig().with_overrides(items)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel(a, b):
    return abs(a - b) / abs(b)


TWO_PI = 2 * math.pi


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
