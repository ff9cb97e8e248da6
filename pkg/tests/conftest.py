import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from knngate.simplex import ProbVec

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

_ACCEPTANCE_LINES = []


def random_probvec(rng, C, zeros=False):
    p = rng.dirichlet(np.ones(C))
    if zeros and C > 1:
        p[rng.random(C) < 0.3] = 0.0
        if p.sum() == 0:
            p[rng.integers(C)] = 1.0
        p /= p.sum()
    return ProbVec(p)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def acceptance_line():
    def record(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
