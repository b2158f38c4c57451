from __future__ import annotations

import contextlib

import numpy as np
import pytest

from fractel.config import builtin
from fractel.experiment import run_scenario
from fractel.frac_ops import FracOrder
from fractel.grid import IDENTITY, Grid, GridFunction
from fractel.telegraph import ProblemSetup
from fractel.varexp import ExponentField

#: criterion number -> (passed, title, detail), filled by the acceptance tests
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    """Record PASS/FAIL for an acceptance criterion, re-raising failures."""
    details: list[str] = []
    try:
        yield details
    except BaseException as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        ACCEPTANCE[number] = (False, title, "; ".join(details + [msg]))
        raise
    ACCEPTANCE[number] = (True, title, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, title, detail = ACCEPTANCE[n]
        line = f"criterion {n}: {'PASS' if passed else 'FAIL'} - {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reference_result():
    """The full ``caputo-reference`` scenario, shared by the slow tests."""
    return run_scenario(builtin("caputo-reference"))


def small_setup(
    N: int = 41,
    alpha: float = 0.75,
    beta: float = 1.0,
    p=lambda x: 2.0 + 0.5 * x,
    g: float = 1.0,
    epsilon: float = 1.0,
    psi=IDENTITY,
    u0=lambda x: np.sin(np.pi * x),
    u1=lambda x: 0.0 * x,
) -> ProblemSetup:
    grid = Grid.uniform(1.0, N)
    x = grid.nodes
    v0 = u0(x)
    v0[[0, -1]] = 0.0
    return ProblemSetup(
        grid=grid,
        psi=psi,
        order=FracOrder(alpha, beta),
        p=ExponentField(grid, np.broadcast_to(p(x), x.shape)),
        epsilon=epsilon,
        g=GridFunction(grid, np.full(N, g)),
        u0=GridFunction(grid, v0),
        u1=GridFunction(grid, u1(x)),
    )


@pytest.fixture
def setup_factory():
    return small_setup
