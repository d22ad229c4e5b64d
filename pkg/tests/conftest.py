from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from sbpsolver.config import default_config_path
from sbpsolver.elliptic import eigenpairs
from sbpsolver.energy import ProblemConfig
from sbpsolver.grid import build_grid
from sbpsolver.nonlinearity import power

# criterion number -> list of (check name, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(number, []).append((name, bool(passed), detail))
    print(f"[criterion {number}] {'PASS' if passed else 'FAIL'} {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = all(p for _, p, _ in checks)
        detail = "; ".join(f"{n}: {'ok' if p else 'FAILED'} ({d})" for n, p, d in checks)
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def grid15():
    return build_grid(3, 15, 1.0)


@pytest.fixture(scope="session")
def default_problem(grid15):
    return ProblemConfig.homogeneous(grid15, 0.0, power(5))


@pytest.fixture(scope="session")
def basis15(grid15):
    return eigenpairs(grid15, 4)


@pytest.fixture(scope="session")
def small_grid():
    """A cheap 3D grid for structural tests."""
    return build_grid(3, 7, 1.0)


@pytest.fixture(scope="session")
def default_config_dict():
    return json.loads(Path(default_config_path()).read_text())


@pytest.fixture(scope="session")
def default_run(tmp_path_factory):
    """``sbpsolver solve`` on the bundled default configuration (run once)."""
    from sbpsolver.cli import cmd_solve

    out = tmp_path_factory.mktemp("default_run")
    import time

    t0 = time.perf_counter()
    report, code = cmd_solve(default_config_path(), out, env={})
    return report, code, out, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
