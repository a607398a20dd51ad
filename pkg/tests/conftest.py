import numpy as np
import pytest

from dknbo.datasets import TaskDataset
from dknbo.plant import steady_state_oracle


def steady_state_tasks(n_tasks=20, n=50, seed=0):
    """Source tasks labelled with the equilibrium performance (no simulation)."""
    rng = np.random.default_rng(seed)
    tasks = []
    for k in range(n_tasks):
        theta = (rng.uniform(1, 10), rng.uniform(1, 10))
        r = rng.uniform(-10, 10, size=n)
        J = [steady_state_oracle(ri, theta)[2] for ri in r]
        tasks.append(TaskDataset(f"task{k}", r[:, None], J, theta))
    return tasks


@pytest.fixture(scope="session")
def toy_source():
    return steady_state_tasks()


ACCEPTANCE = {}  # criterion number -> (name, passed, detail)


def record_acceptance(number, name, passed, detail):
    ACCEPTANCE[number] = (name, bool(passed), detail)
    line = f"ACCEPTANCE {number} {name}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"{'PASS' if passed else 'FAIL'}  {number}. {name}: {detail}")
