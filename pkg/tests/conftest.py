import time

import numpy as np
import pytest

import cgl.learners
from cgl.bench import ExperimentConfig, run_am_experiment, run_grid_benchmark
from cgl.core import Hyperparams

SIZES = (6, 7, 8, 9, 10)


class TableMonitor:
    """Counts episodes that leave a non-finite entry in a learner's table.

    Every training path goes through ``cgl.learners._episode``, and a NaN or
    infinity written by an update survives every later update of that entry,
    so checking after each episode sees every one that was ever stored.
    """

    def __init__(self):
        self.episodes = 0
        self.tables_checked = 0
        self.bad = []

    def wrap(self, episode):
        def checked(model, prep, table, hp, rng, record):
            log = episode(model, prep, table, hp, rng, record)
            self.episodes += 1
            if not np.isfinite(table.values).all():
                self.bad.append((prep.kind, table.shape, hp))
            return log
        return checked


MONITOR = TableMonitor()
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def _watch_tables():
    original = cgl.learners._episode
    cgl.learners._episode = MONITOR.wrap(original)
    yield MONITOR
    cgl.learners._episode = original


@pytest.fixture(scope="session")
def table_monitor(_watch_tables):
    return _watch_tables


@pytest.fixture(scope="session")
def report():
    def record(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so the hygiene criterion sees the whole suite
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid_bench():
    """Default gridworld settings, 50 replications x 100 episodes, sizes 6-10, both cases."""
    start = time.perf_counter()
    result = run_grid_benchmark(ExperimentConfig(sizes=SIZES, cases=("a", "b")))
    result.seconds = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def am_bench():
    return run_am_experiment(ExperimentConfig(env="am", hp=Hyperparams.am_process()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
