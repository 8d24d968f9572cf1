import numpy as np
import pytest

from kportfolio.eaf import EafMatrix
from kportfolio.optim import AlgorithmId
from kportfolio.portfolio import EafTable

_CRITERIA = []


def make_table(values: dict, budgets, targets, n_runs=1) -> EafTable:
    """EafTable from {(fid, alg): array(|B|, |E|)}."""
    budgets = np.asarray(budgets, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    return EafTable(
        EafMatrix(f, AlgorithmId(a), np.asarray(v, dtype=float), n_runs, budgets, targets)
        for (f, a), v in values.items()
    )


def random_table(rng, n_functions, n_algs, n_budgets, n_targets, n_runs=5, step=10):
    """Random EAF data that respects budget and target monotonicity."""
    budgets = np.arange(1, n_budgets + 1) * step
    targets = np.logspace(0, -3, n_targets)
    values = {}
    for f in range(n_functions):
        for a in range(n_algs):
            counts = rng.integers(0, n_runs + 1, size=(n_budgets, n_targets))
            counts = np.maximum.accumulate(np.sort(counts, axis=1)[:, ::-1], axis=0)
            values[(f, a)] = counts / n_runs
    return make_table(values, budgets, targets, n_runs), budgets


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome for the terminal summary."""
    def record(label, passed, detail=""):
        _CRITERIA.append((label, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {label} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
