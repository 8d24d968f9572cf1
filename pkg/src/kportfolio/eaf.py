"""Discretized empirical attainment function over a (budget, target) grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, DataError, UsageError
from .optim import AlgorithmId, RunTrajectory

N_BUDGETS = 50
TARGET_HI_EXP, TARGET_LO_EXP, N_TARGETS = 2, -8, 51


def budget_grid(total_budget: int, n_budgets: int = N_BUDGETS) -> np.ndarray:
    """``n_budgets`` equally spaced evaluation counts ending at ``total_budget``."""
    if n_budgets < 2:
        raise ConfigError("the budget grid needs at least 2 points")
    if total_budget % n_budgets:
        raise ConfigError(f"total budget {total_budget} is not a multiple of {n_budgets}")
    step = total_budget // n_budgets
    return np.arange(1, n_budgets + 1, dtype=np.int64) * step


def default_target_grid(trajectories=None) -> np.ndarray:
    """51 log-spaced gaps from 1e2 down to 1e-8.

    The grid is absolute, so it does not depend on the trajectories passed.
    """
    return np.logspace(TARGET_HI_EXP, TARGET_LO_EXP, N_TARGETS)


def check_grids(budgets, targets):
    budgets = np.asarray(budgets)
    targets = np.asarray(targets, dtype=np.float64)
    if budgets.ndim != 1 or budgets.size < 1 or np.any(np.diff(budgets) <= 0) or budgets[0] < 1:
        raise ConfigError("budget grid must be strictly increasing positive integers, non-empty")
    if targets.ndim != 1 or targets.size < 1 or np.any(targets <= 0) or np.any(np.diff(targets) >= 0):
        raise ConfigError("target grid must be strictly decreasing positive reals, non-empty")


@dataclass(frozen=True)
class EafMatrix:
    function_id: int
    algorithm_id: AlgorithmId
    values: np.ndarray  # (|B|, |E|)
    n_runs: int
    budgets: np.ndarray
    targets: np.ndarray

    def at_budget(self, budget: int) -> np.ndarray:
        idx = np.searchsorted(self.budgets, budget)
        if idx >= self.budgets.size or self.budgets[idx] != budget:
            raise DataError(f"budget {budget} is not on the grid")
        return self.values[idx]


def compute_eaf(trajectories: Sequence[RunTrajectory], budgets, targets) -> EafMatrix:
    if not trajectories:
        raise UsageError("cannot compute an attainment function from zero runs")
    budgets = np.array(budgets, dtype=np.int64)
    targets = np.array(targets, dtype=np.float64)
    check_grids(budgets, targets)
    keys = {(t.function_id, int(t.algorithm_id)) for t in trajectories}
    if len(keys) != 1:
        raise UsageError(f"trajectories span several (function, algorithm) pairs: {sorted(keys)}")
    need = int(budgets[-1])
    short = [t.run_index for t in trajectories if t.budget < need]
    if short:
        raise DataError(f"runs {short} are shorter than the largest grid budget {need}")
    finals = np.stack([t.best_so_far[budgets - 1] for t in trajectories])
    n = len(trajectories)
    counts = kernels.eaf_counts(finals, targets)
    values = counts / n
    fid, alg = keys.pop()
    for arr in (values, budgets, targets):
        arr.setflags(write=False)
    return EafMatrix(fid, AlgorithmId(alg), values, n, budgets, targets)
