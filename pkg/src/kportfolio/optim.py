"""Desk-scale stochastic optimizers that log best-so-far trajectories.

Every run consumes exactly ``budget`` evaluations. Candidate points leaving
the box [-5, 5]^d are clamped back onto it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigError
from .suite import LOWER, UPPER, GeneratedFunction, evaluate

_RUN_TAG = 0x7A11


class AlgorithmId(enum.IntEnum):
    ES11 = 0
    DiagES = 1
    DE = 2
    NelderMead = 3

    @classmethod
    def parse(cls, value) -> "AlgorithmId":
        if isinstance(value, str):
            try:
                return cls[value]
            except KeyError:
                raise ConfigError(f"unknown algorithm {value!r}") from None
        return cls(int(value))


@dataclass(frozen=True)
class RunTrajectory:
    function_id: int
    algorithm_id: AlgorithmId
    run_index: int
    seed: int
    best_so_far: np.ndarray

    @property
    def budget(self) -> int:
        return int(self.best_so_far.shape[0])

    def __eq__(self, other):
        if not isinstance(other, RunTrajectory):
            return NotImplemented
        return (self.function_id, int(self.algorithm_id), self.run_index, self.seed) == (
            other.function_id, int(other.algorithm_id), other.run_index, other.seed
        ) and self.best_so_far.tobytes() == other.best_so_far.tobytes()

    __hash__ = None


class _BudgetExhausted(Exception):
    pass


class CountingObjective:
    """Wraps an objective, records the running minimum, enforces the budget."""

    def __init__(self, func: Callable[[np.ndarray], float], budget: int):
        self.func = func
        self.budget = budget
        self.n_evals = 0
        self.best = math.inf
        self.trace = np.empty(budget, dtype=np.float64)

    @property
    def remaining(self) -> int:
        return self.budget - self.n_evals

    def __call__(self, x: np.ndarray) -> float:
        if self.n_evals >= self.budget:
            raise _BudgetExhausted
        y = self.func(x)
        if y < self.best:
            self.best = y
        self.trace[self.n_evals] = self.best
        self.n_evals += 1
        return y


def _clamp(x):
    return np.clip(x, LOWER, UPPER)


def _uniform(rng, d):
    return rng.uniform(LOWER, UPPER, size=d)


def es_one_plus_one(obj: CountingObjective, d: int, rng: np.random.Generator):
    """(1+1)-ES with the 1/5th success rule; restarts when the step collapses."""
    up, down = math.exp(1.0 / 3.0), math.exp(-1.0 / 12.0)
    while True:
        x = _uniform(rng, d)
        fx = obj(x)
        sigma = 0.2 * (UPPER - LOWER)
        while sigma > 1e-12:
            y = _clamp(x + sigma * rng.standard_normal(d))
            fy = obj(y)
            if fy <= fx:
                x, fx = y, fy
                sigma *= up
            else:
                sigma *= down


def diag_es(obj: CountingObjective, d: int, rng: np.random.Generator):
    """(mu/mu_w, lambda)-ES with a diagonal covariance (separable CMA update).

    Per-coordinate scales follow rank-one and rank-mu updates restricted to
    the diagonal; the global step uses cumulative step-size adaptation.
    """
    lam = 4 + int(math.floor(3.0 * math.log(d)))
    mu = lam // 2
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mu_eff = 1.0 / np.sum(w**2)
    c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d)
    sep = (d + 2.0) / 3.0
    c_1 = min(1.0, sep * 2.0 / ((d + 1.3) ** 2 + mu_eff))
    c_mu = min(1.0 - c_1, sep * 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
    while True:
        mean = _uniform(rng, d)
        sigma = 0.2 * (UPPER - LOWER)
        diag = np.ones(d)
        p_sigma = np.zeros(d)
        p_c = np.zeros(d)
        gen = 0
        while sigma * math.sqrt(diag.max()) > 1e-12 and diag.max() < 1e14 * diag.min():
            scale = np.sqrt(diag)
            xs = np.empty((lam, d))
            fs = np.empty(lam)
            for i in range(lam):
                xs[i] = _clamp(mean + sigma * scale * rng.standard_normal(d))
                fs[i] = obj(xs[i])
            order = np.argsort(fs, kind="stable")[:mu]
            ys = (xs[order] - mean) / sigma
            y_w = w @ ys
            mean = mean + sigma * y_w
            gen += 1
            p_sigma = (1 - c_sigma) * p_sigma + math.sqrt(c_sigma * (2 - c_sigma) * mu_eff) * y_w / scale
            norm_ps = float(np.linalg.norm(p_sigma))
            h_sigma = norm_ps / math.sqrt(1 - (1 - c_sigma) ** (2 * gen)) < (1.4 + 2.0 / (d + 1)) * chi_n
            p_c = (1 - c_c) * p_c + h_sigma * math.sqrt(c_c * (2 - c_c) * mu_eff) * y_w
            diag = ((1 - c_1 - c_mu) * diag
                    + c_1 * (p_c**2 + (not h_sigma) * c_c * (2 - c_c) * diag)
                    + c_mu * (w @ ys**2))
            sigma *= math.exp(min(1.0, (c_sigma / d_sigma) * (norm_ps / chi_n - 1.0)))


def differential_evolution(obj: CountingObjective, d: int, rng: np.random.Generator,
                           f_weight: float = 0.5, crossover: float = 0.9):
    """DE/rand/1/bin with population size 10*d."""
    npop = max(10 * d, 4)
    pop = rng.uniform(LOWER, UPPER, size=(npop, d))
    fit = np.array([obj(p) for p in pop])
    idx = np.arange(npop)
    while True:
        for i in range(npop):
            r1, r2, r3 = rng.choice(idx[idx != i], size=3, replace=False)
            mutant = pop[r1] + f_weight * (pop[r2] - pop[r3])
            cross = rng.random(d) < crossover
            cross[rng.integers(d)] = True
            trial = _clamp(np.where(cross, mutant, pop[i]))
            ft = obj(trial)
            if ft <= fit[i]:
                pop[i], fit[i] = trial, ft


def nelder_mead(obj: CountingObjective, d: int, rng: np.random.Generator):
    """Nelder-Mead simplex, restarted from a fresh random simplex on collapse."""
    alpha, gamma, rho, shrink = 1.0, 2.0, 0.5, 0.5
    while True:
        x0 = _uniform(rng, d)
        simplex = np.vstack([x0, _clamp(x0 + np.eye(d) * rng.choice([-1.0, 1.0], size=d))])
        values = np.array([obj(v) for v in simplex])
        while True:
            order = np.argsort(values, kind="stable")
            simplex, values = simplex[order], values[order]
            if np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)) < 1e-12:
                break
            centroid = simplex[:-1].mean(axis=0)
            xr = _clamp(centroid + alpha * (centroid - simplex[-1]))
            fr = obj(xr)
            if values[0] <= fr < values[-2]:
                simplex[-1], values[-1] = xr, fr
                continue
            if fr < values[0]:
                xe = _clamp(centroid + gamma * (xr - centroid))
                fe = obj(xe)
                if fe < fr:
                    simplex[-1], values[-1] = xe, fe
                else:
                    simplex[-1], values[-1] = xr, fr
                continue
            if fr < values[-1]:
                xc = _clamp(centroid + rho * (xr - centroid))
                fc = obj(xc)
                if fc <= fr:
                    simplex[-1], values[-1] = xc, fc
                    continue
            else:
                xc = _clamp(centroid + rho * (simplex[-1] - centroid))
                fc = obj(xc)
                if fc < values[-1]:
                    simplex[-1], values[-1] = xc, fc
                    continue
            for j in range(1, d + 1):
                simplex[j] = simplex[0] + shrink * (simplex[j] - simplex[0])
                values[j] = obj(simplex[j])


SOLVERS = {
    AlgorithmId.ES11: es_one_plus_one,
    AlgorithmId.DiagES: diag_es,
    AlgorithmId.DE: differential_evolution,
    AlgorithmId.NelderMead: nelder_mead,
}


def run_objective(algorithm, func, dimension: int, budget: int, seed: int) -> np.ndarray:
    """Run ``algorithm`` on an arbitrary callable; returns the best-so-far trace."""
    if budget < 1:
        raise ConfigError("budget must be at least 1")
    obj = CountingObjective(func, budget)
    rng = np.random.default_rng(seed)
    try:
        SOLVERS[AlgorithmId.parse(algorithm)](obj, dimension, rng)
    except _BudgetExhausted:
        pass
    return obj.trace


def run(algorithm, f: GeneratedFunction, budget: int, seed: int, run_index: int = 0) -> RunTrajectory:
    trace = run_objective(algorithm, lambda x: evaluate(f, x), f.dimension, budget, seed)
    trace.setflags(write=False)
    return RunTrajectory(f.id, AlgorithmId.parse(algorithm), run_index, int(seed), trace)


def run_seed(base_seed: int, function_id: int, algorithm_id, run_index: int) -> int:
    ss = np.random.SeedSequence(
        [int(base_seed), _RUN_TAG, int(function_id), int(algorithm_id), int(run_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def run_batch(algorithms: Iterable, functions: Iterable[GeneratedFunction], budget: int,
              n_runs: int, base_seed: int, executor=None) -> list[RunTrajectory]:
    """All ``n_runs`` runs for every (algorithm, function) pair, in key order.

    ``executor`` may be any object with a ``map`` method (e.g. a process pool).
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be at least 1")
    jobs = [
        (AlgorithmId.parse(a), f, budget, run_seed(base_seed, f.id, AlgorithmId.parse(a), r), r)
        for f in functions for a in algorithms for r in range(n_runs)
    ]
    mapper = map if executor is None else executor.map
    return list(mapper(_run_job, jobs))


def _run_job(job):
    return run(job[0], job[1], job[2], job[3], run_index=job[4])
