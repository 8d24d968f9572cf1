"""Reference methods from algorithm selection: SBS, VBS, SBP* and VBP."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, UsageError
from .optim import AlgorithmId
from .portfolio import PENALTY_COEFF, EafSource, Portfolio, greedy_build, perf

_SBP_TAG = 0x5B9


def singleton(algorithm, total_budget: int) -> Portfolio:
    alg = AlgorithmId.parse(algorithm)
    return Portfolio(((alg, int(total_budget)),), {"method": "singleton", "algorithm": alg.name})


def singleton_perf(function_id, algorithm, total_budget, eaf: EafSource) -> float:
    return perf([function_id], singleton(algorithm, total_budget), None, eaf)


def _argmax_first(values: Sequence[float]) -> int:
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def single_best_solver(train_functions, eaf: EafSource, total_budget: int,
                       algorithms=tuple(AlgorithmId), weights=None) -> AlgorithmId:
    """Algorithm with the best (weighted) mean full-budget performance.

    Ties go to the lowest algorithm id.
    """
    algorithms = sorted(AlgorithmId.parse(a) for a in algorithms)
    train_functions = list(train_functions)
    means = [perf(train_functions, singleton(a, total_budget), weights, eaf) for a in algorithms]
    return algorithms[_argmax_first(means)]


def virtual_best_solver(functions, eaf: EafSource, total_budget: int,
                        algorithms=tuple(AlgorithmId)) -> dict[int, AlgorithmId]:
    algorithms = sorted(AlgorithmId.parse(a) for a in algorithms)
    out = {}
    for f in functions:
        vals = [singleton_perf(f, a, total_budget, eaf) for a in algorithms]
        out[int(f)] = algorithms[_argmax_first(vals)]
    return out


def sample_subsets(train_functions, m: int, n_samples: int, seed: int) -> list[list[int]]:
    train = sorted(int(f) for f in train_functions)
    if len(train) < m:
        raise ConfigError(f"cannot sample subsets of {m} from {len(train)} training functions")
    if n_samples < 1 or m < 1:
        raise ConfigError("n_samples and m must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _SBP_TAG]))
    return [sorted(int(x) for x in rng.choice(train, size=m, replace=False)) for _ in range(n_samples)]


def sbp_star(train_functions, eaf: EafSource, total_budget: int, budgets,
             algorithms=tuple(AlgorithmId), n_samples: int = 50, m: int = 10, seed: int = 0,
             penalty_coeff: float = PENALTY_COEFF, return_candidates: bool = False):
    """Resampled approximation of the single best portfolio.

    Greedy portfolios are built on ``n_samples`` random subsets of size ``m``
    and the one with the best mean performance on the full training set is
    returned (first sampled wins ties).
    """
    train = sorted(int(f) for f in train_functions)
    subsets = sample_subsets(train, m, n_samples, seed)
    candidates, scores = [], []
    for i, sub in enumerate(subsets):
        port = greedy_build(sub, None, total_budget, budgets, algorithms, eaf,
                            penalty_coeff=penalty_coeff, provenance={"sample": i})
        candidates.append(port)
        scores.append(perf(train, port, None, eaf))
    best = _argmax_first(scores)
    chosen = Portfolio(candidates[best].pairs,
                       {**candidates[best].provenance, "method": "SBP*",
                        "train_perf": scores[best], "n_samples": n_samples, "m": m})
    if return_candidates:
        return chosen, candidates, scores
    return chosen


def virtual_best_portfolio(functions, eaf: EafSource, candidate_pool) -> dict[int, Portfolio]:
    """Per function, the pool member with the best performance on it alone.

    ``candidate_pool`` is either a sequence shared by every function or a
    callable ``function_id -> sequence``. Ties go to the earliest member.
    """
    out = {}
    for f in functions:
        pool = candidate_pool(f) if callable(candidate_pool) else candidate_pool
        pool = list(pool)
        if not pool:
            raise UsageError("virtual best portfolio needs a nonempty candidate pool")
        vals = [perf([f], p, None, eaf) for p in pool]
        out[int(f)] = pool[_argmax_first(vals)]
    return out


@dataclass
class BaselineReport:
    sbs_algorithm: AlgorithmId
    per_function_vbs: dict[int, AlgorithmId]
    sbp_star: Portfolio
    per_function_vbp: dict[int, Portfolio]
    per_function_perf: dict[tuple[str, int], float] = field(default_factory=dict)

    def mean_perf(self, method: str, functions) -> float:
        return float(np.mean([self.per_function_perf[(method, int(f))] for f in functions]))

    def to_dict(self) -> dict:
        return {
            "sbs_algorithm": self.sbs_algorithm.name,
            "per_function_vbs": {str(k): v.name for k, v in sorted(self.per_function_vbs.items())},
            "sbp_star": self.sbp_star.to_dict(),
            "per_function_vbp": {str(k): v.to_dict() for k, v in sorted(self.per_function_vbp.items())},
            "per_function_perf": [
                {"method": m, "function_id": f, "perf": v}
                for (m, f), v in sorted(self.per_function_perf.items())
            ],
        }
