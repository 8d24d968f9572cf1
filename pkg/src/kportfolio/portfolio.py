"""Portfolios of (algorithm, budget) pairs, their performance metric, and the
penalized greedy construction procedure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from . import kernels
from .eaf import EafMatrix
from .errors import DataError, FormatError, NotFoundError, UsageError
from .optim import AlgorithmId

PENALTY_COEFF = 0.1
TIE_TOL = 1e-12


class EafSource(Protocol):
    def get_eaf(self, function_id: int, algorithm_id) -> EafMatrix: ...


class EafTable:
    """In-memory EAF lookup keyed by (function_id, algorithm_id)."""

    def __init__(self, matrices: Iterable[EafMatrix] = ()):
        self._data: dict[tuple[int, int], EafMatrix] = {}
        for m in matrices:
            self.add(m)

    def add(self, m: EafMatrix):
        self._data[(int(m.function_id), int(m.algorithm_id))] = m

    def get_eaf(self, function_id, algorithm_id) -> EafMatrix:
        try:
            return self._data[(int(function_id), int(algorithm_id))]
        except KeyError:
            raise NotFoundError(
                f"no EAF matrix for function {function_id}, algorithm {algorithm_id}") from None

    def __len__(self):
        return len(self._data)

    def __iter__(self):
        return iter(self._data.values())


@dataclass(frozen=True)
class Portfolio:
    """Multiset of (algorithm, budget) pairs kept in insertion order."""

    pairs: tuple[tuple[AlgorithmId, int], ...] = ()
    provenance: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(
            self, "pairs", tuple((AlgorithmId(int(a)), int(b)) for a, b in self.pairs))

    @property
    def total_budget(self) -> int:
        return sum(b for _, b in self.pairs)

    def extend(self, pair) -> "Portfolio":
        return Portfolio(self.pairs + ((AlgorithmId(int(pair[0])), int(pair[1])),), self.provenance)

    def __len__(self):
        return len(self.pairs)

    def same_multiset(self, other: "Portfolio") -> bool:
        return sorted(self.pairs) == sorted(other.pairs)

    def budget_fractions(self, algorithms=tuple(AlgorithmId)) -> dict[str, float]:
        total = self.total_budget
        out = {AlgorithmId(a).name: 0.0 for a in algorithms}
        for a, b in self.pairs:
            out[a.name] = out.get(a.name, 0.0) + (b / total if total else 0.0)
        return out

    def to_dict(self) -> dict:
        return {
            "pairs": [{"algorithm": a.name, "budget": b} for a, b in self.pairs],
            "total_budget": self.total_budget,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Portfolio":
        try:
            pairs = tuple((AlgorithmId[p["algorithm"]], int(p["budget"])) for p in doc["pairs"])
            port = cls(pairs, dict(doc.get("provenance", {})))
            stated = doc.get("total_budget", port.total_budget)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed portfolio document: {exc}") from exc
        if stated != port.total_budget:
            raise FormatError("portfolio total_budget does not match its pairs")
        return port


def normalize_weights(weights, k: int) -> np.ndarray:
    if weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (k,):
        raise UsageError(f"{w.size} weights given for {k} functions")
    if np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
        raise UsageError("weights must be finite, nonnegative and not all zero")
    return w / w.sum()


def perf(functions: Sequence[int], portfolio: Portfolio, weights, eaf: EafSource) -> float:
    """Weighted mean probability that the portfolio attains a target, over targets
    and functions. Runs in the portfolio are treated as independent attempts.
    """
    functions = list(functions)
    if not functions:
        raise UsageError("perf needs at least one function")
    w = normalize_weights(weights, len(functions))
    if not portfolio.pairs:
        return 0.0
    pairs = sorted(portfolio.pairs)  # canonical order: exact permutation invariance
    total = 0.0
    for wi, fid in zip(w, functions):
        miss = None
        for alg, b in pairs:
            col = 1.0 - eaf.get_eaf(fid, alg).at_budget(b)
            miss = col.copy() if miss is None else miss * col
        total += wi * (1.0 - miss).mean()
    return float(total)


def penalty(budget: int, total_budget: int, penalty_coeff: float = PENALTY_COEFF) -> float:
    return penalty_coeff * (budget / total_budget) ** 2


def score(portfolio: Portfolio, pair, functions, weights, total_budget: int, eaf: EafSource,
          penalty_coeff: float = PENALTY_COEFF) -> float:
    """Penalized performance of ``portfolio`` extended by ``pair``."""
    return perf(functions, portfolio.extend(pair), weights, eaf) - penalty(
        pair[1], total_budget, penalty_coeff)


def eaf_tensor(eaf: EafSource, functions: Sequence[int], algorithms: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Stack matrices into shape (k, |A|, |B|, |E|); returns (tensor, budgets)."""
    mats = [[eaf.get_eaf(f, a) for a in algorithms] for f in functions]
    budgets = mats[0][0].budgets
    for row in mats:
        for m in row:
            if not np.array_equal(m.budgets, budgets) or m.values.shape != mats[0][0].values.shape:
                raise DataError("EAF matrices use inconsistent grids")
    return np.array([[m.values for m in row] for row in mats], dtype=np.float64), budgets


def pick_candidate(scores: np.ndarray, tol: float = TIE_TOL) -> tuple[int, int]:
    """Index (algorithm, budget) of the best score; near-ties within ``tol``
    go to the smallest budget, then the lowest algorithm index.
    """
    best = scores.max()
    tied = scores >= best - tol
    col = int(np.flatnonzero(tied.any(axis=0))[0])
    row = int(np.flatnonzero(tied[:, col])[0])
    return row, col


def greedy_build(functions: Sequence[int], weights, total_budget: int, budgets, algorithms,
                 eaf: EafSource, penalty_coeff: float = PENALTY_COEFF,
                 provenance: dict | None = None) -> Portfolio:
    """Add the best-scoring feasible (algorithm, budget) pair until nothing fits."""
    functions = list(functions)
    algorithms = [AlgorithmId.parse(a) for a in algorithms]
    if not algorithms:
        raise UsageError("algorithm set is empty")
    if not functions:
        raise UsageError("greedy_build needs at least one function")
    budgets = np.asarray(budgets, dtype=np.int64)
    w = normalize_weights(weights, len(functions))
    af, grid = eaf_tensor(eaf, functions, algorithms)
    if not np.array_equal(grid, budgets):
        raise DataError("EAF budget grid differs from the requested grid")
    comp = 1.0 - af
    miss = np.ones((len(functions), af.shape[3]))
    pen = penalty_coeff * (budgets / total_budget) ** 2
    pairs = []
    remaining = int(total_budget)
    while True:
        nb = int(np.searchsorted(budgets, remaining, side="right"))
        if nb == 0:
            break
        scores = kernels.candidate_perf(miss, comp, w, nb) - pen[:nb]
        a, j = pick_candidate(scores)
        pairs.append((algorithms[a], int(budgets[j])))
        miss = miss * comp[:, a, j, :]
        remaining -= int(budgets[j])
    prov = {"method": "greedy", "function_set": functions,
            "weights": [float(x) for x in w], "penalty_coeff": penalty_coeff}
    if provenance:
        prov.update(provenance)
    return Portfolio(tuple(pairs), prov)
