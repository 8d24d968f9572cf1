"""Experiment configuration with desk-scale defaults."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .features import KINDS
from .optim import AlgorithmId
from .similarity import SCHEMES
from .suite import SUPPORTED_DIMENSIONS

_STAGE_TAGS = {"runs": 1, "ela": 2, "sbp": 3}

PAPER_SCALE = {
    "dims": [2, 5, 10],
    "n_functions": 1000,
    "train_fraction": 0.9,
    "budget_per_dim": 2000,
}


@dataclass
class Config:
    dims: list[int] = field(default_factory=lambda: [2])
    n_functions: int = 80
    train_fraction: float = 0.75
    master_seed: int = 0
    budget_per_dim: int = 200
    n_runs: int = 10
    n_budgets: int = 50
    target_exponents: tuple[float, float] = (2.0, -8.0)
    n_targets: int = 51
    algorithms: list[str] = field(default_factory=lambda: [a.name for a in AlgorithmId])
    penalty_coeff: float = 0.1
    sbp_samples: int = 50
    sbp_subset_size: int = 10
    k_values: list[int] = field(default_factory=lambda: [1, 2, 3, 5, 7, 10])
    default_k: int = 10
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))
    default_scheme: str = "eq"
    feature_kinds: list[str] = field(default_factory=lambda: list(KINDS))
    ela_samples_per_dim: int = 50
    supported_dims: list[int] = field(default_factory=lambda: list(SUPPORTED_DIMENSIONS))
    workers: int = 1

    def total_budget(self, dimension: int) -> int:
        return self.budget_per_dim * dimension

    def targets(self) -> np.ndarray:
        hi, lo = self.target_exponents
        return np.logspace(hi, lo, self.n_targets)

    def algorithm_ids(self) -> list[AlgorithmId]:
        return sorted(AlgorithmId.parse(a) for a in self.algorithms)

    def stage_seed(self, stage: str, dimension: int) -> int:
        ss = np.random.SeedSequence([int(self.master_seed), _STAGE_TAGS[stage], int(dimension)])
        return int(ss.generate_state(1, np.uint64)[0])

    def validate(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        for d in self.dims:
            if d not in self.supported_dims:
                raise ConfigError(f"dimension {d} is not supported (allowed: {self.supported_dims})")
            if self.total_budget(d) % self.n_budgets:
                raise ConfigError(f"T={self.total_budget(d)} for d={d} is not a multiple of n_budgets={self.n_budgets}")
        if not self.algorithms:
            raise ConfigError("algorithm set is empty")
        self.algorithm_ids()
        for s in [*self.schemes, self.default_scheme]:
            if s not in SCHEMES:
                raise ConfigError(f"unknown weighting scheme {s!r}")
        for kind in self.feature_kinds:
            if kind not in KINDS:
                raise ConfigError(f"unknown feature kind {kind!r}")
        if "ela" not in self.feature_kinds:
            raise ConfigError("the ela feature kind is required")
        if self.default_scheme not in self.schemes:
            raise ConfigError("default_scheme must be among the configured schemes")
        if self.default_k not in self.k_values:
            raise ConfigError("default_k must be among the configured k_values")
        n_train = int(np.floor(self.n_functions * self.train_fraction))
        if max(self.k_values) >= n_train or min(self.k_values) < 1:
            raise ConfigError(f"k values must lie in [1, {n_train - 1}]")
        if self.sbp_subset_size > n_train:
            raise ConfigError("SBP* subset size exceeds the training set")
        if self.n_runs < 1 or self.workers < 1:
            raise ConfigError("n_runs and workers must be positive")
        return self

    def dimension_config(self, dimension: int) -> dict:
        """Everything that determines a dimension's store contents."""
        doc = dataclasses.asdict(self)
        for key in ("dims", "workers", "supported_dims"):
            doc.pop(key)
        doc["dimension"] = dimension
        doc["target_exponents"] = list(doc["target_exponents"])
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Config":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        if "target_exponents" in doc:
            doc["target_exponents"] = tuple(doc["target_exponents"])
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "Config":
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except ValueError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)
