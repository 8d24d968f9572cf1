"""Reproducible generator of blended benchmark functions with a known optimum.

Each generated function is a weighted sum ``sum_j w_j * log1p(base_j(R_j (x - x_opt)))``
over a few randomly chosen base functions. All components share ``x_opt``,
so the optimum value is exactly 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, FormatError, UsageError

BASE_FUNCTIONS = (
    "sphere",
    "ellipsoid",
    "rastrigin",
    "rosenbrock-rotated",
    "attractive-sector",
    "different-powers",
    "schaffer",
    "bent-cigar",
)
LOWER, UPPER = -5.0, 5.0
OPT_BOUND = 4.0
MIN_ACTIVE, MAX_ACTIVE = 2, 5
SUPPORTED_DIMENSIONS = (2, 5, 10)

_SPLIT_TAG = 0x5917
_FUNC_TAG = 0xF0C7


def random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR of a Gaussian draw."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class GeneratedFunction:
    id: int
    dimension: int
    component_weights: np.ndarray  # length len(BASE_FUNCTIONS), zeros for inactive
    x_opt: np.ndarray
    rng_seed: int
    component_rotations: np.ndarray = field(repr=False, compare=False)
    f_opt: float = 0.0

    def __post_init__(self):
        for arr in (self.component_weights, self.x_opt, self.component_rotations):
            arr.setflags(write=False)
        active = np.flatnonzero(self.component_weights > 0.0)
        object.__setattr__(self, "_ids", active.astype(np.int64))
        object.__setattr__(self, "_w", np.ascontiguousarray(self.component_weights[active]))
        object.__setattr__(self, "_rot", np.ascontiguousarray(self.component_rotations[active]))

    @classmethod
    def from_seed(cls, id: int, dimension: int, seed: int, *, weights=None, x_opt=None):
        """Regenerate a function from its seed.

        ``weights`` and ``x_opt`` may be given to check a stored record
        against the regeneration; they must then match exactly.
        """
        rng = np.random.default_rng(seed)
        n_base = len(BASE_FUNCTIONS)
        n_active = int(rng.integers(MIN_ACTIVE, MAX_ACTIVE + 1))
        active = np.sort(rng.choice(n_base, size=n_active, replace=False))
        raw = rng.uniform(0.0, 1.0, size=n_active)
        w = np.zeros(n_base)
        w[active] = raw / raw.sum()
        w /= w.sum()
        xo = rng.uniform(-OPT_BOUND, OPT_BOUND, size=dimension)
        rotations = np.stack([random_rotation(rng, dimension) for _ in range(n_base)])
        if weights is not None and not np.array_equal(np.asarray(weights, dtype=float), w):
            raise FormatError(f"function {id}: stored weights disagree with seed {seed}")
        if x_opt is not None and not np.array_equal(np.asarray(x_opt, dtype=float), xo):
            raise FormatError(f"function {id}: stored x_opt disagrees with seed {seed}")
        return cls(id=id, dimension=dimension, component_weights=w, x_opt=xo,
                   rng_seed=int(seed), component_rotations=rotations)

    @classmethod
    def single(cls, base: str, dimension: int, x_opt, *, id: int = 0, rotation=None):
        """A one-component function, mostly useful for tests and calibration."""
        n_base = len(BASE_FUNCTIONS)
        w = np.zeros(n_base)
        w[BASE_FUNCTIONS.index(base)] = 1.0
        rot = np.tile(np.eye(dimension), (n_base, 1, 1))
        if rotation is not None:
            rot[BASE_FUNCTIONS.index(base)] = rotation
        return cls(id=id, dimension=dimension, component_weights=w,
                   x_opt=np.asarray(x_opt, dtype=float).copy(), rng_seed=0,
                   component_rotations=rot)

    @property
    def active_components(self) -> list[str]:
        return [BASE_FUNCTIONS[i] for i in self._ids]

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def to_record(self) -> dict:
        return {"id": self.id, "weights": self.component_weights.tolist(),
                "seed": self.rng_seed, "x_opt": self.x_opt.tolist()}


def evaluate(f: GeneratedFunction, x) -> float:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != f.dimension:
        raise UsageError(f"expected a vector of length {f.dimension}, got shape {x.shape}")
    return kernels.combo_eval(x, f.x_opt, f._ids, f._w, f._rot)


@dataclass(frozen=True)
class SuiteSpec:
    dimension: int
    n_functions: int
    train_fraction: float = 0.9
    master_seed: int = 0

    def validate(self, supported=SUPPORTED_DIMENSIONS):
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise ConfigError(f"dimension must be a positive integer, got {self.dimension!r}")
        if supported is not None and self.dimension not in supported:
            raise ConfigError(f"dimension {self.dimension} not in supported set {sorted(supported)}")
        if self.n_functions < 2:
            raise ConfigError("n_functions must be at least 2")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        n_train = int(np.floor(self.n_functions * self.train_fraction))
        if n_train < 1 or n_train >= self.n_functions:
            raise ConfigError("train/test split leaves an empty side")


def function_seed(master_seed: int, dimension: int, function_id: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), _FUNC_TAG, int(dimension), int(function_id)])
    return int(ss.generate_state(1, np.uint64)[0])


def split_ids(spec: SuiteSpec) -> tuple[list[int], list[int]]:
    n_train = int(np.floor(spec.n_functions * spec.train_fraction))
    rng = np.random.default_rng(
        np.random.SeedSequence([int(spec.master_seed), _SPLIT_TAG, int(spec.dimension)]))
    perm = rng.permutation(spec.n_functions)
    return sorted(int(i) for i in perm[:n_train]), sorted(int(i) for i in perm[n_train:])


@dataclass
class Suite:
    spec: SuiteSpec
    functions: list[GeneratedFunction]
    train_ids: list[int]
    test_ids: list[int]

    def __getitem__(self, function_id: int) -> GeneratedFunction:
        return self.functions[function_id]

    def to_json(self) -> str:
        doc = {
            "dimension": self.spec.dimension,
            "master_seed": self.spec.master_seed,
            "n_functions": self.spec.n_functions,
            "train_fraction": self.spec.train_fraction,
            "train_ids": self.train_ids,
            "test_ids": self.test_ids,
            "functions": [f.to_record() for f in self.functions],
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Suite":
        try:
            doc = json.loads(text)
            spec = SuiteSpec(dimension=int(doc["dimension"]), n_functions=int(doc["n_functions"]),
                             train_fraction=float(doc["train_fraction"]),
                             master_seed=int(doc["master_seed"]))
            functions = [
                GeneratedFunction.from_seed(int(r["id"]), spec.dimension, int(r["seed"]),
                                            weights=r["weights"], x_opt=r["x_opt"])
                for r in doc["functions"]
            ]
            train_ids, test_ids = list(doc["train_ids"]), list(doc["test_ids"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed suite document: {exc}") from exc
        if len(functions) != spec.n_functions:
            raise FormatError("suite document function count does not match header")
        return cls(spec, functions, train_ids, test_ids)


def generate_suite(spec: SuiteSpec, supported_dimensions=SUPPORTED_DIMENSIONS) -> Suite:
    spec.validate(supported_dimensions)
    functions = [
        GeneratedFunction.from_seed(i, spec.dimension, function_seed(spec.master_seed, spec.dimension, i))
        for i in range(spec.n_functions)
    ]
    train_ids, test_ids = split_ids(spec)
    return Suite(spec, functions, train_ids, test_ids)
