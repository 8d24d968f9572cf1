"""Landscape features: an ELA-lite descriptor set, the performance-based
latent oracle, and train-only standardization.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.spatial.distance import pdist

from .errors import ConfigError, FormatError, UsageError
from .optim import AlgorithmId
from .suite import LOWER, UPPER, GeneratedFunction, evaluate

ELA_FEATURE_NAMES = (
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.quad_w_interact.adj_r2",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.quad_simple.cond",
    "disp.ratio_mean_10",
    "disp.ratio_mean_25",
    "fdc.corr",
    "ela_level.mmce_nc_50",
)
# Values used when every sampled fitness is identical.
DEGENERATE_ELA = {
    "ela_distr.skewness": 0.0,
    "ela_distr.kurtosis": 0.0,
    "ela_meta.lin_simple.adj_r2": 0.0,
    "ela_meta.quad_w_interact.adj_r2": 0.0,
    "ela_meta.lin_simple.coef.max_by_min": 1.0,
    "ela_meta.quad_simple.cond": 1.0,
    "disp.ratio_mean_10": 1.0,
    "disp.ratio_mean_25": 1.0,
    "fdc.corr": 0.0,
    "ela_level.mmce_nc_50": 0.0,
}
SAMPLES_PER_DIM = 50
_TINY = 1e-12
_ELA_TAG = 0xE1A
KINDS = ("ela", "latent_perf")


def latent_feature_names(algorithms=tuple(AlgorithmId)) -> tuple[str, ...]:
    return tuple(f"final_attainment.{AlgorithmId.parse(a).name}" for a in algorithms)


@dataclass(frozen=True)
class FeatureVector:
    function_id: int
    values: np.ndarray
    kind: str = "ela"


def _r2(design, y):
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_tot = np.sum((y - y.mean()) ** 2)
    return 1.0 - np.sum(resid**2) / ss_tot, coef


def _adjusted(r2, n, p):
    # p excludes the intercept
    return 1.0 - (1.0 - r2) * (n - 1) / max(n - p - 1, 1)


def _quadratic_design(x, interactions):
    n, d = x.shape
    cols = [np.ones(n), *x.T, *(x**2).T]
    if interactions:
        cols += [x[:, i] * x[:, j] for i in range(d) for j in range(i + 1, d)]
    return np.column_stack(cols)


def ela_from_sample(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """ELA-lite features of a sample ``(x, y)``; order follows ``ELA_FEATURE_NAMES``."""
    n, d = x.shape
    if np.ptp(y) == 0.0:
        return np.array([DEGENERATE_ELA[k] for k in ELA_FEATURE_NAMES])
    skew = float(stats.skew(y))
    kurt = float(stats.kurtosis(y))

    # meta-models see the decompressed fitness so a single-component
    # function exposes its base landscape
    y_meta = np.expm1(y)
    lin = np.column_stack([np.ones(n), x])
    r2_lin, coef_lin = _r2(lin, y_meta)
    abs_lin = np.abs(coef_lin[1:])
    lin_ratio = abs_lin.max() / max(abs_lin.min(), _TINY)

    quad_full = _quadratic_design(x, interactions=True)
    r2_quad, _ = _r2(quad_full, y_meta)
    _, coef_simple = _r2(_quadratic_design(x, interactions=False), y_meta)
    abs_sq = np.abs(coef_simple[1 + d:])
    cond = abs_sq.max() / max(abs_sq.min(), _TINY)

    order = np.argsort(y, kind="stable")
    mean_all = pdist(x).mean()
    disp = []
    for q in (0.10, 0.25):
        best = x[order[: max(2, int(np.ceil(q * n)))]]
        disp.append(pdist(best).mean() / mean_all)

    dist_best = np.linalg.norm(x - x[order[0]], axis=1)
    fdc = float(np.corrcoef(y, dist_best)[0, 1]) if np.ptp(dist_best) > 0 else 0.0

    below = y < np.median(y)
    if below.all() or not below.any():
        mmce = 0.0
    else:
        c1, c0 = x[below].mean(axis=0), x[~below].mean(axis=0)
        pred = np.linalg.norm(x - c1, axis=1) < np.linalg.norm(x - c0, axis=1)
        mmce = float(np.mean(pred != below))

    feats = np.array([
        skew, kurt,
        _adjusted(r2_lin, n, d), _adjusted(r2_quad, n, quad_full.shape[1] - 1),
        lin_ratio, cond, disp[0], disp[1], fdc, mmce,
    ])
    return np.where(np.isfinite(feats), feats, 0.0)


def sample_points(dimension: int, n_samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _ELA_TAG]))
    return rng.uniform(LOWER, UPPER, size=(n_samples, dimension))


def extract_ela(f: GeneratedFunction, n_samples: int | None = None, seed: int = 0) -> FeatureVector:
    d = f.dimension
    n_samples = SAMPLES_PER_DIM * d if n_samples is None else int(n_samples)
    if n_samples < 10 * d:
        raise ConfigError(f"ELA needs at least {10 * d} samples in dimension {d}")
    x = sample_points(d, n_samples, seed)
    y = np.array([evaluate(f, xi) for xi in x])
    return FeatureVector(f.id, ela_from_sample(x, y), "ela")


def extract_latent_perf(function_id: int, eaf, total_budget: int,
                        algorithms=tuple(AlgorithmId)) -> FeatureVector:
    """Mean attainment over all targets at the full budget, one entry per algorithm."""
    vals = [eaf.get_eaf(function_id, a).at_budget(total_budget).mean() for a in algorithms]
    return FeatureVector(int(function_id), np.array(vals, dtype=np.float64), "latent_perf")


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray  # population std; 0 marks a degenerate feature

    @classmethod
    def fit(cls, train_vectors) -> "Standardizer":
        mat = _as_matrix(train_vectors)
        if mat.shape[0] < 2:
            raise UsageError("standardization needs at least 2 training vectors")
        std = mat.std(axis=0)
        std[std < _TINY] = 0.0
        return cls(mat.mean(axis=0), std)

    def transform(self, v):
        vals = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
        if vals.shape[-1] != self.mean.shape[0]:
            raise UsageError(f"vector of length {vals.shape[-1]}, standardizer fit on {self.mean.shape[0]}")
        safe = np.where(self.std > 0, self.std, 1.0)
        out = np.where(self.std > 0, (vals - self.mean) / safe, 0.0)
        if isinstance(v, FeatureVector):
            return FeatureVector(v.function_id, out, v.kind)
        return out

    def to_json(self) -> str:
        return json.dumps({"mean": self.mean.tolist(), "std": self.std.tolist()}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Standardizer":
        try:
            doc = json.loads(text)
            mean, std = np.array(doc["mean"], dtype=float), np.array(doc["std"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed standardizer: {exc}") from exc
        if mean.shape != std.shape:
            raise FormatError("standardizer mean/std lengths differ")
        return cls(mean, std)


def fit_standardizer(train_vectors) -> Standardizer:
    return Standardizer.fit(train_vectors)


def _as_matrix(vectors) -> np.ndarray:
    rows = [v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=float) for v in vectors]
    if len({r.shape for r in rows}) > 1:
        raise UsageError("feature vectors have different lengths")
    return np.vstack(rows)
