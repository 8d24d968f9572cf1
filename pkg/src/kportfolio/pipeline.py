"""End-to-end stages: generate -> run -> evaluate -> report."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baseline import (BaselineReport, _argmax_first, sbp_star, single_best_solver, singleton,
                       singleton_perf, virtual_best_portfolio, virtual_best_solver)
from .config import Config
from .eaf import budget_grid, compute_eaf
from .errors import ConfigError, DataError, NotFoundError
from .features import (ELA_FEATURE_NAMES, extract_ela, extract_latent_perf, fit_standardizer,
                       latent_feature_names)
from .optim import run_batch
from .portfolio import EafTable, Portfolio, greedy_build, perf
from .selector import QUADRANTS, SelectionOutcome, build_ksbp_star, quadrant_summary, select_final
from .similarity import knn, weights
from .store import ExperimentStore, atomic_write, config_hash
from .suite import SuiteSpec, generate_suite

log = logging.getLogger(__name__)

HEADLINE_METHODS = ("SBS", "k-SBS", "VBS", "SBP*", "k-SBP*", "k-SBP", "VBP")
KNN_METHODS = ("k-SBS", "k-SBP*", "k-SBP")
REPORT_FILES = (
    "table_improvement.csv", "table_features.csv", "quadrants.csv", "sweep_k.csv",
    "weights_table.csv", "pairwise_vbs_vs_ksbp.csv", "per_function.csv", "selections.csv",
    "alignment.csv",
)


def _derive(seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def dimension_root(root, d: int) -> Path:
    return Path(root) / f"d{d}"


def open_dimension(config: Config, root, d: int, create: bool = True) -> ExperimentStore:
    T = config.total_budget(d)
    manifest = {
        "dimension": d,
        "master_seed": int(config.master_seed),
        "grids": {"B": [int(b) for b in budget_grid(T, config.n_budgets)],
                  "E": [float(e) for e in config.targets()]},
        "n_runs": config.n_runs,
        "algorithms": [a.name for a in config.algorithm_ids()],
        "config_hash": config_hash(config.dimension_config(d)),
    }
    if not create:
        store = ExperimentStore.open(dimension_root(root, d))
        if store.manifest.get("config_hash") != manifest["config_hash"]:
            raise ConfigError(f"store {store.root} was built with a different configuration")
        return store
    return ExperimentStore.open(dimension_root(root, d), manifest)


# -- generate -----------------------------------------------------------------------

def generate(config: Config, root) -> dict[int, str]:
    """Write suites for every configured dimension; returns suite digests."""
    config.validate()
    digests = {}
    for d in config.dims:
        store = open_dimension(config, root, d)
        suite = generate_suite(SuiteSpec(d, config.n_functions, config.train_fraction, config.master_seed),
                               config.supported_dims)
        text = suite.to_json()
        if store.has_suite():
            if store.get_suite().to_json() != text:
                    raise ConfigError(f"{store.root} already holds a different suite")
        else:
            store.put_suite(suite)
        digests[d] = hashlib.sha256(text.encode()).hexdigest()
        log.info("d=%d: %d functions (%d train / %d test)", d, len(suite.functions),
                 len(suite.train_ids), len(suite.test_ids))
    return digests


# -- run ----------------------------------------------------------------------------

def _function_runs(job):
    f, algs, T, n_runs, base_seed = job
    return f.id, run_batch(algs, [f], T, n_runs, base_seed)


def run(config: Config, root) -> None:
    """Optimizer runs, EAF matrices and feature vectors; completed keys are skipped."""
    config.validate()
    for d in config.dims:
        store = open_dimension(config, root, d)
        try:
            suite = store.get_suite()
        except NotFoundError:
            raise DataError(f"no suite for d={d} in {store.root}; run the 'generate' stage first") from None
        algs = config.algorithm_ids()
        T = config.total_budget(d)
        B = budget_grid(T, config.n_budgets)
        E = config.targets()
        base_seed = config.stage_seed("runs", d)
        todo = [f for f in suite.functions
                if not all(store.has_trajectories(f.id, a) for a in algs)]
        jobs = [(f, algs, T, config.n_runs, base_seed) for f in todo]
        log.info("d=%d: %d functions need runs", d, len(todo))
        if config.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(config.workers) as pool:
                results = pool.map(_function_runs, jobs, chunksize=max(1, len(jobs) // (4 * config.workers)))
                for fid, trajs in results:
                    _store_runs(store, fid, trajs)
        else:
            for job in jobs:
                _store_runs(store, *_function_runs(job))

        for f in suite.functions:
            for a in algs:
                if not store.has_eaf(f.id, a):
                    store.put_eaf(compute_eaf(store.get_trajectories(f.id, a), B, E))

        ela_seed = config.stage_seed("ela", d)
        if not store.has_features("ela"):
            vecs = [extract_ela(f, config.ela_samples_per_dim * d, _derive(ela_seed, f.id))
                    for f in suite.functions]
            store.put_features("ela", ELA_FEATURE_NAMES, vecs)
        if "latent_perf" in config.feature_kinds and not store.has_features("latent_perf"):
            vecs = [extract_latent_perf(f.id, store, T, algs) for f in suite.functions]
            store.put_features("latent_perf", latent_feature_names(algs), vecs)
        for kind in config.feature_kinds:
            feats = store.get_features(kind)
            store.put_standardizer(kind, fit_standardizer([feats[i] for i in suite.train_ids]))


def _store_runs(store, fid, trajs):
    by_alg = defaultdict(list)
    for t in trajs:
        by_alg[int(t.algorithm_id)].append(t)
    for a, ts in sorted(by_alg.items()):
        store.put_trajectories(fid, a, ts)


# -- evaluate -----------------------------------------------------------------------

@dataclass
class VariantResult:
    kind: str
    k: int
    scheme: str
    perf: dict = field(default_factory=lambda: {m: {} for m in KNN_METHODS})
    portfolios: dict = field(default_factory=lambda: {m: {} for m in KNN_METHODS})
    outcomes: list = field(default_factory=list)


@dataclass
class DimensionResult:
    dimension: int
    train_ids: list
    test_ids: list
    baseline: BaselineReport
    perf: dict            # method -> {fid: perf} on test
    portfolios: dict      # method -> {fid: Portfolio} on test
    variants: dict        # (kind, k, scheme) -> VariantResult
    train_perf: dict      # method -> {fid: perf} on train for SBS/VBS


def load_eaf_table(store: ExperimentStore, function_ids, algorithms) -> EafTable:
    table = EafTable()
    for f in function_ids:
        for a in algorithms:
            try:
                table.add(store.get_eaf(f, a))
            except NotFoundError:
                raise DataError(f"EAF matrix for function {f}, algorithm {a.name} missing in "
                                f"{store.root}; run the 'run' stage first") from None
    return table


def evaluate_dimension(config: Config, store: ExperimentStore) -> DimensionResult:
    d = int(store.manifest["dimension"])
    try:
        suite = store.get_suite()
    except NotFoundError:
        raise DataError(f"no suite in {store.root}; run the 'generate' stage first") from None
    algs = config.algorithm_ids()
    T = config.total_budget(d)
    B = budget_grid(T, config.n_budgets)
    train, test = list(suite.train_ids), list(suite.test_ids)
    table = load_eaf_table(store, range(len(suite.functions)), algs)

    sbs = single_best_solver(train, table, T, algs)
    vbs_train = virtual_best_solver(train, table, T, algs)
    vbs = virtual_best_solver(test, table, T, algs)
    sbp = sbp_star(train, table, T, B, algs, config.sbp_samples, config.sbp_subset_size,
                   seed=config.stage_seed("sbp", d), penalty_coeff=config.penalty_coeff)
    store.put_portfolio("sbp_star", sbp)
    log.info("d=%d: SBS=%s, SBP*=%s", d, sbs.name, [(a.name, b) for a, b in sbp.pairs])

    perf_by = {m: {} for m in HEADLINE_METHODS}
    ports = {m: {} for m in HEADLINE_METHODS}
    for f in test:
        perf_by["SBS"][f] = singleton_perf(f, sbs, T, table)
        ports["SBS"][f] = singleton(sbs, T)
        perf_by["VBS"][f] = singleton_perf(f, vbs[f], T, table)
        ports["VBS"][f] = singleton(vbs[f], T)
        perf_by["SBP*"][f] = perf([f], sbp, None, table)
        ports["SBP*"][f] = sbp
    train_perf = {"SBS": {f: singleton_perf(f, sbs, T, table) for f in train},
                  "VBS": {f: singleton_perf(f, vbs_train[f], T, table) for f in train}}

    variants = {}
    produced: dict[tuple, Portfolio] = {}
    for kind in config.feature_kinds:
        try:
            feats = store.get_features(kind)
            std = store.get_standardizer(kind)
        except NotFoundError:
            raise DataError(f"{kind} features missing in {store.root}; run the 'run' stage first") from None
        train_vecs = {f: std.transform(feats[f]) for f in train}
        for k in config.k_values:
            hoods = {f: knn(std.transform(feats[f]), train_vecs, k) for f in test}
            for scheme in config.schemes:
                vr = VariantResult(kind, k, scheme)
                for f in test:
                    nb = hoods[f]
                    w = weights(scheme, nb)
                    nb_ids = list(nb.neighbor_ids)
                    local = [perf(nb_ids, singleton(a, T), w, table) for a in algs]
                    ksbs = algs[_argmax_first(local)]
                    ksbp = build_ksbp_star(nb, scheme, table, T, B, algs, config.penalty_coeff)
                    out = select_final(f, ksbp, sbp, nb, scheme, table)
                    vr.perf["k-SBS"][f] = singleton_perf(f, ksbs, T, table)
                    vr.perf["k-SBP*"][f] = out.final_perf_ksbp
                    vr.perf["k-SBP"][f] = out.final_perf_chosen
                    vr.portfolios["k-SBS"][f] = singleton(ksbs, T)
                    vr.portfolios["k-SBP*"][f] = ksbp
                    vr.portfolios["k-SBP"][f] = out.chosen_portfolio
                    vr.outcomes.append(out)
                    produced.setdefault(tuple(sorted(ksbp.pairs)), ksbp)
                variants[(kind, k, scheme)] = vr
    head = variants[("ela", config.default_k, config.default_scheme)]
    for m in KNN_METHODS:
        perf_by[m] = dict(head.perf[m])
        ports[m] = dict(head.portfolios[m])

    shared_pool = [singleton(a, T) for a in algs] + [sbp] + list(produced.values())

    def pool_for(f):
        own = greedy_build([f], None, T, B, algs, table, config.penalty_coeff,
                           provenance={"method": "per-function greedy"})
        return shared_pool + [own]

    vbp = virtual_best_portfolio(test, table, pool_for)
    for f in test:
        perf_by["VBP"][f] = perf([f], vbp[f], None, table)
        ports["VBP"][f] = vbp[f]

    report = BaselineReport(sbs, vbs, sbp, vbp)
    for m in ("SBS", "VBS", "SBP*", "VBP"):
        for f in test:
            report.per_function_perf[(m, f)] = perf_by[m][f]
    for m in ("SBS", "VBS"):
        for f in train:
            report.per_function_perf[(f"{m}@train", f)] = train_perf[m][f]
    return DimensionResult(d, train, test, report, perf_by, ports, variants, train_perf)


# -- reporting ----------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def relative_improvement(perfs: dict, sbs: dict) -> dict:
    """Percent improvement over the SBS per function; SBS perf of 0 is skipped."""
    return {f: 100.0 * (p - sbs[f]) / sbs[f] for f, p in perfs.items() if sbs[f] > 1e-12}


def _stats(values) -> tuple[float, float]:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    return float(v.mean()), float(v.std())


def _improvements(results, getter):
    """Per-dimension and pooled improvement lists for one method."""
    per_dim, pooled = {}, []
    for r in results:
        vals = list(relative_improvement(getter(r), r.perf["SBS"]).values())
        per_dim[r.dimension] = vals
        pooled += vals
    return per_dim, pooled


def _stat_cols(results, getter):
    per_dim, pooled = _improvements(results, getter)
    cols = []
    for r in results:
        cols += list(_stats(per_dim[r.dimension]))
    return cols + list(_stats(pooled))


def _dim_header(results):
    head = []
    for r in results:
        head += [f"d{r.dimension}_mean", f"d{r.dimension}_std"]
    return head + ["all_mean", "all_std"]


def alignment_checks(config: Config, results) -> list[dict]:
    def mean_of(getter):
        return _stats(_improvements(results, getter)[1])[0]

    sbp = mean_of(lambda r: r.perf["SBP*"])
    vbs = mean_of(lambda r: r.perf["VBS"])
    key_ela = ("ela", config.default_k, config.default_scheme)
    key_lat = ("latent_perf", config.default_k, config.default_scheme)
    checks = [
        {"check": "sbp_star_improves_on_sbs", "value": sbp, "reference": 0.0, "gating": True,
         "pass": bool(sbp > 0)},
        {"check": "sbp_star_gain_exceeds_vbs_gain", "value": sbp, "reference": vbs, "gating": False,
         "pass": bool(sbp > vbs)},
    ]
    if all(key_lat in r.variants for r in results):
        ela = mean_of(lambda r: r.variants[key_ela].perf["k-SBS"])
        lat = mean_of(lambda r: r.variants[key_lat].perf["k-SBS"])
        checks.append({"check": "latent_ksbs_closer_to_vbs", "value": abs(vbs - lat),
                       "reference": abs(vbs - ela), "gating": False,
                       "pass": bool(abs(vbs - lat) <= abs(vbs - ela))})
        ela_p = mean_of(lambda r: r.variants[key_ela].perf["k-SBP"])
        lat_p = mean_of(lambda r: r.variants[key_lat].perf["k-SBP"])
        checks.append({"check": "latent_ksbp_at_least_ela_ksbp", "value": lat_p, "reference": ela_p,
                       "gating": False, "pass": bool(lat_p >= ela_p)})
    return checks


def write_reports(config: Config, results: list[DimensionResult], out_dir) -> dict[str, str]:
    out_dir = Path(out_dir)
    files = {}
    dh = _dim_header(results)
    key = ("ela", config.default_k, config.default_scheme)

    files["table_improvement.csv"] = _csv(
        [[m, *_stat_cols(results, lambda r, m=m: r.perf[m])] for m in HEADLINE_METHODS],
        ["method", *dh])

    rows = [["-", "VBS", *_stat_cols(results, lambda r: r.perf["VBS"])]]
    for kind in config.feature_kinds:
        vk = (kind, config.default_k, config.default_scheme)
        for m in KNN_METHODS:
            rows.append([kind, m, *_stat_cols(results, lambda r, m=m, vk=vk: r.variants[vk].perf[m])])
    files["table_features.csv"] = _csv(rows, ["features", "method", *dh])

    rows = []
    for r in results:
        for (kind, k, scheme), vr in r.variants.items():
            q = quadrant_summary(vr.outcomes)
            rows.append([r.dimension, kind, k, scheme, *(q[x] for x in QUADRANTS), q["LL"] + q["LG"]])
    files["quadrants.csv"] = _csv(rows, ["dimension", "features", "k", "scheme", *QUADRANTS, "local_wins"])

    rows = []
    for kind in config.feature_kinds:
        for scheme in config.schemes:
            for k in config.k_values:
                for m in KNN_METHODS:
                    rows.append([kind, scheme, k, m, *_stat_cols(
                        results, lambda r, m=m, vk=(kind, k, scheme): r.variants[vk].perf[m])])
    files["sweep_k.csv"] = _csv(rows, ["features", "scheme", "k", "method", *dh])

    rows = []
    scheme_head = []
    for s in config.schemes:
        scheme_head += [f"{s}_mean", f"{s}_std"]
    for kind in config.feature_kinds:
        for m in ("k-SBP*", "k-SBP"):
            for r in results:
                row = [r.dimension, kind, m]
                for s in config.schemes:
                    vals = relative_improvement(r.variants[(kind, config.default_k, s)].perf[m], r.perf["SBS"])
                    row += list(_stats(vals.values()))
                rows.append(row)
            row = ["all", kind, m]
            for s in config.schemes:
                pooled = _improvements(results, lambda r, vk=(kind, config.default_k, s): r.variants[vk].perf[m])[1]
                row += list(_stats(pooled))
            rows.append(row)
    files["weights_table.csv"] = _csv(rows, ["dimension", "features", "method", *scheme_head])

    rows = [[r.dimension, f, r.perf["VBS"][f], r.perf["k-SBP"][f], r.perf["SBP*"][f]]
            for r in results for f in r.test_ids]
    files["pairwise_vbs_vs_ksbp.csv"] = _csv(rows, ["dimension", "function_id", "perf_vbs", "perf_ksbp",
                                                    "perf_sbp_star"])

    rows = []
    for r in results:
        for m in HEADLINE_METHODS:
            rel = relative_improvement(r.perf[m], r.perf["SBS"])
            for f in r.test_ids:
                rows.append([r.dimension, f, m, r.perf[m][f], rel.get(f, float("nan"))])
    files["per_function.csv"] = _csv(rows, ["dimension", "function_id", "method", "perf", "rel_improvement"])

    rows = []
    for r in results:
        for (kind, k, scheme), vr in r.variants.items():
            for o in vr.outcomes:
                rows.append([r.dimension, kind, k, scheme, o.target_function_id, o.local_perf_ksbp,
                             o.local_perf_sbp, o.chosen, o.final_perf_ksbp, o.final_perf_sbp, o.quadrant])
    files["selections.csv"] = _csv(rows, ["dimension", "features", "k", "scheme", "function_id",
                                          "local_perf_ksbp", "local_perf_sbp", "chosen",
                                          "final_perf_ksbp", "final_perf_sbp", "quadrant"])

    checks = alignment_checks(config, results)
    files["alignment.csv"] = _csv([[c["check"], c["value"], c["reference"], c["gating"], c["pass"]]
                                   for c in checks], ["check", "value", "reference", "gating", "pass"])

    algs = config.algorithm_ids()
    port_doc = {}
    for r in results:
        fractions = {}
        for m in HEADLINE_METHODS:
            fr = [r.portfolios[m][f].budget_fractions(algs) for f in r.test_ids]
            fractions[m] = {a.name: float(np.mean([x[a.name] for x in fr])) for a in algs}
        port_doc[f"d{r.dimension}"] = {"budget_fractions": fractions,
                                       "sbp_star": r.baseline.sbp_star.to_dict(),
                                       "sbs": r.baseline.sbs_algorithm.name}
    files["portfolios.json"] = json.dumps(port_doc, indent=1, sort_keys=True)
    files["baselines.json"] = json.dumps({f"d{r.dimension}": r.baseline.to_dict() for r in results},
                                         indent=1, sort_keys=True)
    files["neighborhoods.json"] = json.dumps({
        f"d{r.dimension}": {kind: [o.neighborhood.to_dict()
                                   for o in r.variants[(kind, config.default_k, config.default_scheme)].outcomes]
                            for kind in config.feature_kinds}
        for r in results}, indent=1, sort_keys=True)
    files["selections.json"] = json.dumps({
        f"d{r.dimension}": [_outcome_dict(o) for o in r.variants[key].outcomes] for r in results},
        indent=1, sort_keys=True)

    for name, text in files.items():
        atomic_write(out_dir / name, text)
    return files


def _outcome_dict(o: SelectionOutcome) -> dict:
    return {
        "target_function_id": o.target_function_id, "scheme": o.scheme,
        "neighborhood": o.neighborhood.to_dict(),
        "ksbp_star": o.ksbp_star.to_dict(), "sbp_star": o.sbp_star_ref.to_dict(),
        "local_perf_ksbp": o.local_perf_ksbp, "local_perf_sbp": o.local_perf_sbp,
        "chosen": o.chosen, "final_perf_ksbp": o.final_perf_ksbp,
        "final_perf_sbp": o.final_perf_sbp, "quadrant": o.quadrant,
    }


def evaluate(config: Config, root) -> list[DimensionResult]:
    config.validate()
    results = []
    for d in config.dims:
        path = dimension_root(root, d)
        if not (path / "manifest.json").exists():
            raise DataError(f"no store for d={d} at {path}; run the 'generate' and 'run' stages first")
        results.append(evaluate_dimension(config, open_dimension(config, root, d, create=False)))
    write_reports(config, results, Path(root) / "reports")
    return results


def run_all(config: Config, root) -> list[DimensionResult]:
    generate(config, root)
    run(config, root)
    return evaluate(config, root)
