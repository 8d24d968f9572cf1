import csv
import json

import pytest

from kportfolio import pipeline
from kportfolio.cli import main
from kportfolio.config import Config
from kportfolio.store import ExperimentStore

SMALL = {"n_functions": 16, "budget_per_dim": 50, "n_runs": 3, "sbp_samples": 4,
         "sbp_subset_size": 5, "k_values": [1, 3], "default_k": 3}


def write_config(tmp_path, **over):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**SMALL, **over}))
    return str(path)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def improvement(root, method):
    return next(float(r["d2_mean"]) for r in rows(root / "reports" / "table_improvement.csv")
                if r["method"] == method)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_config(tmp)
    store = tmp / "store"
    assert main(["all", "--config", cfg, "--store", str(store)]) == 0
    return cfg, store


def test_report_bundle(small_run, capsys):
    cfg, store = small_run
    for name in pipeline.REPORT_FILES:
        assert (store / "reports" / name).exists()
    assert main(["report", "--store", str(store)]) == 0
    out = capsys.readouterr().out
    assert "table_improvement.csv" in out and "VBP" in out


def test_baseline_order_in_bundle(small_run):
    _, store = small_run
    assert improvement(store, "SBS") == 0.0
    assert improvement(store, "VBP") >= improvement(store, "SBP*")
    assert improvement(store, "VBP") >= improvement(store, "VBS")


def test_resume_skips_completed_runs(small_run, monkeypatch):
    cfg, store = small_run
    calls = []
    monkeypatch.setattr(pipeline, "_function_runs", lambda job: calls.append(job) or None)
    assert main(["run", "--config", cfg, "--store", str(store)]) == 0
    assert calls == []


def test_changed_config_is_refused(small_run, tmp_path):
    _, store = small_run
    cfg = write_config(tmp_path, n_runs=4)
    assert main(["run", "--config", cfg, "--store", str(store)]) == 2


def test_unsupported_dimension(tmp_path):
    assert main(["generate", "--dims", "7", "--store", str(tmp_path / "s")]) == 2


def test_usage_errors(tmp_path):
    assert main(["frobnicate"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_functions": 10, "colour": 3}')
    assert main(["generate", "--config", str(bad)]) == 2


def test_report_without_bundle(tmp_path):
    assert main(["report", "--store", str(tmp_path / "empty")]) == 3


def test_run_without_suite(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["evaluate", "--config", cfg, "--store", str(tmp_path / "s")]) == 3


def test_default_generate_split(tmp_path):
    assert main(["generate", "--store", str(tmp_path / "s")]) == 0
    suite = ExperimentStore.open(tmp_path / "s" / "d2").get_suite()
    assert (len(suite.functions), len(suite.train_ids), len(suite.test_ids)) == (80, 60, 20)
    assert not set(suite.train_ids) & set(suite.test_ids)


def test_single_algorithm_has_no_vbs_gap(tmp_path):
    cfg = write_config(tmp_path, algorithms=["DE"])
    store = tmp_path / "s"
    assert main(["all", "--config", cfg, "--store", str(store)]) == 0
    assert improvement(store, "VBS") == 0.0
    assert improvement(store, "k-SBS") == 0.0


def test_seed_override_changes_store(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["generate", "--config", cfg, "--store", str(tmp_path / "a"), "--seed", "5"]) == 0
    config = Config.from_dict(SMALL).replace(master_seed=5)
    assert pipeline.generate(config, tmp_path / "a")
    assert main(["generate", "--config", cfg, "--store", str(tmp_path / "a")]) == 2
