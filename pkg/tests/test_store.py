import json

import numpy as np
import pytest

from conftest import make_table
from kportfolio.eaf import budget_grid, compute_eaf, default_target_grid
from kportfolio.errors import ConfigError, FormatError, NotFoundError
from kportfolio.features import FeatureVector, fit_standardizer
from kportfolio.optim import AlgorithmId, run
from kportfolio.portfolio import Portfolio
from kportfolio.store import ExperimentStore, decode_trace, encode_trace
from kportfolio.suite import SuiteSpec, generate_suite


@pytest.fixture
def store(tmp_path):
    return ExperimentStore.open(tmp_path / "s", {"config_hash": "abc", "dimension": 2})


def test_trace_roundtrip_bitwise(rng):
    for v in (np.array([]), np.array([3.0]), np.repeat([5.0, 2.0, 2.0, 1e-300, 0.0], [3, 1, 4, 2, 7]),
              np.minimum.accumulate(rng.exponential(size=500)), np.array([-0.0, 0.0, np.inf])):
        out = decode_trace(encode_trace(v))
        assert out.dtype == np.float64 and out.tobytes() == np.asarray(v, dtype=float).tobytes()


def test_trace_compresses_plateaus():
    v = np.repeat([9.0, 1.0], [1000, 1000])
    assert len(encode_trace(v)) < 100


@pytest.mark.parametrize("mutate", [lambda b: b[:10], lambda b: b"XXXX" + b[4:],
                                    lambda b: b[:4] + b"\x09" + b[5:], lambda b: b[:-1]])
def test_corrupt_trace(mutate):
    blob = encode_trace(np.array([3.0, 3.0, 1.0]))
    with pytest.raises(FormatError):
        decode_trace(mutate(blob))


def test_trajectories_and_eaf_roundtrip(store):
    suite = generate_suite(SuiteSpec(2, 3, master_seed=4))
    trajs = [run(AlgorithmId.DE, suite.functions[1], 100, seed=s, run_index=i) for i, s in enumerate((7, 8, 9))]
    store.put_trajectories(1, AlgorithmId.DE, trajs)
    back = store.get_trajectories(1, AlgorithmId.DE)
    assert back == trajs
    m = compute_eaf(back, budget_grid(100, 10), default_target_grid())
    store.put_eaf(m)
    fresh = ExperimentStore.open(store.root)
    m2 = fresh.get_eaf(1, 2)
    assert m2.values.tobytes() == m.values.tobytes()
    assert m2.budgets.tolist() == m.budgets.tolist() and m2.targets.tobytes() == m.targets.tobytes()
    assert m2.n_runs == 3


def test_suite_features_portfolio_roundtrip(store, rng):
    suite = generate_suite(SuiteSpec(2, 5, master_seed=1))
    store.put_suite(suite)
    assert ExperimentStore.open(store.root).get_suite().to_json() == suite.to_json()
    vecs = [FeatureVector(i, rng.normal(size=3), "ela") for i in range(5)]
    store.put_features("ela", ["a", "b", "c"], vecs)
    got = store.get_features("ela")
    assert all(got[i].values.tobytes() == vecs[i].values.tobytes() for i in range(5))
    assert store.feature_names("ela") == ["a", "b", "c"]
    s = fit_standardizer(vecs)
    store.put_standardizer("ela", s)
    assert store.get_standardizer("ela").std.tobytes() == s.std.tobytes()
    p = Portfolio(((AlgorithmId(1), 20), (AlgorithmId(0), 80)), {"method": "x"})
    store.put_portfolio("p", p)
    assert store.get_portfolio("p") == p


def test_absent_keys(store, tmp_path):
    with pytest.raises(NotFoundError):
        store.get_eaf(0, 0)
    with pytest.raises(NotFoundError):
        store.get_trajectories(0, 0)
    with pytest.raises(NotFoundError):
        store.get_suite()
    with pytest.raises(NotFoundError):
        ExperimentStore.open(tmp_path / "nowhere")
    assert not store.has_eaf(0, 0) and not store.has_trajectories(0, 0)


def test_eaf_payload_size_checked(store):
    table = make_table({(0, 0): [[0.5, 1.0]]}, [10], [1.0, 0.1])
    store.put_eaf(table.get_eaf(0, 0))
    (store.root / "eaf" / "f00000_a0.bin").write_bytes(b"\0" * 8)
    with pytest.raises(FormatError):
        ExperimentStore.open(store.root).get_eaf(0, 0)


def test_malformed_features(store):
    (store.root / "features").mkdir()
    (store.root / "features" / "ela.csv").write_text("function_id,a\n0,1.0,2.0\n")
    with pytest.raises(FormatError):
        store.get_features("ela")


def test_manifest_guards(store):
    with pytest.raises(ConfigError):
        ExperimentStore.open(store.root, {"config_hash": "other"})
    assert ExperimentStore.open(store.root, {"config_hash": "abc"}).manifest["dimension"] == 2
    path = store.root / "manifest.json"
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError):
        ExperimentStore.open(store.root)
