import numpy as np
import pytest

from kportfolio.errors import ConfigError
from kportfolio.optim import AlgorithmId, run, run_batch, run_objective, run_seed
from kportfolio.suite import GeneratedFunction, SuiteSpec, evaluate, generate_suite


@pytest.fixture(scope="module")
def functions():
    return generate_suite(SuiteSpec(dimension=2, n_functions=10, master_seed=3)).functions


def test_algorithm_encoding_is_stable():
    assert [(a.name, int(a)) for a in AlgorithmId] == [
        ("ES11", 0), ("DiagES", 1), ("DE", 2), ("NelderMead", 3)]


@pytest.mark.parametrize("alg", list(AlgorithmId))
@pytest.mark.parametrize("budget", [1, 7, 150])
def test_budget_exact_and_monotone(functions, alg, budget):
    f = functions[1]
    calls = []

    def counted(x):
        calls.append(np.array(x, copy=True))
        return evaluate(f, x)

    trace = run_objective(alg, counted, 2, budget, seed=5)
    assert len(calls) == budget == trace.shape[0]
    assert np.all(np.diff(trace) <= 0)
    assert np.all(trace >= 0)
    np.testing.assert_array_equal(trace, np.minimum.accumulate([evaluate(f, x) for x in calls]))
    assert all(np.all(np.abs(x) <= 5.0) for x in calls)


@pytest.mark.parametrize("alg", list(AlgorithmId))
def test_determinism(functions, alg):
    a = run(alg, functions[2], 200, seed=99)
    b = run(alg, functions[2], 200, seed=99)
    assert a == b
    assert a != run(alg, functions[2], 200, seed=100)


@pytest.mark.parametrize("alg", list(AlgorithmId))
def test_zero_hit_propagates(alg):
    state = {"n": 0}

    def stub(x):
        state["n"] += 1
        return 0.0 if state["n"] == 10 else 1.0 + float(np.sum(x**2))

    trace = run_objective(alg, stub, 2, 60, seed=1)
    assert trace[9] == 0.0
    assert np.all(trace[9:] == 0.0)


def test_es11_converges_on_sphere():
    # 90th percentile of final/initial over 30 seeds must be below 1e-3
    f = GeneratedFunction.single("sphere", 2, [1.5, -2.5])
    ratios = []
    for seed in range(30):
        t = run(AlgorithmId.ES11, f, 400, seed=seed).best_so_far
        ratios.append(t[-1] / t[0])
    assert np.percentile(ratios, 90) <= 1e-3


def test_bad_budget():
    f = GeneratedFunction.single("sphere", 2, [0.0, 0.0])
    with pytest.raises(ConfigError):
        run(AlgorithmId.DE, f, 0, seed=1)


def test_run_batch_counts(functions):
    trajs = run_batch(list(AlgorithmId), functions, budget=20, n_runs=5, base_seed=3)
    assert len(trajs) == 4 * 10 * 5
    assert len({(t.function_id, int(t.algorithm_id), t.run_index) for t in trajs}) == 200
    assert all(t.budget == 20 for t in trajs)


def test_run_batch_seeds(functions):
    trajs = run_batch([AlgorithmId.DE], functions[:2], budget=30, n_runs=4, base_seed=8)
    seeds = [t.seed for t in trajs]
    assert len(set(seeds)) == len(seeds)
    assert seeds[0] == run_seed(8, functions[0].id, AlgorithmId.DE, 0)
    per_fn = [t.best_so_far.tobytes() for t in trajs if t.function_id == functions[0].id]
    assert len(set(per_fn)) == len(per_fn)
    again = run_batch([AlgorithmId.DE], functions[:2], budget=30, n_runs=4, base_seed=8)
    assert all(a == b for a, b in zip(trajs, again))


def test_run_batch_rejects_zero_runs(functions):
    with pytest.raises(ConfigError):
        run_batch([AlgorithmId.DE], functions, 10, 0, 1)


def test_run_batch_with_executor(functions):
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(2) as ex:
        par = run_batch(list(AlgorithmId), functions[:3], 40, 2, 5, executor=ex)
    seq = run_batch(list(AlgorithmId), functions[:3], 40, 2, 5)
    assert par == seq
