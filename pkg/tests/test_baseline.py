import numpy as np
import pytest

from conftest import make_table, random_table
from kportfolio.baseline import (sample_subsets, sbp_star, single_best_solver, singleton,
                                 virtual_best_portfolio, virtual_best_solver)
from kportfolio.errors import ConfigError, DataError, UsageError
from kportfolio.optim import AlgorithmId
from kportfolio.portfolio import Portfolio, greedy_build, perf

A0, A1 = AlgorithmId(0), AlgorithmId(1)


@pytest.fixture
def two_by_two():
    # budgets (5, 10); singleton perf at T=10 is the row mean of the last budget
    z = [0.0, 0.0]
    return make_table({
        (0, 0): [z, [1.0, 0.6]],   # f0: A0 -> 0.8
        (0, 1): [z, [1.0, 0.0]],   # f0: A1 -> 0.5
        (1, 0): [z, [0.2, 0.0]],   # f1: A0 -> 0.1
        (1, 1): [z, [1.0, 0.2]],   # f1: A1 -> 0.6
    }, [5, 10], [1.0, 0.1])


def test_sbs_hand_case(two_by_two):
    # means: A0 (0.8+0.1)/2 = 0.45, A1 (0.5+0.6)/2 = 0.55
    assert single_best_solver([0, 1], two_by_two, 10, [0, 1]) == A1
    assert single_best_solver([0], two_by_two, 10, [0, 1]) == A0


def test_vbs_hand_case(two_by_two):
    assert virtual_best_solver([0, 1], two_by_two, 10, [0, 1]) == {0: A0, 1: A1}


def test_single_algorithm(two_by_two):
    assert single_best_solver([0, 1], two_by_two, 10, [1]) == A1
    assert virtual_best_solver([0, 1], two_by_two, 10, [1]) == {0: A1, 1: A1}


def test_tie_goes_to_lowest_id():
    v = [[0.0, 0.0], [0.5, 0.5]]
    t = make_table({(0, 0): v, (0, 1): v}, [5, 10], [1.0, 0.1])
    assert single_best_solver([0], t, 10, [1, 0]) == A0


def test_dominance_and_mean_relation(rng):
    table, budgets = random_table(rng, 6, 3, 4, 5)
    T = int(budgets[-1])
    fs = list(range(6))
    sbs = single_best_solver(fs, table, T, [0, 1, 2])
    vbs = virtual_best_solver(fs, table, T, [0, 1, 2])
    mean_vbs = np.mean([perf([f], singleton(vbs[f], T), None, table) for f in fs])
    mean_sbs = np.mean([perf([f], singleton(sbs, T), None, table) for f in fs])
    assert mean_vbs >= mean_sbs
    # make algorithm 2 dominate everywhere
    for f in fs:
        m = table.get_eaf(f, 2)
        object.__setattr__(m, "values", np.ones_like(m.values))
    assert single_best_solver(fs, table, T, [0, 1, 2]) == AlgorithmId(2)


def test_missing_data(two_by_two):
    with pytest.raises(DataError):
        single_best_solver([0, 1], two_by_two, 10, [0, 1, 2])


class TestSbpStar:
    def test_single_sample_is_that_candidate(self, rng):
        table, budgets = random_table(rng, 12, 3, 5, 4)
        T = int(budgets[-1])
        chosen, cands, _ = sbp_star(range(12), table, T, budgets, [0, 1, 2], n_samples=1, m=4,
                                    seed=3, return_candidates=True)
        assert chosen.pairs == cands[0].pairs
        sub = sample_subsets(range(12), 4, 1, 3)[0]
        assert chosen.pairs == greedy_build(sub, None, T, budgets, [0, 1, 2], table).pairs

    def test_argmax_and_determinism(self, rng):
        table, budgets = random_table(rng, 15, 3, 5, 4)
        T = int(budgets[-1])
        chosen, cands, scores = sbp_star(range(15), table, T, budgets, [0, 1, 2], n_samples=8, m=3,
                                         seed=11, return_candidates=True)
        full = perf(list(range(15)), chosen, None, table)
        assert all(full >= perf(list(range(15)), c, None, table) for c in cands)
        assert full == max(scores)
        again = sbp_star(range(15), table, T, budgets, [0, 1, 2], n_samples=8, m=3, seed=11)
        assert again.pairs == chosen.pairs

    def test_subsets(self):
        subs = sample_subsets(range(20), 5, 10, seed=1)
        assert len(subs) == 10 and all(len(set(s)) == 5 for s in subs)
        assert subs == sample_subsets(range(20), 5, 10, seed=1)

    def test_too_few_training_functions(self, rng):
        table, budgets = random_table(rng, 3, 2, 3, 3)
        with pytest.raises(ConfigError):
            sbp_star(range(3), table, 30, budgets, [0, 1], n_samples=2, m=10)


class TestVbp:
    def test_single_member_pool(self, two_by_two):
        p = Portfolio(((A0, 5), (A1, 5)))
        out = virtual_best_portfolio([0, 1], two_by_two, [p])
        assert out == {0: p, 1: p}

    def test_hand_enumeration(self, two_by_two):
        p1 = singleton(A0, 10)                 # f0 .8, f1 .1
        p2 = singleton(A1, 10)                 # f0 .5, f1 .6
        p3 = Portfolio(((A0, 5), (A1, 5)))     # both 0
        out = virtual_best_portfolio([0, 1], two_by_two, [p3, p1, p2])
        assert out[0] is p1 and out[1] is p2

    def test_dominates_pool_members(self, rng):
        table, budgets = random_table(rng, 5, 3, 4, 4)
        T = int(budgets[-1])
        pool = [singleton(a, T) for a in range(3)] + [
            greedy_build([f], None, T, budgets, [0, 1, 2], table) for f in range(5)]
        vbp = virtual_best_portfolio(range(5), table, pool)
        mean_vbp = np.mean([perf([f], vbp[f], None, table) for f in range(5)])
        for p in pool:
            assert mean_vbp >= np.mean([perf([f], p, None, table) for f in range(5)])

    def test_empty_pool(self, two_by_two):
        with pytest.raises(UsageError):
            virtual_best_portfolio([0], two_by_two, [])
