"""Independent reference implementations used by the tests."""
import numpy as np


def brute_force_eaf(trajectories, budgets, targets):
    out = np.zeros((len(budgets), len(targets)))
    for i, b in enumerate(budgets):
        for j, e in enumerate(targets):
            hits = 0
            for t in trajectories:
                if t.best_so_far[b - 1] <= e:
                    hits += 1
            out[i, j] = hits / len(trajectories)
    return out


def direct_perf(functions, pairs, weights, table):
    """Literal transcription of the weighted product formula."""
    w = np.asarray(weights, float) / np.sum(weights)
    total = 0.0
    for wi, f in zip(w, functions):
        m0 = table.get_eaf(f, 0)
        acc = 0.0
        for j in range(m0.targets.size):
            prod = 1.0
            for a, b in pairs:
                m = table.get_eaf(f, a)
                prod *= 1.0 - m.values[list(m.budgets).index(b), j]
            acc += 1.0 - prod
        total += wi * acc / m0.targets.size
    return total


def rescan_choice(functions, weights, pairs, T, budgets, algorithms, table, coeff, tol=1e-12):
    """Exhaustive candidate enumeration with the documented tie rule."""
    remaining = T - sum(b for _, b in pairs)
    scored = []
    for b in budgets:
        if b > remaining:
            continue
        for a in algorithms:
            s = direct_perf(functions, list(pairs) + [(a, b)], weights, table) - coeff * (b / T) ** 2
            scored.append((s, int(b), int(a)))
    if not scored:
        return None
    best = max(s for s, _, _ in scored)
    tied = [(b, a) for s, b, a in scored if s >= best - tol]
    b, a = min(tied)
    return (a, b)
