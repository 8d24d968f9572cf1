"""Pure numpy implementations of the compiled kernels."""
import numpy as np

_TWO_PI = 2.0 * np.pi


def base_eval(fid, z):
    z = np.asarray(z, dtype=np.float64)
    d = z.shape[0]
    if fid == 0:
        return float(np.dot(z, z))
    if fid == 1:
        if d == 1:
            return float(z[0] * z[0])
        scale = 10.0 ** (6.0 * np.arange(d) / (d - 1))
        return float(np.sum(scale * z * z))
    if fid == 2:
        return float(np.sum(z * z + 10.0 * (1.0 - np.cos(_TWO_PI * z))))
    if fid == 3:
        if d == 1:
            return float(z[0] * z[0])
        u = z + 1.0
        t = u[:-1] ** 2 - u[1:]
        return float(np.sum(100.0 * t * t + (u[:-1] - 1.0) ** 2))
    if fid == 4:
        t = np.where(z > 0.0, 100.0 * z, z)
        return float(np.sum(t * t) ** 0.9)
    if fid == 5:
        if d == 1:
            return float(np.sqrt(z[0] * z[0]))
        expo = 2.0 + 4.0 * np.arange(d) / (d - 1)
        return float(np.sqrt(np.sum(np.abs(z) ** expo)))
    if fid == 6:
        if d == 1:
            s = np.abs(z)
        else:
            s = np.sqrt(z[:-1] ** 2 + z[1:] ** 2)
        t = np.sin(50.0 * s**0.2)
        return float(np.mean(np.sqrt(s) * (1.0 + t * t)) ** 2)
    return float(z[0] * z[0] + 1e6 * np.sum(z[1:] ** 2))


def combo_eval(x, x_opt, comp_ids, comp_weights, rotations):
    shifted = x - x_opt
    total = 0.0
    for j in range(len(comp_ids)):
        z = rotations[j] @ shifted
        total += comp_weights[j] * np.log1p(base_eval(int(comp_ids[j]), z))
    return max(float(total), 0.0)


def eaf_counts(finals, targets):
    """Count runs with value <= target for every (budget, target) cell."""
    finals = np.asarray(finals, dtype=np.float64)
    return np.sum(finals[:, :, None] <= targets[None, None, :], axis=0, dtype=np.int64)


def candidate_perf(miss, comp, weights, nb_max):
    ne = comp.shape[3]
    lost = np.einsum("ie,iabe->ab", miss * (weights / ne)[:, None], comp[:, :, :nb_max, :])
    return 1.0 - lost
