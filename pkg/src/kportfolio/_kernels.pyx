# cython: language_level=3
"""Compiled hot loops. Mirrors ``_kernels_py`` function for function."""

from libc.math cimport cos, sin, sqrt, pow, fabs, log1p, M_PI
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef double _base(int fid, const double[::1] z, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, t, s, u, v, e
    if fid == 0:
        for i in range(d):
            acc += z[i] * z[i]
    elif fid == 1:
        if d == 1:
            acc = z[0] * z[0]
        else:
            for i in range(d):
                acc += pow(10.0, 6.0 * i / (d - 1)) * z[i] * z[i]
    elif fid == 2:
        for i in range(d):
            acc += z[i] * z[i] + 10.0 * (1.0 - cos(2.0 * M_PI * z[i]))
    elif fid == 3:
        if d == 1:
            acc = z[0] * z[0]
        else:
            for i in range(d - 1):
                u = z[i] + 1.0
                v = z[i + 1] + 1.0
                t = u * u - v
                acc += 100.0 * t * t + (u - 1.0) * (u - 1.0)
    elif fid == 4:
        for i in range(d):
            t = z[i] * 100.0 if z[i] > 0.0 else z[i]
            acc += t * t
        acc = pow(acc, 0.9)
    elif fid == 5:
        if d == 1:
            acc = z[0] * z[0]
        else:
            for i in range(d):
                e = 2.0 + 4.0 * i / (d - 1)
                acc += pow(fabs(z[i]), e)
        acc = sqrt(acc)
    elif fid == 6:
        if d == 1:
            s = fabs(z[0])
            t = sin(50.0 * pow(s, 0.2))
            acc = sqrt(s) * (1.0 + t * t)
        else:
            for i in range(d - 1):
                s = sqrt(z[i] * z[i] + z[i + 1] * z[i + 1])
                t = sin(50.0 * pow(s, 0.2))
                acc += sqrt(s) * (1.0 + t * t)
            acc = acc / (d - 1)
        acc = acc * acc
    else:
        acc = z[0] * z[0]
        for i in range(1, d):
            acc += 1e6 * z[i] * z[i]
    return acc


def combo_eval(const double[::1] x, const double[::1] x_opt, const long[::1] comp_ids,
               const double[::1] comp_weights, const double[:, :, ::1] rotations):
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t m = comp_ids.shape[0]
    cdef Py_ssize_t j, r, c
    cdef double total = 0.0, acc
    cdef double[::1] shifted = np.empty(d)
    cdef double[::1] z = np.empty(d)
    for c in range(d):
        shifted[c] = x[c] - x_opt[c]
    for j in range(m):
        for r in range(d):
            acc = 0.0
            for c in range(d):
                acc += rotations[j, r, c] * shifted[c]
            z[r] = acc
        total += comp_weights[j] * log1p(_base(<int>comp_ids[j], z, d))
    if total < 0.0:
        total = 0.0
    return total


def base_eval(int fid, const double[::1] z):
    return _base(fid, z, z.shape[0])


def eaf_counts(const double[:, :] finals, const double[::1] targets):
    """Count runs with value <= target for every (budget, target) cell."""
    cdef Py_ssize_t n = finals.shape[0], nb = finals.shape[1], ne = targets.shape[0]
    cdef Py_ssize_t r, b, e
    out = np.zeros((nb, ne), dtype=np.int64)
    cdef long[:, ::1] cnt = out
    for r in range(n):
        for b in range(nb):
            for e in range(ne):
                if finals[r, b] <= targets[e]:
                    cnt[b, e] += 1
    return out


def candidate_perf(const double[:, ::1] miss, const double[:, :, :, ::1] comp,
                   const double[::1] weights, Py_ssize_t nb_max):
    """Performance of the current portfolio extended by each (algorithm, budget).

    ``comp`` holds ``1 - af`` with shape (k, A, |B|, |E|); only the first
    ``nb_max`` budget columns are scored.
    """
    cdef Py_ssize_t k = comp.shape[0], na = comp.shape[1], ne = comp.shape[3]
    cdef Py_ssize_t i, a, b, e
    cdef double acc, a0, a1, a2, a3, wi
    cdef const double* m
    cdef const double* c
    out = np.zeros((na, nb_max), dtype=np.float64)
    cdef double[:, ::1] res = out
    for i in range(k):
        wi = weights[i] / ne
        m = &miss[i, 0]
        for a in range(na):
            for b in range(nb_max):
                c = &comp[i, a, b, 0]
                # four independent sums so the loop pipelines
                a0 = a1 = a2 = a3 = 0.0
                e = 0
                while e + 4 <= ne:
                    a0 += m[e] * c[e]
                    a1 += m[e + 1] * c[e + 1]
                    a2 += m[e + 2] * c[e + 2]
                    a3 += m[e + 3] * c[e + 3]
                    e += 4
                acc = (a0 + a1) + (a2 + a3)
                while e < ne:
                    acc += m[e] * c[e]
                    e += 1
                res[a, b] += wi * acc
    for a in range(na):
        for b in range(nb_max):
            res[a, b] = 1.0 - res[a, b]
    return out
