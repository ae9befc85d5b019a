# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``.

Only one- and two-dimensional corner grids are handled here; the selector in
``kernels`` routes anything else to the NumPy code.  Summation order follows
the NumPy reference exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def sup_functionals(paths, cells, shape, atom_mass, weights):
    cdef double[:, :, ::1] P = np.ascontiguousarray(paths, dtype=np.float64)
    cdef long long[::1] C = np.ascontiguousarray(cells, dtype=np.int64)
    cdef double[::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] AM = np.ascontiguousarray(atom_mass, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if len(shape) == 1:
        g0, g1 = 1, shape[0]
    elif len(shape) == 2:
        g0, g1 = shape
    else:
        raise ValueError("compiled kernel supports 1 or 2 grid axes")
    return _sup2(P, C, g0, g1, len(shape) == 2, AM, W)


cdef tuple _sup2(double[:, :, ::1] P, long long[::1] C, Py_ssize_t g0, Py_ssize_t g1,
                 bint two_axes, double[::1] AM, double[::1] W):
    cdef Py_ssize_t nrep = P.shape[0], m = P.shape[1], T = P.shape[2]
    cdef Py_ssize_t ncell = g0 * g1
    # family extent: rows 0..f0-1, cols 0..f1-1
    cdef Py_ssize_t f0 = g0 - 1 if two_axes else 1
    cdef Py_ssize_t f1 = g1 - 1
    cdef Py_ssize_t nfam = f0 * f1
    cdef Py_ssize_t r, l, i, a, b, c
    cdef double total, z, az, zp, best, acc_best
    cdef double[::1] mass = np.zeros(ncell)
    cdef double[::1] frac = np.empty(nfam)
    cdef double[::1] grid = np.empty(ncell)
    cdef double[::1] zprev = np.empty(nfam)
    cdef double[::1] acc = np.empty(nfam)

    ks_a = np.zeros(nrep)
    kst_a = np.zeros(nrep, dtype=np.int64)
    ksc_a = np.zeros(nrep, dtype=np.int64)
    cm_a = np.zeros(nrep)
    cmc_a = np.zeros(nrep, dtype=np.int64)
    cdef double[::1] ks = ks_a
    cdef long long[::1] kst = kst_a
    cdef long long[::1] ksc = ksc_a
    cdef double[::1] cm = cm_a
    cdef long long[::1] cmc = cmc_a
    if T < 3 or nrep == 0:
        return ks_a, kst_a, ksc_a, cm_a, cmc_a

    for l in range(m):
        mass[C[l]] += AM[l]
    _prefix(mass, g0, g1, two_axes)
    total = mass[ncell - 1]
    for a in range(f0):
        for b in range(f1):
            frac[a * f1 + b] = mass[a * g1 + b] / total

    for r in range(nrep):
        best = 0.0
        kst[r] = 0
        ksc[r] = 0
        for c in range(nfam):
            zprev[c] = 0.0
            acc[c] = 0.0
        # time 0 contributes Z == 0 everywhere: |Z| ties with the initial best
        for i in range(1, T):
            if i < T - 1:
                for c in range(ncell):
                    grid[c] = 0.0
                for l in range(m):
                    grid[C[l]] += P[r, l, i]
                _prefix(grid, g0, g1, two_axes)
                total = grid[ncell - 1]
            for a in range(f0):
                for b in range(f1):
                    c = a * f1 + b
                    if i < T - 1:
                        z = grid[a * g1 + b] - frac[c] * total
                    else:
                        z = 0.0
                    az = fabs(z)
                    if az > best:
                        best = az
                        kst[r] = i
                        ksc[r] = c
                    zp = zprev[c]
                    acc[c] += W[i - 1] * ((zp * zp + zp * z + z * z) / 3.0)
                    zprev[c] = z
        ks[r] = best
        acc_best = acc[0]
        cmc[r] = 0
        for c in range(1, nfam):
            if acc[c] > acc_best:
                acc_best = acc[c]
                cmc[r] = c
        cm[r] = acc_best
    return ks_a, kst_a, ksc_a, cm_a, cmc_a


cdef inline void _prefix(double[::1] g, Py_ssize_t g0, Py_ssize_t g1, bint two_axes) noexcept nogil:
    cdef Py_ssize_t a, b
    for a in range(g0):
        for b in range(1, g1):
            g[a * g1 + b] += g[a * g1 + b - 1]
    if two_axes:
        for a in range(1, g0):
            for b in range(g1):
                g[a * g1 + b] += g[(a - 1) * g1 + b]


def pillow_sups(normals, double step):
    cdef double[:, :, ::1] E = np.ascontiguousarray(normals, dtype=np.float64)
    cdef Py_ssize_t nrep = E.shape[0], N = E.shape[1]
    cdef Py_ssize_t r, i, j
    cdef double s, t, v, best, colbest
    cdef double[:, ::1] S = np.zeros((N + 1, N + 1))
    cdef double[::1] col = np.empty(N + 1)
    cdef double[::1] grid = np.empty(N + 1)
    ks_a = np.empty(nrep)
    cm_a = np.empty(nrep)
    cdef double[::1] ks = ks_a
    cdef double[::1] cm = cm_a
    for i in range(N + 1):
        grid[i] = i * step
    grid[N] = 1.0
    for r in range(nrep):
        for i in range(N):
            v = 0.0
            for j in range(N):
                v = v + E[r, i, j]
                S[i + 1, j + 1] = v
        for i in range(1, N):
            for j in range(N):
                S[i + 1, j + 1] = S[i + 1, j + 1] + S[i, j + 1]
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                S[i, j] = S[i, j] * step
        best = 0.0
        for j in range(N + 1):
            col[j] = 0.0
        for i in range(1, N):
            s = grid[i]
            for j in range(1, N):
                t = grid[j]
                v = S[i, j] - s * S[N, j] - t * S[i, N] + (s * t) * S[N, N]
                if fabs(v) > best:
                    best = fabs(v)
                col[j] += v * v
        colbest = col[0]
        for j in range(1, N + 1):
            if col[j] > colbest:
                colbest = col[j]
        ks[r] = best
        cm[r] = colbest * step
    return ks_a, cm_a
