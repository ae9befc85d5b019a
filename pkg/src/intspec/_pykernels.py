"""Pure NumPy implementations of the hot kernels.

These are the reference versions. The Cython module ``_ckernels`` mirrors them
operation for operation (same summation order) so both backends agree to the
last bit on typical inputs; the test-suite checks agreement at 1e-12.
"""
from __future__ import annotations

import numpy as np

# Upper bound on the number of float64 cells materialised per chunk.
_CHUNK_CELLS = 4_000_000


def _prefix(grid: np.ndarray, ndim: int) -> np.ndarray:
    # Cumulate the last axis first, then the earlier ones; the C kernel uses the same order.
    out = grid
    for ax in range(out.ndim - 1, out.ndim - 1 - ndim, -1):
        out = np.cumsum(out, axis=ax)
    return out


def sup_functionals(paths, cells, shape, atom_mass, weights):
    """Suprema of |Z| and of the time integral of Z**2 over a lower-set grid.

    ``paths[r, l, i]`` is the time-``i`` value carried by atom ``l`` in
    replication ``r``; ``cells[l]`` is the flat index of the atom's cell in a
    grid of extent ``shape`` whose last slice along every axis is an overflow
    cell outside the set family.  For every family corner ``c``

        Z(i, c) = X(i, c) - M(c) * X(i, full)

    with ``X`` the lower-set prefix sum of atom paths and ``M`` the normalised
    prefix sum of ``atom_mass``.  ``Z`` is pinned to zero at the first and last
    time point, and is taken as linear in time between grid points when
    integrating with ``weights`` (interval lengths).

    Returns ``(ks, ks_time, ks_cell, cm, cm_cell)``; cell indices are flat
    indices into the family part of the grid (extent ``shape - 1``).
    """
    paths = np.ascontiguousarray(paths, dtype=np.float64)
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    nrep, m, T = paths.shape
    ndim = len(shape)
    ncell = int(np.prod(shape))
    fam = tuple(slice(0, s - 1) for s in shape)

    mass = np.bincount(cells, weights=np.asarray(atom_mass, dtype=np.float64), minlength=ncell)
    mass_cum = _prefix(mass.reshape(shape), ndim)
    total_mass = mass_cum[(-1,) * ndim]
    frac = (mass_cum / total_mass)[fam]

    ks = np.zeros(nrep)
    ks_time = np.zeros(nrep, dtype=np.int64)
    ks_cell = np.zeros(nrep, dtype=np.int64)
    cm = np.zeros(nrep)
    cm_cell = np.zeros(nrep, dtype=np.int64)
    if T < 3 or nrep == 0:
        return ks, ks_time, ks_cell, cm, cm_cell

    step = max(1, _CHUNK_CELLS // max(1, T * ncell))
    tcells = (np.arange(T, dtype=np.int64)[:, None] * ncell + cells[None, :])  # (T, m)
    for lo in range(0, nrep, step):
        hi = min(nrep, lo + step)
        r = hi - lo
        idx = (np.arange(r, dtype=np.int64)[:, None, None] * (T * ncell) + tcells.T[None, :, :])
        X = np.bincount(idx.ravel(), weights=paths[lo:hi].ravel(), minlength=r * T * ncell)
        X = _prefix(X.reshape((r, T) + shape), ndim)
        total = X[(slice(None), slice(None)) + (-1,) * ndim]
        Z = X[(slice(None), slice(None)) + fam] - frac[None, None] * total.reshape((r, T) + (1,) * ndim)
        Z[:, 0] = 0.0
        Z[:, T - 1] = 0.0
        Z = Z.reshape(r, T, -1)

        absz = np.abs(Z).reshape(r, -1)
        pos = np.argmax(absz, axis=1)
        ks[lo:hi] = absz[np.arange(r), pos]
        ks_time[lo:hi] = pos // Z.shape[2]
        ks_cell[lo:hi] = pos % Z.shape[2]

        acc = np.zeros((r, Z.shape[2]))
        for i in range(T - 1):
            a = Z[:, i]
            b = Z[:, i + 1]
            acc += weights[i] * ((a * a + a * b + b * b) / 3.0)
        pos = np.argmax(acc, axis=1)
        cm[lo:hi] = acc[np.arange(r), pos]
        cm_cell[lo:hi] = pos
    return ks, ks_time, ks_cell, cm, cm_cell


def pillow_sups(normals, step):
    """Sup of |W| and sup over t of the trapezoidal s-integral of W(s, t)**2.

    ``normals`` has shape ``(R, N, N)``; cell ``(i, j)`` carries the sheet
    increment over ``((i)h, (i+1)h] x ((j)h, (j+1)h]`` in units of ``h``.
    """
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    nrep, N, _ = normals.shape
    grid = np.arange(N + 1) * step
    grid[-1] = 1.0
    ks = np.empty(nrep)
    cm = np.empty(nrep)
    s = grid[:, None]
    t = grid[None, :]
    st = s * t
    for r in range(nrep):
        sheet = np.zeros((N + 1, N + 1))
        sheet[1:, 1:] = np.cumsum(np.cumsum(normals[r], axis=1), axis=0) * step
        w = sheet - s * sheet[-1:, :] - t * sheet[:, -1:] + st * sheet[-1, -1]
        w[0, :] = 0.0
        w[-1, :] = 0.0
        w[:, 0] = 0.0
        w[:, -1] = 0.0
        ks[r] = np.max(np.abs(w))
        # edge terms of the trapezoid rule vanish because W is pinned
        cm[r] = np.max(np.sum(w * w, axis=0)) * step
    return ks, cm
