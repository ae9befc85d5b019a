"""Kernel backend selection.

The compiled module is used when it imports; set ``INTSPEC_PURE_PYTHON=1`` to
force the NumPy fallback.  Grids with more than two axes always go to NumPy.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("INTSPEC_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("compiled kernels disabled by INTSPEC_PURE_PYTHON")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "numpy"


def sup_functionals(paths, cells, shape, atom_mass, weights, backend: str | None = None):
    impl = _pick(backend)
    if impl is _ckernels and len(shape) > 2:
        impl = _pykernels
    return impl.sup_functionals(paths, cells, shape, atom_mass, weights)


def pillow_sups(normals, step: float, backend: str | None = None):
    return _pick(backend).pillow_sups(normals, step)


def _pick(backend):
    if backend is None:
        backend = BACKEND
    if backend == "numpy":
        return _pykernels
    if backend == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available in this installation")
        return _ckernels
    raise ValueError(f"unknown kernel backend {backend!r}")


def family_sups(paths, theta, atom_mass, family, weights, backend: str | None = None):
    """Run :func:`sup_functionals` for every comparison mode of ``family``.

    ``theta`` are the atom angles (only the first ``d-1`` coordinates are
    used).  Returns per replication the overall maxima plus, for each, the
    winning ``(mode, time index, flat corner)``.
    """
    ext = tuple(s + 1 for s in family.shape)
    theta = np.asarray(theta)[:, : family.dimension - 1]
    best = None
    for mode in family.modes:
        cells = family.cell_index(theta, mode)
        ks, kt, kc, cm, cc = sup_functionals(paths, cells, ext, atom_mass, weights, backend)
        if best is None:
            n = len(ks)
            best = dict(ks=ks, ks_time=kt, ks_cell=kc, ks_mode=np.full(n, mode, dtype=object),
                        cm=cm, cm_cell=cc, cm_mode=np.full(n, mode, dtype=object))
            continue
        up = ks > best["ks"]
        best["ks"] = np.where(up, ks, best["ks"])
        best["ks_time"] = np.where(up, kt, best["ks_time"])
        best["ks_cell"] = np.where(up, kc, best["ks_cell"])
        best["ks_mode"] = np.where(up, mode, best["ks_mode"])
        up = cm > best["cm"]
        best["cm"] = np.where(up, cm, best["cm"])
        best["cm_cell"] = np.where(up, cc, best["cm_cell"])
        best["cm_mode"] = np.where(up, mode, best["cm_mode"])
    return best
