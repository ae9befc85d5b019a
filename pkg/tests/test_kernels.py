import numpy as np
import pytest

from intspec import _pykernels, kernels
from intspec.estimator import estimate_path
from intspec.limit import limit_sup_draws, pillow_sup_draws
from intspec.sample import BlockScheme, decompose, enumerate_candidate_sets
from intspec.stationarity import compute_statistics

needs_cython = pytest.mark.skipif(kernels._ckernels is None, reason="compiled kernels not built")


def _random_problem(rng, shape, m=60, reps=4, T=9):
    ext = tuple(s + 1 for s in shape)
    cells = rng.integers(0, int(np.prod(ext)), size=m)
    paths = rng.standard_normal((reps, m, T))
    mass = rng.uniform(size=m)
    weights = np.diff(np.sort(np.concatenate([[0.0, 1.0], rng.uniform(size=T - 2)])))
    return paths, cells, ext, mass / mass.sum(), weights


@needs_cython
def test_sup_functionals_backends_bit_identical():
    rng = np.random.default_rng(0)
    for shape in [(7,), (5, 6), (1,), (12, 1)]:
        args = _random_problem(rng, shape)
        a = kernels.sup_functionals(*args, backend="numpy")
        b = kernels.sup_functionals(*args, backend="cython")
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


@needs_cython
def test_pillow_backends_bit_identical():
    normals = np.random.default_rng(1).standard_normal((5, 40, 40))
    a = kernels.pillow_sups(normals, 1 / 40, backend="numpy")
    b = kernels.pillow_sups(normals, 1 / 40, backend="cython")
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_three_axis_grid_uses_numpy():
    rng = np.random.default_rng(2)
    args = _random_problem(rng, (3, 3, 3))
    a = kernels.sup_functionals(*args)
    b = _pykernels.sup_functionals(*args)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.pillow_sups(np.zeros((1, 4, 4)), 0.25, backend="fortran")


def test_sup_kernel_against_direct_loop():
    rng = np.random.default_rng(3)
    paths, cells, ext, mass, weights = _random_problem(rng, (4, 3), m=15, reps=2, T=6)
    ks, _, _, cm, _ = _pykernels.sup_functionals(paths, cells, ext, mass, weights)
    idx = np.array(np.unravel_index(cells, ext)).T
    for r in range(2):
        best_ks = best_cm = 0.0
        for c in np.ndindex(*(e - 1 for e in ext)):
            inside = np.all(idx <= np.array(c), axis=1)
            x = paths[r][inside].sum(axis=0)
            z = x - mass[inside].sum() * paths[r].sum(axis=0)
            z[0] = z[-1] = 0.0
            best_ks = max(best_ks, np.abs(z).max())
            best_cm = max(best_cm, np.sum(weights * (z[:-1] ** 2 + z[:-1] * z[1:] + z[1:] ** 2) / 3))
        assert ks[r] == pytest.approx(best_ks, rel=1e-12)
        assert cm[r] == pytest.approx(best_cm, rel=1e-12)


@needs_cython
def test_pipeline_identical_across_backends():
    rng = np.random.default_rng(4)
    path = estimate_path(decompose(rng.pareto(2, (400, 3)) + 0.05), BlockScheme(400, 40, 8))
    fam = enumerate_candidate_sets(path.atoms()[0], 3, cap=900)
    a = compute_statistics(path, fam, backend="numpy")
    b = compute_statistics(path, fam, backend="cython")
    assert (a.t_ks, a.t_cm) == (b.t_ks, b.t_cm)
    da = limit_sup_draws(path, fam, 6, seed=1, backend="numpy")
    db = limit_sup_draws(path, fam, 6, seed=1, backend="cython")
    np.testing.assert_array_equal(da[0], db[0])
    np.testing.assert_array_equal(da[1], db[1])
    pa = pillow_sup_draws(0.05, 10, seed=2, backend="numpy")
    pb = pillow_sup_draws(0.05, 10, seed=2, backend="cython")
    np.testing.assert_array_equal(pa[0], pb[0])
