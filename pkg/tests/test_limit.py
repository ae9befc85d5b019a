import numpy as np
import pytest

from intspec.estimator import estimate_path
from intspec.limit import (
    PUBLISHED_CRITICAL_VALUES,
    CriticalTable,
    bridge_panel,
    estimated_limit_p_values,
    limit_grid,
    limit_process_values,
    limit_sup_draws,
    mc_p_value,
    pillow_critical_values,
    pillow_sup_draws,
    simulate_bridge,
    simulate_bridges,
    simulate_pillow,
    substream,
)
from intspec.sample import BlockScheme, decompose, enumerate_candidate_sets


def _path(seed=0, n=200, b=20, k=4, d=2):
    rng = np.random.default_rng(seed)
    return estimate_path(decompose(rng.pareto(2, (n, d)) + 0.05), BlockScheme(n, b, k))


def test_bridge_pinned():
    grid = np.linspace(0, 1, 17)
    for s in range(5):
        b = simulate_bridge(grid, substream(3, s))
        assert b[0] == 0.0 and b[-1] == 0.0


def test_bridge_variance_and_covariance():
    grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    b = simulate_bridges(grid, 10**5, np.random.default_rng(1))
    assert b[:, 2].var() == pytest.approx(0.25, abs=0.005)
    x, y = b[:, 1], b[:, 3]
    prod = x * y
    se = prod.std() / np.sqrt(len(prod))
    assert abs(prod.mean() - 0.0625) < 3 * se


def test_bridge_grid_errors():
    with pytest.raises(ValueError):
        simulate_bridge([0.0, 0.6, 0.4, 1.0], np.random.default_rng(0))
    with pytest.raises(ValueError):
        simulate_bridge([0.1, 1.0], np.random.default_rng(0))


def test_bridge_panel_is_reproducible():
    a = bridge_panel([0, 0.5, 1], 20, seed=4)
    b = bridge_panel([0, 0.5, 1], 20, seed=4)
    np.testing.assert_array_equal(a.draws, b.draws)
    assert a.draws.shape == (20, 3)


def test_pillow_boundary_is_zero():
    w = simulate_pillow(0.02, np.random.default_rng(2)).values
    assert np.all(w[0] == 0) and np.all(w[-1] == 0) and np.all(w[:, 0] == 0) and np.all(w[:, -1] == 0)


def test_pillow_step_validation():
    with pytest.raises(ValueError):
        simulate_pillow(0.1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        simulate_pillow(0.03, np.random.default_rng(0))


def test_pillow_covariance():
    # Var W(1/2, 1/2) = 1/16, Cov(W(.25,.5), W(.75,.5)) = (.25 * .25) * .25
    rng = np.random.default_rng(3)
    draws = np.stack([simulate_pillow(0.05, rng).values for _ in range(20000)])
    v = draws[:, 10, 10]
    se = (v * v).std() / np.sqrt(len(v))
    assert abs((v * v).mean() - 1 / 16) < 3 * se
    p = draws[:, 5, 10] * draws[:, 15, 10]
    assert abs(p.mean() - 0.015625) < 3 * p.std() / np.sqrt(len(p))


def test_coarser_grid_gives_smaller_sup():
    w = simulate_pillow(0.005, np.random.default_rng(5)).values
    assert np.abs(w[::4, ::4]).max() <= np.abs(w).max()


def test_pillow_draws_chunk_independent():
    a = pillow_sup_draws(0.05, 30, seed=1, chunk=7)
    b = pillow_sup_draws(0.05, 30, seed=1, chunk=50)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_pillow_critical_values_feasibility():
    with pytest.raises(ValueError, match="500"):
        pillow_critical_values(0.05, 100)
    with pytest.raises(ValueError, match="too few"):
        pillow_critical_values(0.05, 1000, sizes=(0.005,))


def test_critical_table_roundtrip(tmp_path):
    t = pillow_critical_values(0.05, 500, sizes=(0.05, 0.1), seed=3)
    f = tmp_path / "crit.json"
    t.save(f)
    u = CriticalTable.load(f)
    assert u == t
    assert t.critical(0.05)[0] > t.critical(0.1)[0]


def test_critical_table_monotone():
    with pytest.raises(ValueError):
        CriticalTable({0.05: (0.7, 0.2), 0.1: (0.8, 0.1)})


def test_published_values():
    t = CriticalTable.published()
    assert t.critical(0.05) == (0.8135, 0.1939)
    assert t.critical(0.10) == (0.7626, 0.1621)
    assert PUBLISHED_CRITICAL_VALUES[0.005] == (0.9660, 0.3021)
    assert t.critical(0.20) == (0.6990, 0.1289)


def test_mc_p_value():
    assert mc_p_value(1.0, [0.5, 1.0, 2.0]) == 0.75
    assert mc_p_value(0.0, np.zeros(9)) == 1.0
    assert mc_p_value(5.0, np.zeros(9)) == 0.1


def test_limit_grid_refine():
    path = _path()
    g = limit_grid(path, 3)
    assert len(g) == 3 * 10 + 1 and g[0] == 0.0 and g[-1] == 1.0
    np.testing.assert_allclose(g[::3], path.breakpoints)


def test_full_set_process_vanishes():
    path = _path()
    z = limit_process_values(path, [[1.0]], [0.2, 0.5, 0.9], 30, seed=1)
    assert np.abs(z).max() < 1e-12


def test_single_atom_gives_unit_p_values():
    x = np.array([[1.0, 1.0], [0.1, 0.2], [0.2, 0.1]])
    path = estimate_path(decompose(x), BlockScheme(3, 3, 1))
    fam = enumerate_candidate_sets(path.atoms()[0], 2)
    assert estimated_limit_p_values(path, fam, (0.0, 0.0), 20) == (1.0, 1.0)


def test_limit_draws_deterministic_and_chunk_free():
    path = _path(d=3, n=240, b=40, k=6)
    fam = enumerate_candidate_sets(path.atoms()[0], 3)
    a = limit_sup_draws(path, fam, 40, seed=9, chunk=7)
    b = limit_sup_draws(path, fam, 40, seed=9, chunk=40)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_limit_sups_match_direct_evaluation():
    path = _path(seed=4, n=120, b=20, k=3)
    fam = enumerate_candidate_sets(path.atoms()[0], 2)
    ks, _ = limit_sup_draws(path, fam, 10, seed=2)
    corners = fam.candidate_corners
    for mode in ("closed", "open"):
        z = limit_process_values(path, corners, path.breakpoints, 10, seed=2, mode=mode)
        assert np.all(np.abs(z).max(axis=(1, 2)) <= ks + 1e-12)
    zc = limit_process_values(path, corners, path.breakpoints, 10, seed=2, mode="closed")
    zo = limit_process_values(path, corners, path.breakpoints, 10, seed=2, mode="open")
    np.testing.assert_allclose(np.maximum(np.abs(zc).max(axis=(1, 2)), np.abs(zo).max(axis=(1, 2))), ks,
                               rtol=1e-12)


def test_limit_covariance_small():
    path = _path(seed=6, n=200, b=20, k=5)
    theta, mass, _ = path.atoms()
    p = mass / mass.sum()
    corners = np.array([[0.3], [0.7]])
    times = [0.3, 0.6]
    z = limit_process_values(path, corners, times, 4000, seed=3)
    sa = p[theta[:, 0] <= 0.3].sum()
    sb = p[theta[:, 0] <= 0.7].sum()
    want = (0.3 - 0.3 * 0.6) * (sa - sa * sb)
    prod = z[:, 0, 0] * z[:, 1, 1]
    assert abs(prod.mean() - want) < 3 * prod.std() / np.sqrt(len(prod))
