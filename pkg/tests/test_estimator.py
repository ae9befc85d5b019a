import numpy as np
import pytest

from intspec.estimator import (
    InsufficientExceedancesError,
    estimate_at,
    estimate_path,
    integrated_path,
    local_estimate,
)
from intspec.sample import Block, BlockScheme, decompose, enumerate_candidate_sets, partition


def _block(x):
    return Block(1, decompose(np.asarray(x, dtype=float)))


def test_local_estimate_worked_example():
    est = local_estimate(_block([(3, 4), (6, 8), (1, 0), (0, 2), (5, 12)]), 2)
    assert est.threshold == 5.0
    assert sorted(est.selected.r) == [10.0, 13.0]
    assert est.measure(0.5) == 0.5


def test_local_estimate_ties_use_index():
    est = local_estimate(_block([(1, 1), (2, 0), (0, 2), (2, 0), (0.5, 0)]), 2)
    assert est.threshold == 2.0
    assert est.selected.index.tolist() == [1, 2]  # three radii equal 2; the two smallest indices win
    assert est.measure(1.0) == 1.0


def test_local_estimate_needs_nonzero_radii():
    with pytest.raises(InsufficientExceedancesError, match="insufficient exceedance candidates"):
        local_estimate(_block([(0, 0), (0, 0), (1, 1), (0, 0)]), 1)


def test_point_mass_measure_is_zero_or_one():
    est = local_estimate(_block([(c, c) for c in (1, 5, 3, 2, 4)]), 3)
    for y in np.linspace(0, 1, 11):
        assert est.measure(y) in (0.0, 1.0)


def test_measure_properties():
    rng = np.random.default_rng(0)
    est = local_estimate(_block(rng.pareto(2, size=(40, 3)) + 0.01), 7)
    assert est.measure([1.0, 1.0]) == 1.0
    assert est.measure([0.0, 0.0], "open") == 0.0
    vals = [est.measure([y, 1.0]) for y in np.linspace(0, 1, 30)]
    assert all(np.diff(vals) >= 0)
    assert set(np.round(np.array(vals) * 7, 12)) <= set(range(8))


def test_estimate_at_matches_block_at_center():
    rng = np.random.default_rng(1)
    pts = decompose(rng.pareto(2, size=(40, 2)) + 0.01)
    scheme = BlockScheme(40, 10, 3)
    blocks = partition(scheme, pts)
    for j, c in enumerate(scheme.centers()):
        a = estimate_at(c, pts, scheme)
        b = local_estimate(blocks[j], 3)
        assert a.threshold == b.threshold
        np.testing.assert_array_equal(a.selected.index, b.selected.index)


def test_estimate_at_straddling_window():
    rng = np.random.default_rng(2)
    pts = decompose(rng.pareto(2, size=(40, 2)) + 0.01)
    scheme = BlockScheme(40, 10, 2)
    t = 0.4  # window (0.275, 0.525] holds observations 12..21 (1-based)
    est = estimate_at(t, pts, scheme)
    assert set(est.selected.index + 1) <= set(range(12, 22))
    r = pts.r[11:21]
    assert est.threshold == np.sort(r)[::-1][2]


def test_estimate_at_three_points():
    pts = decompose(np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]))
    est = estimate_at(0.5, pts, BlockScheme(3, 3, 1))
    assert est.threshold == 2.0 and est.selected.r.tolist() == [3.0]


def _two_block_path():
    # block 1: top angles have theta_1 near 0.1, block 2: near 0.9
    x = [(1, 9.9), (2, 19.8), (0.1, 0.1), (9, 1.1), (18, 2.2), (0.1, 0.1)]
    pts = decompose(np.array(x, dtype=float))
    scheme = BlockScheme(6, 3, 2)
    return estimate_path(pts, scheme)


def test_integrated_path_two_blocks():
    path = _two_block_path()
    y = 0.5
    assert path.block_measures(y).tolist() == [1.0, 0.0]
    assert path.eval(0.5, y) == 0.5
    assert path.eval(1.0, y) == 0.5
    assert path.eval(0.75, y) == 0.5
    assert path.eval(0.25, y) == 0.25
    with pytest.raises(ValueError):
        path.eval(1.5, y)


def test_single_block_path_is_linear():
    rng = np.random.default_rng(3)
    pts = decompose(rng.pareto(2, size=(20, 2)) + 0.01)
    path = estimate_path(pts, BlockScheme(20, 20, 4))
    m = path.block_measures(0.5)[0]
    for t in (0.0, 0.3, 1.0):
        assert path.eval(t, 0.5) == pytest.approx(t * m, abs=1e-15)


def test_path_invariants():
    rng = np.random.default_rng(4)
    pts = decompose(rng.pareto(2, size=(300, 2)) + 0.01)
    path = estimate_path(pts, BlockScheme(300, 30, 5))
    ts = np.linspace(0, 1, 301)
    for y in (0.2, 0.5, 1.0):
        v = np.array([path.eval(t, y) for t in ts])
        assert v[0] == 0.0
        assert np.all(np.diff(v) >= -1e-15)
        assert np.all(np.diff(v) <= np.diff(ts) + 1e-15)
    assert path.eval(1.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_tabulate_matches_eval():
    rng = np.random.default_rng(5)
    pts = decompose(rng.pareto(2, size=(120, 3)) + 0.01)
    path = estimate_path(pts, BlockScheme(120, 20, 4))
    theta, _, _ = path.atoms()
    fam = enumerate_candidate_sets(theta, 3)
    for mode in ("closed", "open"):
        tab = path.tabulate(fam, mode)
        for flat in range(0, fam.size, 11):
            corner = fam.corner(flat)
            want = [path.eval(t, corner, mode) for t in path.breakpoints]
            np.testing.assert_allclose(tab[:, flat], want, atol=1e-14)


def test_atoms_masses_sum_to_one():
    rng = np.random.default_rng(6)
    pts = decompose(rng.pareto(2, size=(100, 2)) + 0.01)
    path = estimate_path(pts, BlockScheme(100, 25, 5))
    _, mass, block = path.atoms()
    assert mass.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(mass, 1 / 20)
    units = path.atom_paths()
    assert units.shape == (20, 5)
    assert np.all(units[:, -1] == 1.0)


def test_integrated_path_rejects_wrong_length():
    path = _two_block_path()
    with pytest.raises(ValueError):
        integrated_path(path.scheme, path.block_estimates[:1])


def test_block_rescaling_leaves_estimates_unchanged():
    rng = np.random.default_rng(7)
    x = rng.pareto(2, size=(60, 2)) + 0.01
    scale = np.repeat(rng.uniform(0.1, 10, size=3), 20)[:, None]
    a = estimate_path(decompose(x), BlockScheme(60, 20, 4))
    b = estimate_path(decompose(x * scale), BlockScheme(60, 20, 4))
    for ea, eb in zip(a.block_estimates, b.block_estimates):
        np.testing.assert_array_equal(ea.selected.index, eb.selected.index)
