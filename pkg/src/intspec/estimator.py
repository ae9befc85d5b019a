"""Local spectral-measure estimates per block and the integrated path."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sample import Block, BlockScheme, LowerSetFamily, Polar, partition


class InsufficientExceedancesError(ValueError):
    """A block or window has fewer than k+1 points with nonzero radius."""


def _select_top(points: Polar, k: int) -> tuple[float, np.ndarray]:
    """Threshold (the (k+1)th largest radius) and positions of the k largest.

    Equal radii are ordered by original index, smaller index first.
    """
    nonzero = np.count_nonzero(points.r > 0)
    if nonzero < k + 1:
        raise InsufficientExceedancesError(
            f"insufficient exceedance candidates: {nonzero} nonzero radii, need k+1={k + 1}")
    order = np.lexsort((points.index, -points.r))
    return float(points.r[order[k]]), order[:k]


@dataclass(frozen=True, eq=False)
class BlockEstimate:
    """Estimated spectral measure of one block: uniform mass 1/k on the selected angles."""

    block_index: int
    threshold: float
    selected: Polar
    k: int

    def measure(self, corner, mode: str = "closed") -> float:
        """Mass of ``A_y`` for ``y = corner`` (a scalar works for d = 2)."""
        corner = np.atleast_1d(np.asarray(corner, dtype=np.float64))
        theta = self.selected.theta[:, : len(corner)]
        inside = np.all(theta <= corner, axis=1) if mode == "closed" else np.all(theta < corner, axis=1)
        return np.count_nonzero(inside) / self.k

    def measure_of(self, indicator) -> float:
        """Mass of an arbitrary set given as a predicate on an ``(k, d)`` angle array."""
        return np.count_nonzero(indicator(self.selected.theta)) / self.k


def local_estimate(block: Block, k: int) -> BlockEstimate:
    threshold, top = _select_top(block.points, k)
    return BlockEstimate(block.index, threshold, block.points.take(top), k)


def estimate_at(t: float, points: Polar, scheme: BlockScheme, times=None) -> BlockEstimate:
    """Local estimate from the window of observations with time in ``(t - h, t + h]``.

    ``times`` defaults to the equidistant ``i/n``.
    """
    if times is None:
        times = (points.index + 1) / scheme.n
    times = np.asarray(times, dtype=np.float64)
    h = scheme.h
    window = np.flatnonzero((times > t - h) & (times <= t + h))
    sub = points.take(window)
    threshold, top = _select_top(sub, scheme.k)
    return BlockEstimate(0, threshold, sub.take(top), scheme.k)


@dataclass(frozen=True, eq=False)
class SpectralPath:
    """Integrated spectral measure ``t -> IS_t(A)``, piecewise linear in t.

    On ``(t_{j-1}, t_j]`` with breakpoints ``scheme.breakpoints()`` the slope
    is the measure of block j; the last block's slope continues to t = 1.
    """

    scheme: BlockScheme
    block_estimates: tuple[BlockEstimate, ...]

    @property
    def breakpoints(self) -> np.ndarray:
        return self.scheme.breakpoints()

    @property
    def weights(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def block_measures(self, corner, mode: str = "closed") -> np.ndarray:
        return np.array([e.measure(corner, mode) for e in self.block_estimates])

    def eval(self, t: float, corner, mode: str = "closed") -> float:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t={t} outside [0, 1]")
        mu = self.block_measures(corner, mode)
        cum = np.concatenate([[0.0], np.cumsum(self.weights * mu)])
        tb = self.breakpoints
        j = min(int(np.searchsorted(tb, t, side="right")) - 1, len(mu) - 1)
        return float(cum[j] + (t - tb[j]) * mu[j])

    def atoms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All selected angles, their masses ``IS_1({theta_l})`` and block numbers.

        Repeated angles are kept as separate atoms; their masses add up.
        """
        theta = np.concatenate([e.selected.theta for e in self.block_estimates])
        block = np.repeat(np.arange(len(self.block_estimates)), [len(e.selected) for e in self.block_estimates])
        mass = self.weights[block] / self.scheme.k
        return theta, mass, block

    def atom_paths(self) -> np.ndarray:
        """``(m, J+1)`` array: atom l's contribution to ``k/(2h) * IS_t`` at each breakpoint.

        Values are in block units (a full block interval counts as 1), so they
        are integers whenever ``n`` is a multiple of ``b``.
        """
        _, _, block = self.atoms()
        J = len(self.block_estimates)
        units = np.ones(J)
        units[J - 1] = (self.scheme.n - (J - 1) * self.scheme.b) / self.scheme.b
        steps = np.arange(1, J + 1)
        return np.concatenate([np.zeros((len(block), 1)),
                               np.where(block[:, None] < steps[None, :], units[block][:, None], 0.0)], axis=1)

    def tabulate(self, family: LowerSetFamily, mode: str = "closed") -> np.ndarray:
        """Values ``IS_{t_j}(A_c)`` at every breakpoint (rows) and corner (columns)."""
        theta, _, block = self.atoms()
        cells = family.cell_index(theta[:, : family.dimension - 1], mode)
        ext = tuple(s + 1 for s in family.shape)
        J = len(self.block_estimates)
        counts = np.zeros((J,) + ext)
        np.add.at(counts, (block,) + np.unravel_index(cells, ext), 1.0)
        for ax in range(1, counts.ndim):
            counts = np.cumsum(counts, axis=ax)
        fam = counts[(slice(None),) + tuple(slice(0, s) for s in family.shape)].reshape(J, -1)
        mu = fam / self.scheme.k
        return np.concatenate([np.zeros((1, mu.shape[1])), np.cumsum(self.weights[:, None] * mu, axis=0)])


def integrated_path(scheme: BlockScheme, estimates) -> SpectralPath:
    estimates = tuple(estimates)
    if not estimates:
        raise ValueError("need at least one block estimate")
    if len(estimates) != scheme.n_blocks:
        raise ValueError(f"scheme has {scheme.n_blocks} blocks, got {len(estimates)} estimates")
    return SpectralPath(scheme, estimates)


def estimate_path(points: Polar, scheme: BlockScheme) -> SpectralPath:
    """Partition, estimate every block and integrate."""
    blocks = partition(scheme, points)
    return integrated_path(scheme, [local_estimate(b, scheme.k) for b in blocks])
