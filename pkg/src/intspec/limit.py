"""Gaussian limit objects: Brownian bridges, the Brownian pillow and the
bridge mixture built on the atoms of an estimated integrated spectral measure.

Every replication draws from its own stream keyed by ``(seed, replication)``,
so results do not depend on chunking or worker count.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .estimator import SpectralPath
from .sample import LowerSetFamily

DEFAULT_SIZES = (0.05, 0.10)

# Brownian pillow quantiles on a 0.001 grid from 10,000 draws (published reference values).
PUBLISHED_CRITICAL_VALUES = {
    0.005: (0.9660, 0.3021),
    0.01: (0.9222, 0.2683),
    0.025: (0.8634, 0.2242),
    0.05: (0.8135, 0.1939),
    0.10: (0.7626, 0.1621),
    0.20: (0.6990, 0.1289),
}


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the replication identified by ``keys``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys)))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid needs at least the two points 0 and 1")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("grid must start at 0 and end at 1")
    return grid


def simulate_bridges(grid, size, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent Brownian bridges on ``grid``; shape ``size + (len(grid),)``.

    A Brownian motion is built from independent N(0, spacing) increments and
    pinned via ``B(t) = W(t) - t W(1)``; both endpoints are exactly zero.
    """
    grid = _check_grid(grid)
    size = (size,) if np.isscalar(size) else tuple(size)
    dt = np.diff(grid)
    inc = rng.standard_normal(size + (len(dt),)) * np.sqrt(dt)
    w = np.concatenate([np.zeros(size + (1,)), np.cumsum(inc, axis=-1)], axis=-1)
    b = w - grid * w[..., -1:]
    b[..., 0] = 0.0
    b[..., -1] = 0.0
    return b


def simulate_bridge(grid, rng: np.random.Generator) -> np.ndarray:
    return simulate_bridges(grid, (), rng)


@dataclass(frozen=True, eq=False)
class BridgePanel:
    grid: np.ndarray
    draws: np.ndarray


def bridge_panel(grid, replications: int, seed: int = 0) -> BridgePanel:
    grid = _check_grid(grid)
    draws = np.stack([simulate_bridge(grid, substream(seed, r)) for r in range(replications)])
    return BridgePanel(grid, draws)


def _pillow_steps(grid_step: float) -> int:
    if not 0.0 < grid_step <= 0.05:
        raise ValueError("grid_step must lie in (0, 0.05]")
    N = int(round(1.0 / grid_step))
    if abs(N * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must divide 1")
    return N


@dataclass(frozen=True, eq=False)
class PillowDraw:
    grid_s: np.ndarray
    grid_t: np.ndarray
    values: np.ndarray


def simulate_pillow(grid_step: float, rng: np.random.Generator) -> PillowDraw:
    """One Brownian pillow on the square grid with spacing ``grid_step``.

    Built from a cumulative-sum Brownian sheet ``S`` as
    ``S(s,t) - s S(1,t) - t S(s,1) + s t S(1,1)``.
    """
    N = _pillow_steps(grid_step)
    grid = np.arange(N + 1) * grid_step
    grid[-1] = 1.0
    sheet = np.zeros((N + 1, N + 1))
    sheet[1:, 1:] = np.cumsum(np.cumsum(rng.standard_normal((N, N)), axis=1), axis=0) * grid_step
    s = grid[:, None]
    t = grid[None, :]
    w = sheet - s * sheet[-1:, :] - t * sheet[:, -1:] + (s * t) * sheet[-1, -1]
    w[0, :] = w[-1, :] = 0.0
    w[:, 0] = w[:, -1] = 0.0
    return PillowDraw(grid, grid.copy(), w)


@dataclass(frozen=True)
class CriticalTable:
    """Critical values per nominal size for the d = 2 tests."""

    values: dict = field(default_factory=dict)  # size -> (ks, cm)
    grid_step: float | None = None
    replications: int | None = None
    seed: int | None = None

    def __post_init__(self):
        sizes = sorted(self.values)
        for lo, hi in zip(sizes, sizes[1:]):
            if not (self.values[lo][0] > self.values[hi][0] and self.values[lo][1] > self.values[hi][1]):
                raise ValueError("critical values must decrease strictly with the nominal size")

    @classmethod
    def published(cls) -> "CriticalTable":
        return cls(dict(PUBLISHED_CRITICAL_VALUES), grid_step=0.001, replications=10_000, seed=None)

    @property
    def sizes(self) -> list[float]:
        return sorted(self.values)

    def critical(self, size: float) -> tuple[float, float]:
        for s, v in self.values.items():
            if abs(s - size) < 1e-12:
                return v
        raise KeyError(f"no critical value for nominal size {size}")

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "ks": [self.values[s][0] for s in self.sizes],
            "cm": [self.values[s][1] for s in self.sizes],
            "grid_step": self.grid_step,
            "replications": self.replications,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CriticalTable":
        values = {float(s): (float(a), float(b)) for s, a, b in zip(doc["sizes"], doc["ks"], doc["cm"])}
        return cls(values, doc.get("grid_step"), doc.get("replications"), doc.get("seed"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "CriticalTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def pillow_sup_draws(grid_step: float = 0.005, replications: int = 2000, seed: int = 0,
                     backend: str | None = None, chunk: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Per-replication ``sup |W|`` and ``sup_t int W(s,t)^2 ds`` of Brownian pillows."""
    N = _pillow_steps(grid_step)
    ks = np.empty(replications)
    cm = np.empty(replications)
    for lo in range(0, replications, chunk):
        hi = min(replications, lo + chunk)
        normals = np.stack([substream(seed, r).standard_normal((N, N)) for r in range(lo, hi)])
        ks[lo:hi], cm[lo:hi] = kernels.pillow_sups(normals, 1.0 / N, backend)
    return ks, cm


def pillow_critical_values(grid_step: float = 0.005, replications: int = 2000, sizes=DEFAULT_SIZES,
                           seed: int = 0, backend: str | None = None) -> CriticalTable:
    """Empirical upper quantiles of the pillow functionals, one pair per nominal size."""
    if replications < 500:
        raise ValueError("at least 500 replications are required")
    sizes = sorted(float(s) for s in sizes)
    for s in sizes:
        if not 0.0 < s < 1.0:
            raise ValueError(f"nominal size {s} outside (0, 1)")
        if s * replications < 10:
            raise ValueError(f"{replications} replications are too few for nominal size {s} "
                             f"(need size * replications >= 10)")
    ks, cm = pillow_sup_draws(grid_step, replications, seed, backend)
    values = {s: (float(np.quantile(ks, 1.0 - s)), float(np.quantile(cm, 1.0 - s))) for s in sizes}
    return CriticalTable(values, grid_step, replications, seed)


def limit_grid(path: SpectralPath, refine: int = 1) -> np.ndarray:
    """Breakpoints of ``path``, optionally with each interval split into ``refine`` pieces."""
    tb = path.breakpoints
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    if refine == 1:
        return tb
    inner = tb[:-1, None] + np.diff(tb)[:, None] * (np.arange(refine) / refine)[None, :]
    return np.concatenate([inner.ravel(), [1.0]])


def limit_sup_draws(path: SpectralPath, family: LowerSetFamily, replications: int = 200, seed: int = 0,
                    refine: int = 1, backend: str | None = None, chunk: int = 25) -> tuple[np.ndarray, np.ndarray]:
    """Draws of ``sup_{t,A} |Z(t,A)|`` and ``sup_A int Z(t,A)^2 dt`` for the bridge mixture

        Z(t, A) = sum_{l in A} sqrt(p_l) B_l(t) - P(A) sum_l sqrt(p_l) B_l(t)

    over the atoms ``theta_l`` with masses ``p_l`` of the integrated path at t = 1.
    """
    theta, mass, _ = path.atoms()
    if len(mass) == 0:
        raise ValueError("the estimated spectral measure has no atoms")
    grid = limit_grid(path, refine)
    weights = np.diff(grid)
    root = np.sqrt(mass / mass.sum())
    ks = np.empty(replications)
    cm = np.empty(replications)
    for lo in range(0, replications, chunk):
        hi = min(replications, lo + chunk)
        bridges = np.stack([simulate_bridges(grid, len(mass), substream(seed, r)) for r in range(lo, hi)])
        res = kernels.family_sups(bridges * root[None, :, None], theta, mass, family, weights, backend)
        ks[lo:hi] = res["ks"]
        cm[lo:hi] = res["cm"]
    return ks, cm


def mc_p_value(observed: float, draws: np.ndarray) -> float:
    """``(1 + #{draws >= observed}) / (1 + #draws)``."""
    draws = np.asarray(draws)
    return float((1 + np.count_nonzero(draws >= observed)) / (1 + draws.size))


def estimated_limit_p_values(path: SpectralPath, family: LowerSetFamily, statistics, replications: int = 200,
                             seed: int = 0, refine: int = 1, backend: str | None = None) -> tuple[float, float]:
    """Monte Carlo p-values of ``(t_ks, t_cm)`` under the estimated limit process."""
    t_ks, t_cm = statistics
    ks, cm = limit_sup_draws(path, family, replications, seed, refine, backend)
    return mc_p_value(t_ks, ks), mc_p_value(t_cm, cm)


def limit_process_values(path: SpectralPath, corners, times, replications: int, seed: int = 0,
                         mode: str = "closed") -> np.ndarray:
    """Direct evaluation of the bridge mixture at given corners and times.

    Returns an array ``(replications, len(times), len(corners))``; meant for
    checking moments, not for the suprema (see :func:`limit_sup_draws`).
    """
    theta, mass, _ = path.atoms()
    p = mass / mass.sum()
    grid = np.unique(np.concatenate([[0.0, 1.0], np.asarray(times, dtype=np.float64)]))
    pos = np.searchsorted(grid, times)
    corners = np.asarray(corners, dtype=np.float64)
    if corners.ndim == 1:
        corners = corners[:, None]
    sub = theta[:, : corners.shape[1]]
    inside = np.stack([np.all(sub <= c, axis=1) if mode == "closed" else np.all(sub < c, axis=1)
                       for c in corners], axis=1).astype(float)  # (m, C)
    pa = p @ inside
    out = np.empty((replications, len(pos), corners.shape[0]))
    for r in range(replications):
        b = simulate_bridges(grid, len(p), substream(seed, r))[:, pos] * np.sqrt(p)[:, None]  # (m, T)
        out[r] = b.T @ inside - np.sum(b, axis=0)[:, None] * pa[None, :]
    return out
