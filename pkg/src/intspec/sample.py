"""Observations, radius/angle decomposition, blocking and the lower-set family.

A sample is held as arrays rather than lists of point objects; the point types
below are what indexing a :class:`Sample` or :class:`Polar` hands back.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

NORMS = ("euclidean", "sum", "max")
MODES = ("closed", "open")
# angle coordinates closer than this are one corner; absorbs rounding in x / ||x||
ANGLE_TOL = 1e-12


class DimensionError(ValueError):
    """Observations do not share one dimension d >= 2."""


class InfeasibleSchemeError(ValueError):
    """Block length / exceedance count combination cannot be used."""


class TruncationWarning(UserWarning):
    """Trailing observations that do not fill a block were dropped."""


@dataclass(frozen=True)
class TimedObservation:
    t: float
    x: tuple[float, ...]


@dataclass(frozen=True)
class AngularPoint:
    r: float
    theta: tuple[float, ...] | None
    index: int


@dataclass(frozen=True, eq=False)
class Sample:
    """``n`` observations ``x`` (shape ``(n, d)``) at times ``t`` in [0, 1]."""

    x: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2:
            raise DimensionError(f"expected a 2-d array of observations, got shape {x.shape}")
        if x.shape[1] < 2:
            raise DimensionError(f"need dimension d >= 2, got d={x.shape[1]}")
        t = np.asarray(self.t, dtype=np.float64)
        if t.shape != (x.shape[0],):
            raise ValueError("one time stamp per observation is required")
        if x.shape[0] and (t.min() < 0.0 or t.max() > 1.0):
            raise ValueError("observation times must lie in [0, 1]")
        x.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    @classmethod
    def equidistant(cls, x) -> "Sample":
        x = np.asarray(x, dtype=np.float64)
        n = x.shape[0] if x.ndim else 0
        return cls(x, np.arange(1, n + 1) / max(n, 1))

    @classmethod
    def from_observations(cls, observations: Sequence[TimedObservation]) -> "Sample":
        if not observations:
            raise ValueError("sample is empty")
        d = len(observations[0].x)
        if any(len(o.x) != d for o in observations):
            raise DimensionError("observations have differing dimensions")
        return cls(np.array([o.x for o in observations], dtype=np.float64),
                   np.array([o.t for o in observations], dtype=np.float64))

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, i: int) -> TimedObservation:
        return TimedObservation(float(self.t[i]), tuple(float(v) for v in self.x[i]))

    def __iter__(self) -> Iterator[TimedObservation]:
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True, eq=False)
class Polar:
    """Radii, angles and original positions of a set of points.

    ``theta`` rows are NaN where ``r == 0``.
    """

    r: np.ndarray
    theta: np.ndarray
    index: np.ndarray
    norm: str = "euclidean"

    def __len__(self) -> int:
        return self.r.shape[0]

    @property
    def d(self) -> int:
        return self.theta.shape[1]

    def __getitem__(self, i: int) -> AngularPoint:
        r = float(self.r[i])
        theta = None if r == 0.0 else tuple(float(v) for v in self.theta[i])
        return AngularPoint(r, theta, int(self.index[i]))

    def __iter__(self) -> Iterator[AngularPoint]:
        return (self[i] for i in range(len(self)))

    def take(self, idx) -> "Polar":
        idx = np.asarray(idx)
        return Polar(self.r[idx], self.theta[idx], self.index[idx], self.norm)


def norm_of(x: np.ndarray, norm: str = "euclidean") -> np.ndarray:
    if norm == "euclidean":
        return np.sqrt(np.sum(x * x, axis=-1))
    if norm == "sum":
        return np.sum(np.abs(x), axis=-1)
    if norm == "max":
        return np.max(np.abs(x), axis=-1)
    raise ValueError(f"unknown norm {norm!r}; choose from {NORMS}")


def decompose(sample, norm: str = "euclidean") -> Polar:
    """Split observations into radius ``||x||`` and angle ``x / ||x||``.

    ``sample`` may be a :class:`Sample`, an ``(n, d)`` array or a sequence of
    :class:`TimedObservation`.  Zero vectors get ``r = 0`` and a NaN angle.
    """
    if isinstance(sample, Sample):
        x = sample.x
    elif len(sample) and isinstance(sample[0], TimedObservation):
        x = Sample.from_observations(sample).x
    else:
        x = Sample.equidistant(sample).x
    if x.shape[0] == 0:
        raise ValueError("sample is empty")
    r = norm_of(x, norm)
    theta = np.full_like(x, np.nan)
    pos = r > 0
    theta[pos] = x[pos] / r[pos, None]
    return Polar(r, theta, np.arange(x.shape[0]), norm)


@dataclass(frozen=True)
class BlockScheme:
    """Sample size ``n``, block length ``b`` and exceedances per block ``k``."""

    n: int
    b: int
    k: int

    def __post_init__(self):
        if self.k < 1 or self.b < 1 or self.n < 1:
            raise InfeasibleSchemeError("n, b and k must be positive")
        if self.b > self.n:
            raise InfeasibleSchemeError(f"fewer observations than one block (n={self.n} < b={self.b})")
        if self.k >= self.b:
            raise InfeasibleSchemeError(f"need k < b, got k={self.k}, b={self.b}")

    @property
    def h(self) -> float:
        return self.b / (2.0 * self.n)

    @property
    def n_blocks(self) -> int:
        return self.n // self.b

    @property
    def n_used(self) -> int:
        return self.n_blocks * self.b

    def centers(self) -> np.ndarray:
        j = np.arange(1, self.n_blocks + 1)
        return (2 * j - 1) * self.h

    def breakpoints(self) -> np.ndarray:
        """Times ``0, 2h, ..., 2h(J-1), 1`` at which the integrated path has kinks.

        With a truncated remainder the last block's slope continues to t = 1.
        """
        J = self.n_blocks
        tb = np.arange(J + 1) * self.b / self.n
        tb[-1] = 1.0
        return tb


@dataclass(frozen=True, eq=False)
class Block:
    index: int
    points: Polar

    def __len__(self) -> int:
        return len(self.points)


def partition(scheme: BlockScheme, points: Polar) -> list[Block]:
    """Cut the first ``J*b`` points into ``J`` consecutive blocks of ``b``.

    Block ``j`` (1-based) holds original positions ``(j-1)b+1 .. jb``.
    """
    if len(points) < scheme.n:
        raise InfeasibleSchemeError(f"scheme expects n={scheme.n} points, got {len(points)}")
    if scheme.n < scheme.b:
        raise InfeasibleSchemeError("fewer observations than one block")
    dropped = scheme.n - scheme.n_used
    if dropped:
        warnings.warn(f"discarding {dropped} trailing observation(s) that do not fill a block of {scheme.b}",
                      TruncationWarning, stacklevel=2)
    b = scheme.b
    return [Block(j + 1, points.take(np.arange(j * b, (j + 1) * b))) for j in range(scheme.n_blocks)]


@dataclass(frozen=True, eq=False)
class LowerSetFamily:
    """Sets ``A_y = {theta : theta_i <= y_i, i < d}`` for corners on a product grid.

    ``axes[i]`` holds the sorted corner values for coordinate ``i``; the family
    is the cross product.  Every corner is used in both comparison modes:
    ``closed`` (``theta_i <= y_i``) and ``open`` (``theta_i < y_i``), the latter
    giving left limits at atoms.  Comparisons allow a slack of ``tol`` so that
    angles differing only by rounding fall on the same side of every corner.
    """

    dimension: int
    axes: tuple[np.ndarray, ...]
    exhaustive: bool = True
    modes: tuple[str, ...] = field(default=MODES)
    tol: float = ANGLE_TOL

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def candidate_corners(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def corner(self, flat: int) -> np.ndarray:
        idx = np.unravel_index(int(flat), self.shape)
        return np.array([a[i] for a, i in zip(self.axes, idx)])

    def cell_index(self, theta: np.ndarray, mode: str = "closed") -> np.ndarray:
        """Flat cell of each angle in the grid extended by one overflow slot per axis.

        An angle lies in ``A_c`` (mode ``mode``) iff its cell index is ``<= c``
        along every axis.
        """
        side = _side(mode)
        theta = np.atleast_2d(theta)
        shift = -self.tol if mode == "closed" else self.tol
        per_axis = [np.searchsorted(a, theta[:, i] + shift, side=side) for i, a in enumerate(self.axes)]
        ext = tuple(s + 1 for s in self.shape)
        return np.ravel_multi_index(per_axis, ext).astype(np.int64)

    def contains(self, theta: np.ndarray, corner, mode: str = "closed") -> np.ndarray:
        theta = np.atleast_2d(theta)[:, : self.dimension - 1]
        corner = np.asarray(corner, dtype=np.float64)
        _side(mode)
        if mode == "closed":
            ok = np.all(theta <= corner + self.tol, axis=1)
        else:
            ok = np.all(theta < corner - self.tol, axis=1)
        return ok & ~np.isnan(theta).any(axis=1)

    def full_corner(self) -> np.ndarray:
        return np.array([a[-1] for a in self.axes])


def _side(mode: str) -> str:
    if mode == "closed":
        return "left"
    if mode == "open":
        return "right"
    raise ValueError(f"unknown comparison mode {mode!r}")


def enumerate_candidate_sets(points, dimension: int, cap: int = 10_000) -> LowerSetFamily:
    """Corner grid on which every distinct set ``A_y`` is represented.

    ``points`` are the selected exceedance angles (a :class:`Polar` or an
    ``(m, d)`` array).  Per axis the corners are the distinct observed
    coordinates clipped to [0, 1] plus 0 and 1.  When the cross product would
    exceed ``cap`` corners, each axis is thinned to ``g = floor(cap**(1/(d-1)))``
    values at evenly spaced ranks of the observed coordinates (the last one
    being 1), so each strip between neighbouring corners carries at most about
    ``1/g`` of the points.
    """
    if dimension < 2:
        raise DimensionError("dimension must be at least 2")
    theta = points.theta if isinstance(points, Polar) else np.asarray(points, dtype=np.float64)
    theta = np.atleast_2d(theta).reshape(-1, dimension) if np.size(theta) else np.empty((0, dimension))
    theta = theta[~np.isnan(theta).any(axis=1)]
    k = dimension - 1
    coords = [np.clip(theta[:, i], 0.0, 1.0) for i in range(k)]
    axes = [_merge_close(np.concatenate([c, [0.0, 1.0]])) for c in coords]
    if np.prod([len(a) for a in axes], dtype=float) <= cap:
        return LowerSetFamily(dimension, tuple(axes), exhaustive=True)
    g = max(2, int(np.floor(cap ** (1.0 / k) + 1e-9)))
    thinned = []
    for c, full in zip(coords, axes):
        if len(full) <= g:
            thinned.append(full)
            continue
        s = np.sort(c)
        m = len(s)
        ranks = np.ceil(np.arange(1, g) * m / g).astype(int) - 1
        thinned.append(_merge_close(np.concatenate([s[ranks], [1.0]])))
    return LowerSetFamily(dimension, tuple(thinned), exhaustive=False)


def _merge_close(values: np.ndarray, tol: float = ANGLE_TOL) -> np.ndarray:
    """Sorted distinct values, each run spanning at most ``tol`` replaced by its largest member."""
    v = np.unique(values)
    keep = []
    start = None
    for i, x in enumerate(v):
        if start is None or x - start > tol:
            start = x
            keep.append(i)
        else:
            keep[-1] = i
    return v[keep]


def iter_mode_corners(family: LowerSetFamily) -> Iterable[tuple[str, np.ndarray]]:
    for mode in family.modes:
        for corner in itertools.product(*family.axes):
            yield mode, np.array(corner)
