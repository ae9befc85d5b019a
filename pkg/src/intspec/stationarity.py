"""Kolmogorov-Smirnov and Cramer-von Mises type statistics for a constant
spectral measure, and the accept/reject decision.

Both statistics are functionals of ``D_A(t) = IS_t(A) - t IS_1(A)``.  ``D_A``
is piecewise linear in t with kinks only at the block boundaries, so the sup
over t is attained there and the integral of ``D_A**2`` is exact on each
segment: ``(a*a + a*b + b*b) / 3`` times the segment length.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .estimator import SpectralPath
from .limit import CriticalTable, estimated_limit_p_values
from .sample import LowerSetFamily, enumerate_candidate_sets


class MissingSimulationError(ValueError):
    """Critical values from the pillow only apply to linearly ordered families (d = 2)."""


@dataclass(frozen=True)
class PerSampleSimulation:
    """Request p-values from the estimated limit process of the sample itself."""

    replications: int = 200
    seed: int = 0
    refine: int = 1


@dataclass(frozen=True)
class TestReport:
    t_ks: float
    t_cm: float
    argmax_ks: tuple  # (t, corner, mode)
    argmax_cm: tuple  # (corner, mode)
    critical_values: dict | None = None
    p_values: tuple[float, float] | None = None
    decisions: dict | None = None
    path: SpectralPath | None = field(default=None, repr=False, compare=False)
    family: LowerSetFamily | None = field(default=None, repr=False, compare=False)

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        t, corner, mode = self.argmax_ks
        cm_corner, cm_mode = self.argmax_cm
        out = {
            "t_ks": self.t_ks,
            "t_cm": self.t_cm,
            "argmax_ks": {"t": float(t), "corner": [float(c) for c in corner], "mode": mode},
            "argmax_cm": {"corner": [float(c) for c in cm_corner], "mode": cm_mode},
        }
        if self.path is not None:
            s = self.path.scheme
            out["scheme"] = {"n": s.n, "b": s.b, "k": s.k, "blocks": s.n_blocks}
        if self.critical_values is not None:
            out["critical_values"] = {str(a): {"ks": v[0], "cm": v[1]} for a, v in sorted(self.critical_values.items())}
        if self.p_values is not None:
            out["p_values"] = {"ks": self.p_values[0], "cm": self.p_values[1]}
        if self.decisions is not None:
            out["decisions"] = {str(a): {"reject_ks": bool(v[0]), "reject_cm": bool(v[1])}
                                for a, v in sorted(self.decisions.items())}
        return out


def _path_sups(path: SpectralPath, family: LowerSetFamily, backend=None) -> dict:
    theta, mass, _ = path.atoms()
    paths = path.atom_paths()[None]
    res = kernels.family_sups(paths, theta, mass, family, path.weights, backend)
    scale = 2.0 * path.scheme.h / path.scheme.k
    return {
        "ks": float(np.sqrt(scale) * res["ks"][0]),
        "ks_arg": (float(path.breakpoints[res["ks_time"][0]]), family.corner(res["ks_cell"][0]), str(res["ks_mode"][0])),
        "cm": float(scale * res["cm"][0]),
        "cm_arg": (family.corner(res["cm_cell"][0]), str(res["cm_mode"][0])),
    }


def _default_family(path: SpectralPath, family):
    if family is None:
        theta, _, _ = path.atoms()
        family = enumerate_candidate_sets(theta, theta.shape[1])
    return family


def ks_statistic(path: SpectralPath, family: LowerSetFamily | None = None, backend=None):
    """``sqrt(k/(2h)) * sup_{t, A} |IS_t(A) - t IS_1(A)|`` and its maximiser ``(t, corner, mode)``."""
    res = _path_sups(path, _default_family(path, family), backend)
    return res["ks"], res["ks_arg"]


def cm_statistic(path: SpectralPath, family: LowerSetFamily | None = None, backend=None):
    """``k/(2h) * sup_A int_0^1 (IS_t(A) - t IS_1(A))^2 dt`` and its maximiser ``(corner, mode)``."""
    res = _path_sups(path, _default_family(path, family), backend)
    return res["cm"], res["cm_arg"]


def compute_statistics(path: SpectralPath, family: LowerSetFamily | None = None, backend=None) -> TestReport:
    """Both statistics from a single pass over the corner grid."""
    family = _default_family(path, family)
    res = _path_sups(path, family, backend)
    return TestReport(res["ks"], res["cm"], res["ks_arg"], res["cm_arg"], path=path, family=family)


def decide(report: TestReport, critical_source, sizes=(0.05, 0.10), backend=None) -> TestReport:
    """Attach critical values or simulated p-values and reject/accept decisions.

    ``critical_source`` is a :class:`CriticalTable` (bivariate data only) or a
    :class:`PerSampleSimulation`.  A test rejects when its statistic is strictly
    larger than the critical value, or when its p-value is at most the size.
    """
    if isinstance(critical_source, CriticalTable):
        d = report.family.dimension if report.family is not None else 2
        if d != 2:
            raise MissingSimulationError(
                f"pillow critical values are only valid for d=2 (got d={d}); "
                "use PerSampleSimulation to simulate the estimated limit process for this sample")
        sizes = critical_source.sizes
        crit = {a: critical_source.critical(a) for a in sizes}
        dec = {a: (report.t_ks > c[0], report.t_cm > c[1]) for a, c in crit.items()}
        return replace(report, critical_values=crit, decisions=dec)
    if isinstance(critical_source, PerSampleSimulation):
        if report.path is None or report.family is None:
            raise MissingSimulationError("per-sample simulation needs the report's path and family")
        p = estimated_limit_p_values(report.path, report.family, (report.t_ks, report.t_cm),
                                     critical_source.replications, critical_source.seed,
                                     critical_source.refine, backend)
        dec = {float(a): (p[0] <= a, p[1] <= a) for a in sizes}
        return replace(report, p_values=p, decisions=dec)
    if critical_source is None:
        raise MissingSimulationError("no critical source given; pass a CriticalTable (d=2) or PerSampleSimulation")
    raise TypeError(f"unsupported critical source {type(critical_source).__name__}")
