"""Data-generating models: Gumbel and t copulas with time-varying parameters,
Frechet margins with optional time-varying scale, and named scenarios.

Margins are applied through ``-log U`` rather than ``U`` so that points deep
in the upper tail keep full relative precision (``U`` itself rounds to 1).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .sample import Sample


class ScenarioError(ValueError):
    """Invalid scenario or configuration document; message starts with the field path."""


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


# --- samplers -----------------------------------------------------------------

def positive_stable(alpha, rng: np.random.Generator, size=None) -> np.ndarray:
    """Positive stable variables with Laplace transform ``exp(-s**alpha)``, 0 < alpha <= 1.

    Kanter's representation of the totally skewed Chambers-Mallows-Stuck draw:
    ``S = sin(a U) / sin(U)**(1/a) * (sin((1-a) U) / E)**((1-a)/a)`` with
    ``U ~ Uniform(0, pi)`` and ``E ~ Exp(1)``.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if size is None:
        size = alpha.shape
    if np.any((alpha <= 0) | (alpha > 1)):
        raise ValueError("stability index must lie in (0, 1]")
    u = rng.uniform(0.0, math.pi, size)
    e = rng.standard_exponential(size)
    a = np.broadcast_to(alpha, np.shape(u))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (np.sin(a * u) / np.sin(u) ** (1.0 / a)) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
    return np.where(a == 1.0, 1.0, s)


def _gumbel_neglog(d: int, lam, rng: np.random.Generator, size: int) -> np.ndarray:
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (size,))
    if np.any(lam < 1.0):
        raise ValueError("Gumbel parameter must be >= 1")
    a = 1.0 / lam
    s = positive_stable(a, rng, (size,))
    e = rng.standard_exponential((size, d))
    return (e / s[:, None]) ** a[:, None]


def sample_gumbel(d: int, lam, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Gumbel copula draws via Marshall-Olkin: ``U_j = exp(-(E_j / S)**(1/lam))``.

    ``lam`` may be an array with one value per draw.  Returns ``(d,)`` when
    ``size`` is None, otherwise ``(size, d)``.
    """
    n = 1 if size is None else size
    u = np.exp(-_gumbel_neglog(d, lam, rng, n))
    return u[0] if size is None else u


def equicorrelation_root(d: int, rho: float) -> np.ndarray:
    """Symmetric square root of the matrix with unit diagonal and off-diagonal ``rho``."""
    if not -1.0 / (d - 1) < rho < 1.0:
        raise ValueError(f"equicorrelation matrix with rho={rho} is not positive definite for d={d}")
    a = math.sqrt(1.0 - rho)
    c = (math.sqrt(1.0 + (d - 1) * rho) - a) / d
    return a * np.eye(d) + c


def t_cdf(x, nu):
    """Student t cdf (regularised incomplete beta, via SciPy)."""
    return special.stdtr(nu, x)


def _t_neglog(x, nu) -> np.ndarray:
    # -log T(x); the x > 0 branch uses the survival function to stay accurate near 1
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x > 0
    out[pos] = -np.log1p(-special.stdtr(np.broadcast_to(nu, x.shape)[pos], -x[pos]))
    out[~pos] = -np.log(special.stdtr(np.broadcast_to(nu, x.shape)[~pos], x[~pos]))
    return out


def _t_copula_neglog(d: int, nu: float, rho, rng: np.random.Generator, size: int) -> np.ndarray:
    if nu <= 0:
        raise ValueError("degrees of freedom must be positive")
    rho = np.broadcast_to(np.asarray(rho, dtype=np.float64), (size,))
    lo = -1.0 / (d - 1)
    if np.any((rho <= lo) | (rho >= 1.0)):
        raise ValueError(f"correlation must lie in ({lo:g}, 1) for the matrix to be positive definite")
    y = rng.standard_normal((size, d))
    a = np.sqrt(1.0 - rho)
    c = (np.sqrt(1.0 + (d - 1) * rho) - a) / d
    z = a[:, None] * y + (c * y.sum(axis=1))[:, None]
    w = rng.chisquare(nu, size) / nu
    return _t_neglog(z / np.sqrt(w)[:, None], nu)


def sample_t_copula(d: int, nu: float, rho, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """t copula draws with ``nu`` degrees of freedom and equicorrelation ``rho``."""
    n = 1 if size is None else size
    u = np.exp(-_t_copula_neglog(d, nu, rho, rng, n))
    return u[0] if size is None else u


def frechet_cdf(x, alpha: float, scale: float = 1.0):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-((x / scale) ** -alpha))


def frechet_quantile(u, alpha: float, scale: float = 1.0):
    """``scale * (-log u)**(-1/alpha)``."""
    if alpha <= 0 or scale <= 0:
        raise ValueError("alpha and scale must be positive")
    u = np.asarray(u, dtype=np.float64)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie strictly between 0 and 1")
    out = scale * (-np.log(u)) ** (-1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def sine_factor(t):
    return 1.0 + np.sin(2.0 * np.pi * np.asarray(t, dtype=np.float64)) / 2.0


# --- scenarios ----------------------------------------------------------------

PATH_KEYS = {
    "constant": ("value",),
    "linear": ("start", "end"),
    "jump": ("before", "after", "at"),
    "two_jumps": ("outer", "inner", "interval"),
}


@dataclass(frozen=True)
class ParameterPath:
    """Copula parameter as a function of time.

    ``constant``: ``value``; ``linear``: ``start`` at t=0 to ``end`` at t=1;
    ``jump``: ``before`` for ``t <= at``, ``after`` otherwise; ``two_jumps``:
    ``inner`` on ``(lo, hi]`` and ``outer`` elsewhere.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PATH_KEYS:
            raise ScenarioError(f"path: unknown kind {self.kind!r}; expected one of {sorted(PATH_KEYS)}")
        want = set(PATH_KEYS[self.kind])
        have = set(self.params)
        if have - want:
            raise ScenarioError(f"parameter.{sorted(have - want)[0]}: unknown key for path {self.kind!r}")
        if want - have:
            raise ScenarioError(f"parameter.{sorted(want - have)[0]}: missing for path {self.kind!r}")
        if self.kind == "two_jumps":
            lo, hi = self.params["interval"]
            if not 0.0 <= lo < hi <= 1.0:
                raise ScenarioError("parameter.interval: need 0 <= lo < hi <= 1")

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        p = self.params
        if self.kind == "constant":
            return np.full_like(t, p["value"])
        if self.kind == "linear":
            return p["start"] + (p["end"] - p["start"]) * t
        if self.kind == "jump":
            return np.where(t <= p["at"], p["before"], p["after"])
        lo, hi = p["interval"]
        return np.where((t > lo) & (t <= hi), p["inner"], p["outer"])

    def extremes(self) -> tuple[float, float]:
        p = self.params
        vals = {
            "constant": (p.get("value"),),
            "linear": (p.get("start"), p.get("end")),
            "jump": (p.get("before"), p.get("after")),
            "two_jumps": (p.get("outer"), p.get("inner")),
        }[self.kind]
        return min(vals), max(vals)

    def to_dict(self) -> dict:
        out = {"path": self.kind}
        out.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()})
        return out

    @classmethod
    def from_dict(cls, doc: dict, where: str = "parameter") -> "ParameterPath":
        if not isinstance(doc, dict) or "path" not in doc:
            raise ScenarioError(f"{where}.path: required")
        params = {k: v for k, v in doc.items() if k != "path"}
        for k, v in params.items():
            if k == "interval":
                if not (isinstance(v, (list, tuple)) and len(v) == 2):
                    raise ScenarioError(f"{where}.interval: expected [lo, hi]")
                params[k] = (float(v[0]), float(v[1]))
            elif not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ScenarioError(f"{where}.{k}: expected a number")
            else:
                params[k] = float(v)
        try:
            return cls(doc["path"], params)
        except ScenarioError as exc:
            raise ScenarioError(str(exc).replace("parameter.", f"{where}.", 1).replace("path:", f"{where}.path:", 1))


@dataclass(frozen=True)
class Margins:
    """Frechet(alpha) margins, optionally times ``1 + sin(2 pi t)/2`` and/or with
    coordinate ``i >= 2`` (1-based) mapped to ``(x_i + 1) * i``."""

    alpha: float = 4.0
    sine_factor: bool = False
    shift_scale: bool = False


@dataclass(frozen=True)
class Scenario:
    n: int
    d: int
    copula: str  # "gumbel" or "t"
    parameter: ParameterPath
    margins: Margins = Margins()
    df: float = 2.0
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ScenarioError("n: must be positive")
        if self.d < 2:
            raise ScenarioError("d: must be at least 2")
        if self.margins.alpha <= 0:
            raise ScenarioError("margins.alpha: must be positive")
        lo, hi = self.parameter.extremes()
        if self.copula == "gumbel":
            if lo < 1.0:
                raise ScenarioError(f"copula.parameter: Gumbel parameter must be >= 1 at all times (min {lo:g})")
        elif self.copula == "t":
            if self.df <= 0:
                raise ScenarioError("copula.df: must be positive")
            if lo < 0.0 or hi >= 1.0:
                raise ScenarioError("copula.parameter: correlation must stay in [0, 1)")
        else:
            raise ScenarioError(f"copula.family: unknown copula {self.copula!r}; expected 'gumbel' or 't'")

    @property
    def label(self) -> str:
        return self.name or f"{self.copula}-{self.parameter.kind}"

    def to_dict(self) -> dict:
        cop = {"family": self.copula, "parameter": self.parameter.to_dict()}
        if self.copula == "t":
            cop["df"] = self.df
        return {"name": self.name, "n": self.n, "d": self.d, "copula": cop, "margins": asdict(self.margins)}

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        _reject_unknown(doc, {"name", "n", "d", "copula", "margins"}, "")
        for key in ("n", "d", "copula"):
            if key not in doc:
                raise ScenarioError(f"{key}: required")
        cop = doc["copula"]
        if not isinstance(cop, dict):
            raise ScenarioError("copula: expected an object")
        _reject_unknown(cop, {"family", "parameter", "df"}, "copula.")
        if "family" not in cop or "parameter" not in cop:
            raise ScenarioError("copula.family and copula.parameter are required")
        margins = doc.get("margins", {})
        _reject_unknown(margins, {"alpha", "sine_factor", "shift_scale"}, "margins.")
        for key in ("n", "d"):
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise ScenarioError(f"{key}: expected an integer")
        return cls(
            n=doc["n"],
            d=doc["d"],
            copula=cop["family"],
            parameter=ParameterPath.from_dict(cop["parameter"], "copula.parameter"),
            margins=Margins(float(margins.get("alpha", 4.0)), bool(margins.get("sine_factor", False)),
                            bool(margins.get("shift_scale", False))),
            df=float(cop.get("df", 2.0)),
            name=str(doc.get("name", "")),
        )


def _reject_unknown(doc, allowed, prefix):
    if not isinstance(doc, dict):
        raise ScenarioError(f"{prefix.rstrip('.') or 'document'}: expected an object")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ScenarioError(f"{prefix}{extra[0]}: unknown key")


def generate(scenario: Scenario, seed) -> Sample:
    """Draw ``scenario.n`` observations at times ``i/n``; deterministic in ``seed``.

    ``seed`` is an int or a ready :class:`numpy.random.Generator`.
    """
    rng = _rng(seed)
    n, d = scenario.n, scenario.d
    t = np.arange(1, n + 1) / n
    par = scenario.parameter(t)
    if scenario.copula == "gumbel":
        neglog = _gumbel_neglog(d, par, rng, n)
    else:
        neglog = _t_copula_neglog(d, scenario.df, par, rng, n)
    m = scenario.margins
    x = neglog ** (-1.0 / m.alpha)
    if m.shift_scale:
        i = np.arange(1, d + 1, dtype=np.float64)
        x[:, 1:] = (x[:, 1:] + 1.0) * i[1:]
    if m.sine_factor:
        x = x * sine_factor(t)[:, None]
    return Sample(x, t)


def preset(name: str, n: int = 2000, d: int = 2, alpha: float | None = None, sine_factor: bool = False,
           shift_scale: bool = False, **kw) -> Scenario:
    """Named models.

    ``gumbel`` (``lam``), ``t`` (``rho``, ``df``): constant dependence.
    ``g_linear`` (``lam1``): Gumbel 2 -> lam1.  ``t_linear`` (``rho1``): t_2, 0 -> rho1.
    ``t_jump`` (``rho1``): t_2, 0 then rho1 after t = 1/2.
    ``model_I`` (``lam1``): Gumbel 2 then lam1 after 1/2.
    ``model_II`` (``lam_star``): Gumbel lam_star on (1/3, 2/3], 2 elsewhere.
    ``model_III`` / ``model_III_inv`` (``rho_star``): t_2 with rho_star inside /
    outside (1/4, 3/4] and 0 on the complement.
    """
    df = float(kw.pop("df", 2.0))
    table = {
        "gumbel": ("gumbel", lambda lam=2.0: ParameterPath("constant", {"value": lam}), 2.0),
        "t": ("t", lambda rho=0.0: ParameterPath("constant", {"value": rho}), 4.0),
        "g_linear": ("gumbel", lambda lam1=3.0, lam0=2.0: ParameterPath("linear", {"start": lam0, "end": lam1}), 4.0),
        "t_linear": ("t", lambda rho1=0.5: ParameterPath("linear", {"start": 0.0, "end": rho1}), 4.0),
        "t_jump": ("t", lambda rho1=0.5: ParameterPath("jump", {"before": 0.0, "after": rho1, "at": 0.5}), 4.0),
        "model_I": ("gumbel", lambda lam1=3.0: ParameterPath("jump", {"before": 2.0, "after": lam1, "at": 0.5}), 2.0),
        "model_II": ("gumbel", lambda lam_star=4.0: ParameterPath(
            "two_jumps", {"outer": 2.0, "inner": lam_star, "interval": (1 / 3, 2 / 3)}), 2.0),
        "model_III": ("t", lambda rho_star=0.75: ParameterPath(
            "two_jumps", {"outer": 0.0, "inner": rho_star, "interval": (0.25, 0.75)}), 4.0),
        "model_III_inv": ("t", lambda rho_star=0.75: ParameterPath(
            "two_jumps", {"outer": rho_star, "inner": 0.0, "interval": (0.25, 0.75)}), 4.0),
    }
    if name not in table:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(table)}")
    copula, make, default_alpha = table[name]
    try:
        path = make(**kw)
    except TypeError as exc:
        raise ScenarioError(f"preset {name!r}: {exc}") from None
    label = name + "".join(f" {k}={v:g}" for k, v in kw.items())
    return Scenario(n, d, copula, path, Margins(default_alpha if alpha is None else alpha, sine_factor, shift_scale),
                    df=df, name=label)
