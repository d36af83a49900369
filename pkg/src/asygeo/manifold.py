"""Rotationally symmetric manifolds ``dt^2 + phi(t)^2 g_S^n``.

A :class:`WarpedManifold` is described entirely by the log of the geodesic
sphere area, ``ln S(t) = ln omega_n + n ln phi(t)``.  Everything downstream
(volumes, capacities, Rayleigh quotients) goes through
:func:`log_power_integral`, which evaluates ``ln int_a^b S(t)^alpha dt`` in
the log domain and knows how to bound exponential tails for the built-in
profiles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import expr as _expr
from .errors import DomainError, ExpressionError
from .plateau import PlateauProfile
from .quadrature import DEFAULT_SPEC, IntegralResult, QuadratureSpec, TailBound, integrate

KINDS = ("hyperbolic", "euclidean", "example31", "example32", "custom", "tabulated")


def log_omega(n: int) -> float:
    """ln of the area of the unit n-sphere, ``2 pi^{(n+1)/2} / Gamma((n+1)/2)``."""
    return math.log(2.0) + 0.5 * (n + 1) * math.log(math.pi) - math.lgamma(0.5 * (n + 1))


def log_sinh(t):
    t = np.asarray(t, dtype=float)
    small = np.minimum(t, 20.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.log(np.sinh(small))
    hi = t - math.log(2.0) + np.log1p(-np.exp(-2.0 * np.maximum(t, 20.0)))
    return np.where(t < 20.0, lo, hi)


@dataclass(frozen=True)
class Growth:
    """Certified linear lower bound ``ln S(t) >= c0 + kappa * t`` for ``t >= t0``."""

    t0: float
    c0: float
    kappa: float


@dataclass(frozen=True)
class WarpedManifold:
    """Warped product of dimension ``n + 1``.

    ``base_log_area`` is ``ln S`` of the unscaled profile; ``scale`` applies the
    metric rescaling ``g -> scale^2 g`` (``S_l(t) = l^n S(t / l)``).  ``pole``
    says whether ``phi(0) = 0``.
    """

    n: int
    kind: str
    base_log_area: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    pole: bool = True
    growth: Growth | None = None
    breaks: tuple[float, ...] = ()
    plateau: PlateauProfile | None = field(default=None, repr=False, compare=False)
    scale: float = 1.0
    label: str = ""

    @property
    def dimension(self) -> int:
        return self.n + 1

    def log_area(self, t):
        t = np.asarray(t, dtype=float)
        if self.scale == 1.0:
            return self.base_log_area(t)
        return self.n * math.log(self.scale) + self.base_log_area(t / self.scale)

    def log_phi(self, t):
        return (self.log_area(t) - log_omega(self.n)) / self.n

    def phi(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self.log_phi(t))

    def breakpoints(self, hi: float = math.inf) -> list[float]:
        pts = [b * self.scale for b in self.breaks]
        return [b for b in pts if 0 < b < hi]

    def refine_intervals(self, hi: float) -> list[tuple[float, float]]:
        """Sub-intervals of ``[0, hi]`` where ``ln S`` changes abruptly."""
        if self.plateau is None:
            return []
        out = []
        for lo, up in self.plateau.step_intervals():
            lo, up = lo * self.scale, up * self.scale
            if lo < hi:
                out.append((lo, min(up, hi)))
        return out

    def tail_bound(self, alpha: float) -> TailBound | None:
        """Majorant for ``S^alpha`` (``alpha < 0``) from :attr:`growth`."""
        g = self.growth
        if g is None or alpha >= 0 or g.kappa <= 0:
            return None
        lam = self.scale
        c0 = self.n * math.log(lam) + g.c0
        return TailBound(log_c=alpha * c0, rate=-alpha * g.kappa / lam, start=g.t0 * lam)


@dataclass(frozen=True)
class AreaVolumePair:
    t: float
    log_area: float
    log_volume: float


def _hyperbolic_area(n):
    lw = log_omega(n)
    return lambda t: lw + n * log_sinh(t)


def _euclidean_area(n):
    lw = log_omega(n)

    def f(t):
        with np.errstate(divide="ignore"):
            return lw + n * np.log(np.asarray(t, dtype=float))

    return f


def _example32_area(t):
    t = np.asarray(t, dtype=float)
    tt = np.maximum(t, 1.0)
    return np.where(t >= 1.0, tt * (4.0 + np.sin(np.log(tt))), 4.0)


def _probe_positive(log_area, pole: bool, label: str):
    grid = np.concatenate([np.linspace(1e-3, 1.0, 50), np.linspace(1.0, 50.0, 200)])
    vals = np.asarray(log_area(grid), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        t_bad = grid[np.argmax(bad)]
        raise DomainError(f"profile {label!r} is nonpositive or undefined at t={t_bad:g}")
    if not pole:
        return
    v0 = np.asarray(log_area(np.array([0.0])), dtype=float)[0]
    if v0 > -np.inf and not np.isnan(v0):
        return


def _probe_growth(log_area) -> Growth | None:
    """Conservative exponential growth rate from secant slopes of ln S."""
    ts = np.array([2.0 ** k for k in range(2, 11)])
    ls = np.asarray(log_area(ts), dtype=float)
    if not np.all(np.isfinite(ls)):
        return None
    slopes = np.diff(ls) / np.diff(ts)
    tail = slopes[-4:]
    # polynomial growth shows up as secant slopes halving per doubling
    if float(np.min(tail)) <= 0 or float(np.min(tail)) < 0.5 * float(np.max(tail)):
        return None
    kappa = 0.5 * float(np.min(tail))
    if kappa <= 1e-3:
        return None
    t0 = float(ts[-5])
    dense = np.linspace(t0, ts[-1], 400)
    c0 = float(np.min(np.asarray(log_area(dense)) - kappa * dense)) - 1.0
    return Growth(t0=t0, c0=c0, kappa=kappa)


def _tabulated_area(n: int, points) -> tuple[Callable, Growth | None]:
    from scipy.interpolate import PchipInterpolator

    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise DomainError("tabulated profile needs at least three [t, phi] pairs")
    ts, ph = pts[:, 0], pts[:, 1]
    if np.any(np.diff(ts) <= 0):
        raise DomainError("tabulated t values must be strictly increasing")
    if ts[0] != 0.0:
        raise DomainError("tabulated profile must start at t = 0")
    if np.any(ph[1:] <= 0) or ph[0] < 0:
        raise DomainError("tabulated phi must be positive for t > 0")
    interp = PchipInterpolator(ts, ph, extrapolate=False)
    t_last = ts[-1]
    slope = (math.log(ph[-1]) - math.log(ph[-2])) / (ts[-1] - ts[-2])
    lw = log_omega(n)
    log_last = math.log(ph[-1])

    def f(t):
        t = np.asarray(t, dtype=float)
        inside = np.clip(t, ts[0], t_last)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.log(interp(inside))
        outside = log_last + slope * (t - t_last)
        return lw + n * np.where(t <= t_last, val, outside)

    growth = None
    if slope > 0:
        growth = Growth(t0=t_last, c0=lw + n * (log_last - slope * t_last), kappa=n * slope)
    return f, growth


def make_model(kind: str, n: int = 2, params: dict | None = None) -> WarpedManifold:
    """Build one of the supported profiles.

    ``kind`` is one of :data:`KINDS`.  ``custom`` needs ``params["phi"]`` (an
    expression in ``t``); ``tabulated`` needs ``params["points"]``.
    """
    params = dict(params or {})
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise DomainError(f"sphere dimension n must be an integer >= 1, got {n!r}")
    n = int(n)
    if kind == "hyperbolic":
        lw = log_omega(n)
        growth = Growth(t0=1.0, c0=lw - n * math.log(2.0) + n * math.log1p(-math.exp(-2.0)),
                        kappa=float(n))
        return WarpedManifold(n, kind, _hyperbolic_area(n), True, growth, label=f"hyperbolic:{n}")
    if kind == "euclidean":
        return WarpedManifold(n, kind, _euclidean_area(n), True, None, label=f"euclidean:{n}")
    if kind == "example31":
        prof = PlateauProfile(int(params.get("terms", 4)))
        return WarpedManifold(n, kind, prof.log_area, False, None, prof.breakpoints, prof,
                              label=f"example31:{n}")
    if kind == "example32":
        growth = Growth(t0=1.0, c0=0.0, kappa=3.0)
        return WarpedManifold(n, kind, _example32_area, False, growth, (1.0,),
                              label=f"example32:{n}")
    if kind == "custom":
        text = params.get("phi")
        if not isinstance(text, str):
            raise DomainError("custom profile needs a 'phi' expression string")
        tree = _expr.parse(text)
        lw = log_omega(n)

        def f(t):
            s, lg = _expr.evaluate_log(tree, t)
            with np.errstate(invalid="ignore"):
                return np.where(s > 0, lw + n * lg, np.nan)

        _probe_positive(f, True, text)
        with np.errstate(invalid="ignore"):
            v0 = f(np.array([0.0]))[0]
        pole = not (np.isfinite(v0))
        return WarpedManifold(n, kind, f, pole, _probe_growth(f), label=f"custom:{text}")
    if kind == "tabulated":
        f, growth = _tabulated_area(n, params.get("points"))
        _probe_positive(f, True, "tabulated")
        pole = not np.isfinite(f(np.array([0.0]))[0])
        return WarpedManifold(n, kind, f, pole, growth, label="tabulated")
    raise DomainError(f"unknown manifold kind {kind!r}; expected one of {', '.join(KINDS)}")


def rescale(M: WarpedManifold, factor: float) -> WarpedManifold:
    """Metric ``factor^2 g``: distances multiply by ``factor``."""
    if not factor > 0:
        raise DomainError("scale factor must be positive")
    return replace(M, scale=M.scale * factor, label=f"{M.label}*{factor:g}")


def manifold_from_config(cfg: dict[str, Any]) -> WarpedManifold:
    kind = cfg.get("kind")
    n = cfg.get("n", 2)
    params = {k: v for k, v in cfg.items() if k not in ("kind", "n", "scale")}
    M = make_model(kind, n, params)
    if "scale" in cfg:
        M = rescale(M, float(cfg["scale"]))
    return M


def load_manifold(spec: str) -> WarpedManifold:
    """Resolve ``kind[:n]`` built-in names or a JSON/TOML config file."""
    path = Path(spec)
    if path.suffix in (".json", ".toml") or path.exists():
        if not path.exists():
            raise DomainError(f"manifold config {spec!r} not found")
        text = path.read_text()
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            cfg = tomllib.loads(text)
        else:
            cfg = json.loads(text)
        return manifold_from_config(cfg)
    kind, _, rest = spec.partition(":")
    if kind not in KINDS or kind in ("custom", "tabulated"):
        raise DomainError(f"unknown built-in manifold {spec!r}")
    n = int(rest) if rest else 2
    return make_model(kind, n)


def log_area(M: WarpedManifold, t: float) -> float:
    """``ln S(t) = ln omega_n + n ln phi(t)``."""
    if t < 0 or (t == 0 and M.pole):
        raise DomainError(f"log_area needs t > 0, got {t}")
    val = float(np.asarray(M.log_area(np.array([t])))[0])
    if not math.isfinite(val):
        raise DomainError(f"ln S is not finite at t={t}")
    return val


def log_power_integral(M: WarpedManifold, alpha: float, a: float, b: float,
                       spec: QuadratureSpec | None = None) -> IntegralResult:
    """``ln int_a^b S(t)^alpha dt`` (``b`` may be ``inf``)."""
    spec = spec or DEFAULT_SPEC
    if M.plateau is not None:
        lam = M.scale
        r = M.plateau.log_power_integral(alpha, a / lam, b / lam if math.isfinite(b) else b, spec)
        shift = (1.0 + M.n * alpha) * math.log(lam)
        if r.divergent:
            return r
        return IntegralResult(r.value.scale_log(shift), r.log_error + shift, n_panels=r.n_panels,
                              notes=r.notes)
    f = lambda t: alpha * M.log_area(t)
    tail = M.tail_bound(alpha) if math.isinf(b) else None
    return integrate(f, a, b, spec, tail=tail, breakpoints=M.breakpoints(b))


def log_volume(M: WarpedManifold, r: float, spec: QuadratureSpec | None = None) -> float:
    """``ln |B(o, r)| = ln int_0^r S``."""
    if not r > 0:
        raise DomainError(f"log_volume needs r > 0, got {r}")
    return log_power_integral(M, 1.0, 0.0, r, spec).log


def area_volume(M: WarpedManifold, t: float, spec: QuadratureSpec | None = None) -> AreaVolumePair:
    return AreaVolumePair(t, log_area(M, t), log_volume(M, t, spec))
