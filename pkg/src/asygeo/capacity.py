"""p-capacities of centred balls and concentric condensers.

On a warped product the capacitary potential of a centred ball is radial, so

    Cap_p(B_r) = (int_r^inf S^{1/(1-p)} dt)^{1-p}

exactly, and the same integral over ``[r1, r2]`` gives the condenser
capacity.  Everything is kept in the log domain; only ``p * Cap^{1/p}`` is
ever formed linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from scipy.optimize import brentq

from .asymptotics import PGrid, SweepReport, extrapolate
from .errors import DomainError, ParabolicError
from .manifold import WarpedManifold, log_power_integral, log_volume
from .quadrature import LogQuantity, QuadratureSpec


def check_p(p: float) -> float:
    p = float(p)
    if not (p > 1) or not math.isfinite(p):
        raise DomainError("p must exceed 1")
    return p


def scaled_from_log(log_cap: float, p: float) -> float:
    """``p * exp(log_cap / p)``; 0 for zero capacity."""
    if log_cap == -math.inf:
        return 0.0
    return p * math.exp(log_cap / p)


@dataclass(frozen=True)
class CapacityResult:
    """``ln Cap_p`` of a ball (``r2 is None``) or condenser.

    ``log_cap = -inf`` encodes zero capacity (p-parabolic end).
    """

    log_cap: float
    p: float
    r: float
    r2: float | None = None
    error_log: float = -math.inf
    divergent: bool = False

    @property
    def scaled(self) -> float:
        return scaled_from_log(self.log_cap, self.p)

    @property
    def root(self) -> float:
        """``Cap_p^{1/p}``."""
        return 0.0 if self.log_cap == -math.inf else math.exp(self.log_cap / self.p)

    @property
    def quantity(self) -> LogQuantity:
        return LogQuantity.from_log(self.log_cap)

    @property
    def is_zero(self) -> bool:
        return self.log_cap == -math.inf

    def to_dict(self) -> dict:
        return {"p": self.p, "r": self.r, "r2": self.r2, "log_cap": self.log_cap,
                "scaled": self.scaled, "error_log": self.error_log, "divergent": self.divergent}


def _reciprocal_integral(M, a, b, p, q):
    return log_power_integral(M, 1.0 / (1.0 - p), a, b, q)


def log_cap_ball(M: WarpedManifold, r: float, p: float,
                 q: QuadratureSpec | None = None) -> CapacityResult:
    """Exact p-capacity of the centred ball ``B(o, r)``.

    Args:
        M: the manifold.
        r: ball radius, > 0.
        p: exponent, > 1.
        q: quadrature tolerances.

    Returns:
        :class:`CapacityResult`; ``log_cap = -inf`` when the reciprocal
        integral diverges.
    """
    p = check_p(p)
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    res = _reciprocal_integral(M, r, math.inf, p, q)
    if res.divergent:
        return CapacityResult(-math.inf, p, r, divergent=True)
    log_cap = (1.0 - p) * res.log
    # relative error of the integral becomes (p-1) x that in the capacity
    err = math.log(p - 1.0) + res.log_error - res.log + log_cap if res.log_error > -math.inf else -math.inf
    return CapacityResult(log_cap, p, r, error_log=err)


def flux_upper_bound(M: WarpedManifold, r: float, p: float,
                     q: QuadratureSpec | None = None) -> CapacityResult:
    """Flux upper bound for ``Cap_p(B_r)``; on a warped product it coincides
    with the exact ball capacity, and it is computed by the same route."""
    return log_cap_ball(M, r, p, q)


def capacitary_potential(M: WarpedManifold, r: float, p: float, x: float,
                         q: QuadratureSpec | None = None) -> float:
    """Value at distance ``x >= r`` of the p-potential of ``B(o, r)``."""
    p = check_p(p)
    if x < r:
        raise DomainError(f"potential is evaluated outside the ball, need x >= r (x={x}, r={r})")
    if x == r:
        return 1.0
    full = _reciprocal_integral(M, r, math.inf, p, q)
    if full.divergent:
        raise ParabolicError("zero capacity: no capacitary potential vanishing at infinity")
    part = _reciprocal_integral(M, x, math.inf, p, q)
    return min(1.0, math.exp(part.log - full.log))


def log_cap_condenser(M: WarpedManifold, r1: float, r2: float, p: float,
                      q: QuadratureSpec | None = None) -> CapacityResult:
    """Capacity of the condenser ``(B(o, r1), B(o, r2))``."""
    p = check_p(p)
    if not (0 < r1 < r2):
        raise DomainError(f"condenser needs 0 < r1 < r2, got r1={r1}, r2={r2}")
    res = _reciprocal_integral(M, r1, r2, p, q)
    log_cap = (1.0 - p) * res.log
    err = math.log(p - 1.0) + res.log_error - res.log + log_cap if res.log_error > -math.inf else -math.inf
    return CapacityResult(log_cap, p, r1, r2, error_log=err)


def radius_for_volume(M: WarpedManifold, vol: float, q: QuadratureSpec | None = None) -> float:
    """Invert ``V(r) = vol``."""
    if not vol > 0:
        raise DomainError("volume must be positive")
    target = math.log(vol)
    g = lambda r: log_volume(M, r, q) - target
    lo, hi = 1.0 * M.scale, 1.0 * M.scale
    while g(lo) > 0:
        lo /= 2.0
        if lo < 1e-300:
            raise DomainError("volume too small to invert")
    for _ in range(60):
        if g(hi) >= 0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise DomainError("volume is not below the total volume of M")
    return brentq(g, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)


def isoperimetric_lower_bound(M: WarpedManifold, vol: float, p: float,
                              q: QuadratureSpec | None = None) -> LogQuantity:
    """Lower bound for ``Cap_p`` of any set of volume ``vol``.

    With ball isoperimetry the profile integral over ``[vol, |M|)``
    transforms, via ``tau = V(t)``, into the ball integral at
    ``r = V^{-1}(vol)``; that is how it is evaluated here.
    """
    p = check_p(p)
    r = radius_for_volume(M, vol, q)
    return log_cap_ball(M, r, p, q).quantity


def domain_bracket(M: WarpedManifold, r_in: float, r_out: float, p: float,
                   q: QuadratureSpec | None = None) -> tuple[CapacityResult, CapacityResult]:
    """Capacities of balls ``B(r_in) <= Omega <= B(r_out)`` bracketing ``Cap_p(Omega)``."""
    if not (0 < r_in <= r_out):
        raise DomainError("need 0 < r_in <= r_out")
    return log_cap_ball(M, r_in, p, q), log_cap_ball(M, r_out, p, q)


def infinity_capacity_sweep(M: WarpedManifold, r: float, pgrid: PGrid | Sequence[float],
                            q: QuadratureSpec | None = None, *,
                            subsequences: Mapping[str, Sequence[float]] | None = None,
                            ) -> SweepReport:
    """Samples of ``p Cap_p(B_r)^{1/p}`` and their limsup/liminf diagnosis.

    ``subsequences`` maps a label to extra exponents; the last sample of each
    labelled subsequence is recorded as that subsequence's limit estimate.
    """
    grid = pgrid if isinstance(pgrid, PGrid) else PGrid(tuple(pgrid))
    samples = [(p, log_cap_ball(M, r, p, q).scaled) for p in grid]
    if all(v == 0.0 for _, v in samples):
        rep = SweepReport(samples, 0.0, 0.0, 0.0, True, False, 0.0,
                          ["every sampled capacity vanishes"])
    elif len(samples) >= 6:
        rep = extrapolate(samples, log_term=True)
    else:
        vs = [v for _, v in samples]
        rep = SweepReport(samples, None, max(vs), min(vs), False, False, math.nan,
                          ["too few samples to extrapolate"])
    if subsequences:
        for label, ps in subsequences.items():
            vals = [log_cap_ball(M, r, p, q).scaled for p in sorted(ps)]
            rep.subsequence_limits[label] = vals[-1]
        lims = list(rep.subsequence_limits.values())
        rep.limsup_estimate = max([rep.limsup_estimate, *lims])
        rep.liminf_estimate = min([rep.liminf_estimate, *lims])
    return rep


@dataclass(frozen=True)
class BallRatio:
    """``scaled(r1) / scaled(r2)`` at one large ``p``."""

    ratio: float
    scaled_r1: float
    scaled_r2: float
    p: float
    flags: tuple[str, ...] = field(default_factory=tuple)

    def __float__(self):
        return self.ratio


def ball_independence_check(M: WarpedManifold, r1: float, r2: float, p_large: float,
                            q: QuadratureSpec | None = None) -> BallRatio:
    """Compare ``p Cap_p^{1/p}`` of two concentric balls at a large ``p``."""
    p = check_p(p_large)
    if not (0 < r1 <= r2):
        raise DomainError("need 0 < r1 <= r2")
    if r1 == r2:
        s = log_cap_ball(M, r1, p, q).scaled
        if s == 0.0:
            raise ParabolicError("zero capacity: ratio undefined")
        return BallRatio(1.0, s, s, p)
    c1 = log_cap_ball(M, r1, p, q)
    c2 = log_cap_ball(M, r2, p, q)
    if c1.is_zero or c2.is_zero:
        raise ParabolicError("zero capacity: ratio undefined")
    # ratio in log form avoids overflow of either factor
    ratio = math.exp((c1.log_cap - c2.log_cap) / p)
    flags = []
    if max(c1.scaled, c2.scaled) < 1e-3 * p:
        flags.append("both scaled capacities are small relative to p")
    return BallRatio(ratio, c1.scaled, c2.scaled, p, tuple(flags))
