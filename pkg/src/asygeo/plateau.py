"""Staircase area profile with iterated-exponential plateaus.

The sequence ``x_0 = 1, x_1 = 2, x_{k+1} = x_k + 1 + exp(x_k + 1)`` sets the
breakpoints.  ``ln S`` is constant (``= x_k + 1``) on ``[x_k + 1, x_{k+1}]``
and climbs along a C-infinity smooth step on ``[x_k, x_k + 1]``.  Below
``x_0`` it is held at 1.

``x_3`` is already ~2.9e10 and ``x_4`` overflows, so integrals over the
profile are assembled piece by piece: plateaus in closed form, smooth steps
by log-domain quadrature in the unit step variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .quadrature import DEFAULT_SPEC, IntegralResult, LogQuantity, QuadratureSpec, integrate, log_add

_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class PlateauSequence:
    """``x_0 .. x_N`` with ``ln x_k`` kept alongside.

    ``values[k]`` is ``inf`` once ``x_k`` no longer fits a double; ``exact[k]``
    is False when even ``ln x_k`` had to be approximated.
    """

    values: tuple[float, ...]
    logs: tuple[float, ...]
    exact: tuple[bool, ...]

    def __len__(self):
        return len(self.values)

    def representable(self) -> int:
        """Number of leading terms stored as finite floats."""
        return sum(1 for v in self.values if math.isfinite(v))


def plateau_sequence(N: int) -> PlateauSequence:
    """Return ``x_0 .. x_N`` (at least ``x_0, x_1``)."""
    N = max(int(N), 1)
    values = [1.0, 2.0]
    logs = [0.0, math.log(2.0)]
    exact = [True, True]
    for k in range(1, N):
        xk = values[k]
        if math.isfinite(xk) and xk + 1.0 < _EXP_LIMIT:
            nxt = xk + 1.0 + math.exp(xk + 1.0)
            values.append(nxt)
            logs.append(math.log(nxt))
            exact.append(True)
        elif math.isfinite(xk):
            # ln(x_k + 1 + e^{x_k+1}) = (x_k + 1) + log1p((x_k + 1) e^{-(x_k+1)})
            values.append(math.inf)
            logs.append(xk + 1.0 + math.log1p((xk + 1.0) * math.exp(-(xk + 1.0))))
            exact.append(True)
        else:
            # x_k itself is only known through ln x_k: ln x_{k+1} ~ x_k
            values.append(math.inf)
            logs.append(math.inf)
            exact.append(False)
    return PlateauSequence(tuple(values[: N + 1]), tuple(logs[: N + 1]), tuple(exact[: N + 1]))


def smooth_step(s):
    """C-infinity step from 0 to 1 on [0, 1], flat to all orders at both ends."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        z = 1.0 / (1.0 - s) - 1.0 / s
    out = expit(z)
    return np.where(s <= 0, 0.0, np.where(s >= 1, 1.0, out))


def smooth_step_complement(s):
    """``1 - smooth_step(s)`` evaluated without cancellation."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        z = 1.0 / (1.0 - s) - 1.0 / s
    out = expit(-z)
    return np.where(s <= 0, 1.0, np.where(s >= 1, 0.0, out))


@dataclass(frozen=True)
class _Piece:
    lo: float
    hi: float  # may be inf for the last plateau
    kind: str  # "flat" or "step"
    low: float  # ln S at lo (flat: the level)
    high: float  # ln S at hi (flat: same as low)
    log_length: float  # ln(hi - lo), usable even when hi overflows


class PlateauProfile:
    """``ln S`` for the staircase profile plus piecewise power integrals."""

    def __init__(self, n_terms: int = 4):
        self.seq = plateau_sequence(n_terms)
        xs = self.seq.values
        pieces = [_Piece(0.0, 1.0, "flat", 1.0, 1.0, 0.0)]
        prev = 1.0
        for k, xk in enumerate(xs):
            if not math.isfinite(xk):
                break
            level = xk + 1.0
            pieces.append(_Piece(xk, xk + 1.0, "step", prev, level, 0.0))
            nxt = xs[k + 1] if k + 1 < len(xs) else math.inf
            if math.isfinite(nxt):
                if nxt > level:
                    pieces.append(_Piece(level, nxt, "flat", level, level, math.log(nxt - level)))
            else:
                # length x_{k+1} - x_k - 1 = e^{x_k + 1}
                pieces.append(_Piece(level, math.inf, "flat", level, level, level))
            prev = level
        self.pieces = tuple(pieces)
        self._starts = np.array([pc.lo for pc in pieces])

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(pc.lo for pc in self.pieces[1:])

    def step_intervals(self) -> list[tuple[float, float]]:
        return [(pc.lo, pc.hi) for pc in self.pieces if pc.kind == "step"]

    def log_area(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self._starts, t, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty_like(t)
        for i in np.unique(idx):
            pc = self.pieces[i]
            sel = idx == i
            if pc.kind == "flat":
                out[sel] = pc.low
            else:
                s = t[sel] - pc.lo
                d = pc.high - pc.low
                up = smooth_step(s)
                val_low = pc.low + d * up
                val_high = pc.high - d * smooth_step_complement(s)
                out[sel] = np.where(up < 0.5, val_low, val_high)
        return out

    def _step_integral(self, pc: _Piece, alpha: float, s0: float, s1: float,
                       spec: QuadratureSpec) -> IntegralResult:
        d = pc.high - pc.low
        if alpha >= 0:
            offset = alpha * pc.high
            f = lambda s: -alpha * d * smooth_step_complement(s)
        else:
            offset = alpha * pc.low
            f = lambda s: alpha * d * smooth_step(s)
        r = integrate(f, s0, s1, spec)
        return IntegralResult(r.value.scale_log(offset), r.log_error + offset, n_panels=r.n_panels)

    def log_power_integral(self, alpha: float, a: float, b: float,
                           spec: QuadratureSpec | None = None) -> IntegralResult:
        """``ln int_a^b S(t)^alpha dt`` assembled piece by piece."""
        spec = spec or DEFAULT_SPEC
        if not a < b:
            raise ValueError("need a < b")
        total = LogQuantity.zero()
        err = -math.inf
        last = self.pieces[-1]
        for pc in self.pieces:
            lo = max(pc.lo, a)
            hi = min(pc.hi, b)
            if not lo < hi:
                continue
            if pc.kind == "flat":
                if math.isinf(pc.hi) and math.isinf(b):
                    # x_{k+1} - lo ~ e^{level}; lo itself is negligible against it
                    log_len = pc.log_length
                else:
                    log_len = math.log(hi - lo)
                total = total + LogQuantity(1, log_len + alpha * pc.low)
            else:
                r = self._step_integral(pc, alpha, lo - pc.lo, hi - pc.lo, spec)
                total = total + r.value
                err = log_add(err, r.log_error)
        if math.isinf(b):
            # plateaus beyond the stored range each contribute e^{(1+alpha) level}
            if alpha >= -1.0:
                return IntegralResult(LogQuantity(1, math.inf), -math.inf, divergent=True,
                                      notes=["plateau contributions do not decay"])
            # remainder <= e^{alpha L} (next step) + geometric plateau series, L = last level
            rem = alpha * last.low + math.log(2.0)
            err = log_add(err, rem)
        return IntegralResult(total, err)
