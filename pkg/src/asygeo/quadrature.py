"""Log-domain adaptive quadrature.

Every integrand is passed as its natural logarithm ``f_log(t)`` (vectorised
over numpy arrays) together with an optional sign function, so integrals
like ``int S(t)**(1/(1-p)) dt`` with ``p ~ 1e4`` or ``int_0^R S(t) dt`` with
``ln S ~ 1e3`` never leave double range.  Finite intervals use a globally
adaptive Gauss-Kronrod (7, 15) pair; semi-infinite ones are swept in
doubling segments and closed either by an analytic exponential tail bound or
by a geometric tail extrapolation.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import OscillationError, ToleranceNotMet

__all__ = [
    "LogQuantity",
    "QuadratureSpec",
    "TailBound",
    "IntegralResult",
    "integrate",
    "log_add",
    "log_sub",
    "log1mexp",
]

LogFn = Callable[[np.ndarray], np.ndarray]

# QUADPACK qk15 abscissae / weights (positive half, node 0 last).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:7], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:7], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
for _i, _k in enumerate((1, 3, 5)):
    GAUSS_WEIGHTS[_k] = _WG[_i]
    GAUSS_WEIGHTS[14 - _k] = _WG[_i]
GAUSS_WEIGHTS[7] = _WG[3]

_EPS = np.finfo(float).eps


def log1mexp(x: float) -> float:
    """Return ``ln(1 - e^x)`` for ``x <= 0`` without cancellation."""
    if x > 0:
        raise ValueError("log1mexp needs x <= 0")
    if x == 0:
        return -math.inf
    if x > -math.log(2.0):
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def log_add(a: float, b: float) -> float:
    """``ln(e^a + e^b)``."""
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    m = max(a, b)
    if m == math.inf:
        return math.inf
    return m + math.log1p(math.exp(-abs(a - b)))


def log_sub(a: float, b: float) -> float:
    """``ln(e^a - e^b)`` for ``a >= b``."""
    if b > a:
        raise ValueError("log_sub needs a >= b")
    if b == -math.inf:
        return a
    return a + log1mexp(b - a)


@dataclass(frozen=True)
class LogQuantity:
    """A real number stored as ``sign * exp(log_abs)``.

    ``sign == 0`` exactly when ``log_abs == -inf``.
    """

    sign: int
    log_abs: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if math.isnan(self.log_abs):
            raise ValueError("log_abs is NaN")
        if (self.sign == 0) != (self.log_abs == -math.inf):
            raise ValueError("sign == 0 iff log_abs == -inf")

    @classmethod
    def zero(cls) -> "LogQuantity":
        return cls(0, -math.inf)

    @classmethod
    def from_log(cls, log_abs: float, sign: int = 1) -> "LogQuantity":
        if log_abs == -math.inf:
            return cls.zero()
        return cls(sign, float(log_abs))

    @classmethod
    def from_float(cls, x: float) -> "LogQuantity":
        if x == 0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_abs)
        except OverflowError:
            return self.sign * math.inf

    @property
    def value(self) -> float:
        return float(self)

    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self) -> "LogQuantity":
        return LogQuantity(-self.sign, self.log_abs)

    def __add__(self, other: "LogQuantity") -> "LogQuantity":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        if self.sign == other.sign:
            return LogQuantity(self.sign, log_add(self.log_abs, other.log_abs))
        big, small = (self, other) if self.log_abs >= other.log_abs else (other, self)
        if big.log_abs == small.log_abs:
            return LogQuantity.zero()
        return LogQuantity.from_log(log_sub(big.log_abs, small.log_abs), big.sign)

    def __sub__(self, other: "LogQuantity") -> "LogQuantity":
        return self + (-other)

    def __mul__(self, other: "LogQuantity") -> "LogQuantity":
        if self.sign == 0 or other.sign == 0:
            return LogQuantity.zero()
        return LogQuantity(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other: "LogQuantity") -> "LogQuantity":
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogQuantity")
        if self.sign == 0:
            return self
        return LogQuantity(self.sign * other.sign, self.log_abs - other.log_abs)

    def scale_log(self, c: float) -> "LogQuantity":
        """Multiply by ``e^c``."""
        if self.sign == 0:
            return self
        return LogQuantity(self.sign, self.log_abs + c)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate`.

    ``abs_tol_log`` is the error in ``ln I`` still accepted when refinement
    runs out of depth; ``max_extent`` caps the doubling sweep of an improper
    integral that has no analytic tail bound.
    """

    rel_tol: float = 1e-10
    abs_tol_log: float = 1e-8
    max_depth: int = 60
    max_panels: int = 20000
    divergence_log: float = 300.0
    max_extent_doublings: int = 20

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_depth < 10:
            raise ValueError("max_depth must be at least 10")

    @property
    def log_rel_tol(self) -> float:
        return math.log(self.rel_tol)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class TailBound:
    """Exponential majorant ``|f(t)| <= exp(log_c - rate * t)`` for ``t >= start``."""

    log_c: float
    rate: float
    start: float = 0.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("tail rate must be positive")

    def log_tail(self, T: float) -> float:
        """ln of ``int_T^inf exp(log_c - rate t) dt``."""
        return self.log_c - self.rate * T - math.log(self.rate)


@dataclass
class IntegralResult:
    """Outcome of :func:`integrate`; ``value`` is ``int f`` as a LogQuantity."""

    value: LogQuantity
    log_error: float
    divergent: bool = False
    n_panels: int = 0
    cutoff: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def log(self) -> float:
        return self.value.log_abs

    @property
    def relative_error(self) -> float:
        if self.divergent or self.value.sign == 0:
            return 0.0 if self.log_error == -math.inf else math.inf
        return math.exp(self.log_error - self.value.log_abs)


@dataclass(order=True)
class _Panel:
    key: float
    a: float = field(compare=False)
    b: float = field(compare=False)
    depth: int = field(compare=False)
    sign: int = field(compare=False)
    log_val: float = field(compare=False)
    log_err: float = field(compare=False)


def _gk_panel(f_log: LogFn, sign_fn, a: float, b: float, depth: int) -> _Panel:
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * NODES
    lf = np.asarray(f_log(x), dtype=float)
    if lf.shape != x.shape:
        lf = np.broadcast_to(lf, x.shape)
    if np.isnan(lf).any():
        raise ValueError(f"log-integrand is NaN on [{a}, {b}]")
    if np.isposinf(lf).any():
        raise OverflowError(f"log-integrand is +inf on [{a}, {b}]")
    finite = lf > -np.inf
    if not finite.any():
        return _Panel(-math.inf, a, b, depth, 0, -math.inf, -math.inf)
    m = float(lf[finite].max())
    e = np.exp(lf - m)
    if sign_fn is not None:
        e = e * np.sign(np.asarray(sign_fn(x), dtype=float))
    k = float(KRONROD_WEIGHTS @ e)
    g = float(GAUSS_WEIGHTS @ e)
    resabs = float(KRONROD_WEIGHTS @ np.abs(e))
    mean = 0.5 * k
    resasc = float(KRONROD_WEIGHTS @ np.abs(e - mean))
    err = abs(k - g)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    err = max(err, 50.0 * _EPS * resabs)
    log_scale = m + math.log(half)
    log_val = log_scale + math.log(abs(k)) if k != 0 else -math.inf
    sign = 0 if k == 0 else (1 if k > 0 else -1)
    log_err = log_scale + math.log(err) if err > 0 else -math.inf
    return _Panel(-log_err, a, b, depth, sign, log_val, log_err)


def _signed_total(panels: Sequence[_Panel]) -> LogQuantity:
    live = [pn for pn in panels if pn.sign != 0]
    if not live:
        return LogQuantity.zero()
    logs = np.array([pn.log_val for pn in live])
    signs = np.array([pn.sign for pn in live], dtype=float)
    val, s = logsumexp(logs, b=signs, return_sign=True)
    if s == 0 or val == -np.inf:
        return LogQuantity.zero()
    return LogQuantity(int(s), float(val))


def _total_error(panels: Sequence[_Panel]) -> float:
    errs = np.array([pn.log_err for pn in panels])
    if errs.size == 0 or np.all(errs == -np.inf):
        return -math.inf
    return float(logsumexp(errs))


def _integrate_finite(f_log, a, b, spec, sign_fn, breakpoints, log_target=None) -> IntegralResult:
    """Globally adaptive GK15 on ``[a, b]``.

    ``log_target`` overrides the stopping threshold on the summed error
    (default: ``ln rel_tol + ln |I|``).
    """
    cuts = [a] + sorted(x for x in set(breakpoints) if a < x < b) + [b]
    heap: list[_Panel] = []
    done: list[_Panel] = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi > lo:
            heapq.heappush(heap, _gk_panel(f_log, sign_fn, lo, hi, 0))
    n_panels = len(heap)

    while True:
        panels = heap + done
        total = _signed_total(panels)
        err = _total_error(panels)
        if total.sign == 0 and err == -math.inf:
            return IntegralResult(total, err, n_panels=n_panels)
        target = log_target if log_target is not None else spec.log_rel_tol + total.log_abs
        if err <= target:
            return IntegralResult(total, err, n_panels=n_panels)
        if not heap or n_panels >= spec.max_panels:
            break
        worst = heapq.heappop(heap)
        if worst.depth >= spec.max_depth:
            done.append(worst)
            continue
        mid = 0.5 * (worst.a + worst.b)
        if not (worst.a < mid < worst.b):
            done.append(worst)
            continue
        heapq.heappush(heap, _gk_panel(f_log, sign_fn, worst.a, mid, worst.depth + 1))
        heapq.heappush(heap, _gk_panel(f_log, sign_fn, mid, worst.b, worst.depth + 1))
        n_panels += 1

    result = IntegralResult(total, err, n_panels=n_panels)
    if total.sign != 0 and err - total.log_abs <= spec.abs_tol_log:
        result.notes.append("refinement exhausted; accepted under abs_tol_log")
        return result
    raise ToleranceNotMet(
        f"quadrature on [{a}, {b}] stopped with relative error "
        f"{math.exp(err - total.log_abs) if total.sign else math.inf:.3g}",
        estimate=result,
        error=err,
    )


def _power_law_tail(f_log, T: float):
    """Remainder ``int_T^inf f`` for ``f ~ C t^{-s}``, ``s > 1``.

    The local exponent is read off on ``[T/2, T]`` and ``[T, 2T]``; its drift
    between the two gives the error estimate.  Returns ``(log tail, log error)``
    or None when the decay is not faster than ``1/t``.
    """
    pts = np.array([0.5 * T, T, 2.0 * T])
    with np.errstate(all="ignore"):
        lf = np.asarray(f_log(pts), dtype=float)
    if not np.all(np.isfinite(lf)):
        return None
    s_in = -(lf[1] - lf[0]) / math.log(2.0)
    s_out = -(lf[2] - lf[1]) / math.log(2.0)
    # margin keeps 1/t decay (p-parabolic ends) from passing on roundoff
    if not (s_out > 1.0 + 1e-9 and s_in > 1.0 + 1e-9):
        return None
    log_tail = lf[1] + math.log(T) - math.log(s_out - 1.0)
    drift = abs(s_out - s_in) / (s_out - 1.0) + 1e-14
    return log_tail, log_tail + math.log(drift), s_out


def _richardson_doubling(log_totals: Sequence[float], order: float):
    """Eliminate the leading ``T^{-order}`` error from totals at ``T, 2T, 4T``.

    Returns ``(log of the corrected value, log of its change from the previous
    correction)`` or None when fewer than three totals are available.
    """
    if len(log_totals) < 3:
        return None
    ref = log_totals[-1]
    q = [math.exp(x - ref) for x in log_totals[-3:]]
    w = 2.0 ** order
    r_prev, r_last = (w * q[1] - q[0]) / (w - 1.0), (w * q[2] - q[1]) / (w - 1.0)
    if r_last <= 0:
        return None
    diff = abs(r_last - r_prev)
    return ref + math.log(r_last), (ref + math.log(diff)) if diff > 0 else -math.inf


def _integrate_improper(f_log, a, spec, tail, sign_fn, breakpoints) -> IntegralResult:
    h = max(1.0, abs(a))
    lo, hi = a, a + h
    total = LogQuantity.zero()
    err = -math.inf
    seg_logs: list[float] = []
    seg_signs: list[int] = []
    prev_tail: float | None = None
    n_panels = 0
    doublings = 0
    last_log_ratio = math.nan
    pl_totals: list[float] = []
    while True:
        seg = _integrate_finite(f_log, lo, hi, spec, sign_fn, breakpoints)
        n_panels += seg.n_panels
        total = total + seg.value
        err = log_add(err, seg.log_error)
        seg_logs.append(seg.value.log_abs)
        seg_signs.append(seg.value.sign)

        if total.sign > 0 and total.log_abs > spec.divergence_log:
            return IntegralResult(LogQuantity(1, math.inf), -math.inf, divergent=True,
                                  n_panels=n_panels, cutoff=hi,
                                  notes=["partial integral exceeded divergence ceiling"])

        if tail is not None and hi >= tail.start:
            lt = tail.log_tail(hi)
            if total.sign != 0 and lt <= total.log_abs + spec.log_rel_tol:
                return IntegralResult(total, log_add(err, lt), n_panels=n_panels, cutoff=hi)
            if total.sign == 0 and lt < -745:
                return IntegralResult(total, lt, n_panels=n_panels, cutoff=hi)

        if tail is None and len(seg_logs) >= 3 and all(s > 0 for s in seg_signs[-3:]):
            log_ratio = seg_logs[-1] - seg_logs[-2]
            last_log_ratio = log_ratio
            if log_ratio < 0:
                # geometric remainder s r / (1 - r) beyond hi
                tail_est = seg_logs[-1] + log_ratio - log1mexp(log_ratio)
                if tail_est <= total.log_abs + spec.log_rel_tol:
                    return IntegralResult(total, log_add(err, tail_est), n_panels=n_panels,
                                          cutoff=hi)
                if prev_tail is not None:
                    predicted = log_add(seg_logs[-1], tail_est)
                    gap = abs(predicted - prev_tail)
                    # gap is a log difference, i.e. a relative error of the tail
                    log_gap = tail_est + math.log(gap) if gap > 0 else -math.inf
                    if log_gap <= total.log_abs + spec.log_rel_tol:
                        value = total + LogQuantity(1, tail_est)
                        return IntegralResult(value, log_add(err, log_gap), n_panels=n_panels,
                                              cutoff=hi, notes=["geometric tail extrapolation"])
                    if doublings >= spec.max_extent_doublings and log_gap <= total.log_abs + math.log(1e-6):
                        value = total + LogQuantity(1, tail_est)
                        return IntegralResult(value, log_add(err, log_gap), n_panels=n_panels,
                                              cutoff=hi,
                                              notes=["geometric tail extrapolation (loose)"])
                prev_tail = tail_est
            else:
                prev_tail = None

        if tail is None and hi > 0 and len(seg_logs) >= 3 and all(s > 0 for s in seg_signs[-3:]):
            pl = _power_law_tail(f_log, hi)
            if pl is None:
                pl_totals.clear()
            else:
                tail_pl, err_pl, decay = pl
                value = total + LogQuantity(1, tail_pl)
                if err_pl <= value.log_abs + spec.log_rel_tol:
                    return IntegralResult(value, log_add(err, err_pl), n_panels=n_panels,
                                          cutoff=hi, notes=["power-law tail extrapolation"])
                pl_totals.append(value.log_abs)
                # the tail formula is off by a relative O(1/T), i.e. O(T^{-s}) overall
                rich = _richardson_doubling(pl_totals, decay)
                if rich is not None:
                    log_val, log_diff = rich
                    loose = doublings >= spec.max_extent_doublings
                    limit = spec.log_rel_tol if not loose else math.log(1e-6)
                    if log_diff <= log_val + limit:
                        note = "power-law tail with Richardson correction"
                        return IntegralResult(LogQuantity(1, log_val), log_add(err, log_diff),
                                              n_panels=n_panels, cutoff=hi,
                                              notes=[note + (" (loose)" if loose else "")])

        if doublings >= spec.max_extent_doublings and (tail is None or hi >= tail.start):
            if tail is not None:
                # analytic bound known: keep going, the remainder is provably finite
                if doublings < 200:
                    pass
                else:
                    raise ToleranceNotMet("tail bound never became negligible",
                                          estimate=IntegralResult(total, err), error=err)
            else:
                recent = seg_signs[-4:]
                if any(s < 0 for s in recent) and any(s > 0 for s in recent):
                    raise OscillationError(
                        "partial integrals oscillate in sign without decay",
                        estimate=IntegralResult(total, err), error=err)
                if math.isnan(last_log_ratio) or last_log_ratio > -1e-6:
                    return IntegralResult(LogQuantity(1, math.inf), -math.inf, divergent=True,
                                          n_panels=n_panels, cutoff=hi,
                                          notes=["no decay on doubling segments"])
                raise ToleranceNotMet("improper integral did not settle",
                                      estimate=IntegralResult(total, err), error=err)
        lo, hi = hi, a + 2.0 * (hi - a)
        doublings += 1


def integrate(
    f_log: LogFn,
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
    *,
    tail: TailBound | None = None,
    sign: LogFn | None = None,
    breakpoints: Sequence[float] = (),
) -> IntegralResult:
    """Compute ``ln int_a^b sign(t) exp(f_log(t)) dt``.

    Args:
        f_log: vectorised ``t -> ln|f(t)|``; ``-inf`` encodes zeros.
        a, b: limits with ``a < b``; ``b`` may be ``math.inf``.
        spec: tolerances, :data:`DEFAULT_SPEC` when omitted.
        tail: exponential majorant used to truncate an infinite range.
        sign: vectorised sign of the integrand (default positive).
        breakpoints: interior points where the integrand is not smooth or
            changes sign; the interval is split there before refinement.

    Returns:
        :class:`IntegralResult`.  A divergent improper integral comes back
        with ``divergent=True`` and value ``+inf``.

    Raises:
        ToleranceNotMet: refinement budget exhausted above tolerance.
        OscillationError: improper partial sums keep changing sign.
    """
    spec = spec or DEFAULT_SPEC
    if not a < b:
        raise ValueError(f"integration limits must satisfy a < b, got [{a}, {b}]")
    if math.isinf(a):
        raise ValueError("lower limit must be finite")
    if math.isinf(b):
        return _integrate_improper(f_log, a, spec, tail, sign, breakpoints)
    return _integrate_finite(f_log, a, b, spec, sign, breakpoints)
