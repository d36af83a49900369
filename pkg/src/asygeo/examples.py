"""The staircase counterexample and the oscillating-profile counterexample.

Staircase: ``ln S`` sits on plateaus ``x_k + 1`` whose lengths grow like
``e^{x_k + 1}``.  The entropy is 1 but every ``p > 2`` capacity of the unit
ball vanishes.

Oscillating profile: ``ln S(t) = t (4 + sin ln t)``.  With ``x = 1/(p-1)``
and ``theta = x t`` the normalised capacity ``(p-1) Cap_p^{1/(p-1)}`` equals
``1 / J(x)`` where ``J(x) = int_x^inf exp(-theta (4 + sin(ln theta - ln x)))``,
and ``J`` has different limits along ``x = e^{-2k pi}`` and
``x = e^{-2k pi + pi}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .asymptotics import SweepReport, extrapolate
from .errors import DomainError, InvariantViolation
from .plateau import PlateauSequence, plateau_sequence
from .quadrature import DEFAULT_SPEC, LogQuantity, QuadratureSpec, TailBound, integrate, log_add

__all__ = [
    "plateau_sequence", "PlateauSequence", "PlateauCapacityBound", "example31_capacity",
    "EntropyBoundPoint", "example31_entropy", "example32_tail_integral", "example32_I",
    "OscillationAnalysis", "example32_bound_chain", "example32_capacity_oscillation",
    "series_tail_exact",
]


# --- staircase ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PlateauCapacityBound:
    """Upper bound ``(sum_n e^{(1+x_n)(1+1/(1-p))})^{1-p}`` for ``Cap_p(B(o,1))``.

    ``log_bound`` may be ``-inf`` once a term is too large for a double; the
    bound is then certified through ``log_neg_log_bound = ln(-ln bound)``.
    """

    p: float
    terms: int
    log_terms: tuple[float, ...]
    log_bound: float
    log_neg_log_bound: float
    log_slope: float  # ln((1 + x_K)(1 + 1/(1-p))), the divergence certificate
    exact_terms: int

    def to_dict(self) -> dict:
        return {"p": self.p, "terms": self.terms, "log_terms": list(self.log_terms),
                "log_bound": self.log_bound, "log_neg_log_bound": self.log_neg_log_bound,
                "log_slope": self.log_slope, "exact_terms": self.exact_terms}


def example31_capacity(p: float, K_terms: int = 4) -> PlateauCapacityBound:
    """Plateau-sum bound on ``Cap_p`` of the unit ball of the staircase.

    Plateau ``n`` contributes ``e^{(1+x_n)(1+1/(1-p))}``.  Terms whose
    exponent is representable are summed by log-sum-exp; for later terms the
    exponent itself is only known through ``ln x_n`` and is carried in
    log-log form.  Dropping terms only weakens the bound, so partial sums
    stay valid.

    Raises:
        DomainError: ``p <= 2`` or ``K_terms < 2``.
    """
    if not p > 2:
        raise DomainError("the plateau bound needs p > 2")
    if K_terms < 2:
        raise DomainError("need at least two plateau terms")
    seq = plateau_sequence(K_terms)
    c = 1.0 + 1.0 / (1.0 - p)
    log_c = math.log(c)
    exps = []  # (1 + x_n) c, possibly inf
    log_exps = []  # ln((1 + x_n) c)
    exact = 0
    for n in range(1, K_terms + 1):
        x, lx = seq.values[n], seq.logs[n]
        if math.isfinite(x):
            exps.append((1.0 + x) * c)
            log_exps.append(math.log1p(x) + log_c)
            exact += 1
        else:
            exps.append(math.inf)
            # ln(1 + x) = ln x + log1p(1/x), and 1/x underflows here
            log_exps.append(lx + log_c)
    finite = [e for e in exps if math.isfinite(e)]
    log_sum = float(np.logaddexp.reduce(finite)) if finite else -math.inf
    if len(finite) < len(exps):
        # the largest term dominates: ln sum >= largest exponent
        log_log_sum = max(log_exps)
        log_bound = -math.inf
    else:
        log_log_sum = math.log(log_sum) if log_sum > 0 else -math.inf
        log_bound = (1.0 - p) * log_sum
    log_neg = math.log(p - 1.0) + log_log_sum
    return PlateauCapacityBound(p, K_terms, tuple(exps), log_bound, log_neg, log_exps[-1], exact)


@dataclass(frozen=True)
class EntropyBoundPoint:
    """Bounds on ``ln V(R) / R`` at ``R = x_k + 2``.

    ``lower = (x_k + 1)/(x_k + 2)`` comes from the plateau just before ``R``;
    ``upper = 1 + (1 + ln R)/R`` from ``V(R) <= R S(R)`` and ``ln S(t) <= t + 1``.
    ``log_gap = ln(1 - lower)`` keeps the information once ``lower`` rounds
    to 1.
    """

    k: int
    R: float
    log_R: float
    lower: float
    log_gap: float
    upper: float

    def to_dict(self) -> dict:
        return {"k": self.k, "R": self.R, "log_R": self.log_R, "lower": self.lower,
                "log_gap": self.log_gap, "upper": self.upper}


def example31_entropy(K_terms: int = 4) -> list[EntropyBoundPoint]:
    """Two-sided bounds on the volume growth ratio of the staircase, k = 1..K."""
    if K_terms < 1:
        raise DomainError("need K_terms >= 1")
    seq = plateau_sequence(K_terms)
    out = []
    for k in range(1, K_terms + 1):
        x, lx = seq.values[k], seq.logs[k]
        if math.isfinite(x):
            R = x + 2.0
            log_R = math.log(R)
            lower = (x + 1.0) / R
            log_gap = -log_R
            upper = 1.0 + (1.0 + log_R) / R
        else:
            R = math.inf
            log_R = lx  # x + 2 and x agree to double precision in log form
            lower = 1.0
            log_gap = -lx
            upper = 1.0
        out.append(EntropyBoundPoint(k, R, log_R, lower, log_gap, upper))
    return out


# --- oscillating profile ------------------------------------------------------------------

def _shifted_integrand(shift: float, sign: float):
    # ln of exp(-theta (4 + sign * sin(ln theta + shift)))
    return lambda th: -th * (4.0 + sign * np.sin(np.log(th) + shift))


def _oscillation_breaks(lo: float, hi: float, shift: float) -> list[float]:
    """Points in ``(lo, hi)`` where ``sin(ln theta + shift)`` vanishes."""
    k0 = math.ceil((math.log(lo) + shift) / math.pi)
    k1 = math.floor((math.log(hi) + shift) / math.pi)
    return [math.exp(k * math.pi - shift) for k in range(k0, k1 + 1)
            if lo < math.exp(k * math.pi - shift) < hi]


def example32_tail_integral(x: float, q: QuadratureSpec | None = None) -> float:
    """``J(x) = int_x^inf exp(-theta (4 + sin(ln(theta/x)))) d theta``, ``0 < x <= 1``.

    ``1 / J(x)`` is the normalised capacity ``(p-1) Cap_p(B(o,1))^{1/(p-1)}``
    at ``p = 1 + 1/x``.
    """
    if not 0 < x <= 1:
        raise DomainError("J(x) needs 0 < x <= 1")
    q = q or DEFAULT_SPEC
    shift = -math.log(x)
    f = _shifted_integrand(shift, 1.0)
    brk = _oscillation_breaks(x, 60.0, shift)
    res = integrate(f, x, math.inf, q, tail=TailBound(0.0, 3.0, x), breakpoints=brk)
    return float(res.value)


# below this the integrand of I is 1 + O(theta) and the piece is added in closed form
_I_CUTOFF = math.exp(-10 * math.pi)


def example32_I(sign: int, q: QuadratureSpec | None = None) -> float:
    """``I_1`` (``sign=+1``) or ``I_2`` (``sign=-1``): ``int_0^inf e^{-theta(4 +- sin ln theta)}``."""
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    q = q or DEFAULT_SPEC
    f = _shifted_integrand(0.0, float(sign))
    eps = _I_CUTOFF
    brk = _oscillation_breaks(eps, 60.0, 0.0)
    res = integrate(f, eps, math.inf, q, tail=TailBound(0.0, 3.0, eps), breakpoints=brk)
    # int_0^eps f = eps - O(eps^2); eps^2 ~ 1e-27 is far below tolerance
    return float(res.value) + eps


def series_tail_exact() -> Fraction:
    """``sum_{k>=1} 4^{-(2k+2)}`` as an exact rational (= 1/240)."""
    first = Fraction(1, 4 ** 4)
    return first / (1 - Fraction(1, 16))


def _theta_moment(lo: float, hi: float, q: QuadratureSpec, tail: TailBound | None = None):
    """Signed ``int_lo^hi theta e^{-4 theta} sin(ln theta) d theta`` as a LogQuantity."""
    f_log = lambda th: np.log(th) - 4.0 * th + np.log(np.abs(np.sin(np.log(th))))
    sgn = lambda th: np.sign(np.sin(np.log(th)))
    top = hi if math.isfinite(hi) else 60.0
    brk = _oscillation_breaks(lo, top, 0.0)
    return integrate(f_log, lo, hi, q, tail=tail, sign=sgn, breakpoints=brk)


@dataclass
class OscillationAnalysis:
    """Direct integrals and closed-form bounds for the oscillating profile.

    ``C`` is ~1e-41 so it is also carried as ``log_abs_C`` / ``C_sign``.
    """

    I1: float
    I2: float
    gap: float
    gap_direct: float
    A: float
    B: float
    C: float
    log_abs_C: float
    C_sign: int
    A_bound: float
    B_bound: float
    log_C_bound: float
    series_tail_bound: Fraction
    series_tail_actual: float
    subsequence_limits: list[tuple[str, float]] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def C_bound(self) -> float:
        return math.exp(self.log_C_bound)

    @property
    def separation(self) -> float:
        """``|I_2 - I_1| / (I_1 I_2)``, the gap between the two subsequence limits."""
        return abs(self.gap) / (self.I1 * self.I2)

    def to_dict(self) -> dict:
        return {
            "I1": self.I1, "I2": self.I2, "gap": self.gap, "gap_direct": self.gap_direct,
            "separation": self.separation,
            "A": self.A, "B": self.B, "C": self.C, "log_abs_C": self.log_abs_C,
            "C_sign": self.C_sign, "A_bound": self.A_bound, "B_bound": self.B_bound,
            "log_C_bound": self.log_C_bound, "series_tail_bound": str(self.series_tail_bound),
            "series_tail_bound_value": float(self.series_tail_bound),
            "series_tail_actual": self.series_tail_actual,
            "subsequence_limits": [[k, v] for k, v in self.subsequence_limits],
            "checks": dict(sorted(self.checks.items())), "notes": list(self.notes),
        }


def closed_form_bounds() -> tuple[float, float, float]:
    """``(A_bound, B_bound, ln C_bound)`` from the explicit dominating integrals."""
    em = math.exp(-math.pi)
    # int_0^{e^-pi} u e^{-4u} du
    A_b = -math.expm1(-4 * em) / 16 - 4 * em * math.exp(-4 * em) / 16
    a = (1 - em) / math.pi
    b = 2 - 4 * a
    B_b = math.exp(-4) * ((1 + math.exp(-2 * math.pi)) / 5
                          - (1 + math.exp(-b * math.pi)) / (b * b + 1))
    ep = math.exp(math.pi)
    log_C_b = -4 * ep + math.log(4 * ep + 1) - math.log(16)
    return A_b, B_b, log_C_b


def example32_bound_chain(q: QuadratureSpec | None = None, *, strict: bool = True
                          ) -> OscillationAnalysis:
    """Compute ``I_1, I_2``, the pieces ``A, B, C`` and every dominating bound.

    Raises:
        InvariantViolation: (when ``strict``) a closed-form bound fails to
            dominate its directly computed integral.
    """
    q = q or DEFAULT_SPEC
    I1 = example32_I(1, q)
    I2 = example32_I(-1, q)
    # 2 int e^{-4 theta} sinh(theta sin ln theta): ln|sinh y| with y small near 0
    def f_gap(th):
        y = th * np.sin(np.log(th))
        ay = np.abs(y)
        with np.errstate(divide="ignore"):
            small = np.log(ay) + np.log1p(ay * ay / 6.0 + ay ** 4 / 120.0)
            big = ay + np.log1p(-np.exp(-2 * ay)) - math.log(2.0)
        return -4.0 * th + np.where(ay < 1e-3, small, big)

    sgn = lambda th: np.sign(np.sin(np.log(th)))
    eps = _I_CUTOFF
    g = integrate(f_gap, eps, math.inf, q, tail=TailBound(0.0, 3.0, eps), sign=sgn,
                  breakpoints=_oscillation_breaks(eps, 60.0, 0.0))
    gap_direct = 2.0 * float(g.value)

    em, ep = math.exp(-math.pi), math.exp(math.pi)
    A_res = _theta_moment(eps, em, q)
    # the dropped piece on (0, eps) is below eps^2 / 2 in magnitude
    A = float(A_res.value)
    B = float(_theta_moment(em, ep, q).value)
    C_res = _theta_moment(ep, math.inf, q, tail=TailBound(0.0, 3.0, ep))
    C_q = C_res.value
    C = float(C_q)
    A_b, B_b, log_C_b = closed_form_bounds()
    tail = series_tail_exact()
    tail_actual = 0.5 * (I2 - I1) - (A + B + C)
    gap = I2 - I1
    checks = {
        "A_below_bound": A <= A_b,
        "A_bound_below_0.0009": A_b < 0.0009,
        "B_below_bound": B <= B_b,
        "B_bound_below_-0.008": B_b < -0.008,
        "C_below_bound": C_q.sign <= 0 or C_q.log_abs <= log_C_b,
        "C_bound_below_1e-38": log_C_b < -38 * math.log(10.0),
        "series_tail_is_1/240": tail == Fraction(1, 240),
        "series_tail_below_bound": tail_actual <= float(tail),
        "bound_sum_negative": A_b + B_b + math.exp(log_C_b) + float(tail) < 0,
        "twice_bound_sum_negative": 2 * (A_b + B_b + math.exp(log_C_b) + float(tail)) < 0,
        "gap_negative": gap < 0,
        "gap_routes_agree": abs(gap - gap_direct) <= 1e-8,
        "gap_below_twice_bound_sum": gap <= 2 * (A_b + B_b + math.exp(log_C_b) + float(tail)),
    }
    notes = [
        "the series identity carries a factor 2: I2 - I1 = 2 (A + B + C + tail); "
        "the sign conclusion holds with or without it",
    ]
    res = OscillationAnalysis(
        I1, I2, gap, gap_direct, A, B, C, C_q.log_abs, C_q.sign, A_b, B_b, log_C_b, tail,
        tail_actual,
        [("x_k = e^{-2k pi}", 1.0 / I1), ("x'_k = e^{-2k pi + pi}", 1.0 / I2)],
        checks, notes,
    )
    if strict:
        dominance = ("A_below_bound", "B_below_bound", "C_below_bound", "series_tail_below_bound")
        bad = [k for k in dominance if not checks[k]]
        if bad:
            raise InvariantViolation(f"closed-form bound(s) violated: {', '.join(bad)}")
    return res


def example32_capacity_oscillation(k_list: Sequence[int] = (2, 3, 4),
                                   q: QuadratureSpec | None = None) -> SweepReport:
    """Normalised capacities along ``p_k = 1 + e^{2k pi}`` and ``p'_k = 1 + e^{2k pi - pi}``.

    Samples are ``(p - 1) Cap_p^{1/(p-1)} = 1 / J(1/(p-1))``; the two
    subsequences tend to ``1/I_1`` and ``1/I_2``.  Using ``p - 1`` in place
    of ``p`` does not change the limit points.
    """
    ks = sorted(set(int(k) for k in k_list))
    if not ks or ks[0] < 1:
        raise DomainError("k_list must contain integers >= 1")
    samples = []
    labelled: dict[str, list[tuple[float, float]]] = {"x_k": [], "x'_k": []}
    for k in ks:
        for label, lx in (("x'_k", -2 * k * math.pi + math.pi), ("x_k", -2 * k * math.pi)):
            x = math.exp(lx)
            p = 1.0 + math.exp(-lx)
            val = 1.0 / example32_tail_integral(x, q)
            samples.append((p, val))
            labelled[label].append((p, val))
    samples.sort()
    if len(samples) >= 6:
        rep = extrapolate(samples)
    else:
        vs = [v for _, v in samples]
        rep = SweepReport(samples, None, max(vs), min(vs), False, max(vs) > min(vs), math.nan,
                          ["too few samples for a fit; window extremes reported"])
    for label, pts in labelled.items():
        rep.subsequence_limits[label] = pts[-1][1]
    lims = list(rep.subsequence_limits.values())
    rep.limsup_estimate = max(rep.limsup_estimate, *lims)
    rep.liminf_estimate = min(rep.liminf_estimate, *lims)
    if ks[0] == 1:
        rep.notes.append("k = 1 is pre-asymptotic")
    rep.notes.append("normalisation (p-1) Cap^{1/(p-1)} has the same limit points as p Cap^{1/p}")
    rep.notes.append("the infinity capacity (limsup) exceeds the liminf, which bounds the "
                     "infinity eigenvalue from above")
    return rep
