"""First Dirichlet p-eigenvalue of centred balls and the Maz'ya constant.

The eigenvalue solver minimises the radial Rayleigh quotient over continuous
piecewise-linear profiles with ``u(R) = 0``.  Both integrals are kept in the
log domain: the gradient term uses exact per-segment masses ``int S``; the
mass term uses 6-point Gauss-Legendre against ``S |u|^p``.

Minimisation is by discrete inverse iteration.  In slope variables the
energy is diagonal, so the step "minimise energy minus a linear functional"
has a closed-form solution (a cumulative sum), and every step lowers the
quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .asymptotics import PGrid, SweepReport, extrapolate, volume_entropy
from .capacity import check_p, log_cap_ball, log_cap_condenser
from .errors import DegenerateProfileError, DomainError, ToleranceNotMet
from .manifold import WarpedManifold, log_volume
from .quadrature import LogQuantity, QuadratureSpec

# consecutive log-differences shrinking by less than this factor signal
# power-law decay of the ball eigenvalues
POWER_LAW_RATIO = 0.5

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_THETA = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise-linear radial function sampled at ``0 = t_0 < ... < t_N = R``."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float)
        u = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "nodes", t)
        object.__setattr__(self, "values", u)
        if t.ndim != 1 or t.shape != u.shape or len(t) < 2:
            raise DegenerateProfileError("nodes and values must be 1-D arrays of equal length >= 2")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise DegenerateProfileError("nodes must start at 0 and increase strictly")
        if u[-1] != 0.0:
            raise DegenerateProfileError("profile must vanish at the outer radius")
        if not np.any(u != 0):
            raise DegenerateProfileError("profile is identically zero")

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @classmethod
    def initial(cls, nodes) -> "RadialProfile":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, 1.0 - (nodes / nodes[-1]) ** 2)


@dataclass(frozen=True)
class SolverConfig:
    """Eigen-solver settings.

    Attributes:
        nodes: segments in the uniform part of the mesh.
        tol: stop when the log-quotient drops by less than this over
            ``window`` iterations.
        window: see ``tol``.
        max_iter: iteration cap.
        step_nodes: extra nodes inside each steep transition of the profile.
        estimate_error: also solve on a half-resolution mesh and report the
            relative change as the discretisation error.
    """

    nodes: int = 400
    tol: float = 1e-13
    window: int = 50
    max_iter: int = 200000
    step_nodes: int = 16
    estimate_error: bool = False


@dataclass
class EigenResult:
    """``lambda_{1,p}`` of a ball (or the manifold limit) in log form."""

    log_lambda: float
    p: float
    R: float
    iterations: int
    residual: float
    discretization_error: float | None = None
    profile: RadialProfile | None = field(default=None, repr=False)
    history: list[float] = field(default_factory=list, repr=False)
    notes: list[str] = field(default_factory=list)

    @property
    def lam(self) -> float:
        with np.errstate(over="ignore", under="ignore"):
            return float(np.exp(self.log_lambda))

    @property
    def scaled(self) -> float:
        if self.log_lambda == -math.inf:
            return 0.0
        return self.p * math.exp(self.log_lambda / self.p)

    def to_dict(self) -> dict:
        return {"p": self.p, "R": self.R, "lambda": self.lam, "log_lambda": self.log_lambda,
                "scaled": self.scaled, "iterations": self.iterations, "residual": self.residual,
                "discretization_error": self.discretization_error, "notes": list(self.notes)}


def make_mesh(M: WarpedManifold, R: float, n: int, step_nodes: int = 16) -> np.ndarray:
    """Uniform mesh on ``[0, R]`` plus profile breakpoints and refined steps."""
    pts = [np.linspace(0.0, R, n + 1), np.array(M.breakpoints(R))]
    for lo, hi in M.refine_intervals(R):
        pts.append(np.linspace(lo, hi, step_nodes + 2))
    t = np.unique(np.concatenate(pts))
    keep = np.concatenate([[True], np.diff(t) > 1e-12 * R])
    t = t[keep]
    t[-1] = R
    return t


class _Discretization:
    """Log-domain pieces of the discrete Rayleigh quotient on a fixed mesh."""

    def __init__(self, M: WarpedManifold, t: np.ndarray, p: float):
        self.t = t
        self.p = p
        h = np.diff(t)
        self.h = h
        self.log_h = np.log(h)
        x = t[:-1, None] + h[:, None] * _GL_THETA[None, :]
        with np.errstate(divide="ignore"):
            lS = np.asarray(M.log_area(x.ravel()), dtype=float).reshape(x.shape)
        lw = np.log(_GL_W)[None, :] + self.log_h[:, None] + lS
        shift = float(np.max(lw))
        self.lc = lw - shift  # quadrature weights times S, common factor removed
        self.lW = logsumexp(self.lc, axis=1)  # ln int_seg S, same factor

    def log_energy(self, s):
        """``ln sum W_i |s_i|^p``."""
        with np.errstate(divide="ignore"):
            return logsumexp(self.lW + self.p * np.log(np.abs(s)))

    def log_mass(self, u):
        """``ln int S |u|^p`` and the gradient of that log in ``u``."""
        p = self.p
        uq = u[:-1, None] * (1.0 - _GL_THETA)[None, :] + u[1:, None] * _GL_THETA[None, :]
        a = np.abs(uq)
        with np.errstate(divide="ignore"):
            la = np.log(a)
        lD = logsumexp(self.lc + p * la)
        with np.errstate(invalid="ignore", over="ignore"):
            gq = np.where(a > 0, p * np.sign(uq) * np.exp(self.lc + (p - 1.0) * la - lD), 0.0)
        gu = np.zeros_like(u)
        gu[:-1] += gq @ (1.0 - _GL_THETA)
        gu[1:] += gq @ _GL_THETA
        return lD, gu

    def log_quotient(self, u):
        return self.log_energy(np.diff(u) / self.h) - self.log_mass(u)[0]

    def u_from_v(self, v):
        """Node values from descending slopes ``v`` (``u_N = 0``)."""
        return np.concatenate([np.cumsum((self.h * v)[::-1])[::-1], [0.0]])

    def inverse_step(self, v):
        """Minimiser of ``energy(u) - <grad mass(u_old), u>`` in slope form.

        Stationarity in ``u_j`` telescopes: with ``G_j = sum_{i<=j} g_i`` the
        new slope satisfies ``p W_j v_j^{p-1} / h_j = G_j``.
        """
        u = self.u_from_v(v)
        _, g = self.log_mass(u)
        with np.errstate(divide="ignore"):
            lg = np.log(np.maximum(g[:-1], 0.0))
        lG = np.logaddexp.accumulate(lg)
        lv = (lG + self.log_h - self.lW) / (self.p - 1.0)
        return np.exp(lv - np.max(lv))


def log_rayleigh_quotient(M: WarpedManifold, R: float, p: float, u: RadialProfile,
                          q: QuadratureSpec | None = None) -> float:
    """ln of ``int S |u'|^p / int S |u|^p`` for a piecewise-linear profile."""
    p = check_p(p)
    if not math.isclose(u.R, R, rel_tol=1e-12):
        raise DegenerateProfileError(f"profile ends at {u.R}, expected R={R}")
    disc = _Discretization(M, u.nodes, p)
    val = disc.log_quotient(u.values)
    if not math.isfinite(val):
        raise DegenerateProfileError("zero weighted L^p norm")
    return float(val)


def rayleigh_quotient(M: WarpedManifold, R: float, p: float, u: RadialProfile,
                      q: QuadratureSpec | None = None) -> float:
    """Radial Rayleigh quotient (may overflow to ``inf`` for huge ``p``)."""
    with np.errstate(over="ignore"):
        return float(np.exp(log_rayleigh_quotient(M, R, p, u, q)))


def _solve(M, R, p, n, cfg):
    t = make_mesh(M, R, n, cfg.step_nodes)
    disc = _Discretization(M, t, p)
    u0 = RadialProfile.initial(t).values
    v = -np.diff(u0) / disc.h
    v /= np.max(v)
    hist = [float(disc.log_quotient(disc.u_from_v(v)))]
    w = cfg.window
    for k in range(cfg.max_iter):
        v = disc.inverse_step(v)
        hist.append(float(disc.log_quotient(disc.u_from_v(v))))
        if k >= w and hist[-w - 1] - hist[-1] < cfg.tol * max(1.0, abs(hist[-1])):
            break
    else:
        raise ToleranceNotMet("eigen solve did not stagnate within max_iter",
                              estimate=hist[-1], error=hist[-w - 1] - hist[-1])
    u = disc.u_from_v(v)
    residual = (hist[-w - 1] - hist[-1]) / max(1.0, abs(hist[-1]))
    return min(hist), RadialProfile(t, u / np.max(u)), len(hist) - 1, residual, hist


def lambda_1p_ball(M: WarpedManifold, R: float, p: float,
                   cfg: SolverConfig | None = None) -> EigenResult:
    """First Dirichlet p-eigenvalue of ``B(o, R)``.

    The discrete minimum is an upper bound for the radial (hence, on a
    warped product, the true) eigenvalue and converges under refinement.

    Raises:
        ToleranceNotMet: iteration cap reached before stagnation.
    """
    cfg = cfg or SolverConfig()
    p = check_p(p)
    if not R > 0:
        raise DomainError("R must be positive")
    log_lam, prof, its, resid, hist = _solve(M, R, p, cfg.nodes, cfg)
    err = None
    if cfg.estimate_error:
        coarse = _solve(M, R, p, max(cfg.nodes // 2, 8), cfg)[0]
        err = abs(math.expm1(coarse - log_lam))
    return EigenResult(log_lam, p, R, its, resid, err, prof, hist)


def default_radius_schedule(M: WarpedManifold, p: float) -> list[float]:
    """Radii doubling from a start proportional to the eigenfunction decay length."""
    base = max(10.0, 4.0 * p / M.n) * M.scale
    return [base * 2 ** j for j in range(4)]


def _aitken_limit(logs: Sequence[float], notes: list[str]) -> float:
    """Limit of ``ln lam(R)`` along a doubling schedule, from the last three terms.

    Differences ``d_k = l_k - l_{k+1}`` that shrink geometrically (ratio ~1/4
    for an ``R^{-2}`` approach) are summed by Aitken's rule.  Differences
    that do not shrink mean power-law decay ``lam ~ C R^{-gamma}``, whose
    limit is 0.  The result is clipped to ``<= l_last``.
    """
    l0, l1, l2 = logs[-3], logs[-2], logs[-1]
    if l2 == -math.inf:
        return -math.inf
    d0, d1 = l0 - l1, l1 - l2
    if d1 <= 1e-12 * max(1.0, abs(l2)):
        return l2
    if d0 > 0 and d1 >= POWER_LAW_RATIO * d0:
        notes.append("ball eigenvalues decay like a power of R: limit is zero")
        return -math.inf
    rho = d1 / d0 if d0 > 0 else 0.25
    return min(l2, l2 - d1 * rho / (1.0 - rho))


def lambda_1p_manifold(M: WarpedManifold, p: float, R_schedule: Sequence[float] | None = None,
                       cfg: SolverConfig | None = None) -> EigenResult:
    """``lambda_{1,p}(M)`` as the limit of ball eigenvalues along an exhaustion.

    The mesh spacing is held fixed across the schedule.  The log-eigenvalues
    of the last three radii are extrapolated by Aitken's rule, which handles
    the ``R^{-2}`` approach of a spectral gap; power-law decay (Euclidean
    space) is recognised and reported as 0.
    """
    cfg = cfg or SolverConfig()
    p = check_p(p)
    sched = list(R_schedule) if R_schedule is not None else default_radius_schedule(M, p)
    if len(sched) < 3 or any(b <= a for a, b in zip(sched, sched[1:])):
        raise DomainError("R schedule must have >= 3 increasing radii")
    h = sched[0] / cfg.nodes
    results = []
    for R in sched:
        n = max(cfg.nodes, int(math.ceil(R / h - 1e-9)))
        sub = SolverConfig(n, cfg.tol, cfg.window, cfg.max_iter, cfg.step_nodes)
        results.append(lambda_1p_ball(M, R, p, sub))
    notes = []
    logs = [r.log_lambda for r in results]
    for a, b in zip(logs, logs[1:]):
        if b > a + 1e-9 * max(1.0, abs(a)):
            notes.append("ball eigenvalues not monotone in R beyond solver tolerance")
            break
    log_inf = _aitken_limit(logs, notes)
    l1, l2 = logs[-2], logs[-1]
    # relative change over the last doubling, a Cauchy-type diagnostic
    residual = abs(math.expm1(l2 - l1)) if l1 > -math.inf else 0.0
    return EigenResult(log_inf, p, sched[-1], sum(r.iterations for r in results), residual, None,
                       results[-1].profile, [], notes)


@dataclass
class MazyaResult:
    log_mp: float
    argmin_r: float
    p: float
    attained_at_infinity: bool = False
    samples: list[tuple[float, float]] = field(default_factory=list, repr=False)
    notes: list[str] = field(default_factory=list)

    @property
    def scaled(self) -> float:
        if self.log_mp == -math.inf:
            return 0.0
        return self.p * math.exp(self.log_mp / self.p)

    @property
    def quantity(self) -> LogQuantity:
        return LogQuantity.from_log(self.log_mp)

    def to_dict(self) -> dict:
        return {"p": self.p, "log_mp": self.log_mp, "argmin_r": self.argmin_r,
                "scaled": self.scaled, "attained_at_infinity": self.attained_at_infinity,
                "notes": list(self.notes)}


def mazya_f(M: WarpedManifold, r: float, p: float, q: QuadratureSpec | None = None) -> LogQuantity:
    """``Cap_p(B_r) / V(r)`` in log form."""
    cap = log_cap_ball(M, r, p, q)
    if cap.is_zero:
        return LogQuantity.zero()
    return LogQuantity.from_log(cap.log_cap - log_volume(M, r, q))


def tail_limit_log(entropy: float, p: float) -> float:
    """``ln(V^p / (p-1)^{p-1})``, the large-radius value of ``f``."""
    if entropy <= 0:
        return -math.inf
    return p * math.log(entropy) - (p - 1.0) * math.log(p - 1.0)


def _scan_then_refine(logf: Callable[[float], float], rs: np.ndarray):
    vals = np.array([logf(r) for r in rs])
    i = int(np.argmin(vals))
    best_r, best = float(rs[i]), float(vals[i])
    if 0 < i < len(rs) - 1 and np.isfinite(best):
        g = lambda x: logf(math.exp(x))
        lo, hi = math.log(rs[i - 1]), math.log(rs[i + 1])
        # bounded search tolerates ties between neighbouring scan values
        res = minimize_scalar(g, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        if res.fun < best:
            best, best_r = float(res.fun), math.exp(float(res.x))
    return best, best_r, i, vals


def mazya_mp(M: WarpedManifold, p: float, q: QuadratureSpec | None = None, *,
             r_min: float = 1e-3, r_max: float = 1e3, points: int = 200,
             entropy: float | None = None) -> MazyaResult:
    """Maz'ya constant over centred balls: ``inf_r Cap_p(B_r) / V(r)``.

    A log-spaced scan is refined by a bounded Brent search.  When the scan
    minimum sits at ``r_max`` the infimum is taken at infinity and equals the
    smaller of the samples and the tail limit computed from ``entropy``
    (estimated from the volume growth when not supplied).
    """
    p = check_p(p)
    rs = np.geomspace(r_min, r_max, points) * M.scale

    def logf(r):
        return mazya_f(M, r, p, q).log_abs

    best, best_r, i, vals = _scan_then_refine(logf, rs)
    samples = list(zip(rs.tolist(), vals.tolist()))
    notes = []
    if M.kind in ("custom", "tabulated"):
        notes.append("ball reduction is heuristic for profiles outside the model classes")
    if best == -math.inf:
        notes.append("zero capacity: Maz'ya constant vanishes")
        return MazyaResult(-math.inf, best_r, p, False, samples, notes)
    at_inf = i == len(rs) - 1
    if at_inf:
        if entropy is None:
            entropy = volume_entropy(M).entropy
        tail = tail_limit_log(entropy, p)
        notes.append(f"minimum attained at infinity; tail limit uses entropy {entropy:.12g}")
        best = min(best, tail)
        best_r = math.inf
    return MazyaResult(best, best_r, p, at_inf, samples, notes)


def mazya_mp_ball(M: WarpedManifold, R: float, p: float, q: QuadratureSpec | None = None, *,
                  points: int = 120) -> MazyaResult:
    """Maz'ya constant of ``B(o, R)``: ``inf_{r<R} Cap_p(B_r, B_R) / V(r)``."""
    p = check_p(p)
    rs = np.geomspace(1e-3 * R, R * (1 - 1e-3), points)

    def logf(r):
        if not 0 < r < R:
            return math.inf
        return log_cap_condenser(M, r, R, p, q).log_cap - log_volume(M, r, q)

    best, best_r, _, vals = _scan_then_refine(logf, rs)
    return MazyaResult(best, best_r, p, False, list(zip(rs.tolist(), vals.tolist())))


@dataclass
class SandwichResult:
    """Check of ``c_p m_p <= lambda <= m_p`` with ``c_p = (p-1)^{p-1}/p^p``."""

    lower_ok: bool
    upper_ok: bool
    lower_ratio: float  # lambda / (c_p m_p), should be >= 1
    upper_ratio: float  # lambda / m_p, should be <= 1
    log_lambda: float
    log_mp: float
    p: float
    R: float | None
    slack: float

    @property
    def ratios(self) -> tuple[float, float]:
        return (self.lower_ratio, self.upper_ratio)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("lower_ok", "upper_ok", "lower_ratio", "upper_ratio",
                                               "log_lambda", "log_mp", "p", "R", "slack")}


def log_sandwich_constant(p: float) -> float:
    return (p - 1.0) * math.log(p - 1.0) - p * math.log(p)


def _verdict(log_lam, log_mp, p, R, slack):
    if log_mp == -math.inf:
        # both sides vanish; only lambda = 0 is consistent
        ok = log_lam == -math.inf
        return SandwichResult(True, ok, math.nan, math.nan, log_lam, log_mp, p, R, slack)
    lc = log_sandwich_constant(p)
    lower = math.exp(log_lam - lc - log_mp)
    upper = math.exp(log_lam - log_mp)
    return SandwichResult(lower >= 1.0 - slack, upper <= 1.0 + slack, lower, upper,
                          log_lam, log_mp, p, R, slack)


def sandwich_check(M: WarpedManifold, p: float, R: float, cfg: SolverConfig | None = None,
                   q: QuadratureSpec | None = None, *, slack: float = 1e-3) -> SandwichResult:
    """Two-sided Maz'ya/eigenvalue comparison on the ball ``B(o, R)``.

    ``m_p`` is the ball-restricted Maz'ya constant (condenser capacities
    relative to ``B_R``) and ``lambda`` the Dirichlet eigenvalue of ``B_R``.
    """
    p = check_p(p)
    lam = lambda_1p_ball(M, R, p, cfg)
    mp = mazya_mp_ball(M, R, p, q)
    return _verdict(lam.log_lambda, mp.log_mp, p, R, slack)


def sandwich_check_manifold(M: WarpedManifold, p: float, cfg: SolverConfig | None = None,
                            q: QuadratureSpec | None = None, *, slack: float = 1e-3,
                            entropy: float | None = None) -> SandwichResult:
    """Same comparison using the manifold-level estimates."""
    lam = lambda_1p_manifold(M, p, cfg=cfg)
    mp = mazya_mp(M, p, q, entropy=entropy)
    return _verdict(lam.log_lambda, mp.log_mp, p, None, slack)


def infinity_eigenvalue_sweep(M: WarpedManifold, pgrid: PGrid | Sequence[float],
                              cfg: SolverConfig | None = None, *, p_max: float = 200.0,
                              mono_rtol: float = 1e-3) -> SweepReport:
    """Samples of ``p lambda_{1,p}(M)^{1/p}`` for ``p <= p_max`` and their limit."""
    grid = pgrid if isinstance(pgrid, PGrid) else PGrid(tuple(pgrid))
    ps = [p for p in grid if p <= p_max]
    notes = []
    if len(ps) < len(grid):
        notes.append(f"exponents above {p_max:g} skipped; limit from extrapolation")
    samples = [(p, lambda_1p_manifold(M, p, cfg=cfg).scaled) for p in ps]
    vals = [v for _, v in samples]
    for (p0, a), (p1, b) in zip(samples, samples[1:]):
        if b < a - mono_rtol * max(abs(a), 1e-12):
            notes.append(f"monotonicity violated between p={p0:g} and p={p1:g}")
    if all(v == 0.0 for v in vals):
        rep = SweepReport(samples, 0.0, 0.0, 0.0, True, False, 0.0,
                          ["every sampled eigenvalue vanishes"])
    elif len(samples) >= 6:
        rep = extrapolate(samples)
    else:
        rep = SweepReport(samples, None, max(vals), min(vals), False, False, math.nan,
                          ["too few samples to extrapolate"])
    rep.notes = notes + rep.notes
    return rep


def infinity_mazya_sweep(M: WarpedManifold, pgrid: PGrid | Sequence[float],
                         q: QuadratureSpec | None = None, *,
                         entropy: float | None = None) -> SweepReport:
    """Samples of ``p m_p^{1/p}`` and their limit."""
    grid = pgrid if isinstance(pgrid, PGrid) else PGrid(tuple(pgrid))
    if entropy is None:
        entropy = volume_entropy(M).entropy
    samples = [(p, mazya_mp(M, p, q, entropy=entropy).scaled) for p in grid]
    vals = [v for _, v in samples]
    if all(v == 0.0 for v in vals):
        return SweepReport(samples, 0.0, 0.0, 0.0, True, False, 0.0,
                           ["every sampled Maz'ya constant vanishes"])
    if len(samples) >= 6:
        return extrapolate(samples, log_term=True)
    return SweepReport(samples, None, max(vals), min(vals), False, False, math.nan,
                       ["too few samples to extrapolate"])
