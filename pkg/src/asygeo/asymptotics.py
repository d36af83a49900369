"""Sweep extrapolation and volume entropy.

The p -> infinity limits are estimated by least-squares fits on the trailing
half of a sweep; sequences that refuse to settle are reported through their
trailing extremes instead of a limit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .manifold import WarpedManifold, log_area, log_volume
from .quadrature import QuadratureSpec

CONVERGENCE_RTOL = 1e-3
# absolute floor so that limits equal to zero can still be "converged"
CONVERGENCE_ATOL = 1e-6
OSCILLATION_FACTOR = 5.0


@dataclass(frozen=True)
class PGrid:
    """Strictly increasing exponents, all > 1."""

    values: tuple[float, ...]

    def __post_init__(self):
        v = self.values
        if len(v) == 0:
            raise DomainError("p-grid is empty")
        if any(not (p > 1) or not math.isfinite(p) for p in v):
            raise DomainError("p must exceed 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise DomainError("p-grid must be strictly increasing")

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    @classmethod
    def geometric(cls, pmin: float, pmax: float, count: int) -> "PGrid":
        if count < 2:
            raise DomainError("geometric grid needs count >= 2")
        if not (pmin > 1 and pmax > pmin):
            raise DomainError("geometric grid needs 1 < pmin < pmax")
        return cls(tuple(float(x) for x in np.geomspace(pmin, pmax, count)))

    @classmethod
    def parse(cls, text: str) -> "PGrid":
        """``geom:pmin:pmax:count`` or a comma-separated list."""
        text = text.strip()
        if text.startswith("geom:"):
            parts = text.split(":")
            if len(parts) != 4:
                raise DomainError(f"bad p-grid {text!r}; expected geom:pmin:pmax:count")
            try:
                return cls.geometric(float(parts[1]), float(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise DomainError(f"bad p-grid {text!r}: {exc}") from None
        try:
            vals = tuple(float(x) for x in re.split(r"\s*,\s*", text) if x)
        except ValueError:
            raise DomainError(f"bad p-grid {text!r}") from None
        return cls(vals)


@dataclass
class SweepReport:
    """Samples of a scaled quantity along a p-grid plus limit diagnostics."""

    samples: list[tuple[float, float]]
    limit_estimate: float | None
    limsup_estimate: float
    liminf_estimate: float
    monotone: bool
    oscillating: bool
    fit_residual: float
    notes: list[str] = field(default_factory=list)
    subsequence_limits: dict[str, float] = field(default_factory=dict)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.liminf_estimate, self.limsup_estimate)

    def to_dict(self) -> dict:
        return {
            "samples": [[p, v] for p, v in self.samples],
            "limit_estimate": self.limit_estimate,
            "limsup_estimate": self.limsup_estimate,
            "liminf_estimate": self.liminf_estimate,
            "monotone": self.monotone,
            "oscillating": self.oscillating,
            "fit_residual": self.fit_residual,
            "notes": list(self.notes),
            "subsequence_limits": dict(sorted(self.subsequence_limits.items())),
        }


def _fit(x: np.ndarray, y: np.ndarray, columns) -> tuple[np.ndarray, float]:
    A = np.column_stack([c(x) for c in columns])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef, float(np.sqrt(np.mean(resid ** 2)))


def reversal_amplitude(values: Sequence[float]) -> float:
    """Half the variation not explained by the net change (0 for monotone data)."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return 0.0
    d = np.diff(v)
    return 0.5 * float(np.sum(np.abs(d)) - abs(v[-1] - v[0]))


def extrapolate(samples: Sequence[tuple[float, float]], *, rtol: float = CONVERGENCE_RTOL,
                log_term: bool = False) -> SweepReport:
    """Estimate ``lim`` of ``value(p)`` as ``p -> inf``.

    Fits ``a + b/p`` (optionally ``+ c ln(p)/p``) to the trailing half.  The
    sweep counts as converged when the rms residual is below
    ``rtol * max(|a|, atol)`` and the trailing samples do not reverse direction
    by more than ``5 x`` the residual.

    Raises:
        DomainError: fewer than 6 samples or non-increasing ``p``.
    """
    if len(samples) < 6:
        raise DomainError(f"extrapolation needs at least 6 samples, got {len(samples)}")
    ps = np.array([s[0] for s in samples], dtype=float)
    vs = np.array([s[1] for s in samples], dtype=float)
    if np.any(np.diff(ps) <= 0):
        raise DomainError("sample abscissae must be strictly increasing")
    half = len(samples) // 2
    x, y = ps[half:], vs[half:]
    cols = [np.ones_like, lambda t: 1.0 / t]
    if log_term and len(x) >= 4:
        cols.append(lambda t: np.log(t) / t)
    coef, resid = _fit(x, y, cols)
    a = float(coef[0])
    tol = rtol * max(abs(a), CONVERGENCE_ATOL)
    amp = reversal_amplitude(y)
    d = np.diff(y)
    slack = max(resid, 1e-12 * max(1.0, float(np.max(np.abs(y)))))
    monotone = bool(np.all(d >= -slack) or np.all(d <= slack))
    converged = resid <= tol and amp <= OSCILLATION_FACTOR * max(resid, CONVERGENCE_ATOL * tol)
    notes = []
    if converged:
        return SweepReport(list(zip(ps.tolist(), vs.tolist())), a, a, a, monotone, False, resid,
                           notes)
    oscillating = not monotone
    if oscillating:
        notes.append("trailing samples reverse direction; reporting window extremes")
    else:
        notes.append("fit residual above tolerance; reporting window extremes")
    return SweepReport(list(zip(ps.tolist(), vs.tolist())), None, float(np.max(y)),
                       float(np.min(y)), monotone, oscillating, resid, notes)


@dataclass
class EntropyReport:
    entropy: float
    ratio_tail: list[tuple[float, float]]
    sv_ratio_tail: list[tuple[float, float]]
    condition_1_2: bool
    sv_limit: float | None = None
    fit_residual: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "entropy": self.entropy,
            "condition_1_2": self.condition_1_2,
            "sv_limit": self.sv_limit,
            "fit_residual": self.fit_residual,
            "ratio_tail": [list(x) for x in self.ratio_tail],
            "sv_ratio_tail": [list(x) for x in self.sv_ratio_tail],
            "notes": list(self.notes),
        }


def default_r_grid(M: WarpedManifold) -> np.ndarray:
    if M.kind == "example31":
        return plateau_r_grid(M)
    return np.geomspace(1.0, 60.0, 40) * M.scale


def plateau_r_grid(M: WarpedManifold) -> np.ndarray:
    """Right ends ``x_k + 2`` of the first unit past each step, where the
    staircase ratio is largest."""
    xs = [x for x in M.plateau.seq.values if math.isfinite(x)]
    return np.array([x + 2.0 for x in xs[1:]]) * M.scale


def volume_entropy(M: WarpedManifold, R_grid: Sequence[float] | None = None,
                   q: QuadratureSpec | None = None) -> EntropyReport:
    """Exponential volume growth rate ``limsup ln V(R) / R``.

    When the area-to-volume ratio is nonincreasing on the trailing half of
    the grid the limit exists and both ``ln V/R`` and ``S/V`` are fitted with
    ``a + b/R + c ln(R)/R`` (which removes polynomial-growth bias); otherwise
    the limsup is the largest trailing ratio.
    """
    R = np.asarray(R_grid if R_grid is not None else default_r_grid(M), dtype=float)
    if len(R) < 2 or np.any(np.diff(R) <= 0) or R[0] <= 0:
        raise DomainError("R grid must be positive and strictly increasing")
    lv = np.array([log_volume(M, r, q) for r in R])
    la = np.array([log_area(M, r) for r in R])
    ratio = lv / R
    sv = np.exp(la - lv)
    half = len(R) // 2
    tail_sv = sv[half:]
    cond = bool(np.all(np.diff(tail_sv) <= 1e-12 * np.max(tail_sv)))
    notes: list[str] = []
    sv_limit = None
    resid = 0.0
    if cond and len(R) - half >= 4:
        cols = [np.ones_like, lambda t: 1.0 / t, lambda t: np.log(t) / t]
        coef, resid = _fit(R[half:], ratio[half:], cols)
        sv_coef, _ = _fit(R[half:], tail_sv, cols)
        entropy = max(float(coef[0]), 0.0)
        sv_limit = max(float(sv_coef[0]), 0.0)
        notes.append("area/volume ratio eventually nonincreasing: limit fitted")
    else:
        entropy = max(float(np.max(ratio[half:])), 0.0)
        notes.append("limsup taken as the largest trailing ratio")
    return EntropyReport(entropy, list(zip(R.tolist(), ratio.tolist())),
                         list(zip(R.tolist(), sv.tolist())), cond, sv_limit, resid, notes)
