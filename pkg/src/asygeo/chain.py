"""Numerical check of the ordering entropy >= capacity >= eigenvalue = Maz'ya."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .asymptotics import PGrid, SweepReport, volume_entropy
from .capacity import infinity_capacity_sweep
from .errors import AsygeoError
from .manifold import WarpedManifold
from .quadrature import QuadratureSpec
from .spectrum import SolverConfig, infinity_eigenvalue_sweep, infinity_mazya_sweep

DEFAULT_CAP_GRID = "geom:10:1e4:12"
DEFAULT_EIGEN_GRID = "geom:2:100:8"
CHAIN_RTOL = 0.03
CHAIN_ATOL = 1e-6


def thread_count() -> int:
    """Worker cap from ``ASYGEO_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("ASYGEO_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class ChainConfig:
    """Settings for :func:`verify_chain`.

    ``radius`` is the radius of the ball used for the capacity leg (in units
    of the manifold's scale).
    """

    radius: float = 1.0
    eigen_grid: PGrid = field(default_factory=lambda: PGrid.parse(DEFAULT_EIGEN_GRID))
    solver: SolverConfig = field(default_factory=SolverConfig)
    quad: QuadratureSpec | None = None
    rtol: float = CHAIN_RTOL
    atol: float = CHAIN_ATOL


@dataclass
class ChainVerdict:
    entropy: float | None
    capacity: float | None
    eigenvalue: float | None
    mazya: float | None
    verdicts: dict[str, bool | None]
    tolerance: float
    rtol: float = CHAIN_RTOL
    atol: float = CHAIN_ATOL
    failed_legs: dict[str, str] = field(default_factory=dict)
    reports: dict[str, dict] = field(default_factory=dict, repr=False)
    notes: list[str] = field(default_factory=list)

    @property
    def values(self) -> tuple:
        return (self.entropy, self.capacity, self.eigenvalue, self.mazya)

    @property
    def ok(self) -> bool:
        return not self.failed_legs and all(v is not False for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "entropy": self.entropy, "C": self.capacity, "Lambda": self.eigenvalue,
            "Mazya": self.mazya,
            "verdicts": [{"name": k, "pass": v} for k, v in sorted(self.verdicts.items())],
            "tolerances": {"rtol": self.rtol, "atol": self.atol, "epsilon": self.tolerance},
            "failed_legs": dict(sorted(self.failed_legs.items())),
            "notes": list(self.notes),
        }


def _limit(rep: SweepReport) -> float:
    # limsup semantics: an oscillating sweep contributes its upper envelope
    return rep.limit_estimate if rep.limit_estimate is not None else rep.limsup_estimate


def verify_chain(M: WarpedManifold, pgrid: PGrid | str = DEFAULT_CAP_GRID,
                 cfg: ChainConfig | None = None) -> ChainVerdict:
    """Estimate all four asymptotic invariants and test their ordering.

    Args:
        M: the manifold.
        pgrid: exponents for the capacity and Maz'ya legs (log-domain, so
            large ``p`` is fine).  The eigenvalue leg uses
            ``cfg.eigen_grid`` because direct solves are limited to moderate
            ``p``.
        cfg: radius, solver and tolerance settings.

    Returns:
        A :class:`ChainVerdict`.  A leg that raises is recorded in
        ``failed_legs`` and the inequalities involving it are ``None``.
    """
    cfg = cfg or ChainConfig()
    grid = PGrid.parse(pgrid) if isinstance(pgrid, str) else pgrid
    q = cfg.quad
    failed: dict[str, str] = {}
    reports: dict[str, dict] = {}

    try:
        ent = volume_entropy(M, q=q)
        entropy = ent.entropy
        reports["entropy"] = ent.to_dict()
    except AsygeoError as exc:
        entropy = None
        failed["entropy"] = str(exc)

    legs = {
        "capacity": lambda: infinity_capacity_sweep(M, cfg.radius * M.scale, grid, q),
        "eigenvalue": lambda: infinity_eigenvalue_sweep(M, cfg.eigen_grid, cfg.solver),
        "mazya": lambda: infinity_mazya_sweep(M, grid, q, entropy=entropy),
    }
    if entropy is None:
        legs.pop("mazya")
        failed["mazya"] = "needs the entropy leg"
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        futures = {name: pool.submit(fn) for name, fn in legs.items()}
    values: dict[str, float | None] = {"capacity": None, "eigenvalue": None, "mazya": None}
    for name in sorted(futures):
        try:
            rep = futures[name].result()
        except AsygeoError as exc:
            failed[name] = str(exc)
            continue
        values[name] = _limit(rep)
        reports[name] = rep.to_dict()

    V, C, L, Mz = entropy, values["capacity"], values["eigenvalue"], values["mazya"]
    known = [abs(v) for v in (V, C, L, Mz) if v is not None]
    eps = cfg.rtol * max(known, default=0.0) + cfg.atol

    def ge(a, b):
        return None if a is None or b is None else bool(a + eps >= b)

    verdicts = {
        "entropy>=capacity": ge(V, C),
        "capacity>=eigenvalue": ge(C, L),
        "eigenvalue==mazya": None if L is None or Mz is None else bool(abs(L - Mz) <= eps),
        "eigenvalue>=0": None if L is None else bool(L >= -eps),
    }
    notes = []
    if V is not None and C is not None and V - C > eps:
        notes.append("strict gap: entropy exceeds capacity")
    if C is not None and L is not None and C - L > eps:
        notes.append("strict gap: capacity exceeds eigenvalue")
    return ChainVerdict(V, C, L, Mz, verdicts, eps, cfg.rtol, cfg.atol, failed, reports, notes)
