"""Command-line front end.

Exit status: 0 on success, 1 when a numerical tolerance or assertion fails,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import __version__
from .asymptotics import PGrid, volume_entropy
from .capacity import infinity_capacity_sweep, log_cap_ball, log_cap_condenser
from .chain import DEFAULT_CAP_GRID, DEFAULT_EIGEN_GRID, ChainConfig, verify_chain
from .errors import AsygeoError, DomainError, InvariantViolation, ToleranceNotMet
from .examples import (example31_capacity, example31_entropy, example32_bound_chain,
                       example32_capacity_oscillation, example32_tail_integral)
from .manifold import load_manifold, make_model, rescale
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .spectrum import (SolverConfig, infinity_eigenvalue_sweep, lambda_1p_ball,
                       lambda_1p_manifold, mazya_mp)

SIG_DIGITS = 12
EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE = 0, 1, 2


# --- argument types -------------------------------------------------------------------------

def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _exponent(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 1 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("p must exceed 1")
    return v


def _pgrid(text: str) -> PGrid:
    try:
        return PGrid.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _depth(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 10:
        raise argparse.ArgumentTypeError("max depth must be at least 10")
    return v


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("entries must be integers >= 1")
    return vals


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 2:
        raise argparse.ArgumentTypeError("must be at least 2")
    return v


# --- configuration -------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    manifold: str | None
    params: dict[str, Any] = field(default_factory=dict)
    output: str | None = None
    fmt: str = "json"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with status 2 and name the flag
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifold", default="hyperbolic:2",
                        help="built-in kind[:n] or a .json/.toml profile file")
    common.add_argument("--scale", type=_positive, default=1.0,
                        help="rescale the metric by this factor squared")
    common.add_argument("--rel-tol", type=_positive, default=DEFAULT_SPEC.rel_tol)
    common.add_argument("--max-depth", type=_depth, default=DEFAULT_SPEC.max_depth)
    common.add_argument("--format", choices=("json", "csv"), default="json", dest="fmt")
    common.add_argument("--output", "-o", help="write here instead of stdout")

    parser = _Parser(prog="asygeo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    p = add("cap", "p-capacity of a centred ball")
    p.add_argument("--r", type=_positive, default=1.0)
    p.add_argument("--p", type=_exponent, required=True)

    p = add("cap-sweep", "scaled capacity along a p-grid")
    p.add_argument("--r", type=_positive, default=1.0)
    p.add_argument("--p-grid", type=_pgrid, default=PGrid.parse(DEFAULT_CAP_GRID))

    p = add("condenser", "capacity of the condenser (B_r1, B_r2)")
    p.add_argument("--r1", type=_positive, required=True)
    p.add_argument("--r2", type=_positive, required=True)
    p.add_argument("--p", type=_exponent, required=True)

    p = add("eigen", "first Dirichlet p-eigenvalue of a ball or of the manifold")
    p.add_argument("--R", type=_positive, default=None,
                   help="ball radius; omit for the manifold limit")
    p.add_argument("--p", type=_exponent, required=True)
    p.add_argument("--nodes", type=_count, default=SolverConfig.nodes)

    p = add("mazya", "Maz'ya constant over centred balls")
    p.add_argument("--p", type=_exponent, required=True)

    p = add("lambda-sweep", "scaled eigenvalue along a p-grid")
    p.add_argument("--p-grid", type=_pgrid, default=PGrid.parse(DEFAULT_EIGEN_GRID))
    p.add_argument("--nodes", type=_count, default=SolverConfig.nodes)

    add("entropy", "exponential volume growth rate")

    p = add("verify-chain", "estimate all four invariants and check their ordering")
    p.add_argument("--p-grid", type=_pgrid, default=PGrid.parse(DEFAULT_CAP_GRID))
    p.add_argument("--eigen-grid", type=_pgrid, default=PGrid.parse(DEFAULT_EIGEN_GRID))
    p.add_argument("--r", type=_positive, default=1.0)
    p.add_argument("--nodes", type=_count, default=SolverConfig.nodes)

    p = add("example31", "staircase profile: capacity bound and entropy bounds")
    p.add_argument("--p", type=_exponent, default=3.0)
    p.add_argument("--terms", type=_count, default=4)

    p = add("example32", "oscillating profile: integrals, bounds and subsequences")
    p.add_argument("--k-list", type=_int_list, default=[2, 3, 4])

    add("reproduce", "run every model and example and tabulate the results")
    return parser


_NO_MANIFOLD = {"example31", "example32", "reproduce"}


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse and validate; usage problems exit with status 2."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    params = {k: v for k, v in vars(ns).items()
              if k not in ("command", "manifold", "output", "fmt")}
    if ns.command == "condenser" and not ns.r1 < ns.r2:
        parser.error("argument --r2: condenser needs r1 < r2")
    manifold = None if ns.command in _NO_MANIFOLD else ns.manifold
    return RunConfig(ns.command, manifold, params, ns.output, ns.fmt)


# --- output --------------------------------------------------------------------------------

def clean(obj):
    """Round floats to 12 significant digits; non-finite floats become strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(f"{obj:.{SIG_DIGITS}g}")
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):  # numpy scalar
        return clean(obj.item())
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    return str(obj)


def render_json(doc: dict) -> str:
    return json.dumps(clean(doc), sort_keys=True, indent=2) + "\n"


def render_csv(rows: list[dict]) -> str:
    rows = [clean(r) for r in rows]
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v)
                    for k, v in r.items()})
    return buf.getvalue()


@dataclass
class Outcome:
    result: dict
    rows: list[dict]
    ok: bool = True


# --- commands ------------------------------------------------------------------------------

def _quad(params) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=params["rel_tol"], max_depth=params["max_depth"])


def _manifold(cfg: RunConfig):
    M = load_manifold(cfg.manifold)
    if cfg.params.get("scale", 1.0) != 1.0:
        M = rescale(M, cfg.params["scale"])
    return M


def _sweep_rows(rep) -> list[dict]:
    return [{"p": p, "value": v} for p, v in rep.samples]


def cmd_cap(cfg, M, q):
    res = log_cap_ball(M, cfg.params["r"], cfg.params["p"], q).to_dict()
    return Outcome(res, [res])


def cmd_cap_sweep(cfg, M, q):
    rep = infinity_capacity_sweep(M, cfg.params["r"], cfg.params["p_grid"], q)
    rows = []
    for p in cfg.params["p_grid"]:
        c = log_cap_ball(M, cfg.params["r"], p, q)
        rows.append({"p": p, "log_cap": c.log_cap, "scaled": c.scaled, "err": c.error_log})
    return Outcome(rep.to_dict(), rows)


def cmd_condenser(cfg, M, q):
    c = log_cap_condenser(M, cfg.params["r1"], cfg.params["r2"], cfg.params["p"], q)
    res = {**c.to_dict(), "root": c.root}
    return Outcome(res, [res])


def cmd_eigen(cfg, M, q):
    sc = SolverConfig(nodes=cfg.params["nodes"])
    R = cfg.params["R"]
    res = lambda_1p_ball(M, R, cfg.params["p"], sc) if R else lambda_1p_manifold(
        M, cfg.params["p"], cfg=sc)
    d = res.to_dict()
    return Outcome(d, [{k: d[k] for k in ("p", "lambda", "scaled", "residual")}])


def cmd_mazya(cfg, M, q):
    d = mazya_mp(M, cfg.params["p"], q).to_dict()
    return Outcome(d, [{k: d[k] for k in ("p", "log_mp", "argmin_r", "scaled")}])


def cmd_lambda_sweep(cfg, M, q):
    rep = infinity_eigenvalue_sweep(M, cfg.params["p_grid"], SolverConfig(nodes=cfg.params["nodes"]))
    return Outcome(rep.to_dict(), _sweep_rows(rep))


def cmd_entropy(cfg, M, q):
    rep = volume_entropy(M, q=q)
    rows = [{"R": R, "log_volume_ratio": a, "area_volume_ratio": b}
            for (R, a), (_, b) in zip(rep.ratio_tail, rep.sv_ratio_tail)]
    return Outcome(rep.to_dict(), rows)


def _chain_rows(label, v) -> dict:
    return {"model": label, "entropy": v.entropy, "C": v.capacity, "Lambda": v.eigenvalue,
            "Mazya": v.mazya, "pass": v.ok}


def cmd_verify_chain(cfg, M, q):
    cc = ChainConfig(radius=cfg.params["r"], eigen_grid=cfg.params["eigen_grid"],
                     solver=SolverConfig(nodes=cfg.params["nodes"]), quad=q)
    v = verify_chain(M, cfg.params["p_grid"], cc)
    return Outcome(v.to_dict(), [_chain_rows(cfg.manifold, v)], v.ok)


def example31_document(p: float = 3.0, terms: int = 4) -> dict:
    bound = example31_capacity(p, terms)
    shorter = [example31_capacity(p, k) for k in range(2, terms + 1)]
    ent = example31_entropy(terms)
    # log bound below -40  <=>  ln(-ln bound) > ln 40
    below_40 = bound.log_neg_log_bound > math.log(40.0)
    decreasing = all(b.log_neg_log_bound >= a.log_neg_log_bound
                     for a, b in zip(shorter, shorter[1:]))
    reach = next((e.k for e in ent if e.lower > 0.9999), None)
    assertions = {
        "capacity_bound_below_e^-40": below_40,
        "capacity_bound_decreasing_in_terms": decreasing,
        "entropy_ratio_above_0.9999_by_k3": reach is not None and reach <= 3,
        "entropy_lower_below_upper": all(e.lower <= e.upper for e in ent),
    }
    return {
        "capacity_bound": bound.to_dict(),
        "entropy_bounds": [e.to_dict() for e in ent],
        "assertions": assertions,
        "conclusion": {"C": 0.0, "V": 1.0, "strict_gap": True},
    }


def cmd_example31(cfg, M, q):
    doc = example31_document(cfg.params["p"], cfg.params["terms"])
    rows = [{"k": e["k"], "R": e["R"], "lower": e["lower"], "upper": e["upper"]}
            for e in doc["entropy_bounds"]]
    return Outcome(doc, rows, all(doc["assertions"].values()))


def example32_document(k_list=(2, 3, 4), q: QuadratureSpec | None = None) -> dict:
    an = example32_bound_chain(q, strict=False)
    rep = example32_capacity_oscillation(k_list, q)
    spread = rep.limsup_estimate - rep.liminf_estimate
    M = make_model("example32", 2)
    cross = []
    for k in (1, 2):
        for shift in (0.0, math.pi):
            p = 1.0 + math.exp(2 * k * math.pi - shift)
            direct = log_cap_ball(M, 1.0, p, q)
            via_cap = (p - 1.0) * math.exp(direct.log_cap / (p - 1.0))
            via_j = 1.0 / example32_tail_integral(1.0 / (p - 1.0), q)
            cross.append({"p": p, "from_capacity": via_cap, "from_tail_integral": via_j})
    cross_ok = all(abs(c["from_capacity"] / c["from_tail_integral"] - 1) < 1e-8 for c in cross)
    assertions = dict(an.checks)
    assertions.update({
        "gap_below_-1e-3": an.gap < -1e-3,
        "subsequence_separation": spread >= an.separation - 1e-3,
        "limsup_exceeds_liminf": rep.limsup_estimate > rep.liminf_estimate,
        "sweep_oscillating": rep.oscillating,
        "capacity_routes_agree": cross_ok,
    })
    doc = an.to_dict()
    doc.update({
        "sweep": rep.to_dict(),
        "capacity_cross_check": cross,
        "assertions": dict(sorted(assertions.items())),
        "consequence": {
            "capacity_lower": 1.0 / an.I2, "eigenvalue_upper": 1.0 / an.I1,
            "statement": "capacity of the unit ball exceeds the infinity eigenvalue",
        },
    })
    return doc


def cmd_example32(cfg, M, q):
    doc = example32_document(cfg.params["k_list"], q)
    return Outcome(doc, [{"p": p, "value": v} for p, v in doc["sweep"]["samples"]],
                   all(doc["assertions"].values()))


def cmd_reproduce(cfg, M, q):
    models = []
    ok = True
    for name in ("hyperbolic:2", "euclidean:2", "example31:2"):
        v = verify_chain(load_manifold(name), DEFAULT_CAP_GRID, ChainConfig(quad=q))
        models.append(_chain_rows(name, v))
        ok &= v.ok
    e31 = example31_document()
    e32 = example32_document(q=q)
    assertions = {"example31": all(e31["assertions"].values()),
                  "example32": all(e32["assertions"].values()),
                  "chains": ok}
    models[-1]["notes"] = "entropy 1 exceeds capacity 0"
    doc = {"models": models,
           "examples": {"example31": e31["assertions"], "example32": e32["assertions"]},
           "assertions": assertions}
    return Outcome(doc, models, all(assertions.values()))


COMMANDS: dict[str, Callable] = {
    "cap": cmd_cap, "cap-sweep": cmd_cap_sweep, "condenser": cmd_condenser,
    "eigen": cmd_eigen, "mazya": cmd_mazya, "lambda-sweep": cmd_lambda_sweep,
    "entropy": cmd_entropy, "verify-chain": cmd_verify_chain, "example31": cmd_example31,
    "example32": cmd_example32, "reproduce": cmd_reproduce,
}


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute a parsed configuration and write its output."""
    stdout = stdout or sys.stdout
    try:
        q = _quad(cfg.params)
        M = _manifold(cfg) if cfg.manifold is not None else None
        out = COMMANDS[cfg.command](cfg, M, q)
    except (ToleranceNotMet, InvariantViolation) as exc:
        print(f"asygeo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except AsygeoError as exc:
        print(f"asygeo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = "ok" if out.ok else "tolerance-failure"
    if cfg.fmt == "csv":
        text = render_csv(out.rows)
    else:
        text = render_json({"command": cfg.command, "manifold": cfg.manifold,
                            "status": status, "result": out.result})
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK if out.ok else EXIT_TOLERANCE


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    return run(cfg)
