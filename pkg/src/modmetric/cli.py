"""Command-line front end: axiom audits, example tables, sequence profiles, ODE solves.

Exit status: 0 when every checked property holds, 1 when one fails, 2 on a
usage or configuration error.  Output is deterministic for a given command
line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gv_modular import (ACFunction, closed_w_alpha, closed_w_beta_bound, example_x_alpha,
                         example_x_beta, gv_modular)
from .modular_core import (ModularError, canonical_modular, check_axioms, euclidean,
                           metric_dw_star)
from .ode import PROBLEMS, SegmentFailure, make_problem, solve_ivp
from .phi_functions import get_phi
from .sequences import delta2_probe, lambda_profile, metric_vs_modular_convergence

SCHEMA = 1
MODULARS = ("velocity", "constant", "threshold", "gvphi-exp")
MODES = ("pseudomodular", "modular", "strict", "convex")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _cell(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if v is None:
        return ""
    return str(v)


@dataclass
class RunConfig:
    command: str
    out: str | None
    fmt: str
    modular: str = "velocity"
    phi: str = "exp"
    mode: str = "modular"
    points: int = 8
    seed: int = 0
    alphas: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    lambdas: list[float] = field(default_factory=list)
    grid: int = 4096
    tol: float = 1e-9
    problem: str = "decay"
    T: float | None = None
    safety: float = 0.5
    sequence: str = "xalpha"
    terms: int = 7

    def validate(self) -> None:
        if self.tol <= 0:
            raise UsageError("--tol must be positive")
        if self.grid < 16 or self.grid & (self.grid - 1):
            raise UsageError("--grid must be a power of two >= 16")
        if self.points < 1 or self.terms < 3:
            raise UsageError("--points must be >= 1 and --terms >= 3")
        if not 0 < self.safety < 1:
            raise UsageError("--safety must lie in (0, 1)")
        if any(v <= 0 for v in self.alphas + self.lambdas):
            raise UsageError("alpha and lambda values must be positive")
        if any(not 0 < v <= 1 for v in self.betas):
            raise UsageError("beta values must lie in (0, 1]")
        if self.T is not None and self.T <= 0:
            raise UsageError("--T must be positive")


def _write(config: RunConfig, text: str) -> None:
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _json(payload: dict) -> str:
    return json.dumps({"schema": SCHEMA, **payload}, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- axioms

def _axiom_sample(config: RunConfig):
    rng = np.random.default_rng(config.seed)
    lambdas = [0.25, 0.5, 1.0, 2.0, 4.0]
    if config.modular == "gvphi-exp":
        m = gv_modular(get_phi(config.phi), extrapolate=False)
        s = np.linspace(0.0, 1.0, 65)
        pts = [ACFunction.from_values(0.0, 1.0, rng.uniform(-1, 1) * s + rng.uniform(-0.3, 0.3)
                                      * np.sin(3 * math.pi * s))
               for _ in range(config.points)]
        return m, pts, lambdas
    m = canonical_modular(euclidean, config.modular)
    pts = [tuple(float(v) for v in rng.uniform(-2.0, 2.0, 2)) for _ in range(config.points)]
    return m, pts, lambdas


def cmd_axioms(config: RunConfig) -> int:
    m, pts, lambdas = _axiom_sample(config)
    report = check_axioms(m, pts, lambdas, mode=config.mode)
    if config.fmt == "json":
        _write(config, _json({"command": "axioms", "modular": config.modular,
                              "points": config.points, "seed": config.seed,
                              "lambdas": lambdas, "report": report.to_dict()}))
    else:
        rows = [(axiom, verdict) for axiom, verdict in report.verdicts.items()]
        _write(config, _csv(["axiom", "verdict"], rows))
    return 0 if report.passed else 1


# ---------------------------------------------------------------- examples

ALPHA_TOL = 2e-2
DW_STAR_TOL = 1e-3
BOUND_SLACK = 2e-2


def _alpha_rows(config: RunConfig, m) -> tuple[list[dict], bool]:
    rows, ok = [], True
    zero = ACFunction.constant(0.0, 1.0, 0.0, config.grid)
    for alpha in config.alphas:
        x = example_x_alpha(alpha, config.grid)
        dws = metric_dw_star(m, x, zero, tol=1e-7, lambda_cap=1e6)
        ok &= abs(dws - 2 * alpha) <= DW_STAR_TOL
        for lam in config.lambdas:
            w = m(lam, x, zero)
            ref = closed_w_alpha(alpha, lam)
            if math.isinf(ref) or math.isinf(w):
                err = 0.0 if math.isinf(ref) and math.isinf(w) else math.inf
                rel = err
            else:
                err = abs(w - ref)
                rel = err / ref
            good = rel <= ALPHA_TOL
            ok &= good
            rows.append({"family": "alpha", "param": alpha, "lambda": lam, "numeric": w,
                         "reference": ref, "reference_kind": "closed", "abs_err": err,
                         "rel_err": rel, "dw_star": dws, "dw_star_reference": 2 * alpha,
                         "ok": good})
    return rows, ok


def _beta_rows(config: RunConfig, m) -> tuple[list[dict], bool]:
    rows, ok = [], True
    x_zero = example_x_beta(0.0, config.grid)
    for beta in config.betas:
        x = example_x_beta(beta, config.grid)
        dws = metric_dw_star(m, x, x_zero, tol=1e-7, lambda_cap=1e6)
        ok &= dws >= 1.0 - DW_STAR_TOL
        for lam in config.lambdas:
            w = m(lam, x, x_zero)
            if lam <= 1.0:
                ref, kind = math.inf, "closed"
                good = math.isinf(w)
            else:
                ii1, ii2 = closed_w_beta_bound(beta, lam)
                ref, kind = -1.0 + ii1 + ii2, "bound"
                good = not math.isinf(w) and w <= ref * (1 + BOUND_SLACK)
            ok &= good
            rows.append({"family": "beta", "param": beta, "lambda": lam, "numeric": w,
                         "reference": ref, "reference_kind": kind, "abs_err": None,
                         "rel_err": None, "dw_star": dws, "dw_star_reference": 1.0, "ok": good})
    return rows, ok


def _convergence_study(config: RunConfig, m) -> tuple[dict, bool]:
    lambdas = (0.5, 1.0, 2.0)
    zero = ACFunction.constant(0.0, 1.0, 0.0, config.grid)
    alpha_seq = [example_x_alpha(2.0 ** -j, config.grid) for j in range(7)]
    beta_seq = [example_x_beta(2.0 ** -j, config.grid) for j in range(1, 7)]
    x_zero = example_x_beta(0.0, config.grid)
    a = metric_vs_modular_convergence(m, alpha_seq, zero, lambdas, tol=1e-7)
    b = metric_vs_modular_convergence(m, beta_seq, x_zero, lambdas, tol=1e-7)
    d2 = delta2_probe(m, beta_seq, x_zero, 2.0, eps=0.1, tail=3)
    out = {
        "lambdas": list(lambdas), "eps": 0.1, "tail": 3,
        "alpha_sequence": {"metric": a.metric_converges, "modular": a.modular_converges,
                           "all_lambda": a.all_lambda_converges},
        "beta_sequence": {"metric": b.metric_converges, "modular": b.modular_converges,
                          "all_lambda": b.all_lambda_converges},
        "delta2_probe": {"lambda0": 2.0, "premise": d2.premise_holds,
                         "conclusion": d2.conclusion_holds, "violated": d2.violated},
    }
    ok = a.consistent and b.consistent
    return out, ok


EXAMPLE_COLUMNS = ("family", "param", "lambda", "numeric", "reference", "reference_kind",
                   "abs_err", "rel_err", "dw_star", "dw_star_reference", "ok")


def cmd_examples(config: RunConfig) -> int:
    m = gv_modular(get_phi(config.phi), extrapolate=True)
    if get_phi(config.phi).family != "exp_minus_one":
        raise UsageError("the closed forms of the examples are for --phi exp only")
    alpha_rows, ok_a = _alpha_rows(config, m)
    beta_rows, ok_b = _beta_rows(config, m)
    rows = alpha_rows + beta_rows
    if config.fmt == "json":
        study, ok_c = _convergence_study(config, m)
        _write(config, _json({"command": "examples", "grid": config.grid,
                              "rows": [{k: _num(v) for k, v in r.items()} for r in rows],
                              "convergence": study}))
    else:
        ok_c = True
        _write(config, _csv(EXAMPLE_COLUMNS, [[r[c] for c in EXAMPLE_COLUMNS] for r in rows]))
    return 0 if ok_a and ok_b and ok_c else 1


# ---------------------------------------------------------------- profile

def _profile_sequence(config: RunConfig):
    n = config.terms
    if config.sequence == "harmonic":
        m = canonical_modular(euclidean, "velocity")
        return m, [(1.0 / k,) for k in range(1, n + 1)], (0.0,), list(range(1, n + 1))
    m = gv_modular(get_phi(config.phi), extrapolate=True)
    if config.sequence == "xalpha":
        seq = [example_x_alpha(2.0 ** -j, config.grid) for j in range(n)]
        return m, seq, ACFunction.constant(0.0, 1.0, 0.0, config.grid), [2.0 ** -j for j in range(n)]
    if config.sequence == "xbeta":
        seq = [example_x_beta(2.0 ** -j, config.grid) for j in range(1, n + 1)]
        return m, seq, example_x_beta(0.0, config.grid), [2.0 ** -j for j in range(1, n + 1)]
    raise UsageError(f"unknown sequence {config.sequence!r}")


def cmd_profile(config: RunConfig) -> int:
    m, seq, limit, index = _profile_sequence(config)
    prof = lambda_profile(m, seq, limit, sorted(config.lambdas))
    rep = metric_vs_modular_convergence(m, seq, limit, prof.lambdas, tol=1e-7)
    if config.fmt == "json":
        _write(config, _json({
            "command": "profile", "sequence": config.sequence, "lambdas": list(prof.lambdas),
            "index": index,
            "rows": [[_num(float(v)) for v in row] for row in prof.rows],
            "verdicts": {"metric": rep.metric_converges, "modular": rep.modular_converges,
                         "all_lambda": rep.all_lambda_converges, "eps": 0.1, "tail": 3},
        }))
    else:
        _write(config, prof.to_csv(index))
    return 0 if rep.consistent and prof.monotone_rows() else 1


# ---------------------------------------------------------------- ode

def cmd_ode(config: RunConfig) -> int:
    problem = make_problem(config.problem, config.T, get_phi(config.phi))
    try:
        sol = solve_ivp(problem, eps=config.tol, N=config.grid, safety=config.safety)
    except SegmentFailure as exc:
        print(f"ode: {exc}", file=sys.stderr)
        return 1
    residual = sol.residual()
    error = sol.max_error() if problem.exact is not None else None
    summary = {"problem": problem.name, "a": problem.a, "b": problem.b, "grid": config.grid,
               "safety": config.safety, "tol": config.tol, "segments": len(sol.segments),
               "iterations": sol.iterations(), "residual": residual, "max_error": error}
    if config.fmt == "json":
        _write(config, _json({"command": "ode", "summary": summary, **sol.traces_dict(),
                              "solution": {"t": sol.nodes().tolist(), "x": sol.values().tolist()}}))
    else:
        _write(config, sol.to_csv())
    print("ode: " + " ".join(f"{k}={_cell(v)}" for k, v in summary.items()), file=sys.stderr)
    ok = residual <= config.tol * (problem.b - problem.a) * (1 + 1e-6) + 1e-15
    return 0 if ok else 1


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modmetric", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("--phi", default="exp", help="phi-function (exp, linear, power2, power:<p>)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("axioms", parents=[common], help="audit the modular axioms on random points")
    p.add_argument("--modular", choices=MODULARS, default="velocity")
    p.add_argument("--mode", choices=MODES, default="modular")
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("examples", parents=[common], help="tables for the t(1 - log t) examples")
    p.add_argument("--alpha", dest="alphas", type=_floats, default=[0.25, 0.5, 1.0])
    p.add_argument("--beta", dest="betas", type=_floats, default=[0.5, 0.25, 0.1, 0.015625])
    p.add_argument("--lambda", dest="lambdas", type=_floats, default=[0.5, 1.0, 1.5, 2.0, 4.0])
    p.add_argument("--grid", type=int, default=4096)

    p = sub.add_parser("profile", parents=[common], help="lambda profile of a sequence")
    p.add_argument("--sequence", choices=("xalpha", "xbeta", "harmonic"), default="xalpha")
    p.add_argument("--terms", type=int, default=7)
    p.add_argument("--lambda", dest="lambdas", type=_floats, default=[0.5, 1.0, 2.0])
    p.add_argument("--grid", type=int, default=4096)

    p = sub.add_parser("ode", parents=[common], help="solve a registry initial-value problem")
    p.add_argument("--problem", choices=PROBLEMS, default="decay")
    p.add_argument("--T", type=float, default=None, help="right end of the interval")
    p.add_argument("--safety", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=2048, help="cells per segment")
    p.add_argument("--tol", type=float, default=1e-10)
    return parser


COMMANDS = {"axioms": cmd_axioms, "examples": cmd_examples, "profile": cmd_profile, "ode": cmd_ode}


def main(argv: Sequence[str] | None = None) -> int:
    args = vars(build_parser().parse_args(argv))
    config = RunConfig(**args)
    try:
        config.validate()
        get_phi(config.phi)
        return COMMANDS[config.command](config)
    except (UsageError, ValueError) as exc:
        print(f"modmetric: error: {exc}", file=sys.stderr)
        return 2
    except ModularError as exc:
        print(f"modmetric: {exc}", file=sys.stderr)
        return 1
