"""Command-line front end: scenario files, solves, sweeps, audits and demos.

Scenario files are INI text::

    [scenario]
    family = jump
    T = 3
    eps = 1e-3
    integrator = dyson
    mesh = uniform
    psi0 = uniform

    [family]
    qubits = 1

Exit codes: 0 success, 2 parse or precondition failure, 3 a measured error
above its target or bound, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import solver
from .block_encoding import build_mat_encoding, dilate
from .errors import (
    ConfigError,
    ConvergenceError,
    InfeasibleError,
    InputError,
    PreconditionError,
    TimeMarchError,
)
from .families import REGISTRY, make_family
from .integrators import (
    ContourConfig,
    DysonConfig,
    MagnusConfig,
    contour_exp,
    dyson_short,
    magnus1_short,
    choose_contour_points,
)
from .linalg import matrix_exp, spectral_norm, time_ordered_exp
from .minimax import degree_sweep

SCHEMA = 1
EXIT_OK, EXIT_PRECONDITION, EXIT_BOUND, EXIT_NUMERICAL = 0, 2, 3, 4

INTEGRATORS = ("dyson", "magnus1")
MESHES = ("uniform", "l1")


# -- scenarios --------------------------------------------------------------------

@dataclass
class Scenario:
    family: str
    T: float
    eps: float = 1e-3
    integrator: str = "dyson"
    mesh: str = "uniform"
    psi0: str = "e0"
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def build(self):
        return make_family(self.family, self.T, **self.params)

    def initial_state(self, dim: int) -> np.ndarray:
        return parse_state(self.psi0, dim)


def parse_state(text: str, dim: int) -> np.ndarray:
    """``uniform``, ``e<k>`` or a comma-separated list of (complex) amplitudes, normalized."""
    text = text.strip()
    if text == "uniform":
        v = np.ones(dim, dtype=complex)
    elif re.fullmatch(r"e\d+", text):
        k = int(text[1:])
        if k >= dim:
            raise InputError(f"basis index {k} out of range for dimension {dim}")
        v = np.zeros(dim, dtype=complex)
        v[k] = 1
    else:
        try:
            v = np.array([complex(s.strip().replace(" ", "")) for s in text.split(",")])
        except ValueError as exc:
            raise InputError(f"cannot read state {text!r}") from exc
        if len(v) != dim:
            raise InputError(f"state has {len(v)} entries, expected {dim}")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InputError("initial state is zero")
    return v / norm


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key = value`` line, by section."""
    lines, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
        elif section and s and s[0] not in "#;":
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            lines.setdefault((section, key), no)
    return lines


def _section_line(text: str, name: str) -> int | None:
    for no, raw in enumerate(text.splitlines(), 1):
        if raw.strip() == f"[{name}]":
            return no
    return None


def _literal(value: str):
    try:
        return ast.literal_eval(value)
    except (ValueError, SyntaxError):
        return value


def _read_ini(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header first", exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line) from exc
    return cp


_SCENARIO_KEYS = {"family", "t", "eps", "integrator", "mesh", "psi0"}


def parse_config(text: str) -> Scenario:
    """Parse and validate a scenario; errors carry the offending line number."""
    cp = _read_ini(text)
    lines = _key_lines(text)
    if not cp.has_section("scenario"):
        raise ConfigError("missing [scenario] section")
    sec = cp["scenario"]

    def line(key, section="scenario"):
        return lines.get((section, key), _section_line(text, section))

    for key in sec:
        if key not in _SCENARIO_KEYS:
            raise ConfigError(f"unknown key {key!r}", line(key))
    for key in ("family", "t"):
        if key not in sec:
            raise ConfigError(f"missing required key {key!r}", _section_line(text, "scenario"))

    family = sec["family"].strip()
    if family not in REGISTRY:
        raise ConfigError(f"unknown family {family!r}", line("family"))

    def number(key, default=None):
        if key not in sec:
            return default
        try:
            value = float(sec[key])
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {sec[key]!r}", line(key)) from None
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be finite", line(key))
        return value

    T = number("t")
    if T <= 0:
        raise ConfigError("T must be positive", line("t"))
    eps = number("eps", 1e-3)
    if not 0 < eps < 0.5:
        raise ConfigError("eps must lie in (0, 0.5)", line("eps"))
    integrator = sec.get("integrator", "dyson").strip()
    if integrator not in INTEGRATORS:
        raise ConfigError(f"integrator must be one of {INTEGRATORS}", line("integrator"))
    mesh = sec.get("mesh", "uniform").strip()
    if mesh not in MESHES:
        raise ConfigError(f"mesh must be one of {MESHES}", line("mesh"))

    params = {}
    if cp.has_section("family"):
        allowed = REGISTRY[family].params
        for key, raw in cp["family"].items():
            if key not in allowed:
                raise ConfigError(f"family {family!r} has no parameter {key!r}", line(key, "family"))
            params[key] = _literal(raw)
    outputs = dict(cp["output"]) if cp.has_section("output") else {}
    return Scenario(family, T, eps, integrator, mesh, sec.get("psi0", "e0").strip(), params, outputs)


def serialize(scn: Scenario) -> str:
    """INI text that :func:`parse_config` reads back to an equal scenario."""
    out = io.StringIO()
    out.write("[scenario]\n")
    out.write(f"family = {scn.family}\n")
    out.write(f"T = {scn.T!r}\n")
    out.write(f"eps = {scn.eps!r}\n")
    out.write(f"integrator = {scn.integrator}\n")
    out.write(f"mesh = {scn.mesh}\n")
    out.write(f"psi0 = {scn.psi0}\n")
    if scn.params:
        out.write("\n[family]\n")
        for k in sorted(scn.params):
            out.write(f"{k} = {scn.params[k]!r}\n")
    if scn.outputs:
        out.write("\n[output]\n")
        for k in sorted(scn.outputs):
            out.write(f"{k} = {scn.outputs[k]}\n")
    return out.getvalue()


# -- serialization ----------------------------------------------------------------

def _plain(x):
    """JSON-ready copy: numpy scalars to Python, complex to ``[re, im]``."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if hasattr(x, "__dict__") and not isinstance(x, type):
        return _plain(vars(x))
    return x


def to_json(payload: dict) -> str:
    # Python's float repr is the shortest string that round-trips
    return json.dumps(_plain({"schema": SCHEMA, **payload}), sort_keys=True, indent=1) + "\n"


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(out_dir: Path | None, name: str, text: str, stream=None):
    if out_dir is None:
        (stream or sys.stdout).write(text)
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


# -- commands -----------------------------------------------------------------------

def _solve_payload(scn: Scenario, report: solver.SolveReport) -> dict:
    return {
        "scenario": {"family": scn.family, "params": scn.params, "T": scn.T, "eps": scn.eps,
                     "integrator": scn.integrator, "mesh": scn.mesh, "psi0": scn.psi0},
        "report": report.summary(),
        "final_state": report.final_state,
        "normalized_state": report.normalized_state,
        "within_eps": report.error <= scn.eps,
    }


def run_solve(scn: Scenario, out_dir: Path | None = None) -> int:
    """Solve a scenario; writes ``report.json`` and ``segments.csv``. Exit 0 iff error <= eps."""
    A = scn.build()
    psi0 = scn.initial_state(A.dim)
    report = solver.solve(A, psi0, scn.T, scn.eps, scn.integrator, scn.mesh)
    rows = [(i, r.a, r.b, r.norm, r.error, r.degree, r.queries) for i, r in enumerate(report.segments)]
    seg_csv = to_csv(["segment", "a", "b", "norm", "error", "degree", "queries"], rows)
    _emit(out_dir, scn.outputs.get("json", "report.json"), to_json(_solve_payload(scn, report)))
    if out_dir is not None:
        _emit(out_dir, scn.outputs.get("csv", "segments.csv"), seg_csv)
    return EXIT_OK if report.error <= scn.eps else EXIT_BOUND


@dataclass
class PolySweepParams:
    gamma: float = 5.0
    delta: float = 0.05
    degrees: tuple[int, ...] = tuple(range(5, 42, 4))
    eps: float = 1e-3


def poly_sweep_table(params: PolySweepParams) -> tuple[list[str], list[tuple]]:
    rows = degree_sweep(params.gamma, params.delta, params.degrees, params.eps)
    return ["degree", "lp_error", "erf_error"], [(r.degree, r.lp_error, r.erf_error) for r in rows]


def run_poly_sweep(params: PolySweepParams, out_dir: Path | None = None, fmt: str = "csv") -> int:
    header, rows = poly_sweep_table(params)
    if fmt == "json":
        _emit(out_dir, "poly_sweep.json", to_json({"rows": [dict(zip(header, r)) for r in rows]}))
    else:
        _emit(out_dir, "poly_sweep.csv", to_csv(header, rows))
    return EXIT_OK


AUDIT_HEADER = ["kind", "a", "b", "order", "n_q", "measured", "bound",
                "truncation", "commutator", "variation"]


def bound_audit_rows(scn: Scenario, levels: int = 3, orders: Sequence[int] = (1, 2, 3, 4, 6)) -> list[tuple]:
    """Measured errors and a-priori bounds for short-time integrators on ``scn``'s family.

    Steps start at the largest admissible ``1/(2 alpha)`` (or ``T``) and are
    halved ``levels - 1`` times. Rows cover truncated Dyson at each order,
    first-order Magnus, and the contour exponential of the segment's
    Riemann-sum integral.
    """
    A = scn.build()
    h0 = min(scn.T, 0.5 / A.alpha) if A.alpha > 0 else min(scn.T, 1.0)
    rows = []
    for lvl in range(levels):
        h = h0 / (1 << lvl)
        a, b = 0.0, h
        Xi = time_ordered_exp(A, a, b, 1e-13, "magnus4")
        for K in orders:
            n_q = 6
            me = build_mat_encoding(A, a, b, n_q, solver.segment_alpha(A, a, b))
            be, cost = dyson_short(me, DysonConfig(K, n_q))
            bound = cost.notes["bound"]
            measured = spectral_norm(be.encoded - Xi)
            rows.append(("dyson", a, b, K, n_q, measured, bound.total,
                         bound.truncation, 0.0, bound.quadrature))
        n_q = 4
        me = build_mat_encoding(A, a, b, n_q, solver.segment_alpha(A, a, b))
        be, cost = magnus1_short(me, MagnusConfig(n_q), ContourConfig(1e-8))
        mb = cost.notes["magnus_bound"]
        rows.append(("magnus1", a, b, 1, n_q, spectral_norm(be.encoded - Xi), be.eps,
                     0.0, mb.commutator, mb.variation))
        M = h * A(0.5 * (a + b))
        alpha = max(spectral_norm(M), 1e-3)
        for K in (choose_contour_points(alpha, 1e-4), choose_contour_points(alpha, 1e-8)):
            out, c = contour_exp(dilate(M, alpha, target=M), ContourConfig(1e-4, K=K))
            rows.append(("contour", a, b, K, 0, spectral_norm(out.encoded - matrix_exp(M)),
                         out.eps, c.notes.get("trapezoid_bound", 0.0), 0.0, 0.0))
    return rows


def run_bound_audit(scn: Scenario, out_dir: Path | None = None, fmt: str = "csv") -> int:
    rows = bound_audit_rows(scn)
    if fmt == "json":
        _emit(out_dir, "bound_audit.json", to_json({"rows": [dict(zip(AUDIT_HEADER, r)) for r in rows]}))
    else:
        _emit(out_dir, "bound_audit.csv", to_csv(AUDIT_HEADER, rows))
    return EXIT_BOUND if any(r[5] > r[6] for r in rows) else EXIT_OK


DEMOS = ("euler", "search", "jordan")


def demo_table(name: str, options: dict | None = None) -> tuple[list[str], list[tuple], dict]:
    options = options or {}
    if name == "euler":
        from .families import X

        norm = float(options.get("norm", 1.0))
        d = solver.euler_decay_demo(-1j * norm * X, float(options.get("T", 5.0)), int(options.get("L", 50)))
        rows = [(l, t, p, 1 / p, i) for l, t, p, i in d.rows]
        summary = {"naive_trials": d.naive_trials, "iterate_trials": d.iterate_trials,
                   "reference_trials": d.reference_trials, "intrinsic_success": d.intrinsic_success,
                   "Q": d.Q, "aa_rounds": d.aa_rounds}
        return ["step", "time", "naive_success", "naive_trials", "intrinsic_success"], rows, summary
    if name == "search":
        rows, summary = [], {}
        for q in range(1, int(options.get("max_qubits", 4)) + 1):
            s = solver.search_demo(q, run_solver=bool(options.get("solve", True)))
            rounds = s.report.aa_rounds if s.report else None
            rows.append((s.N, s.T, s.probability, s.solver_probability, s.Q, rounds))
        return ["N", "T", "probability", "solver_probability", "Q", "aa_rounds"], rows, summary
    if name == "jordan":
        j = solver.jordan_demo()
        rows = list(zip(j.times, j.propagator_norms, j.Q))
        summary = {"norm_fit_r2": j.norm_fit_r2, "logq_fit_r2": j.logq_fit_r2, "logq_slope": j.logq_slope}
        return ["T", "propagator_norm", "Q"], rows, summary
    raise InputError(f"unknown demo {name!r}; choose from {DEMOS}")


def run_demo(name: str, out_dir: Path | None = None, fmt: str = "csv", options: dict | None = None) -> int:
    header, rows, summary = demo_table(name, options)
    if fmt == "json":
        _emit(out_dir, f"demo_{name}.json",
              to_json({"demo": name, "rows": [dict(zip(header, r)) for r in rows], "summary": summary}))
    else:
        _emit(out_dir, f"demo_{name}.csv", to_csv(header, rows))
        if out_dir is not None:
            _emit(out_dir, f"demo_{name}_summary.json", to_json({"demo": name, "summary": summary}))
    return EXIT_OK


# -- entry point -------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timemarch", description="Matrix-level time-marching simulator.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario file (INI)")
    common.add_argument("--out", type=Path, help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled modes")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="run a scenario")
    ps = sub.add_parser("poly-sweep", parents=[common], help="degree vs error for amplification polynomials")
    ps.add_argument("--gamma", type=float)
    ps.add_argument("--delta", type=float)
    ps.add_argument("--degrees", help="comma-separated odd degrees")
    sub.add_parser("bound-audit", parents=[common], help="measured errors against a-priori bounds")
    pd = sub.add_parser("demo", parents=[common], help="built-in demonstrations")
    pd.add_argument("name", choices=DEMOS)
    return p


def _load(path: Path | None) -> str:
    if path is None:
        raise ConfigError("this command needs --config")
    try:
        return path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc


def _poly_params(args, text: str | None) -> PolySweepParams:
    params = PolySweepParams()
    if text:
        cp = _read_ini(text)
        if cp.has_section("poly"):
            sec = cp["poly"]
            lines = _key_lines(text)
            try:
                if "gamma" in sec:
                    params.gamma = float(sec["gamma"])
                if "delta" in sec:
                    params.delta = float(sec["delta"])
                if "eps" in sec:
                    params.eps = float(sec["eps"])
                if "degrees" in sec:
                    params.degrees = tuple(int(d) for d in sec["degrees"].split(","))
            except ValueError as exc:
                bad = next((k for k in sec if k in ("gamma", "delta", "eps", "degrees")), None)
                raise ConfigError(str(exc), lines.get(("poly", bad))) from None
    if args.gamma is not None:
        params.gamma = args.gamma
    if args.delta is not None:
        params.delta = args.delta
    if args.degrees:
        params.degrees = tuple(int(d) for d in args.degrees.split(","))
    return params


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    np.random.seed(args.seed)
    try:
        if args.command == "solve":
            return run_solve(parse_config(_load(args.config)), args.out)
        if args.command == "poly-sweep":
            text = _load(args.config) if args.config else None
            return run_poly_sweep(_poly_params(args, text), args.out, args.format)
        if args.command == "bound-audit":
            return run_bound_audit(parse_config(_load(args.config)), args.out, args.format)
        options = {}
        if args.config:
            cp = _read_ini(_load(args.config))
            if cp.has_section("demo"):
                options = {k: _literal(v) for k, v in cp["demo"].items()}
        return run_demo(args.name, args.out, args.format, options)
    except (InputError, PreconditionError) as exc:
        return _fail(args, EXIT_PRECONDITION, exc)
    except (ConvergenceError, InfeasibleError, np.linalg.LinAlgError, ArithmeticError) as exc:
        return _fail(args, EXIT_NUMERICAL, exc)
    except TimeMarchError as exc:
        return _fail(args, EXIT_NUMERICAL, exc)


def _fail(args, code: int, exc: Exception) -> int:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    if getattr(exc, "line", None) is not None:
        payload["error"]["line"] = exc.line
    text = to_json(payload)
    if args.out is not None:
        _emit(args.out, "error.json", text)
    sys.stderr.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
