"""Command-line front end: solve, flow, and reproduce subcommands.

Exit codes follow sysexits conventions where applicable:

* 0  success (solve: converged; flow/reproduce: completed)
* 2  iteration cap reached before convergence
* 3  numerical failure (rank-deficient constraints, line-search failure,
     non-finite values)
* 64 usage errors (bad flags, malformed vectors, bad problem files)
* 74 file I/O errors

Output files are deterministic: identical invocations produce
byte-identical CSV and manifest files (fixed 17-significant-digit
formatting, no timestamps).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .core import Problem, SolverConfig
from .descent import SolveReport, Termination
from .errors import SolverError, SpecError, UnknownProblem
from .escape import solve_with_escape
from .flows import FlowKind, FlowSpec, FlowTrace, integrate
from .problems import builtin, builtin_names, from_spec, load_spec

#: Environment variable naming the default output directory.
OUT_DIR_ENV = "MDESCENT_OUT_DIR"

#: Benchmark starting points used by the reproduce subcommand. These are
#: artifact-chosen to span basins of the two surfaces, four per problem.
REPRODUCE_X0 = {
    "sphere": (
        (0.0, 0.0, 2.0),
        (-1.5, 1.0, 0.5),
        (0.5773502691896258, 0.5773502691896258, 0.5773502691896258),
        (0.2, -1.3, 0.4),
    ),
    "paraboloid": (
        (1.0, 1.0, 2.0),
        (-1.0, 1.0, 2.0),
        (0.5, -0.5, 0.5),
        (2.0, 0.0, 4.0),
    ),
}

_EXIT_OK = 0
_EXIT_MAX_ITERS = 2
_EXIT_NUMERICAL = 3
_EXIT_USAGE = 64
_EXIT_IO = 74


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that exits 64 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self._usage_exit(message))

    def _usage_exit(self, message):
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return _EXIT_USAGE


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _parse_vector(text: str) -> np.ndarray:
    try:
        parts = [p for p in text.replace(" ", "").split(",") if p != ""]
        vec = np.array([float(p) for p in parts])
    except ValueError:
        raise _UsageError(f"cannot parse vector {text!r}; expected e.g. 0,0,2")
    if vec.size == 0:
        raise _UsageError("empty vector")
    return vec


def _load_problem(args) -> Problem:
    if args.spec is not None:
        try:
            return from_spec(load_spec(args.spec))
        except OSError as exc:
            raise _UsageError(f"cannot read problem file: {exc}")
        except SpecError as exc:
            raise _UsageError(f"bad problem file {args.spec}: {exc}")
    try:
        return builtin(args.problem)
    except UnknownProblem as exc:
        raise _UsageError(str(exc))


def _out_dir(explicit):
    if explicit is not None:
        return explicit
    return os.environ.get(OUT_DIR_ENV, ".")


def _write_trajectory(path, report: SolveReport, n: int):
    cols = ["k"] + [f"x{i+1}" for i in range(n)]
    cols += ["f", "V", "grad_ftilde_norm", "feas_norm", "step"]
    lines = [",".join(cols)]
    for rec in report.trajectory:
        row = [str(rec.k)]
        row += [_fmt(v) for v in rec.x]
        row += [
            _fmt(rec.f_val),
            _fmt(rec.V_val),
            _fmt(rec.grad_ftilde_norm),
            _fmt(rec.feas_norm),
            _fmt(rec.step),
        ]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_flow(path, trace: FlowTrace, problem: Problem):
    cols = ["t"] + [f"x{i+1}" for i in range(problem.n)] + ["f", "V", "feas_norm"]
    if trace.z_norms is not None:
        cols.append("z_norm")
    lines = [",".join(cols)]
    for i, t in enumerate(trace.times):
        row = [_fmt(t)]
        row += [_fmt(v) for v in trace.states[i]]
        row += [
            _fmt(problem.f(trace.states[i])),
            _fmt(trace.V_vals[i]),
            _fmt(trace.feas_norms[i]),
        ]
        if trace.z_norms is not None:
            row.append(_fmt(trace.z_norms[i]))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _summary(problem: Problem, report: SolveReport) -> str:
    lines = [
        f"problem: {problem.name}",
        f"termination: {report.termination.value}",
        f"iterations: {report.iterations}",
        f"restarts: {report.restarts}",
        "x_star: " + " ".join(_fmt(v) for v in report.x_star),
        f"f_star: {_fmt(report.f_star)}",
        "lambda_star: " + " ".join(_fmt(v) for v in report.lambda_star),
        f"feasibility: {_fmt(report.feasibility)}",
        f"stationarity: {_fmt(report.stationarity)}",
    ]
    return "\n".join(lines)


def _config_from(args, problem) -> SolverConfig:
    return SolverConfig(
        lipschitz_f=args.lipschitz,
        beta=args.beta,
        s=args.s,
        sigma=args.sigma,
        tol_grad=args.tol_grad,
        tol_feas=args.tol_feas,
        max_iters=args.max_iters,
        max_backtracks=args.max_backtracks,
        escape_eps=args.escape_eps,
        max_restarts=args.max_restarts,
    )


def _add_problem_flags(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--problem", help="built-in problem name "
                   f"({', '.join(builtin_names())})")
    g.add_argument("--spec", help="path to a JSON problem definition")


def _add_solver_flags(p):
    p.add_argument("--lipschitz", type=float, default=2.0,
                   help="Lipschitz bound for the cost gradient "
                   "(default 2.0, exact for the built-in cost)")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1e-4)
    p.add_argument("--tol-grad", type=float, default=1e-8, dest="tol_grad")
    p.add_argument("--tol-feas", type=float, default=1e-8, dest="tol_feas")
    p.add_argument("--max-iters", type=int, default=50_000, dest="max_iters")
    p.add_argument("--max-backtracks", type=int, default=60, dest="max_backtracks")
    p.add_argument("--escape-eps", type=float, default=None, dest="escape_eps")
    p.add_argument("--max-restarts", type=int, default=5, dest="max_restarts")


def _build_parser() -> _Parser:
    parser = _Parser(prog="mdescent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the descent solver")
    _add_problem_flags(p_solve)
    p_solve.add_argument("--x0", required=True, help="starting point, e.g. 0,0,2")
    p_solve.add_argument("--out", default=None, help="trajectory CSV path")
    _add_solver_flags(p_solve)

    p_flow = sub.add_parser("flow", help="integrate a continuous-time flow")
    _add_problem_flags(p_flow)
    p_flow.add_argument("--x0", required=True)
    p_flow.add_argument("--kind", required=True,
                        choices=[k.value for k in FlowKind])
    p_flow.add_argument("--epsilon", type=float, default=None)
    p_flow.add_argument("--t-end", type=float, default=10.0, dest="t_end")
    p_flow.add_argument("--dt", type=float, default=1e-3)
    p_flow.add_argument("--out", default=None, help="flow CSV path")

    p_rep = sub.add_parser("reproduce",
                           help="run the benchmark starting-point sets")
    p_rep.add_argument("--problem", default=None,
                       help="restrict to one built-in problem")
    p_rep.add_argument("--out-dir", default=None, dest="out_dir")
    _add_solver_flags(p_rep)
    return parser


def cmd_solve(args) -> int:
    problem = _load_problem(args)
    x0 = _parse_vector(args.x0)
    if x0.size != problem.n:
        raise _UsageError(
            f"x0 has {x0.size} components, problem {problem.name!r} needs {problem.n}"
        )
    config = _config_from(args, problem)
    try:
        report = solve_with_escape(problem, x0, config)
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL

    out = args.out
    if out is None:
        out = os.path.join(_out_dir(None), f"{problem.name}_traj.csv")
    try:
        _write_trajectory(out, report, problem.n)
    except OSError as exc:
        print(f"cannot write {out}: {exc}", file=sys.stderr)
        return _EXIT_IO
    print(_summary(problem, report))
    if report.termination is Termination.CONVERGED:
        return _EXIT_OK
    if report.termination is Termination.MAX_ITERS:
        return _EXIT_MAX_ITERS
    return _EXIT_NUMERICAL


def cmd_flow(args) -> int:
    problem = _load_problem(args)
    x0 = _parse_vector(args.x0)
    if x0.size != problem.n:
        raise _UsageError(
            f"x0 has {x0.size} components, problem {problem.name!r} needs {problem.n}"
        )
    kind = FlowKind(args.kind)
    try:
        spec = FlowSpec(kind=kind, t_end=args.t_end, dt=args.dt, epsilon=args.epsilon)
    except ValueError as exc:
        raise _UsageError(str(exc))
    if kind is FlowKind.ON_MANIFOLD:
        feas = float(np.linalg.norm(np.asarray(problem.h(x0), dtype=float)))
        if feas > 1e-8:
            print(
                f"warning: x0 violates the constraints (|h| = {feas:.3e}); "
                "the on-manifold flow only preserves the initial level set",
                file=sys.stderr,
            )
    try:
        trace = integrate(problem, x0, spec)
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL

    out = args.out
    if out is None:
        out = os.path.join(_out_dir(None), f"{problem.name}_{kind.value}_flow.csv")
    try:
        _write_flow(out, trace, problem)
    except OSError as exc:
        print(f"cannot write {out}: {exc}", file=sys.stderr)
        return _EXIT_IO
    print(f"flow: {problem.name} kind={kind.value} steps={len(trace.times) - 1}")
    print(f"terminal_V: {_fmt(trace.V_vals[-1])}")
    print(f"terminal_feas: {_fmt(trace.feas_norms[-1])}")
    return _EXIT_OK


def cmd_reproduce(args) -> int:
    if args.problem is not None:
        if args.problem not in REPRODUCE_X0:
            raise _UsageError(
                f"unknown problem {args.problem!r}; available: "
                f"{sorted(REPRODUCE_X0)}"
            )
        names = [args.problem]
    else:
        names = sorted(REPRODUCE_X0)

    out_dir = _out_dir(args.out_dir)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        print(f"cannot create {out_dir}: {exc}", file=sys.stderr)
        return _EXIT_IO

    manifest = {"runs": []}
    all_converged = True
    for name in names:
        problem = builtin(name)
        config = _config_from(args, problem)
        for i, x0 in enumerate(REPRODUCE_X0[name]):
            try:
                report = solve_with_escape(problem, np.array(x0), config)
            except SolverError as exc:
                print(f"numerical failure on {name} run {i}: {exc}",
                      file=sys.stderr)
                return _EXIT_NUMERICAL
            fname = f"{name}_{i}.csv"
            path = os.path.join(out_dir, fname)
            try:
                _write_trajectory(path, report, problem.n)
            except OSError as exc:
                print(f"cannot write {path}: {exc}", file=sys.stderr)
                return _EXIT_IO
            converged = report.termination is Termination.CONVERGED
            all_converged = all_converged and converged
            manifest["runs"].append(
                {
                    "problem": name,
                    "x0": [float(v) for v in x0],
                    "file": fname,
                    "termination": report.termination.value,
                    "iterations": report.iterations,
                    "restarts": report.restarts,
                    "x_star": [float(v) for v in report.x_star],
                    "f_star": float(report.f_star),
                    "stationarity": float(report.stationarity),
                    "feasibility": float(report.feasibility),
                }
            )
            print(f"{name}[{i}] x0={list(x0)} -> {report.termination.value} "
                  f"in {report.iterations} iterations")
    try:
        with open(os.path.join(out_dir, "manifest.json"), "w",
                  encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"cannot write manifest: {exc}", file=sys.stderr)
        return _EXIT_IO
    return _EXIT_OK if all_converged else _EXIT_MAX_ITERS


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else _EXIT_USAGE
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "flow":
            return cmd_flow(args)
        return cmd_reproduce(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
