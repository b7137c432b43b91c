"""Command-line front end: ``psicaputo {check,solve,verify,reproduce}``.

Exit codes: 0 success, 2 a checked condition fails, 3 non-convergence or
failed verification, 4 config or usage error, 5 singular problem or other
numerical failure.  Every error is a single stderr line starting with
``psicaputo: E<code>``.
"""

from __future__ import annotations

import argparse
import io
import sys
import warnings

import numpy as np

from .bvp import SolutionPair, picard_solve, residual_report
from .collocation import collocation_solve, cross_validate
from .conditions import OMEGA0_CONVENTIONS, ConstantSet, condition_report, estimate_constants, sup_bounds
from .config import BUNDLED, SolverOptions, parse_config
from .errors import (ConvergenceError, InputError, NumericalError, PsiCaputoError,
                     SingularProblemError)
from .problem import GridFunction, grid_nodes

EXIT_OK, EXIT_CONDITION, EXIT_CONVERGENCE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4, 5
BOUNDARY_TOL = 1e-8
FIXED_POINT_TOL = 1e-8
AGREEMENT_TOL = 1e-6

# values printed in the worked examples, kept verbatim for comparison
PUBLISHED_VALUES = {
    "example-4-1.cfg": {"gamma3": 0.1910978713, "gamma4": 0.3633970871,
                        "gamma3+gamma4": 0.5544949584},
    "example-4-2.cfg": {"omega1": 0.2062532154, "omega2": 0.5020208267,
                        "omega_star": 0.5020208267},
}
MATCH_RTOL = 1e-8


class CliError(Exception):
    def __init__(self, code, tag, message):
        super().__init__(message)
        self.code = code
        self.tag = tag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_CONFIG, "usage", message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-n", type=int, help="grid intervals (even, >= 8)")
    common.add_argument("--quad-n", type=int, help="quadrature nodes per piece")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--max-iter", type=int, help="Picard iteration cap")
    common.add_argument("--omega0-convention", choices=OMEGA0_CONVENTIONS)

    parser = _Parser(prog="psicaputo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("check", parents=[common], help="evaluate existence/uniqueness conditions")
    p.add_argument("config")
    p = sub.add_parser("solve", parents=[common], help="Picard solve and write t,x,y CSV")
    p.add_argument("config")
    p.add_argument("--output", help="CSV path (stdout if omitted)")
    p = sub.add_parser("verify", parents=[common], help="residuals and Newton cross-check of a CSV")
    p.add_argument("config")
    p.add_argument("--solution", required=True)
    sub.add_parser("reproduce", parents=[common], help="run both bundled examples")
    return parser


def _options(args, base: SolverOptions) -> SolverOptions:
    fields = {"grid_n": args.grid_n, "quad_n": args.quad_n, "tol": args.tol,
              "max_iter": args.max_iter, "omega0_convention": args.omega0_convention}
    merged = {k: v for k, v in fields.items() if v is not None}
    return SolverOptions(**{**base.__dict__, **merged})


def _load(path, args):
    problem, constants, opts = parse_config(path)
    return problem, constants, _options(args, opts)


def complete_constants(problem, constants, err):
    """Fill missing constants: M1, M2 from sup |f(t,0,0)|, the rest by sampling (with a warning)."""
    constants = constants or ConstantSet()
    if constants.M1 is None or constants.M2 is None:
        m1, m2 = sup_bounds(problem)
        constants = constants.merged_with(ConstantSet(M1=m1, M2=m2))
    if not (constants.has_lipschitz and constants.has_growth):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            estimate = estimate_constants(problem)
        for w in caught:
            print(f"psicaputo: warning: {w.message}", file=err)
        missing = [n for n in ("L1", "L2", "k0", "k1", "k2", "l0", "l1", "l2")
                   if getattr(constants, n) is None]
        print(f"psicaputo: warning: estimated {', '.join(missing)} by sampling", file=err)
        constants = constants.merged_with(estimate)
    return constants


def _fmt(v):
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "PASS" if v else "FAIL"
    return f"{v:.15g}"


def format_report(rep) -> str:
    rows = [("Delta1", rep.delta1), ("Delta2", rep.delta2),
            ("gamma1", rep.gamma1), ("gamma2", rep.gamma2),
            ("gamma3", rep.gamma3), ("gamma4", rep.gamma4),
            ("gamma3+gamma4", rep.contraction_constant),
            ("Omega0", rep.omega0), ("Omega1", rep.omega1), ("Omega2", rep.omega2),
            ("Omega*", rep.omega_star),
            ("r-bound", rep.r_bound), ("solution bound", rep.solution_bound)]
    lines = [f"{name} = {_fmt(v)}" for name, v in rows]
    lines.append(f"uniqueness (gamma3+gamma4 < 1): {_fmt(rep.uniqueness_verdict)}")
    lines.append(f"existence (Omega* < 1): {_fmt(rep.existence_verdict)}")
    lines.append(f"Omega0 convention: {rep.omega0_convention}")
    lines.append(f"constants: {rep.provenance}")
    return "\n".join(lines)


def cmd_check(args, out, err):
    problem, constants, opts = _load(args.config, args)
    constants = complete_constants(problem, constants, err)
    rep = condition_report(problem, constants, opts.omega0_convention)
    print(format_report(rep), file=out)
    verdicts = (rep.uniqueness_verdict, rep.existence_verdict)
    if any(v is False for v in verdicts):
        return EXIT_CONDITION
    return EXIT_OK


def write_csv(pair: SolutionPair, stream):
    stream.write("t,x,y\n")
    for t, x, y in zip(pair.x.nodes, pair.x.values, pair.y.values):
        stream.write(f"{t:.17g},{x:.17g},{y:.17g}\n")


def read_csv(path) -> SolutionPair:
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            data = np.loadtxt(fh, delimiter=",", ndmin=2) if header == "t,x,y" else None
    except OSError as exc:
        raise InputError(f"cannot read solution {path!r}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"{path}: malformed CSV ({exc})") from None
    if data is None:
        raise InputError(f"{path}: expected header 't,x,y'")
    if data.shape[1] != 3:
        raise InputError(f"{path}: expected three columns")
    n = data.shape[0] - 1
    if not np.allclose(data[:, 0], grid_nodes(n), rtol=0, atol=1e-15):
        raise InputError(f"{path}: t column is not the uniform grid i/{n}")
    return SolutionPair(GridFunction(data[:, 1]), GridFunction(data[:, 2]), 0, (), 0.0,
                        method="file")


def cmd_solve(args, out, err):
    problem, _, opts = _load(args.config, args)
    try:
        pair = picard_solve(problem, opts.tol, opts.max_iter, opts.grid_n, opts.quad_n)
    except ConvergenceError as exc:
        raise CliError(EXIT_CONVERGENCE, "no-convergence", str(exc)) from None
    buf = io.StringIO()
    write_csv(pair, buf)
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(buf.getvalue())
        except OSError as exc:
            raise CliError(EXIT_NUMERIC, "io", f"cannot write {args.output!r}: {exc.strerror}")
        print(f"converged in {pair.iterations} iterations, last increment "
              f"{pair.final_increment:.3g}; wrote {args.output}", file=err)
    else:
        out.write(buf.getvalue())
    return EXIT_OK


def verify_pair(problem, pair, opts):
    """Residual report and Newton cross-check; returns ``(report, diff, ok)``."""
    rep = residual_report(problem, pair, opts.quad_n)
    newton = collocation_solve(problem, tol=min(opts.tol, 1e-10), grid_n=pair.grid_n,
                               quad_n=opts.quad_n)
    diff = cross_validate(pair, newton, AGREEMENT_TOL)
    ok = rep.boundary_max <= BOUNDARY_TOL and rep.fixed_point <= FIXED_POINT_TOL and diff.passed
    return rep, diff, ok


def cmd_verify(args, out, err):
    problem, _, opts = _load(args.config, args)
    pair = read_csv(args.solution)
    try:
        rep, diff, ok = verify_pair(problem, pair, opts)
    except ConvergenceError as exc:
        raise CliError(EXIT_CONVERGENCE, "no-convergence", f"Newton oracle: {exc}") from None
    print(f"fixed-point residual x = {rep.fixed_point_x:.3e}", file=out)
    print(f"fixed-point residual y = {rep.fixed_point_y:.3e}", file=out)
    for name, v in rep.boundary.items():
        print(f"boundary |{name}| = {v:.3e}", file=out)
    print(f"equation residual x (spline Caputo, coarse) = {rep.ode_x:.3e}", file=out)
    print(f"equation residual y (spline Caputo, coarse) = {rep.ode_y:.3e}", file=out)
    print(f"Newton vs solution: sup x = {diff.sup_x:.3e}, sup y = {diff.sup_y:.3e}, "
          f"L2 x = {diff.l2_x:.3e}, L2 y = {diff.l2_y:.3e}", file=out)
    print(f"verification: {'PASS' if ok else 'FAIL'}", file=out)
    if not ok:
        raise CliError(EXIT_CONVERGENCE, "verify-failed",
                       "residuals or solver agreement exceed tolerance")
    return EXIT_OK


def _verdicts(values):
    uniq = values.get("gamma3+gamma4")
    star = values.get("omega_star")
    return (None if uniq is None else uniq < 1.0), (None if star is None else star < 1.0)


def cmd_reproduce(args, out, err):
    status = EXIT_OK
    for name in BUNDLED:
        problem, constants, opts = _load(name, args)
        constants = complete_constants(problem, constants, err)
        rep = condition_report(problem, constants, opts.omega0_convention)
        recomputed = {"gamma3": rep.gamma3, "gamma4": rep.gamma4,
                      "gamma3+gamma4": rep.contraction_constant,
                      "omega1": rep.omega1, "omega2": rep.omega2, "omega_star": rep.omega_star}
        published = PUBLISHED_VALUES[name]
        print(f"== {name} ==", file=out)
        print(f"{'quantity':<15}{'published':>16}{'recomputed':>20}  note", file=out)
        for key, pv in published.items():
            rv = recomputed[key]
            same = abs(rv - pv) <= MATCH_RTOL * abs(pv) or abs(rv - pv) <= 5e-11
            note = "reproduces" if same else "DISCREPANCY (published value does not reproduce)"
            print(f"{key:<15}{pv:>16.10f}{rv:>20.13f}  {note}", file=out)
        pu, pe = _verdicts(published)
        ru, re_ = _verdicts(recomputed)
        for label, pv, rv in (("uniqueness", pu, ru), ("existence", pe, re_)):
            if pv is None:
                continue
            print(f"{label} verdict: published {_fmt(pv)}, recomputed {_fmt(rv)}", file=out)
            if not (pv and rv):
                status = EXIT_CONDITION
        try:
            pair = picard_solve(problem, opts.tol, opts.max_iter, opts.grid_n, opts.quad_n)
        except ConvergenceError as exc:
            raise CliError(EXIT_CONVERGENCE, "no-convergence", f"{name}: {exc}") from None
        ratios = pair.contraction_ratios()
        line = (f"Picard: {pair.iterations} iterations, |x|+|y| = {pair.norm():.10f}, "
                f"max increment ratio = {ratios.max() if ratios.size else 0.0:.4f}")
        print(line, file=out)
        if rep.solution_bound is not None:
            inside = pair.norm() <= rep.solution_bound + 1e-6
            print(f"a-priori bound Omega0/(1-Omega*) = {rep.solution_bound:.10f} "
                  f"({rep.omega0_convention}): {'PASS' if inside else 'FAIL'}", file=out)
        print(file=out)
    return status


COMMANDS = {"check": cmd_check, "solve": cmd_solve, "verify": cmd_verify,
            "reproduce": cmd_reproduce}


def run_command(argv=None, out=None, err=None) -> int:
    """Run one CLI invocation and return its exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out, err)
    except CliError as exc:
        code, tag, msg = exc.code, exc.tag, str(exc)
    except InputError as exc:
        code, tag, msg = EXIT_CONFIG, "config", str(exc)
    except ConvergenceError as exc:
        code, tag, msg = EXIT_CONVERGENCE, "no-convergence", str(exc)
    except NumericalError as exc:
        kind = "singular" if isinstance(exc, SingularProblemError) else "numerical"
        code, tag, msg = EXIT_NUMERIC, kind, str(exc)
    except PsiCaputoError as exc:
        code, tag, msg = EXIT_NUMERIC, "numerical", str(exc)
    msg = " ".join(msg.split())
    print(f"psicaputo: E{code} {tag}: {msg}", file=err)
    return code


def main():  # pragma: no cover
    sys.exit(run_command())
