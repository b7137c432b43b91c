import io
import re
import subprocess
import sys

import pytest

from psicaputo.bvp import picard_solve, residual_report
from psicaputo.cli import read_csv, run_command, verify_pair
from psicaputo.config import SolverOptions, parse_config

ERROR_LINE = re.compile(r"^psicaputo: E[2-5] [a-z-]+: \S.*$")

SINGULAR = """\
[problem]
alpha = 1.5
beta = 1.5
eta = 0.5
xi = 0.5
lambda = 2
mu = 1
psi = t
f = sin(x)
g = cos(y)
"""


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def assert_single_error_line(err, code):
    lines = [ln for ln in err.splitlines() if ln.startswith("psicaputo: E")]
    assert len(lines) == 1 and ERROR_LINE.match(lines[0])
    assert lines[0].startswith(f"psicaputo: E{code} ")


def test_check_example_4_1():
    code, out, err = run("check", "example-4-1.cfg")
    assert code == 0
    assert "gamma3 = 0.19109787" in out
    assert "uniqueness (gamma3+gamma4 < 1): PASS" in out
    value = float(re.search(r"^gamma3 = (\S+)$", out, re.M).group(1))
    assert abs(value - 0.1910978713) <= 1e-8
    # growth constants are not in the file and get estimated, with a warning
    assert "warning" in err and "estimated k0" in err


def test_check_example_4_2():
    code, out, _ = run("check", "example-4-2.cfg")
    assert code == 0
    assert "existence (Omega* < 1): PASS" in out
    assert "Omega0 convention: corrected" in out


def test_check_literal_convention_flag():
    _, out, _ = run("check", "example-4-2.cfg", "--omega0-convention", "paper-literal")
    assert "Omega0 convention: paper-literal" in out
    assert "Omega0 = 0.32678432098737" in out


def test_check_failing_condition(tmp_path):
    cfg = tmp_path / "strong.cfg"
    cfg.write_text(SINGULAR.replace("lambda = 2", "lambda = 1") + "[constants]\nL1 = 10\nL2 = 10\n")
    code, out, _ = run("check", str(cfg))
    assert code == 2 and "uniqueness (gamma3+gamma4 < 1): FAIL" in out


def test_check_singular_delta(tmp_path):
    cfg = tmp_path / "singular.cfg"
    cfg.write_text(SINGULAR)
    code, _, err = run("check", str(cfg))
    assert code == 5
    assert_single_error_line(err, 5)
    assert "singular" in err


@pytest.mark.parametrize("argv", [
    ("check", "missing.cfg"),
    ("frobnicate",),
    (),
    ("solve",),
    ("verify", "example-4-1.cfg"),
    ("check", "example-4-1.cfg", "--grid-n", "seven"),
    ("check", "example-4-1.cfg", "--grid-n", "7"),
    ("check", "example-4-1.cfg", "--omega0-convention", "other"),
])
def test_usage_and_config_errors(argv):
    code, _, err = run(*argv)
    assert code == 4
    assert_single_error_line(err, 4)


def test_bad_config_reports_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(SINGULAR.replace("alpha = 1.5", "alpha = 2.5"))
    code, _, err = run("check", str(cfg))
    assert code == 4 and "alpha must lie in (1,2)" in err
    cfg.write_text(SINGULAR + "bogus = 1\n")
    code, _, err = run("check", str(cfg))
    assert code == 4 and "line 11" in err


def test_solve_then_verify(tmp_path):
    csv = tmp_path / "sol.csv"
    code, _, err = run("solve", "example-4-1.cfg", "--output", str(csv))
    assert code == 0 and "converged" in err
    lines = csv.read_text().splitlines()
    assert lines[0] == "t,x,y" and len(lines) == 202
    assert len(lines[1].split(",")) == 3
    code, out, _ = run("verify", "example-4-1.cfg", "--solution", str(csv))
    assert code == 0 and "verification: PASS" in out
    for name in ("x(1)-lam*x(eta)", "y(1)-mu*y(xi)"):
        value = float(re.search(re.escape(f"boundary |{name}| = ") + r"(\S+)", out).group(1))
        assert value <= 1e-8
    sup = [float(v) for v in re.search(r"sup x = (\S+), sup y = (\S+),", out).groups()]
    assert max(sup) <= 1e-6


def test_csv_round_trip_matches_in_process(tmp_path):
    csv = tmp_path / "sol.csv"
    run("solve", "example-4-1.cfg", "--output", str(csv))
    problem, _, _ = parse_config("example-4-1.cfg")
    direct = picard_solve(problem)
    loaded = read_csv(csv)
    a = residual_report(problem, direct)
    b = residual_report(problem, loaded)
    assert abs(a.fixed_point - b.fixed_point) <= 1e-12
    assert abs(a.boundary_max - b.boundary_max) <= 1e-12
    assert abs(a.ode - b.ode) <= 1e-12
    # 17 significant digits reproduce the doubles exactly
    assert (loaded.x.values == direct.x.values).all() and (loaded.y.values == direct.y.values).all()


def test_solve_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("solve", "example-4-2.cfg", "--output", str(a), "--grid-n", "100")
    run("solve", "example-4-2.cfg", "--output", str(b), "--grid-n", "100")
    assert a.read_bytes() == b.read_bytes()


def test_solve_to_stdout():
    code, out, _ = run("solve", "example-4-2.cfg", "--grid-n", "20")
    assert code == 0 and out.startswith("t,x,y\n") and len(out.splitlines()) == 22


def test_solve_non_convergence():
    code, _, err = run("solve", "example-4-1.cfg", "--max-iter", "2", "--grid-n", "20")
    assert code == 3
    assert_single_error_line(err, 3)


def test_verify_rejects_wrong_solution(tmp_path):
    csv = tmp_path / "zero.csv"
    csv.write_text("t,x,y\n" + "".join(f"{i / 20!r},0,0\n" for i in range(21)))
    code, out, err = run("verify", "example-4-1.cfg", "--solution", str(csv))
    assert code == 3 and "verification: FAIL" in out
    assert_single_error_line(err, 3)


@pytest.mark.parametrize("content", ["x,y\n1,2\n", "t,x,y\n0,a,b\n", "t,x,y\n0,0\n",
                                     "t,x,y\n" + "".join(f"{i},0,0\n" for i in range(11))])
def test_verify_malformed_csv(tmp_path, content):
    csv = tmp_path / "bad.csv"
    csv.write_text(content)
    code, _, err = run("verify", "example-4-1.cfg", "--solution", str(csv))
    assert code == 4
    assert_single_error_line(err, 4)


def test_verify_pair_in_process():
    problem, _, _ = parse_config("example-4-2.cfg")
    rep, diff, ok = verify_pair(problem, picard_solve(problem), SolverOptions())
    assert ok and diff.sup <= 1e-9 and rep.boundary_max <= 1e-8


def test_reproduce():
    code, out, _ = run("reproduce")
    assert code == 0
    assert re.search(r"^gamma3 .*reproduces$", out, re.M)
    for key in ("gamma4", "omega1", "omega2"):
        assert re.search(rf"^{key} .*DISCREPANCY", out, re.M)
    for value in ("0.3633970871", "0.2062532154", "0.5020208267"):
        assert value in out
    assert "uniqueness verdict: published PASS, recomputed PASS" in out
    assert "existence verdict: published PASS, recomputed PASS" in out
    assert "(corrected): PASS" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "psicaputo", "check", "example-4-1.cfg"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and "gamma3 = 0.19109787" in proc.stdout
