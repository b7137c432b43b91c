"""Flat ``key = value`` problem files with ``[problem]``, ``[constants]`` and ``[solver]`` sections.

Example::

    [problem]
    alpha = 3/2
    psi   = 3*t^2
    f     = exp(-t)/(1+t^2)
    ...

Numeric entries are constant expressions in the public grammar, so
``1/75`` or ``sqrt(2)/3`` are accepted.  ``#`` starts a comment, either on
its own line or after an entry (the expression grammar has no ``#``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import expression as ex
from .conditions import OMEGA0_CONVENTIONS, ConstantSet
from .errors import ConfigError, ExpressionError, InputError, PsiCaputoError
from .problem import BvpProblem
from .psi import PsiSpec, validate_psi

PROBLEM_KEYS = ("alpha", "beta", "eta", "xi", "lambda", "mu", "psi", "f", "g")
CONSTANT_KEYS = ("L1", "L2", "k0", "k1", "k2", "l0", "l1", "l2")
SOLVER_KEYS = ("grid_n", "quad_n", "tol", "max_iter", "omega0_convention")
SECTIONS = {"problem": PROBLEM_KEYS, "constants": CONSTANT_KEYS, "solver": SOLVER_KEYS}
BUNDLED = ("example-4-1.cfg", "example-4-2.cfg")


@dataclass(frozen=True)
class SolverOptions:
    grid_n: int = 200
    quad_n: int = 64
    tol: float = 1e-10
    max_iter: int = 200
    omega0_convention: str = "corrected"

    def __post_init__(self):
        if self.grid_n < 8 or self.grid_n % 2:
            raise InputError("grid_n must be an even integer >= 8")
        if not 1 <= self.quad_n <= 512:
            raise InputError("quad_n must lie in [1, 512]")
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise InputError("tol must be positive and finite")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")
        if self.omega0_convention not in OMEGA0_CONVENTIONS:
            raise InputError(f"omega0_convention must be one of {', '.join(OMEGA0_CONVENTIONS)}")


def _number(text, line):
    try:
        node = ex.parse(text)
    except ExpressionError as exc:
        raise ConfigError(str(exc), line) from None
    if ex.variables(node):
        raise ConfigError(f"numeric value expected, got {text!r}", line)
    try:
        value = float(ex.eval_expr(node))
    except PsiCaputoError as exc:
        raise ConfigError(str(exc), line) from None
    if not math.isfinite(value):
        raise ConfigError(f"value {text!r} is not finite", line)
    return value


def _integer(text, line):
    value = _number(text, line)
    if not value.is_integer():
        raise ConfigError(f"integer expected, got {text!r}", line)
    return int(value)


def read_sections(text: str) -> dict:
    """Split config text into ``{section: {key: (value, line)}}``."""
    out = {name: {} for name in SECTIONS}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", lineno)
            current = line[1:-1].strip()
            if current not in SECTIONS:
                raise ConfigError(f"unknown section [{current}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        if current is None:
            raise ConfigError("entry outside any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SECTIONS[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno)
        if key in out[current]:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        out[current][key] = (value, lineno)
    return out


def _expr(text, line):
    try:
        return ex.parse(text)
    except ExpressionError as exc:
        raise ConfigError(f"{exc}", line) from None


def parse_config_text(text: str):
    """Parse config text; see :func:`parse_config`."""
    sec = read_sections(text)
    prob = sec["problem"]
    missing = [k for k in PROBLEM_KEYS if k not in prob]
    if missing:
        raise ConfigError(f"[problem] is missing {', '.join(missing)}")

    nums = {k: _number(*prob[k]) for k in ("alpha", "beta", "eta", "xi", "lambda", "mu")}
    psi_text, psi_line = prob["psi"]
    try:
        psi = PsiSpec.from_expression(psi_text)
    except InputError as exc:
        raise ConfigError(f"psi: {exc}", psi_line) from None
    with warnings.catch_warnings():
        # an endpoint zero of psi' is legitimate (psi = 3 t^2); it stays in the report
        warnings.simplefilter("ignore")
        report = validate_psi(psi)
    if not report.passed:
        raise ConfigError(f"psi: {report.violations[0]}", psi_line)
    f = _expr(*prob["f"])
    g = _expr(*prob["g"])
    try:
        problem = BvpProblem(nums["alpha"], nums["beta"], nums["eta"], nums["xi"],
                             nums["lambda"], nums["mu"], f, g, psi)
    except InputError as exc:
        raise ConfigError(str(exc)) from None

    constants = None
    if sec["constants"]:
        values = {k: _number(v, ln) for k, (v, ln) in sec["constants"].items()}
        for k, v in values.items():
            if v < 0:
                raise ConfigError(f"constant {k} must be >= 0", sec["constants"][k][1])
        constants = ConstantSet(**values)

    sv = sec["solver"]
    opts = {}
    for key in ("grid_n", "quad_n", "max_iter"):
        if key in sv:
            opts[key] = _integer(*sv[key])
    if "tol" in sv:
        opts["tol"] = _number(*sv["tol"])
    if "omega0_convention" in sv:
        opts["omega0_convention"] = sv["omega0_convention"][0]
    try:
        options = SolverOptions(**opts)
    except InputError as exc:
        raise ConfigError(str(exc)) from None
    return problem, constants, options


def resolve_config(name) -> Path:
    """A path if it exists, otherwise the bundled file of that name."""
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("psicaputo").joinpath("data").joinpath(path.name)
    if path.name in BUNDLED and bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"cannot read config {name!r}: no such file")


def parse_config(path):
    """Read a problem file and return ``(problem, constants or None, SolverOptions)``.

    Bundled names (``example-4-1.cfg``, ``example-4-2.cfg``) resolve to the
    packaged copies when no such file exists locally.
    """
    resolved = resolve_config(path)
    try:
        text = resolved.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config_text(text)
