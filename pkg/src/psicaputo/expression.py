"""Scalar expression language for right-hand sides f(t, x, y) and weight functions psi(t).

Grammar (``^`` is right-associative and binds tighter than unary minus, so
``-t^2`` means ``-(t^2)``)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Variables are ``t``, ``x`` and ``y``; named constants are ``pi`` and ``e``;
functions are ``sin cos tan exp ln sqrt abs atan`` (one argument each).
Numbers are decimal literals with an optional exponent.  There is no implicit
multiplication.

Evaluation accepts scalars or numpy arrays and never returns NaN silently:
division by zero, domain errors and overflow raise :class:`EvaluationError`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import (
    EvaluationError,
    ExpressionSyntaxError,
    InputError,
    LexicalError,
    UnknownIdentifierError,
    UnsupportedOperationError,
)

VARIABLES = ("t", "x", "y")
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "atan")


# --------------------------------------------------------------------------
# Tokens
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # number | identifier | operator | paren | comma | end
    lexeme: str
    pos: int


_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPERATORS = {"+": "+", "-": "-", "−": "-", "*": "*", "/": "/", "^": "^"}


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens; whitespace is dropped."""
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER.match(source, i)
            tokens.append(Token("number", m.group(), i))
            i = m.end()
        elif ch.isalpha() or ch == "_":
            m = _IDENT.match(source, i)
            tokens.append(Token("identifier", m.group(), i))
            i = m.end()
        elif ch in _OPERATORS:
            tokens.append(Token("operator", ch, i))
            i += 1
        elif ch in "()":
            tokens.append(Token("paren", ch, i))
            i += 1
        elif ch == ",":
            tokens.append(Token("comma", ch, i))
            i += 1
        else:
            raise LexicalError(f"unexpected character {ch!r}", i, source)
    tokens.append(Token("end", "", n))
    return tokens


# --------------------------------------------------------------------------
# Tree
# --------------------------------------------------------------------------

class Node:
    """Base class of expression tree nodes (all immutable and hashable)."""

    __slots__ = ()

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Named(Node):
    name: str


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    func: str
    args: tuple


ExprAst = Node


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def _op(self, *ops):
        tok = self.tok
        if tok.kind == "operator" and _OPERATORS[tok.lexeme] in ops:
            self.i += 1
            return _OPERATORS[tok.lexeme]
        return None

    def _fail(self, message, tok=None):
        tok = tok or self.tok
        raise ExpressionSyntaxError(message, tok.pos, self.source)

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self._fail(f"unexpected {self.tok.lexeme!r}")
        return node

    def expr(self):
        node = self.term()
        while True:
            op = self._op("+", "-")
            if op is None:
                return node
            node = BinOp(op, node, self.term())

    def term(self):
        node = self.unary()
        while True:
            op = self._op("*", "/")
            if op is None:
                return node
            node = BinOp(op, node, self.unary())

    def unary(self):
        if self._op("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self._op("^"):
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Const(float(tok.lexeme))
        if tok.kind == "identifier":
            self.i += 1
            name = tok.lexeme
            nxt = self.tok
            if nxt.kind == "paren" and nxt.lexeme == "(":
                if name not in FUNCTIONS:
                    raise UnknownIdentifierError(
                        f"unknown function {name!r}", tok.pos, self.source)
                self.i += 1
                args = [self.expr()]
                while self.tok.kind == "comma":
                    self.i += 1
                    args.append(self.expr())
                if not (self.tok.kind == "paren" and self.tok.lexeme == ")"):
                    self._fail("expected ')'")
                self.i += 1
                if len(args) != 1:
                    self._fail(f"{name} takes exactly one argument", tok)
                return Call(name, tuple(args))
            if name in VARIABLES:
                return Var(name)
            if name in CONSTANTS:
                return Named(name)
            if name in FUNCTIONS:
                self._fail(f"function {name!r} requires an argument list", tok)
            raise UnknownIdentifierError(
                f"unknown identifier {name!r}", tok.pos, self.source)
        if tok.kind == "paren" and tok.lexeme == "(":
            self.i += 1
            node = self.expr()
            if not (self.tok.kind == "paren" and self.tok.lexeme == ")"):
                self._fail("expected ')'")
            self.i += 1
            return node
        if tok.kind == "end":
            self._fail("unexpected end of input")
        self._fail(f"unexpected {tok.lexeme!r}")


@lru_cache(maxsize=256)
def parse(source: str) -> Node:
    """Parse ``source`` into an expression tree."""
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError("empty expression", 0, source)
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Const) and node.value < 0:
        return 3
    return 5


def _fmt_number(v):
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_string(node: Node) -> str:
    """Render ``node`` with the minimum parentheses needed to re-parse it."""
    if isinstance(node, Const):
        if node.value < 0:
            return f"(-{_fmt_number(-node.value)})"
        return _fmt_number(node.value)
    if isinstance(node, (Var, Named)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_string(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        if _prec(node.arg) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        if _prec(node.left) <= 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

Number = Union[float, np.ndarray]


def variables(node: Node) -> frozenset:
    """Names of the variables referenced by ``node``."""
    if isinstance(node, Var):
        return frozenset((node.name,))
    if isinstance(node, Neg):
        return variables(node.arg)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        return frozenset().union(*(variables(a) for a in node.args))
    return frozenset()


def contains_call(node: Node, func: str) -> bool:
    if isinstance(node, Call):
        return node.func == func or any(contains_call(a, func) for a in node.args)
    if isinstance(node, Neg):
        return contains_call(node.arg, func)
    if isinstance(node, BinOp):
        return contains_call(node.left, func) or contains_call(node.right, func)
    return False


def _bad(mask, what):
    if np.any(mask):
        raise EvaluationError(what)


def _eval(node, env):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Named):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, Call):
        a = np.asarray(_eval(node.args[0], env), dtype=float)
        f = node.func
        if f == "ln":
            _bad(a <= 0, "ln of a non-positive number")
            return np.log(a)
        if f == "sqrt":
            _bad(a < 0, "sqrt of a negative number")
            return np.sqrt(a)
        if f == "abs":
            return np.abs(a)
        if f == "atan":
            return np.arctan(a)
        return getattr(np, f)(a)
    a = np.asarray(_eval(node.left, env), dtype=float)
    b = np.asarray(_eval(node.right, env), dtype=float)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        _bad(b == 0, "division by zero")
        return a / b
    # power
    _bad((a < 0) & (b != np.round(b)), "negative base with non-integer exponent")
    _bad((a == 0) & (b < 0), "division by zero (zero to a negative power)")
    return np.power(a, b)


def eval_expr(ast: Node, t: Number = None, x: Number = None, y: Number = None):
    """Evaluate ``ast`` at the given variable values.

    Arguments may be scalars or broadcastable arrays.  Returns a Python float
    for scalar input and an ndarray otherwise.
    """
    env = {"t": t, "x": x, "y": y}
    for name in variables(ast):
        if env[name] is None:
            raise InputError(f"variable {name!r} is not bound")
    with np.errstate(all="ignore"):
        out = np.asarray(_eval(ast, env), dtype=float)
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values() if v is not None))
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy()
    if not np.all(np.isfinite(out)):
        raise EvaluationError("expression evaluation overflowed or produced NaN")
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Symbolic differentiation
# --------------------------------------------------------------------------

ZERO = Const(0.0)
ONE = Const(1.0)


def _num(v):
    return Neg(Const(-v)) if v < 0 else Const(float(v))


def _cval(node):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg) and isinstance(node.arg, Const):
        return -node.arg.value
    return None


def _neg(a):
    if isinstance(a, Neg):
        return a.arg
    v = _cval(a)
    if v is not None:
        return _num(-v)
    return Neg(a)


def _add(a, b):
    va, vb = _cval(a), _cval(b)
    if va == 0:
        return b
    if vb == 0:
        return a
    if va is not None and vb is not None:
        return _num(va + vb)
    if isinstance(b, Neg):
        return _sub(a, b.arg)
    return BinOp("+", a, b)


def _sub(a, b):
    va, vb = _cval(a), _cval(b)
    if vb == 0:
        return a
    if va == 0:
        return _neg(b)
    if va is not None and vb is not None:
        return _num(va - vb)
    if isinstance(b, Neg):
        return _add(a, b.arg)
    return BinOp("-", a, b)


def _mul(a, b):
    va, vb = _cval(a), _cval(b)
    if va == 0 or vb == 0:
        return ZERO
    if va == 1:
        return b
    if vb == 1:
        return a
    if va is not None and vb is not None:
        return _num(va * vb)
    if isinstance(a, Neg):
        return _neg(_mul(a.arg, b))
    if isinstance(b, Neg):
        return _neg(_mul(a, b.arg))
    if vb is not None:
        a, b, va, vb = b, a, vb, va
    if va is not None and isinstance(b, BinOp) and b.op == "*":
        inner = _cval(b.left)
        if inner is not None:
            return _mul(_num(va * inner), b.right)
    return BinOp("*", a, b)


def _div(a, b):
    va, vb = _cval(a), _cval(b)
    if va == 0:
        return ZERO
    if vb == 1:
        return a
    if va is not None and vb is not None and vb != 0:
        return _num(va / vb)
    return BinOp("/", a, b)


def _pow(a, b):
    vb = _cval(b)
    if vb == 0:
        return ONE
    if vb == 1:
        return a
    va = _cval(a)
    if va is not None and vb is not None:
        return _num(va ** vb)
    return BinOp("^", a, b)


def _call(f, a):
    return Call(f, (a,))


def _d(node, var):
    if isinstance(node, (Const, Named)):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, Neg):
        return _neg(_d(node.arg, var))
    if isinstance(node, Call):
        a = node.args[0]
        da = _d(a, var)
        if _cval(da) == 0:
            return ZERO
        f = node.func
        if f == "sin":
            outer = _call("cos", a)
        elif f == "cos":
            outer = _neg(_call("sin", a))
        elif f == "tan":
            outer = _div(ONE, _pow(_call("cos", a), Const(2.0)))
        elif f == "exp":
            outer = node
        elif f == "ln":
            return _div(da, a)
        elif f == "sqrt":
            return _div(da, _mul(Const(2.0), node))
        elif f == "atan":
            return _div(da, _add(ONE, _pow(a, Const(2.0))))
        else:  # abs is rejected up front
            raise UnsupportedOperationError(f"cannot differentiate {f}")
        return _mul(outer, da)
    a, b = node.left, node.right
    da, db = _d(a, var), _d(b, var)
    op = node.op
    if op == "+":
        return _add(da, db)
    if op == "-":
        return _sub(da, db)
    if op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if op == "/":
        if _cval(db) == 0:
            return _div(da, b)
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, Const(2.0)))
    # power
    if var not in variables(b):
        return _mul(_mul(b, _pow(a, _sub(b, ONE))), da)
    if var not in variables(a):
        return _mul(_mul(node, _call("ln", a)), db)
    return _mul(node, _add(_mul(db, _call("ln", a)), _div(_mul(b, da), a)))


@lru_cache(maxsize=1024)
def diff_expr(ast: Node, var: str = "t") -> Node:
    """Symbolic derivative of ``ast`` with respect to ``var``.

    Only constant folding is applied to the result.  Trees containing ``abs``
    are rejected because ``abs`` is not differentiable at zero.
    """
    if var not in VARIABLES:
        raise InputError(f"cannot differentiate with respect to {var!r}")
    if contains_call(ast, "abs"):
        raise UnsupportedOperationError("abs is not differentiable; diff_expr rejects it")
    return _d(ast, var)
