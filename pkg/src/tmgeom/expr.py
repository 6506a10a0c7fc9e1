"""Scalar expressions over chart coordinates.

Expressions are parsed into a small immutable AST and evaluated either as
plain numbers (:func:`evaluate`) or as order-2 jets (:func:`eval_jet2`), which
carry the exact gradient and Hessian alongside the value.

Grammar (``^`` is right-associative, unary minus applies to a whole power)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?
    atom  := number | 'x' digits | func '(' expr ')' | '(' expr ')'
    func  := sin | cos | exp | log | sqrt | tanh

So ``-x1^2`` is ``-(x1^2)`` and ``2^-x1`` is ``2^(-x1)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    """Syntax error; ``offset`` is the UTF-8 byte offset into the source."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        self.reason = message
        super().__init__(f"{message} (at byte {offset})")


class DomainError(ExprError):
    """Evaluation left the domain of a function (log, sqrt, division, power)."""

    def __init__(self, message: str, node: "Expr"):
        self.node = node
        super().__init__(f"{message} in '{to_source(node)}'")


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based coordinate index


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


def to_source(e: Expr) -> str:
    """Print ``e`` so that ``parse(to_source(e), dim) == e``."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({to_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def max_index(e: Expr) -> int:
    """Largest coordinate index referenced by ``e`` (0 for constants)."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Num):
        return 0
    if isinstance(e, (Neg, Call)):
        return max_index(e.arg)
    return max(max_index(e.left), max_index(e.right))


def is_constant(e: Expr) -> bool:
    return max_index(e) == 0


# --- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR = re.compile(r"x(\d+)\Z")


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = self._tokenize(source)
        self.pos = 0

    def _offset(self, char_index: int) -> int:
        return len(self.source[:char_index].encode("utf-8"))

    def _tokenize(self, source):
        tokens = []
        i = 0
        n = len(source)
        while True:
            while i < n and source[i].isspace():
                i += 1
            if i >= n:
                break
            m = _TOKEN.match(source, i)
            if m is None or m.end() == i:
                raise ParseError(f"unexpected character {source[i]!r}", self._offset(i))
            kind = m.lastgroup
            start = m.start(kind)
            tokens.append((kind, m.group(kind), start))
            i = m.end()
        tokens.append(("end", "", n))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        kind, value, start = self.take()
        if value != text:
            found = "end of input" if kind == "end" else repr(value)
            raise ParseError(f"expected {text!r}, found {found}", self._offset(start))

    def parse(self) -> Expr:
        e = self.expr()
        kind, value, start = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", self._offset(start))
        return e

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and value == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, value, start = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            var = _VAR.match(value)
            if var:
                k = int(var.group(1))
                if not 1 <= k <= self.dim:
                    raise ParseError(
                        f"coordinate index out of range: {value} (dimension {self.dim})",
                        self._offset(start),
                    )
                return Var(k)
            if self.peek()[1] != "(":
                raise ParseError(f"unknown identifier {value!r}", self._offset(start))
            if value not in FUNCTIONS:
                raise ParseError(f"unknown function name {value!r}", self._offset(start))
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(value, arg)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {found}", self._offset(start))


def parse(source: str, dim: int) -> Expr:
    """Parse ``source`` into an AST over coordinates ``x1..x{dim}``."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    return _Parser(source, dim).parse()


# --- plain evaluation --------------------------------------------------------


def evaluate(e: Expr, x, lib=math):
    """Evaluate ``e`` at ``x`` with elementary functions taken from ``lib``.

    ``lib`` can be :mod:`math` or any module exposing the same function names
    (e.g. ``mpmath`` for high-precision evaluation).
    """
    if isinstance(e, Num):
        return e.value if lib is math else lib.mpf(e.value)
    if isinstance(e, Var):
        return x[e.index - 1]
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, lib)
    if isinstance(e, Call):
        a = evaluate(e.arg, x, lib)
        if e.name == "log" and a <= 0:
            raise DomainError("log of non-positive value", e)
        if e.name == "sqrt" and a < 0:
            raise DomainError("sqrt of negative value", e)
        return getattr(lib, e.name)(a)
    a = evaluate(e.left, x, lib)
    b = evaluate(e.right, x, lib)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if b == 0:
            raise DomainError("division by zero", e)
        return a / b
    if a == 0 and b < 0:
        raise DomainError("zero raised to a negative power", e)
    if a < 0 and b != int(b):
        raise DomainError("negative base with non-integer exponent", e)
    return a ** (int(b) if b == int(b) and a < 0 else b)


# --- order-2 jets -----------------------------------------------------------


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar function at a point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    @classmethod
    def constant(cls, c: float, m: int) -> "Jet2":
        return cls(float(c), np.zeros(m), np.zeros((m, m)))

    @classmethod
    def coordinate(cls, x, k: int) -> "Jet2":
        m = len(x)
        grad = np.zeros(m)
        grad[k] = 1.0
        return cls(float(x[k]), grad, np.zeros((m, m)))

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value + other.value, self.gradient + other.gradient, self.hessian + other.hessian)

    def __sub__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value - other.value, self.gradient - other.gradient, self.hessian - other.hessian)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.gradient, -self.hessian)

    def __mul__(self, other: "Jet2") -> "Jet2":
        f, g = self, other
        cross = np.outer(f.gradient, g.gradient)
        return Jet2(
            f.value * g.value,
            f.value * g.gradient + g.value * f.gradient,
            f.value * g.hessian + g.value * f.hessian + (cross + cross.T),
        )

    def compose(self, h0: float, h1: float, h2: float) -> "Jet2":
        """Jet of ``h(self)`` given ``h``, ``h'`` and ``h''`` at ``self.value``."""
        g = self.gradient
        return Jet2(h0, h1 * g, h1 * self.hessian + h2 * np.outer(g, g))


def _ipow(u: float, n: float) -> float:
    return u**n if n != 0 else 1.0


def _power_const(base: Jet2, c: float, node) -> Jet2:
    u = base.value
    integer = c == int(c)
    if u == 0 and c < 2 and c not in (0.0, 1.0):
        raise DomainError("power not twice differentiable at zero", node)
    if u < 0 and not integer:
        raise DomainError("negative base with non-integer exponent", node)
    if integer:
        c = int(c)
    h0 = _ipow(u, c)
    h1 = c * _ipow(u, c - 1) if c != 0 else 0.0
    h2 = c * (c - 1) * _ipow(u, c - 2) if c not in (0, 1) else 0.0
    return base.compose(h0, h1, h2)


def _call(name: str, a: Jet2, node) -> Jet2:
    u = a.value
    if name == "sin":
        s, c = math.sin(u), math.cos(u)
        return a.compose(s, c, -s)
    if name == "cos":
        s, c = math.sin(u), math.cos(u)
        return a.compose(c, -s, -c)
    if name == "exp":
        ex = math.exp(u)
        return a.compose(ex, ex, ex)
    if name == "log":
        if u <= 0:
            raise DomainError("log of non-positive value", node)
        return a.compose(math.log(u), 1.0 / u, -1.0 / (u * u))
    if name == "sqrt":
        if u <= 0:
            raise DomainError("sqrt of non-positive value", node)
        s = math.sqrt(u)
        return a.compose(s, 0.5 / s, -0.25 / (s * u))
    if name == "tanh":
        t = math.tanh(u)
        d = 1.0 - t * t
        return a.compose(t, d, -2.0 * t * d)
    raise DomainError(f"unknown function {name!r}", node)


def eval_jet2(e: Expr, x) -> Jet2:
    """Exact value, gradient and Hessian of ``e`` at ``x``."""
    x = np.asarray(x, dtype=float)
    return _jet(e, x, len(x))


def _jet(e: Expr, x: np.ndarray, m: int) -> Jet2:
    if isinstance(e, Num):
        return Jet2.constant(e.value, m)
    if isinstance(e, Var):
        if e.index > m:
            raise DomainError(f"coordinate x{e.index} outside dimension {m}", e)
        return Jet2.coordinate(x, e.index - 1)
    if isinstance(e, Neg):
        return -_jet(e.arg, x, m)
    if isinstance(e, Call):
        return _call(e.name, _jet(e.arg, x, m), e)
    a = _jet(e.left, x, m)
    if e.op == "^" and is_constant(e.right):
        return _power_const(a, float(evaluate(e.right, x)), e)
    b = _jet(e.right, x, m)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if b.value == 0:
            raise DomainError("division by zero", e)
        v = b.value
        return a * b.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    # variable exponent: a^b = exp(b log a)
    if a.value <= 0:
        raise DomainError("non-positive base with variable exponent", e)
    la = a.compose(math.log(a.value), 1.0 / a.value, -1.0 / (a.value * a.value))
    return _call("exp", b * la, e)
