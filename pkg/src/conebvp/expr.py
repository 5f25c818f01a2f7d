"""Small arithmetic expression language for the coefficient a(t) and nonlinearity f(u).

Grammar, loosest binding first::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?          # right-associative
    atom  := NUMBER | NAME '(' expr ')' | NAME | '(' expr ')'

Evaluation is vectorized over numpy arrays and never lets a non-finite value
through silently: leaving the real domain raises :class:`ExprDomainError`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExprDomainError, ExprError, ExprOverflowError, ExprSyntaxError

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "abs")
VARIABLES = ("t", "u")
BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Constant:
    value: float

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Unary:
    """Function application; ``fn == "neg"`` is unary minus."""

    fn: str
    child: "Expr"

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return to_text(self)


Expr = Union[Constant, Variable, Unary, Binary]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text, variable):
        self.text = text
        self.variable = variable
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, offset = self.advance()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", offset)

    def parse(self):
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary("neg", self.unary())
        if kind == "op" and text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, text, offset = self.advance()
        if kind == "number":
            return Constant(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            if text == self.variable:
                return Variable(text)
            if text in VARIABLES:
                raise ExprError(
                    f"variable `{text}` not allowed here (expected `{self.variable}`) at offset {offset}"
                )
            raise ExprError(f"unknown identifier `{text}` at offset {offset}")
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", offset)


def parse_expr(text: str, variable: str | None = "u") -> Expr:
    """Parse ``text`` into an AST whose only free variable may be ``variable``.

    ``variable=None`` admits constant expressions only.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, variable).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def to_text(expr: Expr) -> str:
    """Fully parenthesized rendering; ``parse_expr(to_text(e)) == e``."""
    if isinstance(expr, Constant):
        v = float(expr.value)
        return repr(v) if v >= 0 else f"(-{repr(-v)})"
    if isinstance(expr, Variable):
        return expr.name
    if isinstance(expr, Unary):
        if expr.fn == "neg":
            return f"(-{to_text(expr.child)})"
        return f"{expr.fn}({to_text(expr.child)})"
    return f"({to_text(expr.left)} {expr.op} {to_text(expr.right)})"


def free_variables(expr: Expr) -> set:
    if isinstance(expr, Variable):
        return {expr.name}
    if isinstance(expr, Unary):
        return free_variables(expr.child)
    if isinstance(expr, Binary):
        return free_variables(expr.left) | free_variables(expr.right)
    return set()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _fail(message, node, mask, binding, var, exc=ExprDomainError):
    if np.ndim(binding) and np.ndim(mask):
        idx = int(np.flatnonzero(np.broadcast_to(mask, np.shape(binding)))[0])
        where = f"{var}={float(np.asarray(binding).flat[idx])!r}"
    else:
        where = f"{var}={float(np.asarray(binding).flat[0])!r}"
    raise exc(message, to_text(node), where)


def _power(x, y, node, binding, var):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    integral = y == np.round(y)
    bad = (x < 0) & ~integral
    if bad.any():
        _fail("non-integer power of a negative number", node, bad, binding, var)
    bad = (x == 0) & (y <= 0) & ~((y == 0) & integral)
    if bad.any():
        _fail("zero raised to a non-positive power", node, bad, binding, var)
    out = np.empty_like(x)
    out[integral] = np.power(x[integral], y[integral])
    frac = ~integral
    pos = frac & (x > 0)
    out[pos] = np.exp(y[pos] * np.log(x[pos]))
    out[frac & (x == 0)] = 0.0
    return out


def _eval(node, binding, var):
    if isinstance(node, Constant):
        return np.float64(node.value)
    if isinstance(node, Variable):
        return binding
    if isinstance(node, Unary):
        c = _eval(node.child, binding, var)
        fn = node.fn
        if fn == "neg":
            return -c
        if fn == "ln":
            if np.any(c <= 0):
                _fail("ln of a non-positive number", node, c <= 0, binding, var)
            out = np.log(c)
        elif fn == "sqrt":
            if np.any(c < 0):
                _fail("sqrt of a negative number", node, c < 0, binding, var)
            out = np.sqrt(c)
        elif fn == "sin":
            out = np.sin(c)
        elif fn == "cos":
            out = np.cos(c)
        elif fn == "exp":
            out = np.exp(c)
        elif fn == "abs":
            out = np.abs(c)
        else:
            raise ExprError(f"unknown function {fn!r}")
    else:
        left = _eval(node.left, binding, var)
        right = _eval(node.right, binding, var)
        op = node.op
        if op == "+":
            out = left + right
        elif op == "-":
            out = left - right
        elif op == "*":
            out = left * right
        elif op == "/":
            if np.any(right == 0):
                _fail("division by zero", node, right == 0, binding, var)
            out = left / right
        elif op == "^":
            out = _power(left, right, node, binding, var)
        else:
            raise ExprError(f"unknown operator {op!r}")
    fin = np.isfinite(out)
    if not np.all(fin):
        _fail("non-finite result", node, ~fin, binding, var, ExprOverflowError)
    return out


def eval_expr(expr: Expr, binding):
    """Evaluate ``expr`` with its free variable bound to ``binding``.

    ``binding`` may be a scalar or an array; the result has the broadcast shape
    (a float for scalar input).
    """
    x = np.asarray(binding, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ExprDomainError("non-finite binding", to_text(expr), repr(binding))
    var = next(iter(free_variables(expr)), "x")
    with np.errstate(all="ignore"):
        out = _eval(expr, x, var)
    out = np.broadcast_to(out, x.shape).astype(float)
    return float(out) if out.ndim == 0 else out


def make_callable(expr: Expr):
    return lambda x: eval_expr(expr, x)


# ---------------------------------------------------------------------------
# Symbolic differentiation
# ---------------------------------------------------------------------------

def _is_const(e, value=None):
    return isinstance(e, Constant) and (value is None or e.value == value)


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Constant(a.value + b.value)
    return Binary("+", a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    if _is_const(a) and _is_const(b):
        return Constant(a.value - b.value)
    return Binary("-", a, b)


def _neg(a):
    if _is_const(a):
        return Constant(-a.value)
    if isinstance(a, Unary) and a.fn == "neg":
        return a.child
    return Unary("neg", a)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Constant(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Constant(a.value * b.value)
    return Binary("*", a, b)


def _div(a, b):
    if _is_const(a, 0.0):
        return Constant(0.0)
    if _is_const(b, 1.0):
        return a
    return Binary("/", a, b)


def _pow(a, b):
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return Constant(1.0)
    return Binary("^", a, b)


def diff(expr: Expr, var: str) -> Expr:
    """Symbolic derivative of ``expr`` with respect to ``var``."""
    if isinstance(expr, Constant):
        return Constant(0.0)
    if isinstance(expr, Variable):
        return Constant(1.0 if expr.name == var else 0.0)
    if var not in free_variables(expr):
        return Constant(0.0)
    if isinstance(expr, Unary):
        c = expr.child
        dc = diff(c, var)
        fn = expr.fn
        if fn == "neg":
            return _neg(dc)
        if fn == "sin":
            outer = Unary("cos", c)
        elif fn == "cos":
            outer = _neg(Unary("sin", c))
        elif fn == "exp":
            outer = expr
        elif fn == "ln":
            return _div(dc, c)
        elif fn == "sqrt":
            return _div(dc, _mul(Constant(2.0), expr))
        elif fn == "abs":
            outer = _div(c, expr)
        else:
            raise ExprError(f"cannot differentiate {fn!r}")
        return _mul(outer, dc)
    a, b = expr.left, expr.right
    da, db = diff(a, var), diff(b, var)
    op = expr.op
    if op == "+":
        return _add(da, db)
    if op == "-":
        return _sub(da, db)
    if op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if op == "/":
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, Constant(2.0)))
    # op == "^"
    if var not in free_variables(b):
        p = b.value if _is_const(b) else None
        exponent = Constant(p - 1.0) if p is not None else _sub(b, Constant(1.0))
        return _mul(_mul(b, _pow(a, exponent)), da)
    # d(a^b) = a^b * (b' ln a + b a'/a)
    return _mul(expr, _add(_mul(db, Unary("ln", a)), _div(_mul(b, da), a)))


def constant_value(text) -> float:
    """Evaluate a number or a variable-free expression string such as ``"3/2"``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        v = float(text)
    else:
        v = eval_expr(parse_expr(str(text), variable=None), 0.0)
    if not math.isfinite(v):
        raise ExprError(f"non-finite constant {text!r}")
    return v
