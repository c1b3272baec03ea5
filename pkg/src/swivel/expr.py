"""A small arithmetic expression language for user-supplied metrics.

Expressions are parsed into a tree of tuples; the user's text never
reaches ``eval``. Trees differentiate symbolically and are printed back to
Python source (only grammar nodes, so the source is safe to compile) for
fast evaluation over numpy arrays and inside numba kernels. A metric
given as strings therefore gets exact partial derivatives. The grammar is in
docs/expression_grammar.md.
"""

import math
import re

import numpy as np

from .errors import ConfigError

FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
}
VARIABLES = ("u", "v")
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^()])
""", re.VERBOSE)


class ExpressionError(ConfigError):
    pass


def tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExpressionError(f"unexpected character {text[pos]!r} at position {pos} in {text!r}")
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            out.append(("op", "^") if tok == "**" else (kind, tok))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        tok = self.take()
        if tok != ("op", op):
            raise ExpressionError(f"expected {op!r} in {self.text!r}, got {tok[1]!r}")

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise ExpressionError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            # right associative, and binds tighter than a unary minus on its left
            return ("^", base, self.unary())
        return base

    def atom(self):
        kind, tok = self.take()
        if kind == "num":
            return ("const", float(tok))
        if kind == "name":
            if tok in VARIABLES:
                return ("var", tok)
            if tok in CONSTANTS:
                return ("const", CONSTANTS[tok])
            if tok in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", tok, arg)
            raise ExpressionError(f"unknown name {tok!r} in {self.text!r}")
        if (kind, tok) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionError(f"unexpected {tok!r} in {self.text!r}")


def parse(text):
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression must be a non-empty string")
    return _Parser(text).parse()


def evaluate(node, u, v):
    kind = node[0]
    if kind == "const":
        return node[1] + 0.0 * u
    if kind == "var":
        return (u if node[1] == "u" else v) + 0.0
    if kind == "neg":
        return -evaluate(node[1], u, v)
    if kind == "call":
        return FUNCTIONS[node[1]](evaluate(node[2], u, v))
    if kind == "log":
        return np.log(evaluate(node[1], u, v))
    a = evaluate(node[1], u, v)
    b = evaluate(node[2], u, v)
    if kind == "+":
        return a + b
    if kind == "-":
        return a - b
    if kind == "*":
        return a * b
    if kind == "/":
        return a / b
    if kind == "^":
        return np.power(a, b)
    raise ExpressionError(f"bad node {kind!r}")


# -- symbolic differentiation -------------------------------------------------------------

ZERO = ("const", 0.0)
ONE = ("const", 1.0)


def _is_const(n, value=None):
    return n[0] == "const" and (value is None or n[1] == value)


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return ("const", a[1] + b[1])
    return ("+", a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return ("const", a[1] - b[1])
    if _is_const(a, 0.0):
        return _neg(b)
    return ("-", a, b)


def _neg(a):
    if _is_const(a):
        return ("const", -a[1])
    if a[0] == "neg":
        return a[1]
    return ("neg", a)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return ("const", a[1] * b[1])
    return ("*", a, b)


def _div(a, b):
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return ("/", a, b)


def diff(node, var):
    """d(node)/d(var) as a new tree."""
    kind = node[0]
    if kind == "const":
        return ZERO
    if kind == "var":
        return ONE if node[1] == var else ZERO
    if kind == "neg":
        return _neg(diff(node[1], var))
    if kind == "+":
        return _add(diff(node[1], var), diff(node[2], var))
    if kind == "-":
        return _sub(diff(node[1], var), diff(node[2], var))
    if kind == "*":
        a, b = node[1], node[2]
        return _add(_mul(diff(a, var), b), _mul(a, diff(b, var)))
    if kind == "/":
        a, b = node[1], node[2]
        return _div(_sub(_mul(diff(a, var), b), _mul(a, diff(b, var))), _mul(b, b))
    if kind == "^":
        a, b = node[1], node[2]
        da, db = diff(a, var), diff(b, var)
        if _is_const(db, 0.0):
            if _is_const(da, 0.0):
                return ZERO
            return _mul(_mul(b, ("^", a, _sub(b, ONE))), da)
        # general power: a^b * (b' ln a + b a'/a)
        return _mul(node, _add(_mul(db, ("log", a)), _div(_mul(b, da), a)))
    if kind == "log":
        return _div(diff(node[1], var), node[1])
    if kind == "call":
        f, a = node[1], node[2]
        da = diff(a, var)
        if _is_const(da, 0.0):
            return ZERO
        outer = {
            "exp": node,
            "sin": ("call", "cos", a),
            "cos": _neg(("call", "sin", a)),
            "sinh": ("call", "cosh", a),
            "cosh": ("call", "sinh", a),
        }[f]
        return _mul(outer, da)
    raise ExpressionError(f"bad node {kind!r}")


def to_string(node):
    kind = node[0]
    if kind == "const":
        return repr(node[1])
    if kind == "var":
        return node[1]
    if kind == "neg":
        return f"(-{to_string(node[1])})"
    if kind == "call":
        return f"{node[1]}({to_string(node[2])})"
    if kind == "log":
        return f"log({to_string(node[1])})"
    return f"({to_string(node[1])} {node[0]} {to_string(node[2])})"


def to_python(node, lib="np"):
    """Python source for ``node`` calling functions from the module named ``lib``."""
    kind = node[0]
    if kind == "const":
        # numpy scalars so constant subexpressions overflow to inf instead of raising
        return f"{lib}.float64({node[1]!r})" if lib == "np" else f"({node[1]!r})"
    if kind == "var":
        return node[1]
    if kind == "neg":
        return f"(-{to_python(node[1], lib)})"
    if kind == "call":
        return f"{lib}.{node[1]}({to_python(node[2], lib)})"
    if kind == "log":
        return f"{lib}.log({to_python(node[1], lib)})"
    op = "**" if kind == "^" else kind
    return f"({to_python(node[1], lib)} {op} {to_python(node[2], lib)})"


class Expression:
    """A parsed expression in the chart variables u, v."""

    def __init__(self, text):
        self.text = text
        self.tree = parse(text) if isinstance(text, str) else text
        self._partials = {}
        self._fn = eval(f"lambda u, v: {to_python(self.tree)}", {"np": np})

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        with np.errstate(all="ignore"):
            return self._fn(u, v) + 0.0 * (u + v)

    def partial(self, var):
        if var not in VARIABLES:
            raise ValueError(f"variable must be one of {VARIABLES}")
        if var not in self._partials:
            self._partials[var] = Expression(diff(self.tree, var))
        return self._partials[var]

    def __repr__(self):
        text = self.text if isinstance(self.text, str) else to_string(self.tree)
        return f"Expression({text!r})"
