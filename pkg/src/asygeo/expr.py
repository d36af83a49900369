"""Recursive-descent parser for warp-profile expressions.

Grammar (whitespace insignificant, ``^`` right-associative)::

    expr    := term (("+"|"-") term)*
    term    := factor (("*"|"/") factor)*
    factor  := unary ("^" factor)?
    unary   := "-" unary | primary
    primary := number | "t" | "e" | "pi" | func "(" expr ")" | "(" expr ")"
    func    := "sin" | "cos" | "exp" | "ln" | "sinh" | "cosh"

Parsed trees can be evaluated linearly or in the log domain; the latter
returns ``(sign, ln|value|)`` so that ``sinh(t)`` at ``t = 2000`` stays finite.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExpressionError

FUNCTIONS = ("sin", "cos", "exp", "ln", "sinh", "cosh")

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]+)|(.))")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "t", "e" or "pi"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), start))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ExpressionError(f"unexpected character {ch!r}", start)
            tokens.append(("op", ch, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        base = self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def unary(self) -> Node:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in ("t", "e", "pi"):
                return Var(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise ExpressionError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionError(f"expected a number, identifier or '(', found {found}", pos)


def parse(text: str) -> Node:
    """Parse ``text`` into an expression tree; raises :class:`ExpressionError`."""
    return _Parser(text).parse()


def evaluate(node: Node, t):
    """Evaluate linearly (numpy semantics, overflow gives inf)."""
    s, lg = evaluate_log(node, t)
    with np.errstate(over="ignore"):
        return s * np.exp(lg)


def _ladd(s1, l1, s2, l2):
    m = np.maximum(l1, l2)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        v = s1 * np.exp(l1 - safe) + s2 * np.exp(l2 - safe)
    with np.errstate(divide="ignore"):
        lg = safe + np.log(np.abs(v))
    s = np.sign(v)
    both_zero = (s1 == 0) & (s2 == 0)
    lg = np.where(both_zero, -np.inf, lg)
    s = np.where(both_zero, 0.0, s)
    # an infinite operand dominates
    inf1 = np.isposinf(l1) & ~np.isposinf(l2)
    inf2 = np.isposinf(l2) & ~np.isposinf(l1)
    lg = np.where(inf1 | inf2, np.inf, lg)
    s = np.where(inf1, s1, np.where(inf2, s2, s))
    return s, lg


def _linear(s, lg):
    with np.errstate(over="ignore"):
        return s * np.exp(lg)


def _from_linear(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.sign(x), np.log(np.abs(x))


def _log_sinh_abs(x):
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        small = np.log(np.sinh(np.minimum(ax, 20.0)))
    big = ax - math.log(2.0) + np.log1p(-np.exp(-2.0 * np.maximum(ax, 20.0)))
    return np.where(ax < 20.0, small, big)


def evaluate_log(node: Node, t):
    """Evaluate ``node`` at ``t`` returning ``(sign, ln|value|)`` arrays."""
    t = np.asarray(t, dtype=float)
    if isinstance(node, Num):
        s, lg = _from_linear(node.value)
        return np.broadcast_to(s, t.shape), np.broadcast_to(lg, t.shape)
    if isinstance(node, Var):
        if node.name == "t":
            return _from_linear(t)
        c = math.e if node.name == "e" else math.pi
        return np.ones_like(t), np.full_like(t, math.log(c))
    if isinstance(node, Neg):
        s, lg = evaluate_log(node.arg, t)
        return -s, lg
    if isinstance(node, BinOp):
        s1, l1 = evaluate_log(node.left, t)
        s2, l2 = evaluate_log(node.right, t)
        if node.op == "+":
            return _ladd(s1, l1, s2, l2)
        if node.op == "-":
            return _ladd(s1, l1, -s2, l2)
        if node.op == "*":
            return s1 * s2, np.where((s1 == 0) | (s2 == 0), -np.inf, l1 + l2)
        if node.op == "/":
            with np.errstate(invalid="ignore"):
                lg = np.where(s2 == 0, np.nan, l1 - l2)
            return s1 * s2, np.where(s1 == 0, -np.inf, lg)
        # power: exponent is needed linearly
        expo = _linear(s2, l2)
        with np.errstate(invalid="ignore"):
            lg = np.where(s1 == 0, np.where(expo > 0, -np.inf, np.nan), expo * l1)
            odd = np.where(np.mod(expo, 2.0) == 1.0, -1.0, 1.0)
            integral = np.floor(expo) == expo
            s = np.where(s1 > 0, 1.0, np.where(s1 == 0, 0.0, np.where(integral, odd, np.nan)))
        lg = np.where(np.isnan(s), np.nan, lg)
        return np.where(np.isnan(s), 0.0, s), lg
    if isinstance(node, Call):
        s, lg = evaluate_log(node.arg, t)
        x = _linear(s, lg)
        f = node.func
        if f == "exp":
            return np.ones_like(x), x
        if f == "ln":
            with np.errstate(invalid="ignore"):
                val = np.where(s > 0, lg, np.nan)
            return _from_linear(val)
        if f == "sinh":
            return np.sign(x), _log_sinh_abs(x)
        if f == "cosh":
            ax = np.abs(x)
            return np.ones_like(x), ax - math.log(2.0) + np.log1p(np.exp(-2.0 * ax))
        if f == "sin":
            return _from_linear(np.sin(x))
        if f == "cos":
            return _from_linear(np.cos(x))
    raise TypeError(f"not an expression node: {node!r}")


def to_string(node: Node) -> str:
    """Fully parenthesised rendering, handy for diagnostics."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    return f"{node.func}({to_string(node.arg)})"
