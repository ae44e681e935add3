"""Closed-form expressions in the single variable ``u``.

Grammar (standard precedence, unary minus binds looser than powers)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') ['-'] INT)?
    atom   := NUMBER | 'u' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | exp | ln
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ExpressionSyntaxError, WavesError

FUNCS = ("sin", "cos", "exp", "ln")


@dataclass(frozen=True, eq=False)
class Node:
    op: str
    args: tuple = ()
    value: float | int | None = None
    span: tuple = field(default=(0, 0))

    def key(self):
        return (self.op, self.value, tuple(a.key() for a in self.args))

    def __eq__(self, other):
        return isinstance(other, Node) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        return pretty(self)

    def __call__(self, u):
        return evaluate(self, u)


# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))")


def _tokenize(text):
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos,
                                        {"number", "u", "pi", "function", "(", "operator"})
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("eof", "", n))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def advance(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        what = "end of input" if tok[0] == "eof" else repr(tok[1])
        raise ExpressionSyntaxError(f"unexpected {what}", tok[2], expected)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "eof":
            self.fail({"+", "-", "*", "/", "^", ")", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            rhs = self.term()
            node = Node("add" if op == "+" else "sub", (node, rhs), span=(node.span[0], rhs.span[1]))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            rhs = self.unary()
            node = Node("mul" if op == "*" else "div", (node, rhs), span=(node.span[0], rhs.span[1]))
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.advance()
            inner = self.unary()
            if tok[1] == "+":
                return inner
            return Node("neg", (inner,), span=(tok[2], inner.span[1]))
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.advance()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.advance()
                sign = -1
            t = self.peek()
            if t[0] != "num" or not t[1].isdigit():
                self.fail({"integer exponent"})
            self.advance()
            return Node("pow", (base,), value=sign * int(t[1]), span=(base.span[0], t[2] + len(t[1])))
        return base

    def atom(self):
        tok = self.peek()
        kind, text, pos = tok
        if kind == "num":
            self.advance()
            return Node("num", value=float(text), span=(pos, pos + len(text)))
        if kind == "name":
            self.advance()
            if text == "u":
                return Node("var", span=(pos, pos + 1))
            if text == "pi":
                return Node("pi", span=(pos, pos + 2))
            if text in FUNCS:
                if self.peek()[1] != "(":
                    self.fail({"("})
                self.advance()
                arg = self.expr()
                close = self.peek()
                if close[1] != ")":
                    self.fail({")"})
                self.advance()
                return Node(text, (arg,), span=(pos, close[2] + 1))
            raise ExpressionSyntaxError(f"unknown name {text!r}", pos, {"u", "pi", *FUNCS})
        if kind == "op" and text == "(":
            self.advance()
            inner = self.expr()
            if self.peek()[1] != ")":
                self.fail({")"})
            self.advance()
            return inner
        self.fail({"number", "u", "pi", "function", "("})


def parse_expression(text: str) -> Node:
    return _Parser(text).parse()


# ---------------------------------------------------------------- printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _prec(node):
    if node.op == "num" and node.value < 0:
        return 3
    return _PREC.get(node.op, 5)


def _fmt_num(x):
    x = float(x)
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def pretty(node: Node) -> str:
    op = node.op

    def wrap(child, min_prec):
        s = pretty(child)
        return f"({s})" if _prec(child) < min_prec else s

    if op == "num":
        if node.value < 0:
            return "-" + _fmt_num(-node.value)
        return _fmt_num(node.value)
    if op == "var":
        return "u"
    if op == "pi":
        return "pi"
    if op in FUNCS:
        return f"{op}({pretty(node.args[0])})"
    if op == "neg":
        return "-" + wrap(node.args[0], 3)
    if op == "pow":
        return f"{wrap(node.args[0], 5)}^{node.value}"
    a, b = node.args
    sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
    p = _PREC[op]
    return wrap(a, p) + sym + wrap(b, p + 1)


# ---------------------------------------------------------------- evaluation

def compile_expression(node: Node):
    """Return a numpy-vectorised callable u -> value."""
    op = node.op
    if op == "num":
        c = float(node.value)
        return lambda u: np.full(np.shape(u), c) if np.ndim(u) else c
    if op == "pi":
        return lambda u: np.full(np.shape(u), math.pi) if np.ndim(u) else math.pi
    if op == "var":
        return lambda u: u
    if op in FUNCS:
        inner = compile_expression(node.args[0])
        fn = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "ln": np.log}[op]
        return lambda u: fn(inner(u))
    if op == "neg":
        inner = compile_expression(node.args[0])
        return lambda u: -inner(u)
    if op == "pow":
        inner = compile_expression(node.args[0])
        n = int(node.value)
        if n >= 0:
            return lambda u: inner(u) ** n
        return lambda u: 1.0 / inner(u) ** (-n)
    a, b = (compile_expression(x) for x in node.args)
    if op == "add":
        return lambda u: a(u) + b(u)
    if op == "sub":
        return lambda u: a(u) - b(u)
    if op == "mul":
        return lambda u: a(u) * b(u)
    return lambda u: a(u) / b(u)


def evaluate(node: Node, u):
    out = compile_expression(node)(np.asarray(u, dtype=float) if np.ndim(u) else float(u))
    return out


def check_denominators(node: Node, interval, n=1001):
    """Sample every division denominator and log argument on ``interval``."""
    us = np.linspace(interval[0], interval[1], n)
    stack = [node]
    while stack:
        nd = stack.pop()
        stack.extend(nd.args)
        if nd.op == "div" or (nd.op == "pow" and nd.value < 0):
            den = nd.args[1] if nd.op == "div" else nd.args[0]
            vals = compile_expression(den)(us)
            if np.any(np.abs(vals) < 1e-300):
                raise WavesError(f"denominator {pretty(den)} vanishes on {tuple(interval)}")
        if nd.op == "ln":
            vals = compile_expression(nd.args[0])(us)
            if np.any(vals <= 0):
                raise WavesError(f"ln argument {pretty(nd.args[0])} not positive on {tuple(interval)}")


# ---------------------------------------------------------------- differentiation

def _num(x):
    return Node("num", value=float(x))


def _is_num(n, val=None):
    return n.op == "num" and (val is None or n.value == val)


def _add(a, b):
    if _is_num(a, 0):
        return b
    if _is_num(b, 0):
        return a
    if _is_num(a) and _is_num(b):
        return _num(a.value + b.value)
    if b.op == "neg":
        return _sub(a, b.args[0])
    return Node("add", (a, b))


def _sub(a, b):
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return _neg(b)
    if _is_num(a) and _is_num(b):
        return _num(a.value - b.value)
    if b.op == "neg":
        return _add(a, b.args[0])
    return Node("sub", (a, b))


def _neg(a):
    if _is_num(a):
        return _num(-a.value)
    if a.op == "neg":
        return a.args[0]
    return Node("neg", (a,))


def _mul(a, b):
    if _is_num(a, 0) or _is_num(b, 0):
        return _num(0)
    if _is_num(a, 1):
        return b
    if _is_num(b, 1):
        return a
    if _is_num(a) and _is_num(b):
        return _num(a.value * b.value)
    if _is_num(b):
        a, b = b, a
    if a.op == "neg":
        return _neg(_mul(a.args[0], b))
    if b.op == "neg":
        return _neg(_mul(a, b.args[0]))
    if _is_num(a) and b.op == "mul" and _is_num(b.args[0]):
        return _mul(_num(a.value * b.args[0].value), b.args[1])
    return Node("mul", (a, b))


def _div(a, b):
    if _is_num(a, 0):
        return _num(0)
    if _is_num(b, 1):
        return a
    return Node("div", (a, b))


def _pow(a, n):
    if n == 0:
        return _num(1)
    if n == 1:
        return a
    if _is_num(a) and n > 0:
        return _num(a.value ** n)
    return Node("pow", (a,), value=int(n))


def _d(node: Node) -> Node:
    op = node.op
    if op in ("num", "pi"):
        return _num(0)
    if op == "var":
        return _num(1)
    if op == "neg":
        return _neg(_d(node.args[0]))
    if op in ("add", "sub"):
        a, b = node.args
        return (_add if op == "add" else _sub)(_d(a), _d(b))
    if op == "mul":
        a, b = node.args
        return _add(_mul(_d(a), b), _mul(a, _d(b)))
    if op == "div":
        a, b = node.args
        return _div(_sub(_mul(_d(a), b), _mul(a, _d(b))), _pow(b, 2))
    if op == "pow":
        a = node.args[0]
        n = int(node.value)
        return _mul(_mul(_num(n), _pow(a, n - 1)), _d(a))
    w = node.args[0]
    dw = _d(w)
    if op == "sin":
        return _mul(Node("cos", (w,)), dw)
    if op == "cos":
        return _neg(_mul(Node("sin", (w,)), dw))
    if op == "exp":
        return _mul(node, dw)
    if op == "ln":
        return _div(dw, w)
    raise WavesError(f"cannot differentiate {op}")


def differentiate(node: Node, order: int = 1) -> Node:
    """Exact symbolic derivative of the given order (with light simplification)."""
    if order < 0:
        raise ValueError("order must be non-negative")
    out = node
    for _ in range(order):
        out = _d(out)
    return out
