"""Scalar expression language used by grid specifications.

Grammar (binding tightest first): ``^`` (right associative), unary minus,
``* /``, ``+ -``.  The exponent of ``^`` may itself carry a unary minus, so
``2^-3`` parses as ``2^(-3)``.  Both ASCII ``-`` and U+2212 are accepted as
minus signs.  Spans are byte offsets into the UTF-8 encoded source.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "log": np.log,
    "abs": np.abs,
}
CONSTANTS = ("pi", "lambda", "phi")
BINARY_OPS = ("+", "-", "*", "/", "^")


class ExprError(ValueError):
    """Base class for parse and evaluation errors; carries a byte span."""

    def __init__(self, message: str, span: tuple[int, int] | None = None):
        self.span = span
        where = f" at byte {span[0]}" if span is not None else ""
        super().__init__(message + where)


class ExprSyntaxError(ExprError):
    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        msg = message
        if self.expected:
            msg += ", expected " + " or ".join(repr(e) for e in self.expected)
        super().__init__(msg, (position, position))


class UnboundNameError(ExprError):
    pass


class DomainError(ExprError):
    pass


@dataclass(frozen=True)
class Node:
    kind: str  # num | var | const | neg | bin | call
    value: object = None  # number, name, operator or function name
    children: tuple["Node", ...] = ()
    span: tuple[int, int] = (0, 0)

    def same_shape(self, other: "Node") -> bool:
        """Structural equality ignoring spans."""
        if self.kind != other.kind or len(self.children) != len(other.children):
            return False
        if self.kind == "num":
            if float(self.value) != float(other.value):
                return False
        elif self.value != other.value:
            return False
        return all(a.same_shape(b) for a, b in zip(self.children, other.children))

    def variables(self) -> set[str]:
        out = {self.value} if self.kind == "var" else set()
        for c in self.children:
            out |= c.variables()
        return out

    def constants(self) -> set[str]:
        out = {self.value} if self.kind == "const" else set()
        for c in self.children:
            out |= c.constants()
        return out


_TOKEN = re.compile(
    rb"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+\-]?\d+)?)"
    rb"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    rb"|(?P<op>\xe2\x88\x92|[-+*/^()]))"
)


def _tokenize(data: bytes):
    pos = 0
    toks = []
    while pos < len(data):
        if data[pos:].strip() == b"":
            break
        m = _TOKEN.match(data, pos)
        if m is None:
            start = pos + (len(data[pos:]) - len(data[pos:].lstrip()))
            raise ExprSyntaxError("unexpected character", start)
        for kind in ("num", "id", "op"):
            text = m.group(kind)
            if text is not None:
                start = m.start(kind)
                if text == "−".encode():
                    text = b"-"
                toks.append((kind, text.decode(), start, m.end(kind)))
                break
        pos = m.end()
    toks.append(("end", "", len(data), len(data)))
    return toks


class _Parser:
    def __init__(self, source: str):
        self.toks = _tokenize(source.encode("utf-8"))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.peek()
        if t[1] != text or t[0] == "end":
            raise ExprSyntaxError(
                "unexpected end of input" if t[0] == "end" else f"unexpected {t[1]!r}",
                t[2],
                (text,),
            )
        return self.take()

    def parse(self):
        if self.peek()[0] == "end":
            raise ExprSyntaxError("empty expression", 0, ("number", "name", "(", "-"))
        node = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ExprSyntaxError(f"unexpected {t[1]!r}", t[2], ("operator", "end of input"))
        return node

    def expr(self):
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            right = self.term()
            left = Node("bin", op, (left, right), (left.span[0], right.span[1]))
        return left

    def term(self):
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            right = self.unary()
            left = Node("bin", op, (left, right), (left.span[0], right.span[1]))
        return left

    def unary(self):
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.take()
            inner = self.unary()
            return Node("neg", None, (inner,), (t[2], inner.span[1]))
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            exponent = self.unary()
            return Node("bin", "^", (base, exponent), (base.span[0], exponent.span[1]))
        return base

    def primary(self):
        t = self.take()
        kind, text, start, end = t
        if kind == "num":
            return Node("num", float(text), (), (start, end))
        if kind == "id":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise ExprError(f"unknown function {text!r}", (start, end))
                self.take()
                arg = self.expr()
                close = self.expect(")")
                return Node("call", text, (arg,), (start, close[3]))
            if text in CONSTANTS:
                return Node("const", text, (), (start, end))
            return Node("var", text, (), (start, end))
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        what = "unexpected end of input" if kind == "end" else f"unexpected {text!r}"
        raise ExprSyntaxError(what, start, ("number", "name", "("))


def parse(source: str) -> Node:
    """Parse ``source`` into an AST."""
    return _Parser(source).parse()


def to_source(node: Node) -> str:
    """Fully parenthesized rendering; ``parse(to_source(a))`` has the shape of ``a``."""
    if node.kind == "num":
        return repr(float(node.value))
    if node.kind in ("var", "const"):
        return node.value
    if node.kind == "neg":
        return f"(-{to_source(node.children[0])})"
    if node.kind == "call":
        return f"{node.value}({to_source(node.children[0])})"
    a, b = node.children
    return f"({to_source(a)}{node.value}{to_source(b)})"


def check_names(node: Node, coordinates) -> None:
    """Bind-time check that all variables are coordinate names."""
    unknown = sorted(node.variables() - set(coordinates))
    if unknown:
        raise UnboundNameError(f"unknown coordinate(s) {unknown}; allowed {sorted(coordinates)}")


def evaluate(node: Node, env: Mapping[str, object], constants: Mapping[str, float] | None = None):
    """Evaluate ``node``; ``env`` values may be floats or numpy arrays."""
    constants = dict(constants or {})
    constants.setdefault("pi", math.pi)
    with np.errstate(all="ignore"):
        return _eval(node, env, constants)


def _eval(node, env, consts):
    k = node.kind
    if k == "num":
        return node.value
    if k == "var":
        if node.value not in env:
            raise UnboundNameError(f"unbound variable {node.value!r}", node.span)
        return env[node.value]
    if k == "const":
        if node.value not in consts:
            raise UnboundNameError(f"unbound constant {node.value!r}", node.span)
        return consts[node.value]
    if k == "neg":
        return -_eval(node.children[0], env, consts)
    if k == "call":
        x = _eval(node.children[0], env, consts)
        if node.value == "sqrt" and np.any(np.asarray(x) < 0):
            raise DomainError("sqrt of negative value", node.span)
        if node.value == "log" and np.any(np.asarray(x) <= 0):
            raise DomainError("log of non-positive value", node.span)
        out = FUNCTIONS[node.value](x)
        return float(out) if np.ndim(out) == 0 else out
    a = _eval(node.children[0], env, consts)
    b = _eval(node.children[1], env, consts)
    op = node.value
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero", node.span)
        return a / b
    if np.any((np.asarray(a) < 0) & (np.asarray(b) != np.round(b))):
        raise DomainError("non-integer power of negative value", node.span)
    out = np.power(a, b) if (np.ndim(a) or np.ndim(b)) else float(a) ** float(b)
    return out


def compile_expr(source, coordinates, constants=None):
    """Parse, bind-check and return ``f(**coords) -> array``."""
    if isinstance(source, (int, float)):
        value = float(source)
        return lambda **env: value
    node = parse(source)
    check_names(node, coordinates)
    missing = node.constants() - set(constants or {}) - {"pi"}
    if missing:
        raise UnboundNameError(f"unbound constant(s) {sorted(missing)}")
    return lambda **env: evaluate(node, env, constants)
