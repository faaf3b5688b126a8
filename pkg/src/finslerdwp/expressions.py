"""Expression language for coordinate functions (warpings, metric
coefficients).

Grammar (EBNF)::

    expression := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := atom ("^" integer)?
    atom       := number | name | name "(" expression ")" | "(" expression ")"
    integer    := ["-"] digit+
    number     := digit+ ["." digit*] | "." digit+  (with optional exponent)

Operator precedence, tightest first: ``^``, unary ``-``, ``*`` ``/``,
``+`` ``-``.  Exponents are restricted to literal integers and compile
to repeated multiplication, so evaluation stays inside the ring (no
fractional-power branch cuts on jets).  Recognised functions: ``exp``,
``log``, ``sin``, ``cos``, ``sqrt``.

Variable references are resolved to positions in the declared variable
list at parse time; evaluation indexes a value vector and never hashes
names.  The same evaluator runs on floats, numpy arrays and jets via the
dispatchers in :mod:`finslerdwp.jets`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from . import jets

__all__ = [
    "ExpressionError",
    "Expression",
    "parse_expression",
    "Const",
    "Var",
    "Neg",
    "Call",
    "BinOp",
    "Pow",
    "FUNCTIONS",
]

FUNCTIONS = {
    "exp": jets.exp,
    "log": jets.log,
    "sin": jets.sin,
    "cos": jets.cos,
    "sqrt": jets.sqrt,
}


class ExpressionError(ValueError):
    """Parse or lookup failure, carrying the byte offset in the source."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Union[Const, Var, Neg, Call, BinOp, Pow]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            offset = len(text) - len(stripped)
            raise ExpressionError(f"unexpected character {text[offset]!r}", offset)
        if m.lastgroup == "number":
            tokens.append(("number", float(m.group("number")), m.start("number")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.var_index = {}
        for i, name in enumerate(variables):
            if name in FUNCTIONS:
                raise ExpressionError(
                    f"variable name {name!r} collides with a function name", 0
                )
            self.var_index[name] = i

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ExpressionError(f"expected {op!r}", offset)
        self.advance()

    def parse(self) -> Node:
        node = self.expression()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected trailing input {value!r}", offset)
        return node

    def expression(self) -> Node:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = BinOp(value, node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, value, offset = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            exponent = self._integer_literal()
            return Pow(base, exponent)
        return base

    def _integer_literal(self) -> int:
        sign = 1
        kind, value, offset = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            sign = -1
            kind, value, offset = self.peek()
        if kind != "number" or value != int(value):
            raise ExpressionError("exponent must be an integer literal", offset)
        self.advance()
        return sign * int(value)

    def atom(self) -> Node:
        kind, value, offset = self.advance()
        if kind == "number":
            return Const(value)
        if kind == "name":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if value not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {value!r}", offset)
                self.advance()
                arg = self.expression()
                self.expect_op(")")
                return Call(value, arg)
            if value not in self.var_index:
                raise ExpressionError(f"unknown variable {value!r}", offset)
            return Var(value, self.var_index[value])
        if kind == "op" and value == "(":
            node = self.expression()
            self.expect_op(")")
            return node
        what = "end of input" if kind == "end" else repr(value)
        raise ExpressionError(f"expected a value, got {what}", offset)


def _evaluate(node: Node, values):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return values[node.index]
    if isinstance(node, Neg):
        return -_evaluate(node.arg, values)
    if isinstance(node, Call):
        return FUNCTIONS[node.fn](_evaluate(node.arg, values))
    if isinstance(node, Pow):
        base = _evaluate(node.base, values)
        return base**node.exponent
    lhs = _evaluate(node.lhs, values)
    rhs = _evaluate(node.rhs, values)
    if node.op == "+":
        return lhs + rhs
    if node.op == "-":
        return lhs - rhs
    if node.op == "*":
        return lhs * rhs
    return lhs / rhs


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "pow": 4}


def _format(node: Node, parent_prec: int = 0) -> str:
    if isinstance(node, Const):
        text = repr(node.value)
        return text[:-2] if text.endswith(".0") else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({_format(node.arg, 0)})"
    if isinstance(node, Neg):
        inner = _format(node.arg, _PRECEDENCE["neg"])
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PRECEDENCE["neg"] else text
    if isinstance(node, Pow):
        base = _format(node.base, _PRECEDENCE["pow"] + 1)
        text = f"{base}^{node.exponent}"
        return f"({text})" if parent_prec > _PRECEDENCE["pow"] else text
    prec = _PRECEDENCE[node.op]
    lhs = _format(node.lhs, prec)
    # - and / are left-associative: parenthesise a same-precedence rhs
    rhs = _format(node.rhs, prec + 1)
    text = f"{lhs} {node.op} {rhs}"
    return f"({text})" if parent_prec > prec else text


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with its declared variable list."""

    root: Node
    variables: tuple

    def __call__(self, values):
        """Evaluate on a positional value vector (floats, arrays or jets)."""
        if len(values) != len(self.variables):
            raise ExpressionError(
                f"expected {len(self.variables)} values, got {len(values)}", 0
            )
        return _evaluate(self.root, values)

    def evaluate_env(self, env):
        """Evaluate with a name -> scalar mapping."""
        try:
            values = [env[name] for name in self.variables]
        except KeyError as missing:
            raise ExpressionError(f"missing binding for variable {missing}", 0)
        return _evaluate(self.root, values)

    def __str__(self):
        return _format(self.root)


def parse_expression(text: str, variables: Sequence[str]) -> Expression:
    """Parse ``text`` over the ordered variable list.

    Raises :class:`ExpressionError` with a byte offset on syntax errors
    and on identifiers outside ``variables``.
    """
    if not text or not text.strip():
        raise ExpressionError("empty expression", 0)
    parser = _Parser(text, variables)
    return Expression(parser.parse(), tuple(variables))
