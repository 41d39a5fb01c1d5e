"""Recursive-descent parser for closed-form scalar expressions.

Grammar (``^`` binds tightest and associates to the right, unary minus sits
between ``^`` and ``*``/``/``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := atom ("^" unary)?
    atom    := NUMBER | CONST | IDENT | FUNC "(" expr ")" | "(" expr ")"

Implicit multiplication is not part of the language, so ``2x`` is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

FUNCTIONS = frozenset(
    {"exp", "ln", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt"}
)
CONSTANTS = {"pi": 3.141592653589793}
RESERVED = FUNCTIONS | frozenset(CONSTANTS)


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        detail = f"{message} at byte offset {offset}"
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)


class ExprBindError(ExprError):
    def __init__(self, unknown: set[str], coordinates):
        self.unknown = frozenset(unknown)
        super().__init__(
            f"unresolved name(s) {sorted(unknown)}; chart coordinates are {list(coordinates)}"
        )


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


def variables(e: Expr) -> set[str]:
    """Names of all coordinate references in ``e``."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return variables(e.arg)
    return set()


def bind(e: Expr, coordinates) -> Expr:
    """Check that every coordinate reference in ``e`` is one of ``coordinates``."""
    unknown = variables(e) - set(coordinates)
    if unknown:
        raise ExprBindError(unknown, coordinates)
    return e


# -- printing ----------------------------------------------------------------


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_source(e: Expr) -> str:
    """Render ``e`` as text that parses back to the same tree."""
    if isinstance(e, Num):
        return _fmt_number(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str) -> Iterator[_Token]:
    pos = 0
    byte = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte)
        text = m.group()
        if m.lastgroup != "ws":
            yield _Token(m.lastgroup, text, byte)
        byte += len(text.encode("utf-8"))
        pos = m.end()
    yield _Token("end", "", byte)


class _Parser:
    def __init__(self, source: str):
        self.tokens = list(_tokenize(source))
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _fail(self, expected: set[str]):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"unexpected {what}", t.offset, frozenset(expected))

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self._fail({"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self._accept("-"):
            inner = self.unary()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Neg(inner)
        if self._accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text))
        if t.kind == "ident":
            self.i += 1
            if t.text in FUNCTIONS:
                if not self._accept("("):
                    self._fail({"("})
                arg = self.expr()
                if not self._accept(")"):
                    self._fail({")", "+", "-", "*", "/", "^"})
                return Call(t.text, arg)
            if t.text in CONSTANTS:
                return Const(t.text)
            if self.tok.kind == "op" and self.tok.text == "(":
                raise ExprSyntaxError(f"unknown function {t.text!r}", t.offset)
            return Var(t.text)
        if self._accept("("):
            e = self.expr()
            if not self._accept(")"):
                self._fail({")", "+", "-", "*", "/", "^"})
            return e
        self._fail({"number", "identifier", "function", "(", "-"})


def parse(source: str) -> Expr:
    """Parse expression text into an AST.

    Raises :class:`ExprSyntaxError` (with byte offset and expected tokens) on
    malformed or empty input.
    """
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        return Num(float(source))
    return _Parser(source).parse()


def as_expr(e) -> Expr:
    """Coerce text, numbers or existing nodes to an AST."""
    if isinstance(e, (Num, Var, Const, Neg, BinOp, Call)):
        return e
    return parse(e)


def constant_value(e: Expr) -> float | None:
    """Value of a coordinate-free expression, or None if it references coordinates."""
    if variables(e):
        return None
    from .evaluate import eval_float

    return float(eval_float(e, (), ()))
