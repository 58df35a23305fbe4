"""Recursive-descent parser for vector-field expressions.

Grammar (EBNF, version 1)::

    expression = sum ;
    sum        = product , { ( "+" | "-" ) , product } ;
    product    = unary , { ( "*" | "/" ) , unary } ;
    unary      = ( "+" | "-" ) , unary | power ;
    power      = atom , [ ( "^" | "**" ) , unary ] ;
    atom       = number | identifier | call | "(" , expression , ")" ;
    call       = function , "(" , expression , ")" ;
    function   = "sin" | "cos" | "exp" | "log" | "sqrt" ;
    number     = digits , [ "." , [ digits ] ] , [ exponent ]
               | "." , digits , [ exponent ] ;
    exponent   = ( "e" | "E" ) , [ "+" | "-" ] , digits ;
    identifier = letter , { letter | digit | "_" } ;

Powers are right-associative and bind tighter than unary minus, so ``-x^2``
is ``-(x^2)`` and ``2^-1`` is ``0.5``. Identifiers resolve first to the
declared variables, then to the parameter table; anything else is an error.
Whitespace (including newlines) separates tokens and is otherwise ignored.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

GRAMMAR_VERSION = 1
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


class ParseError(ValueError):
    """Syntax or name-resolution error with a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        self.reason = message
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Num:
    value: float
    src: str = field(default="", compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    index: int
    src: str = field(default="", compare=False)


@dataclass(frozen=True)
class Param:
    name: str
    value: float
    src: str = field(default="", compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"
    src: str = field(default="", compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    src: str = field(default="", compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    src: str = field(default="", compare=False)


Node = Union[Num, Var, Param, Unary, Binary, Call]


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with its variable and parameter tables."""

    root: Node
    variables: tuple[str, ...]
    params: Mapping[str, float]
    text: str

    @property
    def free_vars(self) -> frozenset[str]:
        out = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                out.add(node.name)
            elif isinstance(node, (Unary, Call)):
                stack.append(node.arg)
            elif isinstance(node, Binary):
                stack.extend((node.left, node.right))
        return frozenset(out)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            line, col = _line_col(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    start = text.rfind("\n", 0, pos) + 1
    return line, pos - start + 1


class _Parser:
    def __init__(self, text: str, variables: Sequence[str], params: Mapping[str, float]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.vars = {name: k for k, name in enumerate(variables)}
        self.params = params

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.tok
        line, col = _line_col(self.text, tok.pos)
        return ParseError(message, line, col)

    def take(self) -> _Tok:
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "end":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.take()

    def src(self, start: int) -> str:
        end = self.toks[self.i - 1].pos + len(self.toks[self.i - 1].text)
        return self.text[start:end]

    def parse(self) -> Node:
        node = self.sum()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r} after complete expression")
        return node

    def sum(self) -> Node:
        start = self.tok.pos
        node = self.product()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.take().text
            node = Binary(op, node, self.product(), self.src(start))
        return node

    def product(self) -> Node:
        start = self.tok.pos
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.take().text
            node = Binary(op, node, self.unary(), self.src(start))
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text in ("+", "-"):
            start = self.tok.pos
            op = self.take().text
            arg = self.unary()
            return arg if op == "+" else Unary("-", arg, self.src(start))
        return self.power()

    def power(self) -> Node:
        start = self.tok.pos
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text in ("^", "**"):
            self.take()
            return Binary("^", base, self.unary(), self.src(start))
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text), tok.text)
        if tok.kind == "ident":
            self.take()
            if tok.text in FUNCTIONS:
                if self.tok.text != "(":
                    raise self.error(f"function {tok.text!r} needs a parenthesized argument")
                self.take()
                arg = self.sum()
                if self.tok.text == ",":
                    raise self.error(f"function {tok.text!r} takes exactly one argument")
                self.expect(")")
                return Call(tok.text, arg, self.src(tok.pos))
            if self.tok.text == "(":
                raise self.error(f"unknown function {tok.text!r}", tok)
            if tok.text in self.vars:
                return Var(tok.text, self.vars[tok.text], tok.text)
            if tok.text in self.params:
                return Param(tok.text, float(self.params[tok.text]), tok.text)
            raise self.error(f"unknown identifier {tok.text!r}", tok)
        if tok.text == "(" and tok.kind == "op":
            self.take()
            node = self.sum()
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"expected an operand, found {found}")


def parse(text: str, variables: Sequence[str], params: Mapping[str, float] | None = None) -> Expression:
    """Parse ``text`` over the named variables.

    Parameters
    ----------
    text : str
        Expression source.
    variables : sequence of str
        Variable names, in coordinate order ``z_1, ..., z_n``.
    params : mapping, optional
        Parameter values bound at parse time.

    Raises
    ------
    ParseError
        On syntax errors, unknown identifiers or function arity mismatch.
    """
    params = dict(params or {})
    clash = set(params) & set(variables)
    if clash:
        raise ValueError(f"names used both as variable and parameter: {sorted(clash)}")
    for name in list(variables) + list(params):
        if name in FUNCTIONS or not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", name):
            raise ValueError(f"invalid name {name!r}")
    root = _Parser(text, variables, params).parse()
    return Expression(root, tuple(variables), params, text)
