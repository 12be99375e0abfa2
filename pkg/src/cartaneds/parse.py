"""Recursive-descent parser for the scalar expression grammar.

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := integer | identifier | '(' expr ')' | 'exp' '(' arg ')'

identifiers match [A-Za-z][A-Za-z0-9_]*; an identifier whose suffix after the
final underscore consists of registered single-character direction labels and
whose prefix names a known symbol denotes an iterated formal derivative
(f_xy).  exp arguments are restricted to +/-s and +/-2*s for a symbol s.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import Context, Expr
from .symbols import COORDINATE, DERIVED, FUNCTION

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.pos = pos


def tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ParseError("unexpected character", text, pos)
            break
        if m.lastgroup != "op" or m.group("op") is not None:
            kind = m.lastgroup
            out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, ctx: Context, directions, auto_register: bool):
        self.text = text
        self.ctx = ctx
        self.toks = tokenize(text)
        self.i = 0
        self.directions = set(directions or ())
        self.auto_register = auto_register

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        kind, val, pos = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}", self.text, pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, _, pos = self.peek()
        if kind != "end":
            raise ParseError("trailing input", self.text, pos)
        return e

    def expr(self) -> Expr:
        negate = False
        if self.peek()[1] == "-":
            self.next()
            negate = True
        e = self.term()
        if negate:
            e = -e
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            f = self.factor()
            if op == "*":
                e = e * f
            else:
                if f.is_zero():
                    _, _, pos = self.peek()
                    raise ParseError("division by zero", self.text, pos)
                e = e / f
        return e

    def factor(self) -> Expr:
        e = self.base()
        if self.peek()[1] == "^":
            self.next()
            kind, val, pos = self.next()
            neg = False
            if val == "-":
                neg = True
                kind, val, pos = self.next()
            if kind != "int":
                raise ParseError("expected integer exponent", self.text, pos)
            e = e ** (-int(val) if neg else int(val))
        return e

    def base(self) -> Expr:
        kind, val, pos = self.next()
        if kind == "int":
            return self.ctx.const(Fraction(int(val)))
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if val == "exp":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return self._exp(inner, pos)
            return self._identifier(val, pos)
        raise ParseError("expected a value", self.text, pos)

    def _exp(self, inner: Expr, pos: int) -> Expr:
        if inner.is_zero():
            return self.ctx.one()
        if len(inner.num) == 1 and inner.is_polynomial():
            (mono, coeff), = inner.num.items()
            if len(mono) == 1 and mono[0][1] == 1 and coeff in (1, -1, 2, -2):
                base = self.ctx.registry.by_sid(mono[0][0])
                return self.ctx.exp_expr(base, int(coeff))
        raise ParseError("exp argument must be +/-s or +/-2*s for a symbol s", self.text, pos)

    def _identifier(self, name: str, pos: int) -> Expr:
        reg = self.ctx.registry
        sym = reg.get(name)
        if sym is not None:
            return self.ctx.sym(sym)
        if "_" in name:
            head, _, suffix = name.rpartition("_")
            base = reg.get(head)
            if (
                base is not None
                and suffix
                and base.kind in (FUNCTION, COORDINATE)
                and all(c in self.directions for c in suffix)
            ):
                for d in sorted(suffix):
                    base = reg.derived(base, d)
                return self.ctx.sym(base)
        if self.auto_register:
            return self.ctx.sym(reg.function(name))
        raise ParseError(f"unknown symbol {name!r}", self.text, pos)


def parse_expr(text: str, ctx: Context, directions=None, auto_register: bool = False) -> Expr:
    """Parse `text` into a canonical Expr over `ctx`.

    `directions` lists the single-character direction labels that may appear
    as derivative suffixes (f_xy).  With auto_register, unknown identifiers
    become fresh function symbols; otherwise they are errors.
    """
    return _Parser(text, ctx, directions, auto_register).parse()
