"""Deterministic text rendering for expressions and forms (grammar round-trips)."""

from __future__ import annotations

from fractions import Fraction

from . import poly as P
from .symbols import EXP


def _sym_str(ctx, sid: int) -> str:
    s = ctx.registry.by_sid(sid)
    if s.kind == EXP:
        inner = f"-{s.base.name}" if s.sign < 0 else s.base.name
        return f"exp({inner})"
    return s.name


def _mono_str(ctx, m: P.Mono) -> str:
    parts = []
    for sid, e in m:
        t = _sym_str(ctx, sid)
        parts.append(t if e == 1 else f"{t}^{e}")
    return "*".join(parts)


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def poly_str(ctx, p: P.Poly) -> str:
    if not p:
        return "0"
    monos = sorted(p, key=P.mono_key, reverse=True)
    out = []
    for m in monos:
        c = p[m]
        neg = c < 0
        ac = -c if neg else c
        if not m:
            body = _frac_str(ac)
        elif ac == 1:
            body = _mono_str(ctx, m)
        else:
            body = f"{_frac_str(ac)}*{_mono_str(ctx, m)}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f"- {body}" if neg else f"+ {body}")
    return " ".join(out)


def expr_str(e) -> str:
    ns = poly_str(e.ctx, e.num)
    if P.poly_is_const(e.den):
        return ns
    ds = poly_str(e.ctx, e.den)
    if len(e.num) > 1:
        ns = f"({ns})"
    return f"{ns}/({ds})"
