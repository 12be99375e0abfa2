"""Exact linear algebra: affine systems over the expression field and Q-ranks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import poly as P
from .expr import Context, Expr
from .symbols import Symbol


class NonlinearityError(ValueError):
    pass


@dataclass
class AffineEq:
    """Equation  sum_u coeffs[u]*u + const = 0  with unknown-free coefficients."""

    coeffs: dict[int, Expr]
    const: Expr

    def is_trivial(self) -> bool:
        return not self.coeffs and self.const.is_zero()


def affine_split(e: Expr, unknown_ids: set[int]) -> AffineEq:
    """Split an expression into an affine equation in the given unknowns.

    Denominators must not involve unknowns; each monomial may contain at most
    one unknown, with exponent 1.
    """
    ctx = e.ctx
    if P.poly_symbols(e.den) & unknown_ids:
        raise NonlinearityError("denominator involves unknowns")
    coeffs: dict[int, P.Poly] = {}
    const: P.Poly = {}
    for m, c in e.num.items():
        hits = [(s, ex) for s, ex in m if s in unknown_ids]
        if not hits:
            const = P.poly_add(const, {m: c})
        elif len(hits) == 1 and hits[0][1] == 1:
            sid = hits[0][0]
            rest = tuple((s, ex) for s, ex in m if s != sid)
            coeffs[sid] = P.poly_add(coeffs.get(sid, {}), {rest: c})
        else:
            raise NonlinearityError("equation is not affine in the unknowns")
    den = e.den
    return AffineEq(
        {u: Expr(ctx, cp, den) for u, cp in coeffs.items() if cp},
        Expr(ctx, const, den),
    )


def normalize_eq(eq: AffineEq) -> AffineEq:
    """Scale so the lowest-id nonzero coefficient (or the constant) is 1."""
    lead = None
    for u in sorted(eq.coeffs):
        if not eq.coeffs[u].is_zero():
            lead = eq.coeffs[u]
            break
    if lead is None:
        if eq.const.is_zero():
            return eq
        lead = eq.const
    inv = 1 / lead
    return AffineEq({u: c * inv for u, c in eq.coeffs.items()}, eq.const * inv)


def eq_key(eq: AffineEq):
    return (tuple(sorted((u, c.key()) for u, c in eq.coeffs.items())), eq.const.key())


def monic_poly_expr(e: Expr) -> Expr:
    """Canonical polynomial form of a field-level relation.

    Multi-term relations lose their common monomial factor (a unit on the
    generic stratum); a single-monomial relation keeps its symbols with
    exponents reduced to 1.  The leading coefficient is scaled to +1.
    """
    if e.is_zero():
        return e
    num = e.num
    if len(num) == 1:
        (mono, _c), = num.items()
        num = {tuple((s, 1) for s, _ in mono): Fraction(1)}
    else:
        mono = None
        for m in num:
            mono = m if mono is None else P.mono_gcd(mono, m)
            if not mono:
                break
        if mono:
            num = {P.mono_div(m, mono): c for m, c in num.items()}
    _, lc = P.poly_leading(num)
    return Expr(e.ctx, P.poly_scale(num, 1 / lc), P.poly_const(1))


@dataclass
class SolveResult:
    solved: dict[int, Expr]
    free: list[int]
    pivots: list[int]
    inconsistent: bool
    certificates: list[tuple[dict[int, Expr], Expr]]  # (combination over eq index, nonzero const)
    obstructions: list[Expr]  # constants of zero-coefficient rows, monic, deduped
    equation_count: int  # distinct canonical equations (exact duplicates dropped)
    raw_count: int  # nonzero coefficient equations before dedup
    scaled_count: int = 0  # distinct up to field-level rescaling
    equations: list[AffineEq] = field(default_factory=list)


def solve_affine(
    eqs: list[AffineEq],
    unknown_ids: list[int],
    prefer_free=(),
    prefer_solve=(),
) -> SolveResult:
    """Gaussian elimination over the rational-function field.

    Equations are put in canonical form and exact duplicates dropped before
    counting; the raw count and the count up to field-level rescaling are
    both kept.  Pivots avoid `prefer_free` unknowns and favor `prefer_solve`
    unknowns; rows reducing to 0 = nonzero yield inconsistency certificates.
    """
    raw = [e for e in eqs if not e.is_trivial()]
    raw_count = len(raw)
    seen = set()
    distinct: list[AffineEq] = []
    for e in raw:
        k = eq_key(e)
        if k not in seen:
            seen.add(k)
            distinct.append(e)
    scaled_count = len({eq_key(normalize_eq(e)) for e in raw})
    ctx = _ctx_of(distinct)
    # each working row carries its combination over the distinct equations
    work = [[dict(e.coeffs), e.const, {i: ctx.one()}] for i, e in enumerate(distinct)]

    prefer_free = set(prefer_free)
    prefer_solve = set(prefer_solve)

    def col_order(u: int):
        return (u in prefer_free, u not in prefer_solve, u)

    columns = sorted(unknown_ids, key=col_order)
    pivots: list[int] = []
    pivot_rows: dict[int, list] = {}
    used_rows: set[int] = set()

    for col in columns:
        best = None
        for ri, row in enumerate(work):
            if ri in used_rows:
                continue
            c = row[0].get(col)
            if c is None or c.is_zero():
                continue
            score = (not c.is_const(), len(row[0]), ri)
            if best is None or score < best[0]:
                best = (score, ri)
        if best is None:
            continue
        ri = best[1]
        used_rows.add(ri)
        pivots.append(col)
        row = work[ri]
        inv = 1 / row[0][col]
        row[0] = {u: c * inv for u, c in row[0].items() if not (c * inv).is_zero()}
        row[1] = row[1] * inv
        row[2] = {i: c * inv for i, c in row[2].items()}
        pivot_rows[col] = row
        for rj, other in enumerate(work):
            if rj == ri:
                continue
            f = other[0].get(col)
            if f is None or f.is_zero():
                continue
            other[0] = _row_sub(other[0], row[0], f)
            other[1] = other[1] - f * row[1]
            other[2] = _combo_sub(other[2], row[2], f)

    inconsistent = False
    certificates = []
    obstructions = []
    seen_obs = set()
    for ri, row in enumerate(work):
        if ri in used_rows:
            continue
        if not any(not c.is_zero() for c in row[0].values()):
            if not row[1].is_zero():
                inconsistent = True
                certificates.append((row[2], row[1]))
                mono = monic_poly_expr(row[1])
                if mono.key() not in seen_obs:
                    seen_obs.add(mono.key())
                    obstructions.append(mono)

    solved: dict[int, Expr] = {}
    for col in pivots:
        row = pivot_rows[col]
        expr = -row[1]
        for u, c in row[0].items():
            if u != col and not c.is_zero():
                expr = expr - c * _sym_expr(ctx, u)
        solved[col] = expr
    free = [u for u in unknown_ids if u not in solved]
    return SolveResult(
        solved=solved,
        free=free,
        pivots=pivots,
        inconsistent=inconsistent,
        certificates=certificates,
        obstructions=obstructions,
        equation_count=len(distinct),
        raw_count=raw_count,
        scaled_count=scaled_count,
        equations=distinct,
    )


def _ctx_of(eqs):
    for e in eqs:
        return e.const.ctx
    return None


def _sym_expr(ctx: Context, sid: int) -> Expr:
    return ctx.sym(ctx.registry.by_sid(sid))


def _row_sub(a: dict, b: dict, f: Expr) -> dict:
    out = dict(a)
    for u, c in b.items():
        cur = out.get(u)
        val = (cur - f * c) if cur is not None else (-f * c)
        if val.is_zero():
            out.pop(u, None)
        else:
            out[u] = val
    return out


def _combo_sub(a: dict, b: dict, f: Expr) -> dict:
    out = dict(a)
    for i, c in b.items():
        cur = out.get(i)
        val = (cur - f * c) if cur is not None else (-f * c)
        if val.is_zero():
            out.pop(i, None)
        else:
            out[i] = val
    return out


def verify_certificate(cert, equations: list[AffineEq]) -> bool:
    """Expand a certificate combination and confirm 0 = nonzero."""
    combo, const = cert
    ctx = const.ctx
    coeffs: dict[int, Expr] = {}
    total_const = ctx.zero()
    for i, f in combo.items():
        eq = equations[i]
        for u, c in eq.coeffs.items():
            cur = coeffs.get(u, ctx.zero())
            coeffs[u] = cur + f * c
        total_const = total_const + f * eq.const
    linear_zero = all(c.is_zero() for c in coeffs.values())
    return linear_zero and (not total_const.is_zero()) and total_const == const


# --- exact rank over Q -------------------------------------------------------


def q_rank(rows: list[dict[int, Fraction]], ncols: int | None = None) -> int:
    """Rank of a sparse matrix of Fractions."""
    work = [dict(r) for r in rows if r]
    rank = 0
    used_cols = set()
    while work:
        row = work.pop(0)
        if not row:
            continue
        col = min(row)
        piv = row[col]
        rank += 1
        used_cols.add(col)
        inv = 1 / piv
        row = {c: v * inv for c, v in row.items()}
        nxt = []
        for other in work:
            f = other.get(col)
            if f:
                other = dict(other)
                for c, v in row.items():
                    nv = other.get(c, Fraction(0)) - f * v
                    if nv:
                        other[c] = nv
                    else:
                        other.pop(c, None)
            if other:
                nxt.append(other)
        work = nxt
    return rank


def q_nullity(rows: list[dict[int, Fraction]], ncols: int) -> int:
    return ncols - q_rank(rows, ncols)
