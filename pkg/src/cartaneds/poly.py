"""Sparse multivariate polynomials over exact rationals.

A monomial is a tuple of (sid, exponent) pairs sorted by sid with positive
exponents; a polynomial is a dict mapping monomials to nonzero Fractions.
These are plain data manipulated by module functions; the Expr layer wraps
them into canonical fractions.
"""

from __future__ import annotations

from fractions import Fraction

Mono = tuple
Poly = dict

ONE_M: Mono = ()


def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        sa, ea = a[i]
        sb, eb = b[j]
        if sa == sb:
            out.append((sa, ea + eb))
            i += 1
            j += 1
        elif sa < sb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def mono_divides(a: Mono, b: Mono) -> bool:
    """True when monomial a divides b."""
    j = 0
    for sa, ea in a:
        while j < len(b) and b[j][0] < sa:
            j += 1
        if j >= len(b) or b[j][0] != sa or b[j][1] < ea:
            return False
        j += 1
    return True


def mono_div(b: Mono, a: Mono) -> Mono:
    """b / a, assuming divisibility."""
    da = dict(a)
    out = []
    for s, e in b:
        e -= da.get(s, 0)
        if e < 0:
            raise ArithmeticError("monomial division not exact")
        if e:
            out.append((s, e))
    return tuple(out)


def mono_gcd(a: Mono, b: Mono) -> Mono:
    db = dict(b)
    out = []
    for s, e in a:
        eb = db.get(s, 0)
        if eb:
            out.append((s, min(e, eb)))
    return tuple(out)


def mono_degree(m: Mono) -> int:
    return sum(e for _, e in m)


def mono_vars(m: Mono):
    return [s for s, _ in m]


def mono_key(m: Mono):
    # Graded order: total degree first, then earlier-registered symbols with
    # higher exponents rank higher.  Any fixed total order works; this one is
    # stable under registry growth.
    return (mono_degree(m), tuple((-s, e) for s, e in m))


def poly_zero() -> Poly:
    return {}


def poly_const(c) -> Poly:
    c = Fraction(c)
    return {ONE_M: c} if c else {}


def poly_sym(sid: int) -> Poly:
    return {((sid, 1),): Fraction(1)}


def poly_is_zero(p: Poly) -> bool:
    return not p


def poly_is_const(p: Poly) -> bool:
    return not p or (len(p) == 1 and ONE_M in p)


def poly_const_value(p: Poly) -> Fraction:
    if not p:
        return Fraction(0)
    return p[ONE_M]


def poly_add(a: Poly, b: Poly) -> Poly:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for m, c in b.items():
        s = out.get(m)
        if s is None:
            out[m] = c
        else:
            s = s + c
            if s:
                out[m] = s
            else:
                del out[m]
    return out


def poly_neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def poly_sub(a: Poly, b: Poly) -> Poly:
    return poly_add(a, poly_neg(b))


def poly_scale(a: Poly, c) -> Poly:
    c = Fraction(c)
    if not c:
        return {}
    if c == 1:
        return a
    return {m: cc * c for m, cc in a.items()}


def poly_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = mono_mul(ma, mb)
            c = out.get(m)
            if c is None:
                out[m] = ca * cb
            else:
                c = c + ca * cb
                if c:
                    out[m] = c
                else:
                    del out[m]
    return out


def poly_mul_mono(a: Poly, m: Mono, c) -> Poly:
    c = Fraction(c)
    if not c or not a:
        return {}
    return {mono_mul(ma, m): ca * c for ma, ca in a.items()}


def poly_pow(a: Poly, n: int) -> Poly:
    if n < 0:
        raise ValueError("poly_pow: negative exponent")
    out = poly_const(1)
    base = a
    while n:
        if n & 1:
            out = poly_mul(out, base)
        base = poly_mul(base, base) if n > 1 else base
        n >>= 1
    return out


def poly_leading(p: Poly) -> tuple[Mono, Fraction]:
    m = max(p, key=mono_key)
    return m, p[m]


def poly_degree_in(p: Poly, sid: int) -> int:
    deg = 0
    for m in p:
        for s, e in m:
            if s == sid and e > deg:
                deg = e
    return deg


def poly_symbols(p: Poly) -> set[int]:
    out: set[int] = set()
    for m in p:
        for s, _ in m:
            out.add(s)
    return out


def poly_partial(p: Poly, sid: int) -> Poly:
    """Formal partial derivative with respect to the symbol sid."""
    out: Poly = {}
    for m, c in p.items():
        for i, (s, e) in enumerate(m):
            if s == sid:
                nm = m[:i] + ((s, e - 1),) + m[i + 1 :] if e > 1 else m[:i] + m[i + 1 :]
                cc = out.get(nm, Fraction(0)) + c * e
                if cc:
                    out[nm] = cc
                elif nm in out:
                    del out[nm]
                break
    return out


def poly_eval(p: Poly, point: dict[int, Fraction]) -> Fraction:
    total = Fraction(0)
    for m, c in p.items():
        v = c
        for s, e in m:
            v *= point[s] ** e
        total += v
    return total


def poly_subs(p: Poly, values: dict[int, Poly]) -> Poly:
    """Substitute polynomials for symbols (used by Expr-level substitution)."""
    out: Poly = {}
    for m, c in p.items():
        term = poly_const(c)
        for s, e in m:
            rep = values.get(s)
            factor = poly_pow(rep, e) if rep is not None else {((s, e),): Fraction(1)}
            term = poly_mul(term, factor)
        out = poly_add(out, term)
    return out


def poly_divexact(a: Poly, b: Poly) -> Poly:
    """Exact division a / b; raises ArithmeticError if the remainder is nonzero."""
    if not b:
        raise ZeroDivisionError("poly_divexact by zero")
    if poly_is_const(b):
        return poly_scale(a, 1 / poly_const_value(b))
    lm, lc = poly_leading(b)
    quot: Poly = {}
    rem = dict(a)
    while rem:
        m, c = poly_leading(rem)
        if not mono_divides(lm, m):
            raise ArithmeticError("inexact polynomial division")
        qm = mono_div(m, lm)
        qc = c / lc
        quot[qm] = quot.get(qm, Fraction(0)) + qc
        rem = poly_sub(rem, poly_mul_mono(b, qm, qc))
    return {m: c for m, c in quot.items() if c}


# --- gcd -------------------------------------------------------------------


def _mono_content(p: Poly) -> Mono:
    it = iter(p)
    g = next(it)
    for m in it:
        g = mono_gcd(g, m)
        if not g:
            break
    return g


def _univariate(p: Poly, sid: int) -> dict[int, Poly]:
    """View p as a univariate polynomial in sid with Poly coefficients."""
    out: dict[int, Poly] = {}
    for m, c in p.items():
        deg = 0
        rest = []
        for s, e in m:
            if s == sid:
                deg = e
            else:
                rest.append((s, e))
        out.setdefault(deg, {})[tuple(rest)] = c
    return out


def _from_univariate(u: dict[int, Poly], sid: int) -> Poly:
    out: Poly = {}
    for deg, coeff in u.items():
        factor = ((sid, deg),) if deg else ONE_M
        for m, c in coeff.items():
            out[mono_mul(m, factor)] = c
    return out


def _uni_degree(u) -> int:
    return max(u) if u else -1


def _uni_scale_poly(u, q: Poly):
    return {d: poly_mul(c, q) for d, c in u.items()}


def _uni_sub(u, v):
    out = dict(u)
    for d, c in v.items():
        s = poly_sub(out.get(d, {}), c)
        if s:
            out[d] = s
        elif d in out:
            del out[d]
    return out


def _uni_content(u) -> Poly:
    g: Poly = {}
    for c in u.values():
        g = poly_gcd(g, c)
        if poly_is_const(g) and not poly_is_zero(g):
            break
    return g


def _uni_primitive(u):
    cont = _uni_content(u)
    if poly_is_const(cont):
        return u, cont
    return {d: poly_divexact(c, cont) for d, c in u.items()}, cont


def _pseudo_rem(u, v, sid: int):
    """Pseudo-remainder of u by v as univariate polynomials in sid."""
    dv = _uni_degree(v)
    lv = v[dv]
    r = u
    while r and _uni_degree(r) >= dv:
        dr = _uni_degree(r)
        lr = r[dr]
        # lv * r - lr * x^(dr-dv) * v
        r = _uni_sub(_uni_scale_poly(r, lv), {d + dr - dv: poly_mul(c, lr) for d, c in v.items()})
        r = {d: c for d, c in r.items() if c}
        if _uni_degree(r) == dr:  # leading term must have cancelled
            raise ArithmeticError("pseudo-division failed to reduce degree")
    return r


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Multivariate gcd over the rationals, normalized monic in the global order.

    Primitive PRS with monomial-content fast paths; adequate for the small,
    very sparse polynomials that arise in structure-equation work.
    """
    if not a:
        return _monic(b)
    if not b:
        return _monic(a)
    if poly_is_const(a) or poly_is_const(b):
        return poly_const(1)
    if a is b or a == b:
        return _monic(a)
    ma, mb = _mono_content(a), _mono_content(b)
    mg = mono_gcd(ma, mb)
    a0 = {mono_div(m, ma): c for m, c in a.items()} if ma else a
    b0 = {mono_div(m, mb): c for m, c in b.items()} if mb else b
    mono_part: Poly = {mg: Fraction(1)}
    if poly_is_const(a0) or poly_is_const(b0):
        return mono_part
    shared = poly_symbols(a0) & poly_symbols(b0)
    if not shared:
        return mono_part
    # Cheapest main variable: smallest min-degree keeps the PRS short.
    sid = min(shared, key=lambda s: (min(poly_degree_in(a0, s), poly_degree_in(b0, s)), s))
    ua, ub = _univariate(a0, sid), _univariate(b0, sid)
    ua, ca = _uni_primitive(ua)
    ub, cb = _uni_primitive(ub)
    cg = poly_gcd(ca, cb)
    if _uni_degree(ua) < _uni_degree(ub):
        ua, ub = ub, ua
    while ub:
        r = _pseudo_rem(ua, ub, sid)
        if not r:
            break
        r, _ = _uni_primitive(r)
        ua, ub = ub, r
    # Loop leaves the gcd candidate in ub (last nonzero remainder divides) or,
    # when ub emptied via the while condition, in ua.
    g = _from_univariate(ub, sid) if ub else _from_univariate(ua, sid)
    g = poly_mul(poly_mul(g, cg), mono_part)
    return _monic(g)


def _monic(p: Poly) -> Poly:
    if not p:
        return p
    _, lc = poly_leading(p)
    if lc == 1:
        return p
    return poly_scale(p, 1 / lc)


def poly_content_int(p: Poly) -> Fraction:
    """Positive rational c with p/c having coprime integer coefficients."""
    from math import gcd as igcd

    num = 0
    den = 1
    for c in p.values():
        num = igcd(num, c.numerator)
        den = den * c.denominator // igcd(den, c.denominator)
    if num == 0:
        return Fraction(1)
    return Fraction(num, den)
