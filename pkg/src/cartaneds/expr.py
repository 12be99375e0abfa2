"""Canonical exact rational expressions over a symbol registry.

An Expr is a reduced fraction of two sparse polynomials: numerator and
denominator share no factor, the denominator is monic in the global monomial
order, and registered monomial rewrite rules (opaque-exponential relations
such as exp[f]*exp[-f] -> 1) have been applied to fixpoint.  Equal values
therefore have identical representations and the zero test is exact.
"""

from __future__ import annotations

from fractions import Fraction

from . import poly as P
from .symbols import EXP, PARAMETER, Symbol, SymbolRegistry


class ExprError(ArithmeticError):
    pass


class DenominatorVanishes(ExprError):
    """Raised by eval_at when the denominator is zero at the sample point."""


class RewriteCycleError(ValueError):
    pass


_REWRITE_CAP = 200


class Context:
    """Symbol registry plus rewrite rules and recorded side conditions.

    All Exprs belong to a context; arithmetic across contexts is rejected.
    Rules must be registered before the expressions they are meant to reduce
    are built.
    """

    def __init__(self):
        self.registry = SymbolRegistry()
        self.rewrites: list[tuple[P.Mono, P.Poly]] = []
        self.side_conditions: list[str] = []
        self._zero = Expr(self, {}, P.poly_const(1))
        self._one = Expr(self, P.poly_const(1), P.poly_const(1))

    # -- symbol helpers -----------------------------------------------------

    def coordinate(self, name: str) -> Symbol:
        return self.registry.coordinate(name)

    def coordinates(self, names) -> list[Symbol]:
        return [self.registry.coordinate(n) for n in names]

    def function(self, name: str, depends=None) -> Symbol:
        return self.registry.function(name, depends)

    def functions(self, names, depends=None) -> list[Symbol]:
        return [self.registry.function(n, depends) for n in names]

    def parameter(self, name: str) -> Symbol:
        return self.registry.parameter(name)

    def exp(self, base: Symbol, sign: int = 1) -> Symbol:
        """exp symbol for e^(sign*base); pairs get exp[b]*exp[-b] -> 1 installed."""
        partner = f"exp[{'-' if sign > 0 else ''}{base.name}]"
        sym = self.registry.exp(base, sign)
        other = self.registry.get(partner)
        if other is not None:
            pat = P.mono_mul(((sym.sid, 1),), ((other.sid, 1),))
            if not any(r[0] == pat for r in self.rewrites):
                self.add_rewrite_mono(pat, P.poly_const(1))
        return sym

    # -- rewrite rules ------------------------------------------------------

    def add_rewrite(self, pattern: "Expr", replacement: "Expr") -> None:
        """Register a monomial rewrite rule pattern -> replacement.

        The pattern must be a single monomial with coefficient 1; the
        replacement must be polynomial.  Cyclic rule sets are rejected.
        """
        if len(pattern.num) != 1 or not P.poly_is_const(pattern.den):
            raise ValueError("rewrite pattern must be a single monomial")
        (mono, coeff), = pattern.num.items()
        if coeff != 1 or not mono:
            raise ValueError("rewrite pattern must be a monic non-constant monomial")
        if not P.poly_is_const(replacement.den):
            raise ValueError("rewrite replacement must be polynomial")
        self.add_rewrite_mono(mono, replacement.num)

    def add_rewrite_mono(self, mono: P.Mono, replacement: P.Poly) -> None:
        rules = self.rewrites + [(mono, replacement)]
        heads = [set(P.mono_vars(m)) for m, _ in rules]
        outs = [P.poly_symbols(r) for _, r in rules]
        # A head symbol reachable from its own rule's output means a cycle.
        edges: dict[int, set[int]] = {}
        for hs, os in zip(heads, outs):
            for h in hs:
                edges.setdefault(h, set()).update(os)
        seen: dict[int, int] = {}

        def dfs(v: int) -> None:
            seen[v] = 1
            for w in edges.get(v, ()):  # grey node on the stack -> cycle
                if seen.get(w) == 1:
                    raise RewriteCycleError("rewrite rules form a cycle")
                if w not in seen:
                    dfs(w)
            seen[v] = 2

        for hs in heads:
            for h in hs:
                if h not in seen:
                    dfs(h)
        self.rewrites.append((mono, replacement))

    def assume_nonzero(self, text: str) -> None:
        if text not in self.side_conditions:
            self.side_conditions.append(text)

    def rewrite_for_symbol(self, sym: Symbol) -> "Expr | None":
        """The replacement when a rule's pattern is exactly this symbol."""
        pat = ((sym.sid, 1),)
        for mono, rep in self.rewrites:
            if mono == pat:
                return self.make(rep)
        return None

    def _apply_rewrites(self, p: P.Poly) -> P.Poly:
        if not self.rewrites or not p:
            return p
        for _ in range(_REWRITE_CAP):
            changed = False
            out: P.Poly = {}
            extra: P.Poly = {}
            for m, c in p.items():
                for pat, rep in self.rewrites:
                    if P.mono_divides(pat, m):
                        extra = P.poly_add(extra, P.poly_mul_mono(rep, P.mono_div(m, pat), c))
                        changed = True
                        break
                else:
                    out[m] = out.get(m, Fraction(0)) + c
            if not changed:
                return p
            p = P.poly_add({m: c for m, c in out.items() if c}, extra)
        raise RewriteCycleError("rewrite application did not terminate")

    # -- Expr factories -------------------------------------------------------

    def zero(self) -> "Expr":
        return self._zero

    def one(self) -> "Expr":
        return self._one

    def const(self, c) -> "Expr":
        return Expr(self, P.poly_const(c), P.poly_const(1))

    def sym(self, s: Symbol | str) -> "Expr":
        if isinstance(s, str):
            s = self.registry[s]
        return self.make(P.poly_sym(s.sid))

    def exp_expr(self, base: Symbol, k: int) -> "Expr":
        """e^(k*base) for k in {-2,-1,1,2} as a power of an opaque exp symbol."""
        if k == 0:
            return self.one()
        sign = 1 if k > 0 else -1
        sym = self.exp(base, sign)
        return self.make({((sym.sid, abs(k)),): Fraction(1)})

    def make(self, num: P.Poly, den: P.Poly | None = None) -> "Expr":
        return Expr(self, *self._normalize(num, P.poly_const(1) if den is None else den))

    # -- normalization --------------------------------------------------------

    def _exp_partner(self, sid: int):
        sym = self.registry.by_sid(sid)
        if sym.kind != EXP:
            return None
        other = self.registry.get(f"exp[{'-' if sym.sign > 0 else ''}{sym.base.name}]")
        return other

    def _clear_exp_denominator(self, num: P.Poly, den: P.Poly) -> tuple[P.Poly, P.Poly]:
        # A partnered exp symbol dividing the whole denominator is a unit:
        # multiply through by the partner so e.g. 1/exp(f)^2 becomes exp(-f)^2.
        while True:
            common = None
            for m in den:
                common = m if common is None else P.mono_gcd(common, m)
                if not common:
                    break
            if not common:
                return num, den
            scale = P.ONE_M
            for sid, e in common:
                other = self._exp_partner(sid)
                if other is not None:
                    scale = P.mono_mul(scale, ((other.sid, e),))
            if scale == P.ONE_M:
                return num, den
            num = self._apply_rewrites(P.poly_mul_mono(num, scale, 1))
            den = self._apply_rewrites(P.poly_mul_mono(den, scale, 1))

    def _normalize(self, num: P.Poly, den: P.Poly) -> tuple[P.Poly, P.Poly]:
        if P.poly_is_zero(den):
            raise ZeroDivisionError("zero denominator")
        num = self._apply_rewrites(num)
        den = self._apply_rewrites(den)
        if P.poly_is_zero(num):
            return {}, P.poly_const(1)
        num, den = self._clear_exp_denominator(num, den)
        if not P.poly_is_const(den):
            g = P.poly_gcd(num, den)
            if not P.poly_is_const(g):
                num = P.poly_divexact(num, g)
                den = P.poly_divexact(den, g)
        if P.poly_is_const(den):
            c = P.poly_const_value(den)
            return (P.poly_scale(num, 1 / c), P.poly_const(1))
        _, lc = P.poly_leading(den)
        if lc != 1:
            num = P.poly_scale(num, 1 / lc)
            den = P.poly_scale(den, 1 / lc)
        return num, den


class Expr:
    """Immutable canonical rational expression; construct through a Context."""

    __slots__ = ("ctx", "num", "den", "_key")

    def __init__(self, ctx: Context, num: P.Poly, den: P.Poly):
        self.ctx = ctx
        self.num = num
        self.den = den
        self._key = None

    # -- predicates -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def is_const(self) -> bool:
        return P.poly_is_const(self.num) and P.poly_is_const(self.den)

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ExprError(f"{self} is not a rational constant")
        return P.poly_const_value(self.num)

    def is_polynomial(self) -> bool:
        return P.poly_is_const(self.den)

    def symbols(self) -> set[Symbol]:
        sids = P.poly_symbols(self.num) | P.poly_symbols(self.den)
        return {self.ctx.registry.by_sid(s) for s in sids}

    def key(self):
        if self._key is None:
            self._key = (frozenset(self.num.items()), frozenset(self.den.items()))
        return self._key

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash(self.key())

    def __bool__(self) -> bool:
        return not self.is_zero()

    # -- arithmetic -------------------------------------------------------------

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.ctx is not self.ctx:
                raise ExprError("mixing expressions from different contexts")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ctx.const(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        if self.den == o.den:
            return self.ctx.make(P.poly_add(self.num, o.num), self.den)
        num = P.poly_add(P.poly_mul(self.num, o.den), P.poly_mul(o.num, self.den))
        return self.ctx.make(num, P.poly_mul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return Expr(self.ctx, P.poly_neg(self.num), self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return self.ctx.zero()
        return self.ctx.make(P.poly_mul(self.num, o.num), P.poly_mul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o.is_zero():
            raise ZeroDivisionError("division by zero expression")
        return self.ctx.make(P.poly_mul(self.num, o.den), P.poly_mul(self.den, o.num))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o / self

    def __pow__(self, n: int):
        if n == 0:
            return self.ctx.one()
        if n < 0:
            if self.is_zero():
                raise ZeroDivisionError("zero to a negative power")
            return self.ctx.make(P.poly_pow(self.den, -n), P.poly_pow(self.num, -n))
        return self.ctx.make(P.poly_pow(self.num, n), P.poly_pow(self.den, n))

    # -- operations --------------------------------------------------------------

    def eval_at(self, point: dict[Symbol, Fraction]) -> Fraction:
        """Exact value at a rational point; every symbol present must be assigned."""
        pt = {s.sid: Fraction(v) for s, v in point.items()}
        missing = [self.ctx.registry.by_sid(s).name
                   for s in (P.poly_symbols(self.num) | P.poly_symbols(self.den)) if s not in pt]
        if missing:
            raise ExprError(f"unassigned symbols in eval_at: {sorted(missing)}")
        dv = P.poly_eval(self.den, pt)
        if dv == 0:
            raise DenominatorVanishes(str(self))
        return P.poly_eval(self.num, pt) / dv

    def subs(self, values: dict[Symbol, "Expr"]) -> "Expr":
        """Substitute expressions for symbols, renormalizing."""
        if not values:
            return self
        polys: dict[int, tuple[P.Poly, P.Poly]] = {}
        for s, v in values.items():
            polys[s.sid] = (v.num, v.den)

        def sub_poly(p: P.Poly) -> tuple[P.Poly, P.Poly]:
            num_acc: P.Poly = {}
            den_acc = P.poly_const(1)
            # common-denominator accumulation term by term
            terms = []
            for m, c in p.items():
                tn = P.poly_const(c)
                td = P.poly_const(1)
                for s, e in m:
                    rep = polys.get(s)
                    if rep is None:
                        tn = P.poly_mul(tn, {((s, e),): Fraction(1)})
                    else:
                        tn = P.poly_mul(tn, P.poly_pow(rep[0], e))
                        td = P.poly_mul(td, P.poly_pow(rep[1], e))
                terms.append((tn, td))
            for tn, td in terms:
                num_acc = P.poly_add(P.poly_mul(num_acc, td), P.poly_mul(tn, den_acc))
                den_acc = P.poly_mul(den_acc, td)
            return num_acc, den_acc

        n_num, n_den = sub_poly(self.num)
        d_num, d_den = sub_poly(self.den)
        return self.ctx.make(P.poly_mul(n_num, d_den), P.poly_mul(d_num, n_den))

    def partial(self, s: Symbol) -> "Expr":
        """Formal partial derivative treating all other symbols as constants."""
        dn = P.poly_partial(self.num, s.sid)
        dd = P.poly_partial(self.den, s.sid)
        if P.poly_is_const(self.den):
            return self.ctx.make(dn, self.den)
        num = P.poly_sub(P.poly_mul(dn, self.den), P.poly_mul(self.num, dd))
        return self.ctx.make(num, P.poly_mul(self.den, self.den))

    # -- printing ----------------------------------------------------------------

    def __str__(self) -> str:
        from .printing import expr_str

        return expr_str(self)

    def __repr__(self) -> str:
        return f"Expr({self})"
