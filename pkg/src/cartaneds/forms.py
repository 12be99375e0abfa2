"""Exterior algebra over a declared coframe.

Generators are named 1-forms (and, for unknown exterior derivatives, fresh
abstract 2-form generators D[name]), forms are graded sums of wedge monomials
with Expr coefficients, and the exterior derivative is driven by structure
rules plus a scalar derivation table.
"""

from __future__ import annotations

from dataclasses import dataclass

from .derivation import DerivationTable
from .expr import Context, Expr

UNKNOWN = "unknown"


class FormError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    name: str
    gid: int
    degree: int = 1


class Coframe:
    """Ordered list of generators; a subset is marked as the independence set.

    `directions` maps scalar-derivative direction labels to generator names
    (e.g. "x" -> "dx"); it defaults to the identity on generator names, which
    is the right choice for abstract coframes.
    """

    def __init__(self, ctx: Context, names, independence=None, directions=None):
        self.ctx = ctx
        self.gens: list[Generator] = []
        self._by_name: dict[str, Generator] = {}
        self.directions = dict(directions) if directions else {}
        self._identity_directions = not directions
        for n in names:
            self.add_generator(n)
        self.independence = tuple(independence) if independence is not None else tuple(names)
        for n in self.independence:
            if n not in self._by_name:
                raise FormError(f"independence generator {n!r} not in coframe")

    def add_generator(self, name: str, degree: int = 1) -> Generator:
        if name in self._by_name:
            raise FormError(f"duplicate generator {name!r}")
        g = Generator(name, len(self.gens), degree)
        self.gens.append(g)
        self._by_name[name] = g
        if self._identity_directions and degree == 1:
            self.directions[name] = name
        return g

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> Generator:
        try:
            return self._by_name[name]
        except KeyError:
            raise FormError(f"unknown generator {name!r}") from None

    def names(self) -> list[str]:
        return [g.name for g in self.gens]

    # form factories

    def zero(self, degree: int = 0) -> "Form":
        return Form(self, degree, {})

    def scalar(self, e) -> "Form":
        e = e if isinstance(e, Expr) else self.ctx.const(e)
        return Form(self, 0, {(): e} if not e.is_zero() else {})

    def gen(self, name: str) -> "Form":
        g = self[name]
        return Form(self, g.degree, {(g.gid,): self.ctx.one()})

    def form(self, degree: int, terms: dict) -> "Form":
        out = Form(self, degree, {})
        acc: dict[tuple, Expr] = {}
        for idx, coeff in terms.items():
            t, sign = self._sort_indices(tuple(idx))
            if sign == 0:
                continue
            c = (coeff if isinstance(coeff, Expr) else self.ctx.const(coeff)) * sign
            _acc_add(acc, t, c)
        return Form(self, degree, {t: c for t, c in acc.items() if not c.is_zero()})

    def _sort_indices(self, idx: tuple) -> tuple[tuple, int]:
        lst = list(idx)
        sign = 1
        # insertion sort with graded-parity bookkeeping
        for i in range(1, len(lst)):
            j = i
            while j > 0 and lst[j - 1] > lst[j]:
                a, b = self.gens[lst[j - 1]], self.gens[lst[j]]
                if a.degree % 2 and b.degree % 2:
                    sign = -sign
                lst[j - 1], lst[j] = lst[j], lst[j - 1]
                j -= 1
        for a, b in zip(lst, lst[1:]):
            if a == b and self.gens[a].degree % 2:
                return tuple(lst), 0
        return tuple(lst), sign


def _acc_add(acc: dict, key, val: Expr):
    cur = acc.get(key)
    acc[key] = val if cur is None else cur + val


class Form:
    """Graded exterior-algebra element; immutable, no stored zero coefficients."""

    __slots__ = ("coframe", "degree", "terms")

    def __init__(self, coframe: Coframe, degree: int, terms: dict):
        self.coframe = coframe
        self.degree = degree
        self.terms = terms

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, idx) -> Expr:
        t, sign = self.coframe._sort_indices(tuple(idx))
        c = self.terms.get(t)
        if c is None or sign == 0:
            return self.coframe.ctx.zero()
        return c * sign

    def coeff_names(self, names) -> Expr:
        return self.coeff(tuple(self.coframe[n].gid for n in names))

    def monomials(self):
        return list(self.terms.keys())

    def _check(self, other: "Form"):
        if other.coframe is not self.coframe:
            raise FormError("forms over different coframes")
        if other.degree != self.degree and self.terms and other.terms:
            raise FormError(f"degree mismatch {self.degree} vs {other.degree}")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for t, c in other.terms.items():
            _acc_add(out, t, c)
        return Form(self.coframe, self.degree, {t: c for t, c in out.items() if not c.is_zero()})

    def __neg__(self) -> "Form":
        return Form(self.coframe, self.degree, {t: -c for t, c in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __rmul__(self, scalar) -> "Form":
        c = scalar if isinstance(scalar, Expr) else self.coframe.ctx.const(scalar)
        if c.is_zero():
            return Form(self.coframe, self.degree, {})
        return Form(self.coframe, self.degree, {t: c * v for t, v in self.terms.items()})

    __mul__ = __rmul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        return self.coframe is other.coframe and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset((t, c.key()) for t, c in self.terms.items()))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        names = self.coframe.gens
        parts = []
        for t in sorted(self.terms):
            c = self.terms[t]
            mono = "^".join(names[i].name for i in t) if t else "1"
            cs = str(c)
            if cs == "1":
                parts.append(mono)
            elif cs == "-1":
                parts.append(f"-{mono}")
            else:
                if ("+" in cs) or (" - " in cs) or cs.startswith("-") and mono != "1":
                    cs = f"({cs})" if ("+" in cs or " - " in cs) else cs
                parts.append(f"{cs}*{mono}" if mono != "1" else cs)
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; bilinear and graded-anticommutative."""
    if a.coframe is not b.coframe:
        raise FormError("wedge of forms over different coframes")
    cf = a.coframe
    if not a.terms or not b.terms:
        return Form(cf, a.degree + b.degree, {})
    acc: dict[tuple, Expr] = {}
    for ta, ca in a.terms.items():
        for tb, cb in b.terms.items():
            t, sign = cf._sort_indices(ta + tb)
            if sign == 0:
                continue
            _acc_add(acc, t, ca * cb * sign)
    return Form(cf, a.degree + b.degree, {t: c for t, c in acc.items() if not c.is_zero()})


def wedge_all(*forms: Form) -> Form:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


class StructureRules:
    """d of each generator, as a Form or the marker UNKNOWN.

    Unknown derivatives materialize as fresh abstract degree-2 generators
    D[name] so residuals stay first-class forms.
    """

    def __init__(self, coframe: Coframe, rules: dict):
        self.coframe = coframe
        self.rules: dict[str, Form] = {}
        for name, rule in rules.items():
            g = coframe[name]
            if rule is UNKNOWN or (isinstance(rule, str) and rule == UNKNOWN):
                marker = f"D[{name}]"
                dg = coframe[marker] if marker in coframe else coframe.add_generator(marker, degree=g.degree + 1)
                self.rules[name] = coframe.gen(marker)
            else:
                if rule.degree != g.degree + 1 and not rule.is_zero():
                    raise FormError(f"rule for d({name}) must have degree {g.degree + 1}")
                self.rules[name] = rule

    def d_gen(self, name: str) -> Form:
        try:
            return self.rules[name]
        except KeyError:
            raise FormError(f"no structure rule for d({name})") from None


def ext_d(a: Form, rules: StructureRules, table: DerivationTable) -> Form:
    """Exterior derivative: graded Leibniz over wedge monomials.

    Scalar coefficients are differentiated through the table along every
    direction that names a coframe generator.
    """
    cf = a.coframe
    out = Form(cf, a.degree + 1, {})
    dirgens = [(d, cf.directions[d]) for d in table.directions if d in cf.directions]
    for t, c in a.terms.items():
        base = Form(cf, a.degree, {t: cf.ctx.one()})
        # d(coefficient) wedge monomial
        dc_terms: dict[tuple, Expr] = {}
        for d, gname in dirgens:
            dc = table.derive(c, d)
            if not dc.is_zero():
                _acc_add(dc_terms, (cf[gname].gid,), dc)
        if dc_terms:
            dc_form = Form(cf, 1, {k: v for k, v in dc_terms.items() if not v.is_zero()})
            out = out + wedge(dc_form, base)
        # c * sum over factors of +/- g1 ^ ... ^ d(gi) ^ ... ^ gk
        sign_deg = 0
        for i, gid in enumerate(t):
            g = cf.gens[gid]
            dgi = rules.d_gen(g.name)
            if not dgi.is_zero():
                left = Form(cf, sum(cf.gens[j].degree for j in t[:i]), {t[:i]: cf.ctx.one()})
                right_deg = sum(cf.gens[j].degree for j in t[i + 1 :])
                right = Form(cf, right_deg, {t[i + 1 :]: cf.ctx.one()})
                piece = wedge(wedge(left, dgi), right)
                sgn = -1 if sign_deg % 2 else 1
                out = out + (c * sgn) * piece
            sign_deg += g.degree
    return out


def reduce_mod(a: Form, killed) -> Form:
    """Drop every term whose wedge monomial meets the killed generator set."""
    cf = a.coframe
    kill = {cf[n].gid if isinstance(n, str) else n for n in killed}
    if not kill:
        return a
    kept = {t: c for t, c in a.terms.items() if not (set(t) & kill)}
    return Form(cf, a.degree, kept)


def substitute_generators(a: Form, mapping: dict[str, Form]) -> Form:
    """Replace generators by 1-form combinations (linear change of coframe)."""
    cf = a.coframe
    out = Form(cf, a.degree, {})
    for t, c in a.terms.items():
        piece = cf.scalar(c)
        for gid in t:
            name = cf.gens[gid].name
            rep = mapping.get(name)
            piece = wedge(piece, rep if rep is not None else cf.gen(name))
        out = out + piece
    return out
