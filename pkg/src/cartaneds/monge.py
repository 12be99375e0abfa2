"""Hyperbolic Monge-Ampere layer: contact ideal, type classification, orbits.

Builds the contact system of a classical second-order equation from its five
coefficient functions, classifies the type through the quadratic the 2-form
pencil satisfies modulo the contact form, and implements the structure-group
action on the invariant-matrix pair together with orbit normalization of the
second matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .derivation import DerivationTable
from .expr import Context, DenominatorVanishes, Expr
from .forms import Coframe, Form, StructureRules, ext_d, substitute_generators, wedge
from .parse import parse_expr
from .pfaffian import GenericSampler, GenericityError, RETRY_BUDGET

COORDS = ("x", "y", "z", "p", "q")


class ClassificationError(ValueError):
    pass


class OrbitNormalizationError(ValueError):
    def __init__(self, message: str, orbit: str | None = None):
        super().__init__(message)
        self.orbit = orbit


def coordinate_context() -> tuple[Context, DerivationTable, Coframe, StructureRules]:
    """Fresh context over (x, y, z, p, q) with the flat coordinate coframe."""
    ctx = Context()
    ctx.coordinates(COORDS)
    table = DerivationTable(ctx, COORDS)
    cf = Coframe(ctx, [f"d{c}" for c in COORDS], directions={c: f"d{c}" for c in COORDS})
    rules = StructureRules(cf, {n: cf.zero(2) for n in cf.names()})
    return ctx, table, cf, rules


@dataclass
class ClassicalMAEquation:
    """Coefficients of  A(z_xx z_yy - z_xy^2) + B z_xx + 2C z_xy + D z_yy + E = 0."""

    A: Expr
    B: Expr
    C: Expr
    D: Expr
    E: Expr

    @classmethod
    def parse(cls, ctx: Context, coeffs: dict[str, str]) -> "ClassicalMAEquation":
        vals = {}
        for key in "ABCDE":
            vals[key] = parse_expr(coeffs.get(key, "0"), ctx, directions=COORDS)
        return cls(**vals)

    def coefficients(self):
        return (self.A, self.B, self.C, self.D, self.E)


def build_contact_system(eq: ClassicalMAEquation, cf: Coframe, rules: StructureRules, table: DerivationTable):
    """Contact form, its derivative, and the classifying 2-form of the equation."""
    ctx = cf.ctx
    dx, dy, dz, dp, dq = (cf.gen(n) for n in ("dx", "dy", "dz", "dp", "dq"))
    x, y, z, p, q = (ctx.sym(c) for c in COORDS)
    theta = dz - p * dx - q * dy
    dtheta = ext_d(theta, rules, table)
    A, B, C, D, E = eq.coefficients()
    psi = (
        A * wedge(dp, dq)
        + B * wedge(dp, dy)
        + C * (wedge(dq, dy) - wedge(dp, dx))
        - D * wedge(dq, dx)
        + E * wedge(dx, dy)
    )
    return theta, dtheta, psi


@dataclass
class MATypeResult:
    kind: str  # hyperbolic | elliptic | parabolic | degenerate
    discriminant: Expr
    quadratic: tuple[Expr, Expr, Expr]

    def to_dict(self) -> dict:
        a, b, c = self.quadratic
        return {
            "kind": self.kind,
            "discriminant": str(self.discriminant),
            "quadratic": {"mu2": str(a), "mu1": str(b), "mu0": str(c)},
        }


def _mod_contact(form: Form) -> Form:
    """Reduce modulo the contact form by substituting dz -> p dx + q dy."""
    cf = form.coframe
    ctx = cf.ctx
    rep = ctx.sym("p") * cf.gen("dx") + ctx.sym("q") * cf.gen("dy")
    return substitute_generators(form, {"dz": rep})


def _proportional(a: Form, b: Form) -> bool:
    """True when a = lambda * b for some scalar function lambda (b nonzero)."""
    monos = set(a.terms) | set(b.terms)
    items = [(a.terms.get(m, a.coframe.ctx.zero()), b.terms.get(m, b.coframe.ctx.zero())) for m in monos]
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i][0] * items[j][1] != items[j][0] * items[i][1]:
                return False
    # b must dominate: wherever b vanishes, a must too
    return all(not (bc.is_zero() and not ac.is_zero()) for ac, bc in items)


def _sign_of(e: Expr, seed: int) -> int:
    """Sign of an expression: exact for constants, sampled consensus otherwise."""
    if e.is_zero():
        return 0
    if e.is_const():
        v = e.const_value()
        return (v > 0) - (v < 0)
    sampler = GenericSampler(seed)
    signs = []
    for _ in range(3):
        for _attempt in range(RETRY_BUDGET):
            point = sampler.point(e.symbols())
            try:
                v = e.eval_at(point)
            except DenominatorVanishes:
                continue
            if v != 0:
                signs.append((v > 0) - (v < 0))
                break
        else:
            raise GenericityError("no usable sample point for sign decision")
    if len(set(signs)) != 1:
        raise GenericityError(f"sign of {e} is not constant across samples: {signs}")
    return signs[0]


def classify_type(psi: Form, theta: Form, dtheta: Form, seed: int = 20240531) -> MATypeResult:
    """Type of the system spanned by the contact ideal and psi.

    Expands (mu dtheta + psi)^2 = 0 mod theta into a quadratic for mu and
    classifies by the sign of its discriminant; psi inside the contact ideal
    is flagged degenerate.
    """
    ctx = psi.coframe.ctx
    psi_m = _mod_contact(psi)
    dth_m = _mod_contact(dtheta)
    if psi_m.is_zero() or _proportional(psi_m, dth_m):
        return MATypeResult("degenerate", ctx.zero(), (ctx.zero(), ctx.zero(), ctx.zero()))
    top = tuple(psi.coframe[n].gid for n in ("dx", "dy", "dp", "dq"))
    a = wedge(dth_m, dth_m).coeff(top)
    b = 2 * wedge(dth_m, psi_m).coeff(top)
    c = wedge(psi_m, psi_m).coeff(top)
    if a.is_zero():
        raise ClassificationError("the mu^2 coefficient vanishes identically")
    disc = (b * b - 4 * a * c) / (4 * a * a)
    sign = _sign_of(disc, seed)
    kind = {1: "hyperbolic", -1: "elliptic", 0: "parabolic"}[sign]
    return MATypeResult(kind, disc, (a, b, c))


def classify_equation(eq: ClassicalMAEquation, cf, rules, table, seed: int = 20240531) -> MATypeResult:
    theta, dtheta, psi = build_contact_system(eq, cf, rules, table)
    return classify_type(psi, theta, dtheta, seed=seed)


# --- the structure-group action on the invariant matrices ------------------------

Mat2 = list  # 2x2 matrix as [[e, e], [e, e]]


def mat_mul(a: Mat2, b: Mat2) -> Mat2:
    return [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]


def mat_det(a: Mat2) -> Expr:
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def mat_adj(a: Mat2) -> Mat2:
    return [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]


def mat_scale(a: Mat2, c) -> Mat2:
    return [[c * a[0][0], c * a[0][1]], [c * a[1][0], c * a[1][1]]]


def mat_eq(a: Mat2, b: Mat2) -> bool:
    return all(a[i][j] == b[i][j] for i in range(2) for j in range(2))


@dataclass
class S1S2Pair:
    S1: Mat2
    S2: Mat2


@dataclass
class GroupElementG:
    """Block element (a, A, B) with a = det A = det B, plus swap-count mod 2."""

    a: Expr
    Amat: Mat2
    Bmat: Mat2
    j_count: int = 0

    def validate(self) -> None:
        if self.a.is_zero():
            raise OrbitNormalizationError("group scale a must be nonzero")
        if mat_det(self.Amat) != self.a or mat_det(self.Bmat) != self.a:
            raise OrbitNormalizationError("group element needs det(A) = det(B) = a")

    def compose(self, other: "GroupElementG") -> "GroupElementG":
        """Composition for swap-free elements (acting first self, then other)."""
        if self.j_count or other.j_count:
            raise OrbitNormalizationError("composition implemented for swap-free elements")
        return GroupElementG(self.a * other.a, mat_mul(self.Amat, other.Amat), mat_mul(self.Bmat, other.Bmat))


def _apply_J(s: S1S2Pair) -> S1S2Pair:
    s1, s2 = s.S1, s.S2
    return S1S2Pair(
        [[-s1[1][1], s1[0][1]], [s1[1][0], -s1[0][0]]],
        [[s2[1][1], -s2[0][1]], [-s2[1][0], s2[0][0]]],
    )


def act_group_element(g: GroupElementG, s: S1S2Pair) -> S1S2Pair:
    """S_i -> a A^{-1} S_i B, then j_count block swaps.

    With det(A) = a the scalar multiple a A^{-1} is just adj(A), so the action
    stays polynomial in the entries.
    """
    g.validate()
    adjA = mat_adj(g.Amat)
    out = S1S2Pair(
        mat_mul(mat_mul(adjA, s.S1), g.Bmat),
        mat_mul(mat_mul(adjA, s.S2), g.Bmat),
    )
    for _ in range(g.j_count % 2):
        out = _apply_J(out)
    return out


def identity_g(ctx: Context) -> GroupElementG:
    one, zero = ctx.one(), ctx.zero()
    return GroupElementG(one, [[one, zero], [zero, one]], [[one, zero], [zero, one]])


def s2_rank(S2: Mat2) -> int:
    if all(S2[i][j].is_zero() for i in range(2) for j in range(2)):
        return 0
    return 1 if mat_det(S2).is_zero() else 2


@dataclass
class NormalizationResult:
    g: GroupElementG
    normal: S1S2Pair
    orbit: str  # zero | rank1 | rank2_pos | rank2_neg
    side_conditions: list[str] = field(default_factory=list)
    rank_drop_locus: list[str] = field(default_factory=list)


def _fraction_sqrt(v: Fraction) -> Fraction | None:
    if v < 0:
        return None
    rn, rd = math.isqrt(v.numerator), math.isqrt(v.denominator)
    if rn * rn == v.numerator and rd * rd == v.denominator:
        return Fraction(rn, rd)
    return None


def normalize_S2(s: S1S2Pair, ctx: Context, seed: int = 20240531) -> NormalizationResult:
    """Carry S2 to its orbit normal form: 0, E21, I2, or antidiag(1,1).

    Rational-entry matrices are fully supported; expression entries get the
    generic-rank treatment with the rank-drop locus reported.  Rank-2
    normalization over exact rationals needs |det S2| to be a perfect square
    and raises OrbitNormalizationError otherwise.
    """
    S2 = s.S2
    one, zero = ctx.one(), ctx.zero()
    rank = s2_rank(S2)
    locus: list[str] = []
    conds: list[str] = []
    if any(not S2[i][j].is_const() for i in range(2) for j in range(2)):
        if rank == 2:
            locus.append(str(mat_det(S2)))
        elif rank == 1:
            locus.extend(str(S2[i][j]) for i in range(2) for j in range(2) if not S2[i][j].is_zero())

    if rank == 0:
        return NormalizationResult(identity_g(ctx), s, "zero", conds, locus)

    if rank == 1:
        # write S2 = u v^T from a pivot entry, then pick A e2 = u, B^T v = e1
        pi, pj = next((i, j) for i in range(2) for j in range(2) if not S2[i][j].is_zero())
        pivot = S2[pi][pj]
        u = [S2[0][pj], S2[1][pj]]
        v = [S2[pi][0] / pivot, S2[pi][1] / pivot]
        if not u[1].is_zero():
            xcol = [1 / u[1], zero]
            conds.append(str(u[1]))
        else:
            xcol = [zero, -1 / u[0]]
            conds.append(str(u[0]))
        Amat = [[xcol[0], u[0]], [xcol[1], u[1]]]
        vperp = [-v[1], v[0]]
        if not v[0].is_zero():
            b1 = [1 / v[0], zero]
            conds.append(str(v[0]))
        else:
            b1 = [zero, 1 / v[1]]
            conds.append(str(v[1]))
        Bmat = [[b1[0], vperp[0]], [b1[1], vperp[1]]]
        g = GroupElementG(one, Amat, Bmat)
        normal = act_group_element(g, s)
        target = [[zero, zero], [one, zero]]
        if not mat_eq(normal.S2, target):
            raise OrbitNormalizationError("rank-1 normalization failed verification", "rank1")
        return NormalizationResult(g, normal, "rank1", conds, locus)

    det = mat_det(S2)
    if not det.is_const():
        raise OrbitNormalizationError(
            "rank-2 normalization supports rational-constant determinants only", "rank2"
        )
    dv = det.const_value()
    orbit = "rank2_pos" if dv > 0 else "rank2_neg"
    r = _fraction_sqrt(abs(dv))
    if r is None:
        raise OrbitNormalizationError(
            f"|det S2| = {abs(dv)} is not a perfect rational square; "
            "the normal form is not reachable over exact rationals",
            orbit,
        )
    target = [[one, zero], [zero, one]] if dv > 0 else [[zero, one], [one, zero]]
    a = ctx.const(Fraction(1, 1) / r)
    Amat = [[a, zero], [zero, one]]
    # B = r * S2^{-1} A N  keeps det B = a and sends S2 to the normal form
    s2inv = mat_scale(mat_adj(S2), 1 / det)
    Bmat = mat_scale(mat_mul(mat_mul(s2inv, Amat), target), ctx.const(r))
    g = GroupElementG(a, Amat, Bmat)
    normal = act_group_element(g, s)
    if not mat_eq(normal.S2, target):
        raise OrbitNormalizationError("rank-2 normalization failed verification", orbit)
    return NormalizationResult(g, normal, orbit, conds, locus)


# --- the (Q1, Q2) cases ----------------------------------------------------------


@dataclass
class QPair:
    Q1: Fraction
    Q2: Fraction
    case: str

    def to_dict(self) -> dict:
        return {"Q1": str(self.Q1), "Q2": str(self.Q2), "case": self.case}


def classify_Q(q1, q2) -> QPair:
    """Case I: both vanish; case II: exactly one vanishes; case III: neither.

    The quarter-turn generator identifies (q, 0) with (0, -q), which is why a
    single vanishing component always lands in case II.
    """
    q1, q2 = Fraction(q1), Fraction(q2)
    if q1 == 0 and q2 == 0:
        case = "I"
    elif q1 == 0 or q2 == 0:
        case = "II"
    else:
        case = "III"
    return QPair(q1, q2, case)


def quarter_turn(q1, q2) -> tuple[Fraction, Fraction]:
    """The block-swap generator acts on (Q1, Q2) as a clockwise quarter turn."""
    q1, q2 = Fraction(q1), Fraction(q2)
    return (q2, -q1)
