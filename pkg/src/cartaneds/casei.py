"""Coordinate models for the vanishing-torsion case.

A model is a pair (f, Phi) of functions of (x, y) with Phi_xy = e^(2f); it
determines an explicit coframe on the 5-manifold with coordinates
(x, y, kappa, p, q), the linear second-order equation

    z_xy + (Phi_y - f_y) z_x - (Phi_x + f_x) z_y
         - ((Phi_x + f_x)(Phi_y - f_y) + f_xy) z = 0,

and the local invariant  A = -2 f_xy e^(-2f).  Both symbols may be left
abstract (with Phi_xy -> e^(2f) installed as a rewrite) or given explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .derivation import DerivationTable
from .expr import Context, Expr
from .forms import Coframe, Form, StructureRules, ext_d, wedge
from .parse import parse_expr

MODEL_COORDS = ("x", "y", "k", "p", "q")


class ModelError(ValueError):
    pass


@dataclass
class StructureCheck:
    residuals: dict[str, Form]
    phi3: Form
    phi7: Form
    dphi0_coefficient: Expr
    dphi1_coefficient: Expr
    all_zero: bool


@dataclass
class CohomogeneityVerdict:
    level: str  # "0" | "1" | ">=2" | "indeterminate"
    witnesses: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"level": self.level, "witnesses": self.witnesses}


class CaseIModel:
    """Model data plus the machinery to build and check its coframe."""

    def __init__(self, f_text: str | None, phi_text: str | None):
        self.ctx = Context()
        ctx = self.ctx
        ctx.coordinates(MODEL_COORDS)
        self.table = DerivationTable(ctx, MODEL_COORDS)
        self.f_sym = ctx.function("f", depends={"x", "y"})
        self.phi_sym = ctx.function("Phi", depends={"x", "y"})
        self.F = ctx.exp(self.f_sym, 1)   # e^f
        self.G = ctx.exp(self.f_sym, -1)  # e^-f, with F*G -> 1 installed
        self.f_text = f_text
        self.phi_text = phi_text

        if f_text is not None:
            fe = parse_expr(f_text, ctx, directions=MODEL_COORDS)
            self._declare_function(self.f_sym, fe)
            if fe.is_zero():
                # e^0: collapse both exponentials to 1
                ctx.add_rewrite(ctx.sym(self.F), ctx.one())
                ctx.add_rewrite(ctx.sym(self.G), ctx.one())
        if phi_text is not None:
            pe = parse_expr(phi_text, ctx, directions=MODEL_COORDS)
            self._declare_function(self.phi_sym, pe)
        else:
            # abstract Phi: the defining relation enters as a rewrite rule
            phi_xy = ctx.registry.derived(ctx.registry.derived(self.phi_sym, "x"), "y")
            ctx.add_rewrite(ctx.sym(phi_xy), ctx.sym(self.F) ** 2)

        self.coframe = Coframe(
            ctx,
            [f"d{c}" for c in MODEL_COORDS],
            directions={c: f"d{c}" for c in MODEL_COORDS},
        )
        self.rules = StructureRules(self.coframe, {n: self.coframe.zero(2) for n in self.coframe.names()})

    def _declare_function(self, sym, expr: Expr) -> None:
        pure = DerivationTable(self.ctx, MODEL_COORDS)
        self.table.declare(sym, {c: pure.derive(expr, c) for c in ("x", "y")})

    @classmethod
    def symbolic(cls) -> "CaseIModel":
        return cls(None, None)

    @classmethod
    def explicit(cls, f_text: str, phi_text: str | None = None) -> "CaseIModel":
        return cls(f_text, phi_text)

    # -- scalar ingredients ----------------------------------------------------

    def d(self, e: Expr, direction: str) -> Expr:
        return self.table.derive(e, direction)

    def f_derivative(self, *directions: str) -> Expr:
        e = self.ctx.sym(self.f_sym)
        for c in directions:
            e = self.d(e, c)
        return e

    def phi_derivative(self, *directions: str) -> Expr:
        e = self.ctx.sym(self.phi_sym)
        for c in directions:
            e = self.d(e, c)
        return e

    def relation_residual(self) -> Expr:
        """Phi_xy - e^(2f); must vanish for a valid model."""
        return self.phi_derivative("x", "y") - self.ctx.sym(self.F) ** 2

    def validate(self) -> None:
        r = self.relation_residual()
        if not r.is_zero():
            raise ModelError(f"Phi_xy - e^(2f) does not vanish: {r}")

    def invariant_A(self) -> Expr:
        """The local invariant -2 f_xy e^(-2f)."""
        return -2 * self.f_derivative("x", "y") * self.ctx.sym(self.G) ** 2

    # -- the coframe -------------------------------------------------------------

    def coframe_forms(self) -> dict[str, Form]:
        """Explicit coframe (omega^0..omega^4) and the connection forms phi0, phi1."""
        self.validate()
        ctx, cf = self.ctx, self.coframe
        dx, dy, dk, dp, dq = (cf.gen(n) for n in cf.names())
        k, p, q = ctx.sym("k"), ctx.sym("p"), ctx.sym("q")
        F, G = ctx.sym(self.F), ctx.sym(self.G)
        fx, fy = self.f_derivative("x"), self.f_derivative("y")
        px, py = self.phi_derivative("x"), self.phi_derivative("y")

        shear = (py + fy) * p - (px - fx) * q
        alpha = k + shear / 2
        beta = -k + shear / 2
        Z = k - (py + fy) / 2 * p - (px - fx) / 2 * q
        Pv = F**2 * p + (px + fx) * Z
        Qv = F**2 * q - (py - fy) * Z

        dZ = ext_d(cf.scalar(Z), self.rules, self.table)
        om0 = G * (dZ - Pv * dx - Qv * dy)
        forms = {
            "om0": om0,
            "om1": F * dx,
            "om2": alpha * dy + dp,
            "om3": F * dy,
            "om4": beta * dx + dq,
            "phi0": -px * dx + py * dy,
            "phi1": fx * dx - fy * dy,
        }
        return forms

    def verify_structure_equations(self) -> StructureCheck:
        """Replays the structure equations on the explicit coframe.

        The rows carrying the underdetermined connection forms are checked by
        divisibility (residual = -phi3 ^ omega^1, resp. -phi7 ^ omega^3) and
        the solved phi3, phi7 are returned.
        """
        fm = self.coframe_forms()
        cf, ctx = self.coframe, self.ctx
        dd = lambda a: ext_d(a, self.rules, self.table)
        om0, om1, om2, om3, om4 = (fm[k] for k in ("om0", "om1", "om2", "om3", "om4"))
        phi0, phi1 = fm["phi0"], fm["phi1"]

        residuals = {
            "om0": dd(om0) + wedge(phi0, om0) - wedge(om1, om2) - wedge(om3, om4),
            "om1": dd(om1) + wedge(phi1, om1),
            "om3": dd(om3) - wedge(phi1, om3),
        }
        r2 = dd(om2) + wedge(phi0 - phi1, om2) - wedge(om0, om3)
        r4 = dd(om4) + wedge(phi0 + phi1, om4) + wedge(om0, om1)
        residuals["om2_mod"] = wedge(r2, om1)
        residuals["om4_mod"] = wedge(r4, om3)
        phi3 = self._solve_connection(r2, "dx")
        phi7 = self._solve_connection(r4, "dy")

        dphi0 = dd(phi0)
        dphi1 = dd(phi1)
        om13 = wedge(om1, om3)
        c0 = self._multiple_of(dphi0, om13)
        c1 = self._multiple_of(dphi1, om13)
        residuals["dphi0"] = dphi0 - c0 * om13
        residuals["dphi1"] = dphi1 - c1 * om13
        ok = all(f.is_zero() for f in residuals.values())
        return StructureCheck(residuals, phi3, phi7, c0, c1, ok)

    def _solve_connection(self, residual: Form, leg: str) -> Form:
        """residual = -phi ^ (F d{leg})  =>  phi = (contraction)/F mod d{leg}."""
        cf, ctx = self.coframe, self.ctx
        gid = cf[f"d{leg}" if not leg.startswith("d") else leg].gid
        Finv = ctx.sym(self.G)
        terms: dict[tuple, Expr] = {}
        for t, c in residual.terms.items():
            if gid not in t:
                if not c.is_zero():
                    raise ModelError(f"residual has a term without {leg}: cannot solve connection form")
                continue
            other = tuple(i for i in t if i != gid)
            sign = 1 if t.index(gid) == 0 else -1
            terms[other] = c * sign * Finv
        return Form(cf, 1, {t: c for t, c in terms.items() if not c.is_zero()})

    @staticmethod
    def _multiple_of(form: Form, base: Form) -> Expr:
        """Scalar c with form = c * base (base a single-term form)."""
        (bt, bc), = base.terms.items()
        c = form.terms.get(bt)
        if c is None:
            return base.coframe.ctx.zero()
        return c / bc

    # -- the linear equation ----------------------------------------------------

    def pde(self) -> tuple[Expr, Expr, Expr]:
        """Coefficients (a, b, c) of z_xy + a z_x + b z_y + c z = 0."""
        self.validate()
        fx, fy = self.f_derivative("x"), self.f_derivative("y")
        px, py = self.phi_derivative("x"), self.phi_derivative("y")
        fxy = self.f_derivative("x", "y")
        a = py - fy
        b = -(px + fx)
        c = -((px + fx) * (py - fy) + fxy)
        return a, b, c

    # -- symmetry ----------------------------------------------------------------

    def cohomogeneity(self) -> CohomogeneityVerdict:
        """Symmetry codimension from f alone.

        Level 0 means dA = 0 identically; level 1 needs A_x, A_y nonvanishing
        and d(e^(-2f) A_x A_y), d(e^(-2f) A_xy) proportional to dA.
        """
        ctx = self.ctx
        A = self.invariant_A()
        Ax, Ay = self.d(A, "x"), self.d(A, "y")
        if Ax.is_zero() and Ay.is_zero():
            return CohomogeneityVerdict("0")
        if Ax.is_zero() or Ay.is_zero():
            return CohomogeneityVerdict(">=2", [str(Ax), str(Ay)])
        G2 = ctx.sym(self.G) ** 2
        w1 = self._jacobian(G2 * Ax * Ay, A)
        w2 = self._jacobian(G2 * self.d(Ax, "y"), A)
        if w1.is_zero() and w2.is_zero():
            return CohomogeneityVerdict("1", [str(w1), str(w2)])
        return CohomogeneityVerdict(">=2", [str(w1), str(w2)])

    def _jacobian(self, g: Expr, h: Expr) -> Expr:
        """Coefficient of dx^dy in dg ^ dh."""
        return self.d(g, "x") * self.d(h, "y") - self.d(g, "y") * self.d(h, "x")


def case1_coframe(model: CaseIModel) -> dict[str, Form]:
    return model.coframe_forms()


def case1_pde(model: CaseIModel):
    return model.pde()


def invariant_A(model: CaseIModel) -> Expr:
    return model.invariant_A()


def case1_cohomogeneity(model: CaseIModel) -> CohomogeneityVerdict:
    return model.cohomogeneity()
