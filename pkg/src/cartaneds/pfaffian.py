"""Linear Pfaffian systems: tableau, torsion absorption, Cartan's test.

A system carries the 2-forms dθ^α reduced mod the ideal of the θ's, written
over independence generators ω^j and free 1-forms π^σ:

    dθ^α ≡ A^α_{σj} π^σ ∧ ω^j + ½ C^α_{jk} ω^j ∧ ω^k.

Characters and prolongation dimension are exact ranks taken at random rational
points; every rank is recomputed at independent samples and disagreement is an
error, never a vote.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import Context, DenominatorVanishes, Expr
from .forms import Coframe, Form, FormError, substitute_generators
from .linalg import AffineEq, SolveResult, monic_poly_expr, q_rank, solve_affine
from .symbols import Symbol


class DecompositionError(FormError):
    pass


class GenericityError(RuntimeError):
    """Generic-point rank computations disagreed across samples."""


RETRY_BUDGET = 20
SAMPLES = 3
DEFAULT_SEED = 20240531


@dataclass
class LinearPfaffianSystem:
    coframe: Coframe
    thetas: list[str]
    dthetas: list[Form]
    independence: list[str]
    frees: list[str]

    def reduced(self, alpha: int) -> Form:
        from .forms import reduce_mod

        killed = [n for n in self.thetas if n in self.coframe]
        return reduce_mod(self.dthetas[alpha], killed) if killed else self.dthetas[alpha]


@dataclass
class Tableau:
    ctx: Context
    thetas: list[str]
    frees: list[str]
    omegas: list[str]
    entries: dict  # (alpha, sigma, j) -> Expr

    @property
    def shape(self):
        return (len(self.thetas), len(self.frees), len(self.omegas))

    def entry(self, alpha: int, sigma: int, j: int) -> Expr:
        return self.entries.get((alpha, sigma, j), self.ctx.zero())

    def symbols(self) -> set[Symbol]:
        out: set[Symbol] = set()
        for e in self.entries.values():
            out |= e.symbols()
        return out


Torsion = dict  # (alpha, j, k) with j < k -> Expr


def extract_tableau_and_torsion(sys: LinearPfaffianSystem) -> tuple[Tableau, Torsion]:
    """Exact decomposition of each dθ^α into tableau and torsion parts.

    Terms outside the π∧ω / ω∧ω shape signal a malformed system.  The
    decomposition is reassembled and compared against the input before
    returning.
    """
    cf = sys.coframe
    ctx = cf.ctx
    om_pos = {cf[n].gid: j for j, n in enumerate(sys.independence)}
    free_pos = {cf[n].gid: s for s, n in enumerate(sys.frees)}
    entries: dict = {}
    torsion: Torsion = {}
    for alpha in range(len(sys.thetas)):
        form = sys.reduced(alpha)
        for t, c in form.terms.items():
            if len(t) != 2:
                raise DecompositionError(f"non-quadratic term in d({sys.thetas[alpha]})")
            g1, g2 = t
            if g1 in om_pos and g2 in om_pos:
                j, k = om_pos[g1], om_pos[g2]
                if j > k:
                    j, k = k, j
                    c = -c
                torsion[(alpha, j, k)] = torsion.get((alpha, j, k), ctx.zero()) + c
            elif g1 in free_pos and g2 in om_pos:
                key = (alpha, free_pos[g1], om_pos[g2])
                entries[key] = entries.get(key, ctx.zero()) + c
            elif g1 in om_pos and g2 in free_pos:
                key = (alpha, free_pos[g2], om_pos[g1])
                entries[key] = entries.get(key, ctx.zero()) - c
            else:
                raise DecompositionError(
                    f"term {cf.gens[g1].name}^{cf.gens[g2].name} in d({sys.thetas[alpha]}) "
                    "is outside the pi^omega + omega^omega shape"
                )
    entries = {k: v for k, v in entries.items() if not v.is_zero()}
    torsion = {k: v for k, v in torsion.items() if not v.is_zero()}
    tab = Tableau(ctx, list(sys.thetas), list(sys.frees), list(sys.independence), entries)
    _verify_reconstruction(sys, tab, torsion)
    return tab, torsion


def _verify_reconstruction(sys: LinearPfaffianSystem, tab: Tableau, torsion: Torsion) -> None:
    cf = sys.coframe
    for alpha in range(len(sys.thetas)):
        rebuilt = cf.zero(2)
        for (a, s, j), c in tab.entries.items():
            if a == alpha:
                rebuilt = rebuilt + c * _wedge_names(cf, sys.frees[s], sys.independence[j])
        for (a, j, k), c in torsion.items():
            if a == alpha:
                rebuilt = rebuilt + c * _wedge_names(cf, sys.independence[j], sys.independence[k])
        if rebuilt != sys.reduced(alpha):
            raise DecompositionError(f"reconstruction mismatch for d({sys.thetas[alpha]})")


def _wedge_names(cf: Coframe, n1: str, n2: str) -> Form:
    from .forms import wedge

    return wedge(cf.gen(n1), cf.gen(n2))


# --- generic sampling ---------------------------------------------------------


class GenericSampler:
    """Deterministic source of random rational points and covectors."""

    def __init__(self, seed: int = DEFAULT_SEED):
        self.seed = seed
        self.rng = random.Random(seed)
        self.points_used = 0

    def _int(self) -> int:
        v = 0
        while v == 0:
            v = self.rng.randint(-10**6, 10**6)
        return v

    def point(self, symbols) -> dict[Symbol, Fraction]:
        self.points_used += 1
        return {s: Fraction(self._int()) for s in sorted(symbols, key=lambda s: s.sid)}

    def covector(self, n: int) -> list[Fraction]:
        return [Fraction(self._int()) for _ in range(n)]


def _eval_tableau(tab: Tableau, sampler: GenericSampler) -> dict:
    syms = tab.symbols()
    for _ in range(RETRY_BUDGET):
        point = sampler.point(syms)
        try:
            return {k: e.eval_at(point) for k, e in tab.entries.items()}
        except DenominatorVanishes:
            continue
    raise GenericityError("could not find a generic point clearing all denominators")


def _stacked_rank(num: dict, covs, a: int, s: int, n: int) -> int:
    rows = []
    for v in covs:
        for alpha in range(a):
            row = {}
            for sigma in range(s):
                val = Fraction(0)
                for j in range(n):
                    c = num.get((alpha, sigma, j))
                    if c:
                        val += c * v[j]
                if val:
                    row[sigma] = val
            rows.append(row)
    return q_rank(rows, s)


def tableau_dim(tab: Tableau, sampler: GenericSampler | None = None) -> int:
    """Generic rank of the column map t ↦ A^α_{σj} t^σ (3-sample agreement)."""
    sampler = sampler or GenericSampler()
    a, s, n = tab.shape
    dims = []
    for _ in range(SAMPLES):
        num = _eval_tableau(tab, sampler)
        sparse_rows: dict = {}
        for (alpha, sigma, j), c in num.items():
            if c:
                sparse_rows.setdefault((alpha, j), {})[sigma] = c
        dims.append(q_rank(list(sparse_rows.values()), s))
    if len(set(dims)) != 1:
        raise GenericityError(f"tableau dimension samples disagree: {dims}")
    return dims[0]


def cartan_characters(tab: Tableau, sampler: GenericSampler | None = None) -> tuple[int, ...]:
    """Characters s_1..s_n from generic-flag ranks, recomputed at 3 samples."""
    sampler = sampler or GenericSampler()
    a, s, n = tab.shape
    results = []
    for _ in range(SAMPLES):
        num = _eval_tableau(tab, sampler)
        for _attempt in range(RETRY_BUDGET):
            covs = [sampler.covector(n) for _ in range(n)]
            ranks = [0]
            for k in range(1, n + 1):
                ranks.append(_stacked_rank(num, covs[:k], a, s, n))
            chars = tuple(ranks[k] - ranks[k - 1] for k in range(1, n + 1))
            if all(chars[i] >= chars[i + 1] for i in range(n - 1)):
                break
        else:
            raise GenericityError("no generic flag found within retry budget")
        results.append(chars)
    if len(set(results)) != 1:
        raise GenericityError(f"character samples disagree: {results}")
    return results[0]


def prolongation_dim(tab: Tableau, sampler: GenericSampler | None = None) -> int:
    """Dimension of the first prolongation of the tableau (its image subspace).

    Computed as the solution-space dimension of the symmetry equations on
    t^σ_k, corrected by n·(#frees − rank) when the parametrizing columns are
    dependent, so redundant free forms do not inflate the count.
    """
    sampler = sampler or GenericSampler()
    a, s, n = tab.shape
    td = tableau_dim(tab, GenericSampler(sampler.seed + 101))
    dims = []
    for _ in range(SAMPLES):
        num = _eval_tableau(tab, sampler)
        rows = []
        for alpha in range(a):
            for j in range(n):
                for k in range(j + 1, n):
                    row = {}
                    for sigma in range(s):
                        cj = num.get((alpha, sigma, j))
                        ck = num.get((alpha, sigma, k))
                        if cj:
                            row[sigma * n + k] = row.get(sigma * n + k, Fraction(0)) + cj
                        if ck:
                            row[sigma * n + j] = row.get(sigma * n + j, Fraction(0)) - ck
                    row = {c: v for c, v in row.items() if v}
                    if row:
                        rows.append(row)
        nullity = s * n - q_rank(rows, s * n)
        dims.append(nullity - n * (s - td))
    if len(set(dims)) != 1:
        raise GenericityError(f"prolongation samples disagree: {dims}")
    return dims[0]


# --- torsion absorption -------------------------------------------------------


@dataclass
class AbsorptionResult:
    absorbable: bool
    required_relations: list[Expr]
    solution: dict | None  # (sigma, j) -> Expr for one absorbing shift, when absorbable
    solve: SolveResult | None = None


def absorb_torsion(tab: Tableau, torsion: Torsion) -> AbsorptionResult:
    """Solve A^α_{σ[j} p^σ_{k]} = C^α_{jk} for semi-basic shifts of the π^σ.

    Returns the obstruction expressions whose vanishing makes the system
    solvable (empty when the torsion is absorbable).
    """
    ctx = tab.ctx
    a, s, n = tab.shape
    if not torsion and not tab.entries:
        return AbsorptionResult(True, [], {})
    # fresh unknown symbols p_{sigma,j}
    unknowns: dict[tuple[int, int], Symbol] = {}
    for sigma in range(s):
        for j in range(n):
            name = f"__p_{sigma}_{j}"
            sym = ctx.registry.get(name) or ctx.registry.function(name)
            unknowns[(sigma, j)] = sym
    uid = {key: sym.sid for key, sym in unknowns.items()}
    eqs = []
    for alpha in range(a):
        for j in range(n):
            for k in range(j + 1, n):
                coeffs: dict[int, Expr] = {}
                for sigma in range(s):
                    cj = tab.entries.get((alpha, sigma, j))
                    ck = tab.entries.get((alpha, sigma, k))
                    # shifting pi^s by p^s_m w^m adds A[s,k] p[s,j] - A[s,j] p[s,k]
                    # to the w^j^w^k torsion coefficient
                    if ck is not None and not ck.is_zero():
                        key = uid[(sigma, j)]
                        coeffs[key] = coeffs.get(key, ctx.zero()) + ck
                    if cj is not None and not cj.is_zero():
                        key = uid[(sigma, k)]
                        coeffs[key] = coeffs.get(key, ctx.zero()) - cj
                const = torsion.get((alpha, j, k), ctx.zero())
                coeffs = {u: c for u, c in coeffs.items() if not c.is_zero()}
                if coeffs or not const.is_zero():
                    eqs.append(AffineEq(coeffs, const))
    res = solve_affine(eqs, [uid[k] for k in sorted(uid)])
    if res.inconsistent:
        return AbsorptionResult(False, res.obstructions, None, res)
    solution = {}
    for key, sym in unknowns.items():
        val = res.solved.get(sym.sid, ctx.zero())
        # set remaining free shift components to zero
        free_subs = {ctx.registry.by_sid(u): ctx.zero() for u in res.free if u in {s2.sid for s2 in val.symbols()}}
        solution[key] = val.subs(free_subs) if free_subs else val
    return AbsorptionResult(True, [], solution, res)


def apply_absorption(sys: LinearPfaffianSystem, solution: dict) -> LinearPfaffianSystem:
    """Shift π^σ ↦ π^σ + p^σ_j ω^j inside every dθ^α (for invariance checks)."""
    cf = sys.coframe
    mapping = {}
    for sigma, name in enumerate(sys.frees):
        shift = cf.gen(name)
        for j, om in enumerate(sys.independence):
            p = solution.get((sigma, j))
            if p is not None and not p.is_zero():
                shift = shift + p * cf.gen(om)
        mapping[name] = shift
    return LinearPfaffianSystem(
        coframe=cf,
        thetas=list(sys.thetas),
        dthetas=[substitute_generators(f, mapping) for f in sys.dthetas],
        independence=list(sys.independence),
        frees=list(sys.frees),
    )


# --- Cartan's test -------------------------------------------------------------


@dataclass
class CartanReport:
    characters: tuple[int, ...]
    tableau_dim: int
    prolongation_dim: int
    involutive: bool
    absorbed: bool
    required_relations: list[str]
    seed: int
    samples: int = SAMPLES
    generic_points_used: int = 0

    def to_dict(self) -> dict:
        return {
            "characters": list(self.characters),
            "tableau_dim": self.tableau_dim,
            "prolongation_dim": self.prolongation_dim,
            "involutive": self.involutive,
            "absorbed": self.absorbed,
            "required_relations": list(self.required_relations),
            "seed": self.seed,
            "samples": self.samples,
        }


def cartan_test(tab: Tableau, torsion: Torsion | None = None, seed: int = DEFAULT_SEED) -> CartanReport:
    """Involutivity by Cartan's test: prolongation dim = s1 + 2 s2 + ... + n sn."""
    sampler = GenericSampler(seed)
    chars = cartan_characters(tab, sampler)
    td = tableau_dim(tab, GenericSampler(seed + 7))
    if sum(chars) != td:
        raise GenericityError(f"character sum {sum(chars)} != tableau dimension {td}")
    prol = prolongation_dim(tab, GenericSampler(seed + 13))
    bound = sum((i + 1) * s for i, s in enumerate(chars))
    if prol < bound:
        raise GenericityError(f"Cartan bound violated: prolongation {prol} < {bound}")
    absorbed = True
    relations: list[Expr] = []
    if torsion is not None:
        res = absorb_torsion(tab, torsion)
        absorbed = res.absorbable
        relations = res.required_relations
    return CartanReport(
        characters=chars,
        tableau_dim=td,
        prolongation_dim=prol,
        involutive=(prol == bound),
        absorbed=absorbed,
        required_relations=[str(r) for r in relations],
        seed=seed,
        generic_points_used=sampler.points_used,
    )


def invariant_system(coframe, rules, table, scalar_syms, independence, free_forms) -> LinearPfaffianSystem:
    """Pfaffian system of the 1-forms d(scalar) - (declared derivative row).

    Mod the ideal, each dθ is the full exterior derivative of the declared
    1-form d(scalar); free_forms lists the generator names playing the role
    of the π's (free derivative forms and leftover connection forms).
    """
    from .forms import ext_d

    thetas = []
    dthetas = []
    for sym in scalar_syms:
        thetas.append(f"th[{sym.name}]")
        one_form = ext_d(coframe.scalar(coframe.ctx.sym(sym)), rules, table)
        dthetas.append(ext_d(one_form, rules, table))
    used = set()
    for f in dthetas:
        for t in f.terms:
            used.update(t)
    frees = [n for n in free_forms if n in coframe and coframe[n].gid in used]
    return LinearPfaffianSystem(coframe, thetas, dthetas, list(independence), frees)


# --- spec-level constraint solving ---------------------------------------------


def solve_linear_constraints(residuals: list[Form], unknowns: list[Symbol], prefer_free=(), prefer_solve=()):
    """Solve d²-style residual forms as affine equations in the unknowns.

    Every wedge-monomial coefficient becomes one equation; returns the solved
    map, free unknowns, an inconsistency flag, and the deduplicated equation
    count (raw count available on the result object).
    """
    from .linalg import affine_split

    ids = {u.sid for u in unknowns}
    eqs = []
    for r in residuals:
        for c in r.terms.values():
            eqs.append(affine_split(c, ids))
    res = solve_affine(
        eqs,
        [u.sid for u in unknowns],
        prefer_free=[u.sid for u in prefer_free],
        prefer_solve=[u.sid for u in prefer_solve],
    )
    return res
