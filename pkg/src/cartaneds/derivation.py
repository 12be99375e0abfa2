"""Derivation tables: user-declared formal derivatives with auto-extension.

A table fixes a finite direction set (coordinate labels or coframe generator
names) and maps symbols to their derivative expressions along each direction.
Querying an undeclared derivative of a function symbol auto-creates a fresh
derived symbol when the table allows it, so derivative order is unbounded by
construction.
"""

from __future__ import annotations

from .expr import Context, Expr
from .symbols import COORDINATE, DERIVED, EXP, FUNCTION, PARAMETER, Symbol


class DerivationError(ValueError):
    pass


class DerivationTable:
    def __init__(self, ctx: Context, directions, auto_extend: bool = True):
        self.ctx = ctx
        self.directions = tuple(directions)
        self._dirset = set(self.directions)
        self.auto_extend = auto_extend
        self.entries: dict[Symbol, dict[str, Expr]] = {}
        self._cache: dict[tuple[int, str], Expr] = {}

    def declare(self, sym: Symbol, table: dict[str, Expr]) -> None:
        """Declare the full derivative row of a symbol (missing directions are 0)."""
        for d in table:
            if d not in self._dirset:
                raise DerivationError(f"unknown direction {d!r} for {sym.name}")
        self.entries[sym] = dict(table)
        self._cache = {k: v for k, v in self._cache.items() if k[0] != sym.sid}

    def derive_symbol(self, sym: Symbol, direction: str) -> Expr:
        if direction not in self._dirset:
            raise DerivationError(f"direction {direction!r} not in table")
        key = (sym.sid, direction)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = self._derive_symbol(sym, direction)
        self._cache[key] = out
        return out

    def _derive_symbol(self, sym: Symbol, direction: str) -> Expr:
        ctx = self.ctx
        rep = ctx.rewrite_for_symbol(sym)
        if rep is not None:
            # a rewritten symbol derives through its replacement, so relations
            # like Phi_xy -> e^(2f) stay consistent to every order
            return self.derive(rep, direction)
        row = self.entries.get(sym)
        if row is not None:
            return row.get(direction, ctx.zero())
        if sym.kind == COORDINATE:
            return ctx.one() if sym.name == direction else ctx.zero()
        if sym.kind == PARAMETER:
            return ctx.zero()
        if sym.kind == EXP:
            # d(e^(s*b)) = s * e^(s*b) * db
            db = self.derive_symbol(sym.base, direction)
            if db.is_zero():
                return ctx.zero()
            return ctx.sym(sym) * db * sym.sign
        if not sym.depends_on(direction):
            return ctx.zero()
        if sym.kind in (FUNCTION, DERIVED):
            if not self.auto_extend:
                raise DerivationError(
                    f"no declared derivative of {sym.name!r} along {direction!r}"
                )
            dsym = ctx.registry.derived(sym, direction)
            anc = self._rewritten_ancestor(dsym)
            if anc is not None:
                return anc
            return ctx.sym(dsym)
        raise DerivationError(f"cannot derive {sym.name!r}")

    def _rewritten_ancestor(self, dsym: Symbol) -> Expr | None:
        """Value of a derived symbol whose multi-index extends a rewritten one.

        With Phi_xy -> e^(2f) registered, Phi_xyy is derived from the
        replacement along the leftover index instead of becoming opaque.
        """
        from collections import Counter

        ctx = self.ctx
        want = Counter(dsym.index)
        for mono, _rep in ctx.rewrites:
            if len(mono) != 1 or mono[0][1] != 1:
                continue
            psym = ctx.registry.by_sid(mono[0][0])
            if psym.kind != DERIVED or psym.base is not dsym.base:
                continue
            have = Counter(psym.index)
            if all(want.get(d, 0) >= c for d, c in have.items()):
                out = ctx.rewrite_for_symbol(psym)
                for d, c in (want - have).items():
                    for _ in range(c):
                        out = self.derive(out, d)
                return out
        return None

    def derive(self, e: Expr, direction: str) -> Expr:
        """Derivation of an expression: linear, Leibniz, quotient rule, rewrites."""
        if direction not in self._dirset:
            raise DerivationError(f"direction {direction!r} not in table")
        out = e.ctx.zero()
        for s in e.symbols():
            ds = self.derive_symbol(s, direction)
            if ds.is_zero():
                continue
            out = out + e.partial(s) * ds
        return out


def derive(e: Expr, direction: str, table: DerivationTable) -> Expr:
    return table.derive(e, direction)
