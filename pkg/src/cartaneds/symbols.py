"""Symbol registry: named scalar indeterminates with kinds and derivative metadata."""

from __future__ import annotations

from dataclasses import dataclass, field

COORDINATE = "coordinate"
FUNCTION = "function-symbol"
DERIVED = "derived-symbol"
PARAMETER = "parameter"
EXP = "exp-symbol"


class SymbolError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    """A named scalar indeterminate.

    Derived symbols carry a base symbol plus a sorted multi-index of direction
    labels, so the mixed partial taken in either order is the same object.
    Exp symbols stand for e^(sign*base) and are otherwise opaque.
    """

    sid: int
    name: str
    kind: str
    base: Symbol | None = None
    index: tuple[str, ...] = ()
    sign: int = 0
    depends: frozenset | None = None  # None: depends on every direction

    def __repr__(self) -> str:
        return self.name

    def depends_on(self, direction: str) -> bool:
        if self.kind == COORDINATE:
            return self.name == direction
        if self.kind == PARAMETER:
            return False
        if self.depends is None:
            return True
        return direction in self.depends


class SymbolRegistry:
    """Ordered collection of symbols; registration order fixes the monomial order."""

    def __init__(self):
        self._by_name: dict[str, Symbol] = {}
        self._by_sid: list[Symbol] = []

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> Symbol:
        try:
            return self._by_name[name]
        except KeyError:
            raise SymbolError(f"unknown symbol {name!r}") from None

    def get(self, name: str) -> Symbol | None:
        return self._by_name.get(name)

    def by_sid(self, sid: int) -> Symbol:
        return self._by_sid[sid]

    def __iter__(self):
        return iter(self._by_sid)

    def __len__(self) -> int:
        return len(self._by_sid)

    def _add(self, name: str, kind: str, **kw) -> Symbol:
        if name in self._by_name:
            have = self._by_name[name]
            raise SymbolError(f"symbol {name!r} already registered as {have.kind}")
        sym = Symbol(sid=len(self._by_sid), name=name, kind=kind, **kw)
        self._by_name[name] = sym
        self._by_sid.append(sym)
        return sym

    def coordinate(self, name: str) -> Symbol:
        return self._add(name, COORDINATE)

    def function(self, name: str, depends=None) -> Symbol:
        dep = None if depends is None else frozenset(depends)
        return self._add(name, FUNCTION, depends=dep)

    def parameter(self, name: str) -> Symbol:
        return self._add(name, PARAMETER)

    def derived(self, base: Symbol, direction: str) -> Symbol:
        """Canonical derived symbol of `base` along `direction` (auto-created).

        The multi-index is kept sorted, which makes mixed partials commute
        structurally.
        """
        if base.kind == DERIVED:
            root, index = base.base, base.index + (direction,)
        elif base.kind in (FUNCTION, COORDINATE):
            root, index = base, (direction,)
        else:
            raise SymbolError(f"cannot derive symbol {base.name!r} of kind {base.kind}")
        index = tuple(sorted(index))
        name = f"{root.name}_{''.join(index)}"
        existing = self._by_name.get(name)
        if existing is not None:
            if existing.kind != DERIVED or existing.base is not root:
                raise SymbolError(f"name clash creating derived symbol {name!r}")
            return existing
        return self._add(name, DERIVED, base=root, index=index, depends=root.depends)

    def exp(self, base: Symbol, sign: int) -> Symbol:
        """Opaque symbol for e^(sign*base); reused if already registered."""
        if sign not in (1, -1):
            raise SymbolError("exp sign must be +1 or -1")
        name = f"exp[{'-' if sign < 0 else ''}{base.name}]"
        existing = self._by_name.get(name)
        if existing is not None:
            return existing
        return self._add(name, EXP, base=base, sign=sign, depends=base.depends)
