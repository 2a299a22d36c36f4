"""Coloured simply typed lambda terms.

Bound variables are de Bruijn indices; binder names survive only as
printing hints, so structural equality of terms is alpha-equivalence.
Constants and free variables carry an optional colour. ``None`` means the
occurrence is uncoloured and behaves like a private colour variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Union

from .types import E, T, Arrow, SimpleType, arrow, split


class TermError(Exception):
    pass


class UndeclaredSymbol(TermError):
    pass


class TypeMismatch(TermError):
    pass


@dataclass(frozen=True)
class Colour:
    name: str
    var: bool = False

    def __str__(self) -> str:
        return f"?{self.name}" if self.var else self.name


PRIMARY = Colour("p")
SECONDARY = Colour("s")


@dataclass(frozen=True)
class Const:
    name: str
    type: SimpleType
    colour: Optional[Colour] = None
    tag: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Free:
    name: str
    type: SimpleType
    colour: Optional[Colour] = None
    tag: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Bound:
    index: int
    tag: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Abs:
    type: SimpleType
    body: Term
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class App:
    fn: Term
    arg: Term


Term = Union[Const, Free, Bound, Abs, App]
Symbol = Union[Const, Free]


# Logical vocabulary. These are ordinary constants of the signature.
LOGICAL: dict[str, SimpleType] = {
    "and": arrow(T, T, T),
    "or": arrow(T, T, T),
    "imp": arrow(T, T, T),
    "revimp": arrow(T, T, T),
    "not": arrow(T, T),
    "eq": arrow(E, E, T),
    "forall": arrow(arrow(E, T), T),
    "exists": arrow(arrow(E, T), T),
}


def logical(name: str) -> Const:
    return Const(name, LOGICAL[name])


@dataclass
class Signature:
    consts: dict[str, SimpleType] = field(default_factory=dict)
    vars: dict[str, SimpleType] = field(default_factory=dict)

    def __post_init__(self):
        for name, ty in LOGICAL.items():
            self.consts.setdefault(name, ty)
        clash = set(self.consts) & set(self.vars)
        if clash:
            raise TermError(f"names declared both constant and variable: {sorted(clash)}")

    def declare_const(self, name: str, ty: SimpleType) -> None:
        if name in self.vars or self.consts.get(name, ty) != ty:
            raise TermError(f"conflicting declaration for {name!r}")
        self.consts[name] = ty

    def declare_var(self, name: str, ty: SimpleType) -> None:
        if name in self.consts or self.vars.get(name, ty) != ty:
            raise TermError(f"conflicting declaration for {name!r}")
        self.vars[name] = ty

    def symbol(self, name: str, colour: Optional[Colour] = None) -> Symbol:
        if name in self.consts:
            return Const(name, self.consts[name], colour)
        if name in self.vars:
            return Free(name, self.vars[name], colour)
        raise UndeclaredSymbol(name)

    def copy(self) -> Signature:
        return Signature(dict(self.consts), dict(self.vars))


# -- construction helpers ---------------------------------------------------


def app(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def spine(t: Term) -> tuple[Term, list[Term]]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def strip_abs(t: Term) -> tuple[list[Abs], Term]:
    binders = []
    while isinstance(t, Abs):
        binders.append(t)
        t = t.body
    return binders, t


def wrap_abs(binders: list[Abs], body: Term) -> Term:
    for b in reversed(binders):
        body = Abs(b.type, body, b.name)
    return body


def lam(name: str, ty: SimpleType, body: Term) -> Abs:
    return Abs(ty, body, name)


# -- de Bruijn machinery ----------------------------------------------------


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Shift loose bound indices at or above ``cutoff`` by ``by``."""
    match t:
        case Bound(k):
            return replace(t, index=k + by) if k >= cutoff else t
        case Abs(ty, body, name):
            return Abs(ty, shift(body, by, cutoff + 1), name)
        case App(f, a):
            return App(shift(f, by, cutoff), shift(a, by, cutoff))
    return t


def _subst_index(t: Term, j: int, sub: Term) -> Term:
    match t:
        case Bound(k):
            if k == j:
                return shift(sub, j)
            return replace(t, index=k - 1) if k > j else t
        case Abs(ty, body, name):
            return Abs(ty, _subst_index(body, j + 1, sub), name)
        case App(f, a):
            return App(_subst_index(f, j, sub), _subst_index(a, j, sub))
    return t


def instantiate(body: Term, arg: Term) -> Term:
    """Replace index 0 of ``body`` by ``arg`` and drop one binder level."""
    return _subst_index(body, 0, arg)


def is_closed(t: Term, depth: int = 0) -> bool:
    match t:
        case Bound(k):
            return k < depth
        case Abs(_, body):
            return is_closed(body, depth + 1)
        case App(f, a):
            return is_closed(f, depth) and is_closed(a, depth)
    return True


# -- typing -----------------------------------------------------------------


def type_of(t: Term, sig: Optional[Signature] = None, ctx: tuple = ()) -> SimpleType:
    """Type of ``t`` where ``ctx[i]`` is the type of bound index ``i``."""
    match t:
        case Const(name, ty) | Free(name, ty):
            if sig is not None:
                table = sig.consts if isinstance(t, Const) else sig.vars
                if name not in table:
                    raise UndeclaredSymbol(name)
                if table[name] != ty:
                    raise TypeMismatch(f"{name} used at {ty}, declared {table[name]}")
            return ty
        case Bound(k):
            if k >= len(ctx):
                raise TypeMismatch(f"loose bound index {k}")
            return ctx[k]
        case Abs(ty, body):
            return Arrow(ty, type_of(body, sig, (ty,) + ctx))
        case App(f, a):
            fty = type_of(f, sig, ctx)
            aty = type_of(a, sig, ctx)
            if not isinstance(fty, Arrow):
                raise TypeMismatch(f"cannot apply a term of type {fty}")
            if fty.dom != aty:
                from .syntax import print_term

                raise TypeMismatch(
                    f"argument {print_term(a) if is_closed(a) else a} has type {aty}, expected {fty.dom}"
                )
            return fty.cod
    raise TypeError(f"not a term: {t!r}")


# -- normalization ----------------------------------------------------------


def beta(t: Term) -> Term:
    match t:
        case Abs(ty, body, name):
            return Abs(ty, beta(body), name)
        case App(f, a):
            f = beta(f)
            a = beta(a)
            if isinstance(f, Abs):
                return beta(instantiate(f.body, a))
            return App(f, a)
    return t


def _head_type(head: Term, ctx: tuple) -> SimpleType:
    if isinstance(head, Bound):
        return ctx[head.index]
    return head.type


def eta_long(t: Term, ctx: tuple = ()) -> Term:
    """Eta-expand a beta-normal term; ``ctx`` types the loose indices."""
    if isinstance(t, Abs):
        return Abs(t.type, eta_long(t.body, (t.type,) + ctx), t.name)
    head, args = spine(t)
    ty = _head_type(head, ctx)
    arg_types, _ = split(ty)
    args = [eta_long(a, ctx) for a in args]
    rest = arg_types[len(args):]
    if not rest:
        return app(head, *args)
    # expand over the missing arguments
    n = len(rest)
    inner_ctx = tuple(reversed(rest)) + ctx
    head = shift(head, n)
    args = [shift(a, n) for a in args]
    extra = [eta_long(Bound(n - 1 - i), inner_ctx) for i in range(n)]
    body = app(head, *args, *extra)
    for i, aty in reversed(list(enumerate(rest))):
        body = Abs(aty, body, _fresh_hint(i))
    return body


def _fresh_hint(i: int) -> str:
    return "uvwxyz"[i % 6]


def normalize(t: Term, ctx: tuple = ()) -> Term:
    """Beta-normal eta-long form."""
    return eta_long(beta(t), ctx)


# -- free variables and substitution ---------------------------------------


def symbols(t: Term) -> Iterator[Symbol]:
    match t:
        case Const() | Free():
            yield t
        case Abs(_, body):
            yield from symbols(body)
        case App(f, a):
            yield from symbols(f)
            yield from symbols(a)


def free_vars(t: Term) -> dict[str, SimpleType]:
    return {s.name: s.type for s in symbols(t) if isinstance(s, Free)}


def occurs(name: str, t: Term) -> bool:
    return any(isinstance(s, Free) and s.name == name for s in symbols(t))


def map_symbols(t: Term, fn: Callable[[Symbol, int], Term]) -> Term:
    """Rebuild ``t`` with every constant/free variable passed through ``fn``.

    ``fn`` receives the symbol and the number of enclosing binders.
    """

    def go(t: Term, depth: int) -> Term:
        match t:
            case Const() | Free():
                return fn(t, depth)
            case Abs(ty, body, name):
                return Abs(ty, go(body, depth + 1), name)
            case App(f, a):
                return App(go(f, depth), go(a, depth))
        return t

    return go(t, 0)


def substitute(
    t: Term,
    terms: dict[str, Term],
    colours: Optional[dict[str, Colour]] = None,
) -> Term:
    """Simultaneous replacement of free variables, plus a colour map.

    Range terms must be closed. Capture cannot happen: free variables are
    named while bound ones are indices, and the printer renames binders
    that would shadow a free name.
    """
    for name, value in terms.items():
        if not is_closed(value):
            raise TermError(f"range term for {name} has loose bound indices")

    def fn(s: Symbol, depth: int) -> Term:
        if isinstance(s, Free) and s.name in terms:
            value = terms[s.name]
            vty = type_of(value)
            if vty != s.type:
                raise TypeMismatch(f"{s.name}: {s.type} cannot take a term of type {vty}")
            return apply_colours(value, colours) if colours else value
        if colours and s.colour is not None:
            return replace(s, colour=resolve_colour(s.colour, colours))
        return s

    return map_symbols(t, fn)


# -- colours ----------------------------------------------------------------


def resolve_colour(c: Optional[Colour], colours: dict[str, Colour]) -> Optional[Colour]:
    seen = set()
    while c is not None and c.var and c.name in colours and c.name not in seen:
        seen.add(c.name)
        nxt = colours[c.name]
        if nxt == c:
            break
        c = nxt
    return c


def apply_colours(t: Term, colours: dict[str, Colour]) -> Term:
    if not colours:
        return t
    return map_symbols(
        t,
        lambda s, _: replace(s, colour=resolve_colour(s.colour, colours)) if s.colour else s,
    )


def erase_colours(t: Term) -> Term:
    return map_symbols(t, lambda s, _: replace(s, colour=None) if s.colour else s)


def colours_in(t: Term) -> list[Colour]:
    return [s.colour for s in symbols(t) if s.colour is not None]


def alpha_equal(a: Term, b: Term) -> bool:
    return a == b


def colour_erased_equal(a: Term, b: Term) -> bool:
    return erase_colours(a) == erase_colours(b)


def size(t: Term) -> int:
    """Number of symbol and bound-variable occurrences."""
    match t:
        case Abs(_, body):
            return size(body)
        case App(f, a):
            return size(f) + size(a)
    return 1


def retype_free(t: Term, name: str, colour: Optional[Colour]) -> Term:
    """Set the colour of every occurrence of free variable ``name``."""
    return map_symbols(
        t, lambda s, _: replace(s, colour=colour) if isinstance(s, Free) and s.name == name else s
    )
