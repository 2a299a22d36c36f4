"""Higher-order coloured unification.

Huet-style pre-unification over eta-long beta-normal terms, restricted to
the colour fragment {p, s, colour variables}. Rigid-rigid pairs are
decomposed, flex-rigid pairs drive the search through imitation and
projection bindings, and flex-flex pairs are left as residue.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

from .syntax import print_term
from .terms import (
    Abs,
    Bound,
    Colour,
    Const,
    Free,
    Signature,
    Term,
    TypeMismatch,
    app,
    colours_in,
    map_symbols,
    normalize,
    resolve_colour,
    spine,
    substitute,
    symbols,
    type_of,
    wrap_abs,
)
from .types import T, Arrow, SimpleType, split


class Clash(Exception):
    """Head symbol or colour mismatch; the branch has no unifier."""


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    def __post_init__(self):
        lt, rt = type_of(self.lhs), type_of(self.rhs)
        if lt != rt:
            raise TypeMismatch(f"equation sides have types {lt} and {rt}")

    def __str__(self) -> str:
        return f"{print_term(self.lhs)} = {print_term(self.rhs)}"


@dataclass(frozen=True)
class SearchLimits:
    max_depth: int = 12
    max_solutions: int = 64
    flex_flex: str = "keep"  # or "fail"

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.flex_flex not in ("keep", "fail"):
            raise ValueError(f"unknown flex-flex policy {self.flex_flex!r}")


@dataclass(frozen=True)
class Pair:
    """An equation between the bodies of two terms under shared binders."""

    ctx: tuple
    lhs: Term
    rhs: Term
    eq: int = 0


# -- colours ----------------------------------------------------------------


def _find(c: Optional[Colour], store: dict) -> Optional[Colour]:
    return resolve_colour(c, store)


def colour_unify(c1: Optional[Colour], c2: Optional[Colour], store: dict) -> dict:
    """Unify two colours, returning the extended store.

    ``None`` (an uncoloured occurrence) unifies with anything.
    """
    a, b = _find(c1, store), _find(c2, store)
    if a is None or b is None or a == b:
        return store
    if a.var:
        return {**store, a.name: b}
    if b.var:
        return {**store, b.name: a}
    raise Clash(f"colour {a} does not unify with {b}")


def is_monochrome(t: Term, colour: Colour, store: Optional[dict] = None) -> bool:
    """True when every coloured occurrence in ``t`` can be ``colour``."""
    store = store or {}
    try:
        for c in colours_in(t):
            store = colour_unify(c, colour, store)
    except Clash:
        return False
    return True


# -- substitutions ----------------------------------------------------------


@dataclass(frozen=True)
class ColouredSubstitution:
    terms: dict = field(default_factory=dict)
    colours: dict = field(default_factory=dict)
    residue: tuple = ()
    deferred: frozenset = frozenset()

    def apply(self, t: Term) -> Term:
        return normalize(substitute(t, self.terms, self.colours))

    def key(self) -> tuple:
        return (
            tuple(sorted(self.terms.items(), key=lambda kv: kv[0])),
            tuple(sorted(self.colours.items())),
            self.residue,
        )

    def sort_key(self) -> str:
        parts = [f"{k}={print_term(v, canonical=True)}" for k, v in sorted(self.terms.items())]
        parts += [f"?{k}={c}" for k, c in sorted(self.colours.items())]
        parts += [str(e) for e in self.residue]
        return "; ".join(parts)

    def __str__(self) -> str:
        body = ", ".join(f"{k} <- {print_term(v)}" for k, v in sorted(self.terms.items()))
        return "{" + body + "}"


@dataclass
class Unifiers:
    solutions: list
    complete: bool

    def __iter__(self) -> Iterator[ColouredSubstitution]:
        return iter(self.solutions)

    def __len__(self) -> int:
        return len(self.solutions)


# -- simplification ---------------------------------------------------------


def _is_flex(t: Term) -> bool:
    return isinstance(spine(t)[0], Free)


def _strip_common(pair: Pair) -> Pair:
    s, t, ctx = pair.lhs, pair.rhs, pair.ctx
    while isinstance(s, Abs) and isinstance(t, Abs):
        ctx = (s.type,) + ctx
        s, t = s.body, t.body
    return Pair(ctx, s, t, pair.eq)


def _body_type(t: Term, ctx: tuple) -> SimpleType:
    return type_of(t, None, ctx)


def simplify(
    pairs: Iterable[Pair], store: Optional[dict] = None, defer: frozenset = frozenset()
) -> tuple[list[Pair], dict, frozenset]:
    """Decompose rigid-rigid pairs and orient the rest flex-on-left.

    Returns the remaining pairs, the colour store, and the indices of
    equations in ``defer`` whose type-``t`` clashes were set aside.
    Raises ``Clash`` otherwise.
    """
    store = dict(store or {})
    out: list[Pair] = []
    deferred: set[int] = set()
    work = [_as_pair(p) for p in pairs]
    work.reverse()
    while work:
        pair = _strip_common(work.pop())
        s, t = pair.lhs, pair.rhs
        if s == t:
            continue
        hs, args_s = spine(s)
        ht, args_t = spine(t)
        s_flex, t_flex = isinstance(hs, Free), isinstance(ht, Free)
        if s_flex or t_flex:
            if t_flex and not s_flex:
                pair = Pair(pair.ctx, t, s, pair.eq)
            out.append(pair)
            continue
        same = (
            isinstance(hs, Const) and isinstance(ht, Const) and hs.name == ht.name and hs.type == ht.type
        ) or (isinstance(hs, Bound) and isinstance(ht, Bound) and hs.index == ht.index)
        if same and isinstance(hs, Const):
            try:
                store = colour_unify(hs.colour, ht.colour, store)
            except Clash:
                same = False
        if not same:
            if pair.eq in defer and _body_type(s, pair.ctx) == T:
                deferred.add(pair.eq)
                continue
            raise Clash(f"{_show(hs)} vs {_show(ht)}")
        for a, b in reversed(list(zip(args_s, args_t))):
            work.append(Pair(pair.ctx, a, b, pair.eq))
    return out, store, frozenset(deferred)


def _as_pair(p) -> Pair:
    if isinstance(p, Pair):
        return p
    if isinstance(p, Equation):
        return Pair((), p.lhs, p.rhs, 0)
    lhs, rhs = p
    return Pair((), lhs, rhs, 0)


def _show(h: Term) -> str:
    if isinstance(h, Bound):
        return f"bound#{h.index}"
    return print_term(h)


# -- binding generation -----------------------------------------------------


class Fresh:
    """Deterministic supply of fresh variable names and colour variables."""

    def __init__(self, prefix: str = "_"):
        self.prefix = prefix
        self._vars = itertools.count(1)
        self._colours = itertools.count(1)

    def var(self) -> str:
        return f"{self.prefix}H{next(self._vars)}"

    def colour(self) -> Colour:
        return Colour(f"{self.prefix}c{next(self._colours)}", var=True)


def _derived_colour(c: Optional[Colour], fresh: Fresh) -> Optional[Colour]:
    if c is None:
        return None
    return c if not c.var else fresh.colour()


def generate_bindings(
    pair: Pair, sig: Optional[Signature] = None, fresh: Optional[Fresh] = None
) -> list[tuple[str, Term, list[str]]]:
    """Imitation and projection bindings for a flex-rigid pair.

    Each item is ``(variable, binding, new variable names)``. A variable
    carrying a colour constant only receives terms built from symbols of
    that colour, so imitating a rigid head of another colour constant is
    skipped here.
    """
    fresh = fresh or Fresh()
    flex, rigid = pair.lhs, pair.rhs
    F, _ = spine(flex)
    h, _ = spine(rigid)
    if not isinstance(F, Free) or isinstance(h, Free):
        raise ValueError("generate_bindings needs a flex-rigid pair")
    arg_types, base = split(F.type)
    n = len(arg_types)
    xs = [Bound(n - 1 - i) for i in range(n)]
    binders = [Abs(ty, None, f"x{i + 1}" if n > 1 else "x") for i, ty in enumerate(arg_types)]

    def general(ty: SimpleType, created: list[str]) -> Term:
        name = fresh.var()
        created.append(name)
        hty = ty
        for aty in reversed(arg_types):
            hty = Arrow(aty, hty)
        return app(Free(name, hty, _derived_colour(F.colour, fresh)), *xs)

    out = []
    fixed = F.colour is not None and not F.colour.var
    if isinstance(h, Const):
        rigid_fixed = h.colour is not None and not h.colour.var
        if not (fixed and rigid_fixed and h.colour != F.colour):
            if h.colour is None:
                # uncoloured symbols (the logical vocabulary) stay uncoloured
                colour = None
            elif fixed:
                colour = F.colour
            else:
                colour = fresh.colour()
            created: list[str] = []
            h_args, _ = split(h.type)
            body = app(Const(h.name, h.type, colour), *[general(ty, created) for ty in h_args])
            out.append((F.name, normalize(wrap_abs(binders, body)), created))
    for i, ty in enumerate(arg_types):
        p_args, p_base = split(ty)
        if p_base != base:
            continue
        created = []
        body = app(xs[i], *[general(pty, created) for pty in p_args])
        out.append((F.name, normalize(wrap_abs(binders, body)), created))
    return out


# -- search -----------------------------------------------------------------


@dataclass
class _State:
    pairs: list
    bindings: dict
    store: dict
    depths: dict
    deferred: frozenset


def _subst_pair(p: Pair, name: str, value: Term) -> Pair:
    return Pair(
        p.ctx,
        normalize(substitute(p.lhs, {name: value}), p.ctx),
        normalize(substitute(p.rhs, {name: value}), p.ctx),
        p.eq,
    )


class _Search:
    def __init__(self, system, limits: SearchLimits, defer: frozenset):
        self.limits = limits
        self.defer = defer
        self.fresh = Fresh()
        self.complete = True
        self.found: dict = {}
        self.var_colours: dict[str, Optional[Colour]] = {}
        self.input_colours: list[str] = []
        pairs = []
        for i, eq in enumerate(system):
            eq = eq if isinstance(eq, Equation) else Equation(*eq)
            pairs.append(Pair((), normalize(eq.lhs), normalize(eq.rhs), i))
            for side in (eq.lhs, eq.rhs):
                for s in symbols(side):
                    if isinstance(s, Free):
                        self.var_colours.setdefault(s.name, s.colour)
                    if s.colour is not None and s.colour.var and s.colour.name not in self.input_colours:
                        self.input_colours.append(s.colour.name)
        self.initial = _State(pairs, {}, {}, {}, frozenset())

    def run(self) -> Unifiers:
        for sol in self._search(self.initial):
            key = sol.key()
            if key not in self.found:
                self.found[key] = sol
            if len(self.found) >= self.limits.max_solutions:
                self.complete = False
                break
        sols = sorted(self.found.values(), key=lambda s: s.sort_key())
        return Unifiers(sols, self.complete)

    def _search(self, state: _State) -> Iterator[ColouredSubstitution]:
        try:
            pairs, store, deferred = simplify(state.pairs, state.store, self.defer)
        except Clash:
            return
        deferred = deferred | state.deferred
        target = next((p for p in pairs if not _is_flex(p.rhs)), None)
        if target is None:
            sol = self._solution(state.bindings, store, pairs, deferred)
            if sol is not None:
                yield sol
            return
        F = spine(target.lhs)[0]
        depth = state.depths.get(F.name, 0)
        if depth >= self.limits.max_depth:
            self.complete = False
            return
        for name, value, created in generate_bindings(target, fresh=self.fresh):
            bindings = {
                k: normalize(substitute(v, {name: value})) for k, v in state.bindings.items()
            }
            bindings[name] = value
            depths = dict(state.depths)
            for c in created:
                depths[c] = depth + 1
            new_pairs = [_subst_pair(p, name, value) for p in pairs]
            yield from self._search(_State(new_pairs, bindings, store, depths, deferred))

    def _solution(self, bindings, store, residue, deferred) -> Optional[ColouredSubstitution]:
        if residue and self.limits.flex_flex == "fail":
            return None
        # monochrome restriction on variables with a colour constant
        for name, colour in self.var_colours.items():
            if colour is None or colour.var or name not in bindings:
                continue
            try:
                for c in colours_in(bindings[name]):
                    store = colour_unify(c, colour, store)
            except Clash:
                return None
        return _canonical(bindings, store, residue, deferred, self.var_colours, self.input_colours)


def _canonical(bindings, store, residue, deferred, var_colours, input_colours) -> ColouredSubstitution:
    """Resolve colours and rename search-internal names in a fixed order."""
    colour_names: dict[str, Colour] = {}
    var_names: dict[str, str] = {}

    def colour(c: Optional[Colour]) -> Optional[Colour]:
        c = _find(c, store)
        if c is None or not c.var:
            return c
        if c.name not in colour_names:
            colour_names[c.name] = Colour(f"C{len(colour_names) + 1}", var=True)
        return colour_names[c.name]

    def rename(t: Term) -> Term:
        def fn(s, _):
            s = replace(s, colour=colour(s.colour)) if s.colour is not None else s
            if isinstance(s, Free) and s.name not in var_colours:
                if s.name not in var_names:
                    var_names[s.name] = f"_F{len(var_names) + 1}"
                s = replace(s, name=var_names[s.name])
            return s

        return map_symbols(t, fn)

    terms = {}
    for name in sorted(var_colours):
        if name in bindings:
            terms[name] = rename(bindings[name])
    colours = {}
    for name in input_colours:
        colours[name] = colour(Colour(name, var=True))
    res = tuple(
        Equation(rename(wrap_ctx(p.ctx, p.lhs)), rename(wrap_ctx(p.ctx, p.rhs))) for p in residue
    )
    return ColouredSubstitution(terms, colours, res, deferred)


def wrap_ctx(ctx: tuple, body: Term) -> Term:
    for ty in ctx:
        body = Abs(ty, body, "x")
    return body


def unify(
    system: Iterable,
    sig: Optional[Signature] = None,
    limits: Optional[SearchLimits] = None,
    *,
    defer: Iterable[int] = (),
) -> Unifiers:
    """All coloured unifiers of ``system`` found within ``limits``.

    Equations are worked off left to right. Indices in ``defer`` name
    equations whose type-``t`` rigid clashes are recorded instead of
    failing, for a later logical-relation check.
    """
    system = list(system)
    if sig is not None:
        for eq in system:
            eq = eq if isinstance(eq, Equation) else Equation(*eq)
            type_of(eq.lhs, sig)
            type_of(eq.rhs, sig)
    return _Search(system, limits or SearchLimits(), frozenset(defer)).run()
