"""Parallelism equations, their coloured solutions, and reading labels.

The source and target meanings must both factor through one abstraction
``A`` applied to their parallel elements::

    SSem = A(SP1, ..., SPn)        TSem = A(TP1, ..., TPn)

Each unifier of that pair instantiates the target; the instantiated target
is a reading, labelled strict, sloppy or mixed by how ``A`` treats the
anaphoric positions of the source.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .hocu import ColouredSubstitution, Equation, SearchLimits, unify
from .problem import (
    DiscourseProblem,
    ConflictingTags,
    ProblemError,
    node_at,
    tag_occurrences,
)
from .syntax import print_term
from .tableau import ProofResult, TableauLimits, check_relation
from .terms import (
    LOGICAL,
    PRIMARY,
    SECONDARY,
    Abs,
    App,
    Bound,
    Colour,
    Const,
    Free,
    Term,
    TypeMismatch,
    app,
    colours_in,
    erase_colours,
    free_vars,
    map_symbols,
    normalize,
    spine,
    substitute,
    symbols,
    type_of,
)
from .types import E, T, arrow

RAISED = arrow(arrow(E, T), T)
RELATIONS = {
    "identity": "identity",
    "entail": "entailment",
    "entailment": "entailment",
    "common-gen": "common-generalization",
    "common-generalization": "common-generalization",
}
ANAPHORIC = ("pronoun", "full-np")


class NoSolution(Exception):
    pass


class Underdetermined(Exception):
    pass


@dataclass(frozen=True)
class Reading:
    label: str  # strict | sloppy | mixed
    target: Term
    witness: ColouredSubstitution
    proof: Optional[ProofResult] = field(default=None, compare=False)


@dataclass
class Resolution:
    problem: DiscourseProblem
    equations: list
    abstraction: str
    status: str  # ok | no-solution | underdetermined
    readings: list
    unifiers: list
    complete: bool = True
    tableau_exhausted: bool = False

    @property
    def resource_out(self) -> bool:
        return not self.complete or self.tableau_exhausted

    def bindings(self, var: str) -> list[Term]:
        """Distinct colour-erased values of ``var`` over the readings' witnesses."""
        out = []
        for r in self.readings:
            if var in r.witness.terms:
                v = erase_colours(r.witness.terms[var])
                if v not in out:
                    out.append(v)
        return out

    def solution_values(self) -> list[Term]:
        """Distinct colour-erased values of the abstraction over all unifiers."""
        out = []
        for u in self.unifiers:
            v = erase_colours(u.terms[self.abstraction]) if self.abstraction in u.terms else None
            if v is not None and v not in out:
                out.append(v)
        return out


# -- colours -------------------------------------------------------------------


class _Colours:
    def __init__(self, taken: set[str]):
        self.taken = taken
        self.n = 0

    def __call__(self) -> Colour:
        while True:
            self.n += 1
            name = f"k{self.n}"
            if name not in self.taken:
                return Colour(name, var=True)


def _is_logical(s) -> bool:
    return isinstance(s, Const) and LOGICAL.get(s.name) == s.type


def tag_kinds(p: DiscourseProblem) -> dict[str, str]:
    """Explicit tag kinds, with parallel elements defaulting to primary."""
    kinds: dict[str, str] = {}
    for tag, kind in p.colour_tags:
        if kinds.get(tag, kind) != kind:
            raise ConflictingTags(f"#{tag} tagged both {kinds[tag]} and {kind}", p.path)
        kinds[tag] = kind
    for sp, tp in p.parallels:
        for el in (sp, tp):
            if isinstance(el, str):
                kinds.setdefault(el, "primary")
    return kinds


def annotate_colours(p: DiscourseProblem, coloured: bool = True) -> DiscourseProblem:
    """Give every symbol occurrence its colour.

    Primary occurrences get ``p``, full noun phrases ``s``, anaphors their
    declared colour; pronoun tags share one colour variable and anything
    else gets a fresh one. With ``coloured`` off every colour is erased.
    """
    kinds = tag_kinds(p)
    elements = [p.element(side, el) for pair in p.parallels for side, el in zip(("source", "target"), pair)]
    for tag, kind in kinds.items():
        if kind != "primary":
            continue
        for t in (p.source, p.target):
            for _, node in tag_occurrences(t).get(tag, []):
                if not any(erase_colours(node) == erase_colours(el) for el in elements):
                    raise ProblemError(f"#{tag} is primary but matches no parallel element", p.path)
    if not coloured:
        parallels = [
            tuple(erase_colours(p.element(side, el)) for side, el in zip(("source", "target"), pair))
            for pair in p.parallels
        ]
        return replace(
            p,
            source=erase_colours(p.source),
            target=erase_colours(p.target),
            parallels=parallels,
            colour_tags=sorted(kinds.items()),
        )
    taken = {c.name for t in (p.source, p.target, *elements) for c in colours_in(t) if c.var}
    fresh = _Colours(taken)
    per_tag: dict[str, Colour] = {}
    per_var: dict[str, Colour] = {}
    for name, ann in sorted(p.anaphors.items()):
        per_var[name] = {"s": SECONDARY, "p": PRIMARY}.get(ann) or fresh()

    def colour(s, _depth):
        if _is_logical(s):
            return replace(s, colour=None)
        if isinstance(s, Free):
            if s.name not in per_var:
                per_var[s.name] = s.colour or fresh()
            return replace(s, colour=per_var[s.name])
        kind = kinds.get(s.tag)
        if kind == "primary":
            return replace(s, colour=PRIMARY)
        if kind == "full-np":
            return replace(s, colour=SECONDARY)
        if kind == "pronoun":
            if s.tag not in per_tag:
                per_tag[s.tag] = fresh()
            return replace(s, colour=per_tag[s.tag])
        if kind is None and s.colour is not None:
            return s
        return replace(s, colour=fresh())

    source = map_symbols(p.source, colour)
    target = map_symbols(p.target, colour)

    def element(side: str, el) -> Term:
        if isinstance(el, str):
            return tag_occurrences(source if side == "source" else target)[el][0][1]
        return map_symbols(el, lambda s, _: s if _is_logical(s) else replace(s, colour=PRIMARY))

    parallels = [(element("source", sp), element("target", tp)) for sp, tp in p.parallels]
    return replace(p, source=source, target=target, parallels=parallels, colour_tags=sorted(kinds.items()))


# -- equations -----------------------------------------------------------------


def type_raise(t: Term) -> Term:
    """An individual as the set of its properties."""
    return Abs(arrow(E, T), App(Bound(0), t), "P")


def parallel_terms(p: DiscourseProblem) -> tuple[list[Term], list[Term]]:
    """Source and target parallel elements, raised where their types differ."""
    sps, tps = [], []
    for i, (sp, tp) in enumerate(p.parallels):
        sp, tp = p.element("source", sp), p.element("target", tp)
        ts, tt = type_of(sp), type_of(tp)
        if ts == E and tt == RAISED:
            sp = type_raise(sp)
        elif tt == E and ts == RAISED:
            tp = type_raise(tp)
        elif ts != tt:
            raise TypeMismatch(f"parallel pair {i + 1} has types {ts} and {tt}")
        sps.append(normalize(sp))
        tps.append(normalize(tp))
    return sps, tps


def _abstraction(p: DiscourseProblem, types: list) -> Free:
    taken = set(p.signature.consts) | set(p.signature.vars)
    taken |= {s.name for t in (p.source, p.target) for s in symbols(t)}
    name = "A"
    n = 0
    while name in taken:
        n += 1
        name = f"A{n}"
    colours = {c.name for t in (p.source, p.target) for c in colours_in(t) if c.var}
    cname = "B"
    n = 0
    while cname in colours:
        n += 1
        cname = f"B{n}"
    coloured = any(s.colour is not None for t in (p.source, p.target) for s in symbols(t))
    return Free(name, arrow(*types, T), Colour(cname, var=True) if coloured else None)


def build_equations(p: DiscourseProblem) -> list[Equation]:
    """``[SSem = A(SP...), TSem = A(TP...)]``, source first."""
    sps, tps = parallel_terms(p)
    a = _abstraction(p, [type_of(t) for t in sps])
    return [
        Equation(p.source, normalize(app(a, *sps))),
        Equation(p.target, normalize(app(a, *tps))),
    ]


# -- labels --------------------------------------------------------------------


def _marker(i: int, sp: Term) -> tuple[Term, str]:
    name = f"__parallel{i}"
    ty = type_of(sp)
    if ty == RAISED and isinstance(sp, Abs):
        return type_raise(Const(name, E)), name
    return Const(name, ty), name


def _same_symbol(a: Term, b: Term) -> bool:
    if isinstance(a, Bound) and isinstance(b, Bound):
        return a.index == b.index
    if isinstance(a, (Const, Free)) and isinstance(b, (Const, Free)):
        return type(a) is type(b) and a.name == b.name
    return False


def classify_reading(binding: Term, p: DiscourseProblem) -> str:
    """Label the abstraction's value as strict, sloppy or mixed.

    Each tagged position of the source is looked up in the value applied
    to marker constants: a marker there means the position was abstracted,
    the original symbol means it was kept.
    """
    kinds = tag_kinds(p)
    sps, _ = parallel_terms(p)
    markers = [_marker(i, sp) for i, sp in enumerate(sps)]
    names = {name for _, name in markers}
    b = normalize(app(binding, *[m for m, _ in markers]))
    primary, anaphoric = [], []
    for tag, occs in tag_occurrences(p.source).items():
        kind = kinds.get(tag)
        for path, node in occs:
            if kind == "primary":
                primary.append((path, node))
            elif kind in ANAPHORIC:
                anaphoric.append((path, node))

    def state(path, node) -> Optional[str]:
        there = node_at(b, path)
        if isinstance(there, Const) and there.name in names:
            return "abstracted"
        if there is not None and _same_symbol(there, node):
            return "kept"
        return None

    prim = [state(*x) for x in primary]
    anap = [state(*x) for x in anaphoric]
    if None not in prim and None not in anap:
        if "kept" in prim:
            return "mixed"
        if all(s == "abstracted" for s in anap):
            return "sloppy"
        if all(s == "kept" for s in anap):
            return "strict"
        return "mixed"
    # shapes diverge (raised parallel elements): count marker occurrences
    k = sum(1 for s in symbols(b) if isinstance(s, Const) and s.name in names)
    n = max(len(primary), len(sps))
    if k == n + len(anaphoric):
        return "sloppy"
    if anaphoric and k == n:
        return "strict"
    return "mixed"


def _abstraction_score(sub: ColouredSubstitution, names) -> int:
    def bound(t):
        if isinstance(t, Bound):
            return 1
        if isinstance(t, Abs):
            return bound(t.body)
        if isinstance(t, App):
            return bound(t.fn) + bound(t.arg)
        return 0

    return sum(bound(sub.terms[n]) for n in names if n in sub.terms)


# -- resolution ----------------------------------------------------------------


def _relate(sol, eqs, mode, axioms, signature, tlimits):
    """Close a deferred target clash by proving the logical relation."""
    target_side = sol.apply(eqs[1].lhs)
    source_side = sol.apply(eqs[1].rhs)
    proof = check_relation(source_side, target_side, mode, axioms, tlimits)
    if not proof.proved:
        return None, proof
    extra = {}
    for name, ty in free_vars(target_side).items():
        if ty != E:
            continue
        value = proof.binding(name)
        if value is not None and all(
            isinstance(s, Const) and s.name in signature.consts for s in symbols(value)
        ):
            extra[name] = value
    if extra:
        terms = {k: normalize(substitute(v, extra)) for k, v in sol.terms.items()}
        terms.update(extra)
        sol = replace(sol, terms=dict(sorted(terms.items())))
    return sol, proof


def resolve(
    p: DiscourseProblem,
    limits: Optional[SearchLimits] = None,
    *,
    relation: Optional[str] = None,
    axioms: Optional[list] = None,
    coloured: bool = True,
    tableau_limits: Optional[TableauLimits] = None,
) -> Resolution:
    """Solve the parallelism equations of ``p`` and collect its readings."""
    mode = RELATIONS[relation or p.relation]
    axioms = list(p.axioms if axioms is None else axioms)
    annotated = annotate_colours(p, coloured)
    eqs = build_equations(annotated)
    a_name = spine(eqs[0].rhs)[0].name
    defer = (1,) if mode != "identity" else ()
    unifiers = unify(eqs, limits=limits or SearchLimits(), defer=defer)
    anaphors = sorted(p.anaphors)
    valid, pending, exhausted = [], [], False
    proofs: dict[int, ProofResult] = {}
    for sol in unifiers:
        proof = None
        if sol.deferred:
            sol, proof = _relate(sol, eqs, mode, axioms, p.signature, tableau_limits)
            if sol is None:
                exhausted |= proof.status == "resource-out"
                continue
        if any(n not in sol.terms or free_vars(sol.terms[n]) for n in anaphors) or any(
            any(n in free_vars(e.lhs) or n in free_vars(e.rhs) for n in anaphors) for e in sol.residue
        ):
            pending.append(sol)
            continue
        if proof is not None:
            proofs[id(sol)] = proof
        valid.append(sol)
    best: dict = {}
    for sol in valid:
        label = classify_reading(sol.terms[a_name], annotated)
        if coloured and label == "mixed":
            continue
        target = sol.apply(annotated.target)
        key = (label, erase_colours(target))
        score = (-_abstraction_score(sol, anaphors + [a_name]), sol.sort_key())
        if key not in best or score < best[key][0]:
            best[key] = (score, Reading(label, target, sol, proofs.get(id(sol))))
    order = {"sloppy": 0, "strict": 1, "mixed": 2}
    readings = sorted(
        (r for _, r in best.values()),
        key=lambda r: (order[r.label], print_term(r.target, colours=False)),
    )
    kept = [u for u in valid if not (coloured and classify_reading(u.terms[a_name], annotated) == "mixed")]
    status = "ok" if readings else ("underdetermined" if pending else "no-solution")
    return Resolution(p, eqs, a_name, status, readings, kept, unifiers.complete, exhausted)


def solve_discourse(p: DiscourseProblem, limits: Optional[SearchLimits] = None, **kwargs) -> list[Reading]:
    """Readings of ``p``; raises when there are none."""
    res = resolve(p, limits, **kwargs)
    if res.status == "underdetermined":
        raise Underdetermined(f"{p.name}: anaphor variables are left unconstrained")
    if res.status == "no-solution":
        raise NoSolution(f"{p.name}: the parallelism equations have no solution")
    return res.readings
