"""Free-variable analytic tableaux for logical-relation checks.

Each branch is developed depth first: alpha and delta rules as soon as a
formula arrives, gamma instances once nothing else is pending (up to a
per-formula bound), beta splits last. A new literal may close the branch
against an earlier complementary one by first-order unification; the
option of leaving it open is kept, so the search backtracks over closing
choices under one substitution shared by all branches. The gamma bound is
raised from 1 until a proof is found or the limit is reached.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .syntax import print_term
from .terms import (
    Abs,
    App,
    Const,
    Free,
    Term,
    app,
    erase_colours,
    instantiate,
    logical,
    normalize,
    spine,
    symbols,
)
from .types import E, T, arrow, split


class ResourceOut(Exception):
    pass


@dataclass(frozen=True)
class TableauLimits:
    gamma: int = 2
    max_nodes: int = 20000
    max_steps: int = 5000


@dataclass
class Node:
    num: int
    formula: Term
    rule: str  # axiom | negated goal | alpha | beta | gamma | delta
    premise: Optional[int] = None
    witness: Optional[Term] = None

    def justification(self) -> str:
        if self.premise is None:
            return self.rule
        if self.witness is not None:
            return f"{self.rule} from ({self.premise}) with {print_term(self.witness, colours=False)}"
        return f"{self.rule} from ({self.premise})"

    def __str__(self) -> str:
        return f"({self.num}) {print_term(self.formula, colours=False)}"


@dataclass
class Closure:
    positive: int
    negative: int
    bindings: dict


@dataclass
class ProofResult:
    status: str  # proved | failed | resource-out
    substitution: dict = field(default_factory=dict)
    closures: list = field(default_factory=list)
    nodes: dict = field(default_factory=dict)
    tree: list = field(default_factory=list)
    roots: list = field(default_factory=list)
    variables: frozenset = frozenset()
    relation_var: Optional[str] = None

    @property
    def proved(self) -> bool:
        return self.status == "proved"

    def resolve(self, t: Term) -> Term:
        return _walk_deep(t, self.substitution)

    def binding(self, name: str) -> Optional[Term]:
        if name not in self.substitution:
            return None
        return _walk_deep(Free(name, E), self.substitution)

    def trace(self) -> str:
        return format_trace(self)


# -- formula classification ---------------------------------------------------


def _neg(t: Term) -> Term:
    return App(logical("not"), t)


def _parts(t: Term) -> tuple[Optional[str], list[Term]]:
    head, args = spine(t)
    if isinstance(head, Const) and head.name in ("and", "or", "imp", "revimp", "not", "forall", "exists"):
        return head.name, args
    return None, args


def classify(t: Term) -> tuple[str, list]:
    """Smullyan classification: literal, alpha, beta, gamma or delta."""
    op, args = _parts(t)
    if op == "and":
        return "alpha", args
    if op == "or":
        return "beta", args
    if op == "imp":
        return "beta", [_neg(args[0]), args[1]]
    if op == "revimp":
        return "beta", [args[0], _neg(args[1])]
    if op == "forall":
        return "gamma", [args[0], False]
    if op == "exists":
        return "delta", [args[0], False]
    if op == "not":
        inner = args[0]
        iop, iargs = _parts(inner)
        if iop == "not":
            return "alpha", [iargs[0]]
        if iop == "and":
            return "beta", [_neg(iargs[0]), _neg(iargs[1])]
        if iop == "or":
            return "alpha", [_neg(iargs[0]), _neg(iargs[1])]
        if iop == "imp":
            return "alpha", [iargs[0], _neg(iargs[1])]
        if iop == "revimp":
            return "alpha", [iargs[1], _neg(iargs[0])]
        if iop == "forall":
            return "delta", [iargs[0], True]
        if iop == "exists":
            return "gamma", [iargs[0], True]
    return "literal", []


def _instance(scope: Term, negated: bool, witness: Term) -> Term:
    if isinstance(scope, Abs):
        body = normalize(instantiate(scope.body, witness))
    else:
        body = normalize(App(scope, witness))
    return _neg(body) if negated else body


def _literal(t: Term) -> tuple[bool, Term]:
    op, args = _parts(t)
    if op == "not":
        return False, args[0]
    return True, t


# -- first-order unification ---------------------------------------------------


def _walk(t: Term, s: dict) -> Term:
    while isinstance(t, Free) and t.name in s:
        t = s[t.name]
    return t


def _walk_deep(t: Term, s: dict) -> Term:
    t = _walk(t, s)
    if isinstance(t, App):
        return App(_walk_deep(t.fn, s), _walk_deep(t.arg, s))
    if isinstance(t, Abs):
        return Abs(t.type, _walk_deep(t.body, s), t.name)
    return t


def _occurs(name: str, t: Term, s: dict) -> bool:
    t = _walk(t, s)
    if isinstance(t, Free):
        return t.name == name
    if isinstance(t, App):
        return _occurs(name, t.fn, s) or _occurs(name, t.arg, s)
    if isinstance(t, Abs):
        return _occurs(name, t.body, s)
    return False


class _Unifier:
    def __init__(self, variables: frozenset, relation_var: Optional[str], predicates: frozenset):
        self.variables = variables
        self.relation_var = relation_var
        self.predicates = predicates

    def _bindable(self, var: Free, value: Term) -> bool:
        if var.name != self.relation_var:
            return True
        # the relation variable only stands for an atom over an axiom predicate
        head, _ = spine(value)
        return isinstance(head, Const) and head.name in self.predicates

    def unify(self, a: Term, b: Term, s: dict) -> Optional[dict]:
        a, b = _walk(a, s), _walk(b, s)
        if a == b:
            return s
        for x, y in ((a, b), (b, a)):
            if isinstance(x, Free) and x.name in self.variables:
                if isinstance(y, Free) and y.name in self.variables and x.name == self.relation_var:
                    continue
                if _occurs(x.name, y, s) or not self._bindable(x, _walk_deep(y, s)):
                    return None
                return {**s, x.name: y}
        if isinstance(a, App) and isinstance(b, App):
            s2 = self.unify(a.fn, b.fn, s)
            return None if s2 is None else self.unify(a.arg, b.arg, s2)
        if isinstance(a, Abs) and isinstance(b, Abs) and a.type == b.type:
            return self.unify(a.body, b.body, s)
        return None


# -- the prover -------------------------------------------------------------------


class _Prover:
    def __init__(self, limits: TableauLimits, gamma: int, variables, relation_var, predicates):
        self.limits = limits
        self.gamma = gamma
        self.nodes: dict[int, Node] = {}
        self.counter = itertools.count(1)
        self.fresh_vars = itertools.count(1)
        self.fresh_skolem = itertools.count(1)
        self.variables = set(variables)
        self.unifier = _Unifier(self.variables, relation_var, frozenset(predicates))
        self.gamma_cut = False
        self.steps = 0
        self.taken: set[str] = set()

    def node(self, formula: Term, rule: str, premise: Optional[int] = None, witness=None) -> int:
        if len(self.nodes) >= self.limits.max_nodes:
            raise ResourceOut("node limit reached")
        num = next(self.counter)
        self.nodes[num] = Node(num, formula, rule, premise, witness)
        self.taken.update(s.name for s in symbols(formula))
        return num

    def _var(self) -> Free:
        while True:
            name = f"v{next(self.fresh_vars)}"
            if name not in self.taken and name not in self.variables:
                break
        self.variables.add(name)
        return Free(name, E)

    def _skolem(self, formula: Term) -> Term:
        while True:
            name = f"sk{next(self.fresh_skolem)}"
            if name not in self.taken:
                break
        args = sorted(
            {s.name for s in symbols(formula) if isinstance(s, Free) and s.name in self.variables and s.type == E}
        )
        return app(Const(name, arrow(*([E] * len(args)), E)), *[Free(a, E) for a in args])

    def _key(self, atom: Term) -> Optional[tuple]:
        head, args = spine(atom)
        if isinstance(head, Free) and head.name in self.variables:
            return None
        return (head.name if isinstance(head, (Const, Free)) else head, len(args))

    def branch(self, lits: tuple, pending: tuple, gammas: tuple, betas: tuple, s: dict):
        """Yield ``(substitution, subtree)`` for each way of closing the branch."""
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise ResourceOut("step limit reached")
        if pending:
            num, rest = pending[0], pending[1:]
            f = self.nodes[num].formula
            kind, parts = classify(f)
            if kind == "literal":
                sign, atom = _literal(f)
                key = self._key(atom)
                for other, osign, oatom, okey in reversed(lits):
                    if osign == sign or (key != okey and key is not None and okey is not None):
                        continue
                    pos, neg = (num, other) if sign else (other, num)
                    patom, natom = (atom, oatom) if sign else (oatom, atom)
                    s2 = self.unifier.unify(patom, natom, s)
                    if s2 is not None:
                        new = {k: v for k, v in s2.items() if k not in s}
                        yield s2, [("close", Closure(pos, neg, new))]
                        if not new:
                            # closed without commitments: alternatives cannot do better
                            return
                yield from self.branch(lits + ((num, sign, atom, key),), rest, gammas, betas, s)
            elif kind == "alpha":
                ids = tuple(self.node(p, "alpha", num) for p in parts)
                for s2, tree in self.branch(lits, ids + rest, gammas, betas, s):
                    yield s2, [("node", i) for i in ids] + tree
            elif kind == "delta":
                scope, negated = parts
                witness = self._skolem(f)
                i = self.node(_instance(scope, negated, witness), "delta", num, witness)
                for s2, tree in self.branch(lits, (i,) + rest, gammas, betas, s):
                    yield s2, [("node", i)] + tree
            elif kind == "gamma":
                yield from self.branch(lits, rest, gammas + ((num, 0),), betas, s)
            else:
                yield from self.branch(lits, rest, gammas, betas + (num,), s)
            return
        open_gammas = [k for k, (_, n) in enumerate(gammas) if n < self.gamma]
        if open_gammas:
            k = min(open_gammas, key=lambda k: gammas[k][1])
            g, n = gammas[k]
            scope, negated = classify(self.nodes[g].formula)[1]
            witness = self._var()
            i = self.node(_instance(scope, negated, witness), "gamma", g, witness)
            gammas = gammas[:k] + ((g, n + 1),) + gammas[k + 1:]
            for s2, tree in self.branch(lits, (i,), gammas, betas, s):
                yield s2, [("node", i)] + tree
            return
        if gammas:
            self.gamma_cut = True
        if not betas:
            return
        b, betas = betas[0], betas[1:]
        left, right = (self.node(p, "beta", b) for p in classify(self.nodes[b].formula)[1])
        for s1, t1 in self.branch(lits, (left,), gammas, betas, s):
            for s2, t2 in self.branch(lits, (right,), gammas, betas, s1):
                yield s2, [("split", [[("node", left)] + t1, [("node", right)] + t2])]


def _renumber(prover: _Prover, roots: list, tree: list) -> tuple[dict, list, list]:
    order: dict[int, int] = {}
    for r in roots:
        order[r] = len(order) + 1

    def visit(entries):
        for entry in entries:
            if entry[0] == "node":
                order[entry[1]] = len(order) + 1
            elif entry[0] == "split":
                for sub in entry[1]:
                    visit(sub)

    visit(tree)
    nodes = {}
    for old, new in order.items():
        n = prover.nodes[old]
        nodes[new] = Node(new, n.formula, n.rule, order.get(n.premise), n.witness)
    closures = []

    def rebuild(entries):
        out = []
        for entry in entries:
            if entry[0] == "node":
                out.append(("node", order[entry[1]]))
            elif entry[0] == "split":
                out.append(("split", [rebuild(sub) for sub in entry[1]]))
            else:
                c = entry[1]
                c = Closure(order[c.positive], order[c.negative], c.bindings)
                closures.append(c)
                out.append(("close", c))
        return out

    return nodes, rebuild(tree), closures


def prove(
    axioms: list,
    goal: Term,
    limits: Optional[TableauLimits] = None,
    *,
    variables=(),
    relation_var: Optional[str] = None,
    predicates=(),
) -> ProofResult:
    """Refute ``axioms + [~goal]``.

    ``variables`` names free variables of the goal that closing
    substitutions may instantiate; ``relation_var`` is additionally
    restricted to atoms over ``predicates``. The gamma bound is deepened
    from 1 up to ``limits.gamma``.
    """
    limits = limits or TableauLimits()
    axioms = [erase_colours(a) for a in axioms]
    goal = erase_colours(goal)
    free = set(variables) | ({relation_var} if relation_var else set())
    status = "failed"
    for g in range(1, limits.gamma + 1):
        prover = _Prover(limits, g, free, relation_var, predicates)
        roots = [prover.node(ax, "axiom") for ax in axioms]
        roots.append(prover.node(_neg(goal), "negated goal"))
        try:
            found = next(prover.branch((), tuple(roots), (), (), {}), None)
        except (ResourceOut, RecursionError):
            return ProofResult("resource-out", variables=frozenset(free), relation_var=relation_var)
        if found:
            nodes, tree, closures = _renumber(prover, roots, found[1])
            return ProofResult(
                "proved",
                substitution=found[0],
                closures=closures,
                nodes=nodes,
                tree=tree,
                roots=list(range(1, len(roots) + 1)),
                variables=frozenset(prover.variables),
                relation_var=relation_var,
            )
        if not prover.gamma_cut:
            break
        status = "resource-out"
    return ProofResult(status, variables=frozenset(free), relation_var=relation_var)


def _generalize(t: Term, y: Term) -> Term:
    """``X => Y`` pushed under the existential prefix of ``X``."""
    op, args = _parts(t)
    if op == "exists" and isinstance(args[0], Abs):
        scope = args[0]
        return App(logical("exists"), Abs(scope.type, _generalize(scope.body, y), scope.name))
    return app(logical("imp"), t, y)


def predicates_of(formulas) -> frozenset:
    out = set()
    for f in formulas:
        for s in symbols(f):
            if isinstance(s, Const) and s.name not in ("and", "or", "imp", "revimp", "not", "forall", "exists", "eq"):
                if split(s.type)[1] == T:
                    out.add(s.name)
    return frozenset(out)


def check_relation(lhs: Term, rhs: Term, mode: str, axioms: list, limits: Optional[TableauLimits] = None) -> ProofResult:
    """Prove that ``lhs`` and ``rhs`` stand in the relation ``mode``.

    ``entailment``: ``lhs => rhs``. ``common-generalization``: both sides
    imply one atom ``Y`` over an axiom predicate.
    """
    lhs, rhs = erase_colours(lhs), erase_colours(rhs)
    residue = sorted(
        {s.name for t in (lhs, rhs) for s in symbols(t) if isinstance(s, Free) and s.type == E}
    )
    if any(isinstance(s, Free) and s.type != E for t in (lhs, rhs) for s in symbols(t)):
        return ProofResult("failed")
    if mode in ("entailment", "entail"):
        return prove(axioms, app(logical("imp"), lhs, rhs), limits, variables=residue)
    if mode in ("common-generalization", "common-gen"):
        taken = {s.name for t in (lhs, rhs, *axioms) for s in symbols(t)}
        name = "Y"
        while name in taken:
            name += "'"
        y = Free(name, T)
        goal = app(logical("and"), _generalize(lhs, y), _generalize(rhs, y))
        return prove(
            axioms, goal, limits, variables=residue, relation_var=name, predicates=predicates_of(axioms)
        )
    raise ValueError(f"unknown relation {mode!r}")


def format_trace(result: ProofResult) -> str:
    """Numbered tableau lines, indented by branch depth."""
    if not result.nodes:
        return f"tableau: {result.status}"
    lines = []

    def show(entries, indent: int):
        pad = "  " * indent
        for entry in entries:
            if entry[0] == "node":
                n = result.nodes[entry[1]]
                lines.append(f"{pad}{n}    [{n.justification()}]")
            elif entry[0] == "split":
                for sub in entry[1]:
                    show(sub, indent + 1)
            else:
                c = entry[1]
                binds = ", ".join(f"{k} <- {print_term(v, colours=False)}" for k, v in c.bindings.items())
                lines.append(f"{pad}* closed by ({c.positive}) and ({c.negative}) {{{binds}}}")

    for r in result.roots:
        n = result.nodes[r]
        lines.append(f"{n}    [{n.justification()}]")
    show(result.tree, 0)
    lines.append(f"status: {result.status}")
    return "\n".join(lines)
