"""Independent validation of tableau proofs.

Walks the proof tree of a ``ProofResult`` branch by branch and re-derives
every step from its premise with its own formula decomposition, then
checks each closure under the final substitution. Shares nothing with the
prover beyond the term datatypes.
"""

from collections import Counter

from sloppy.terms import Abs, App, Const, Free, instantiate, logical, normalize, spine, substitute, symbols
from sloppy.types import E, T


class InvalidProof(AssertionError):
    pass


def _op(t):
    head, args = spine(t)
    if isinstance(head, Const) and head.name in ("and", "or", "imp", "revimp", "not", "forall", "exists"):
        return head.name, args
    return None, args


def _neg(t):
    return App(logical("not"), t)


def conjuncts(f):
    op, args = _op(f)
    if op == "and":
        return list(args)
    if op == "not":
        iop, ia = _op(args[0])
        if iop == "not":
            return [ia[0]]
        if iop == "or":
            return [_neg(ia[0]), _neg(ia[1])]
        if iop == "imp":
            return [ia[0], _neg(ia[1])]
        if iop == "revimp":
            return [ia[1], _neg(ia[0])]
    return None


def disjuncts(f):
    op, args = _op(f)
    if op == "or":
        return list(args)
    if op == "imp":
        return [_neg(args[0]), args[1]]
    if op == "revimp":
        return [args[0], _neg(args[1])]
    if op == "not":
        iop, ia = _op(args[0])
        if iop == "and":
            return [_neg(ia[0]), _neg(ia[1])]
    return None


def quantifier(f):
    """``("universal" | "existential", scope, negated)`` or None."""
    op, args = _op(f)
    if op == "forall":
        return "universal", args[0], False
    if op == "exists":
        return "existential", args[0], False
    if op == "not":
        iop, ia = _op(args[0])
        if iop == "exists":
            return "universal", ia[0], True
        if iop == "forall":
            return "existential", ia[0], True
    return None


def _open(scope, witness, negated):
    body = normalize(instantiate(scope.body, witness)) if isinstance(scope, Abs) else normalize(App(scope, witness))
    return _neg(body) if negated else body


def apply(t, sub, rounds=50):
    for _ in range(rounds):
        names = {s.name for s in symbols(t) if isinstance(s, Free)} & set(sub)
        if not names:
            return t
        t = substitute(t, {n: sub[n] for n in names})
    raise InvalidProof("substitution does not reach a fixpoint")


def check(result, axioms, goal, gamma_limit):
    """Raise ``InvalidProof`` unless ``result`` is a closed, rule-correct tableau."""
    if not result.proved:
        raise InvalidProof(f"status is {result.status}")
    nodes, sub = result.nodes, result.substitution
    roots = [nodes[i] for i in result.roots]
    if [n.formula for n in roots[:-1]] != list(axioms):
        raise InvalidProof("roots do not match the axioms")
    if roots[-1].formula != _neg(goal):
        raise InvalidProof("last root is not the negated goal")
    if result.relation_var and result.relation_var in sub:
        y = apply(Free(result.relation_var, T), sub)
        head = spine(y)[0]
        if not isinstance(head, Const) or _op(y)[0] is not None:
            raise InvalidProof(f"relation variable bound to non-atom {y}")
    seen_before = {i: set() for i in nodes}
    taken = set()
    for i in sorted(nodes):
        seen_before[i] = set(taken)
        taken |= {s.name for s in symbols(nodes[i].formula)}
    closed = []

    def derive(num, branch, uses):
        n = nodes[num]
        if n.premise not in branch:
            raise InvalidProof(f"({num}): premise ({n.premise}) is not on the branch")
        premise = nodes[n.premise].formula
        if n.rule == "alpha":
            parts = conjuncts(premise)
            if parts is None or n.formula not in parts:
                raise InvalidProof(f"({num}) is not a conjunct of ({n.premise})")
        elif n.rule in ("gamma", "delta"):
            q = quantifier(premise)
            want = "universal" if n.rule == "gamma" else "existential"
            if q is None or q[0] != want:
                raise InvalidProof(f"({num}): ({n.premise}) is not {want}")
            _, scope, negated = q
            if n.formula != _open(scope, n.witness, negated):
                raise InvalidProof(f"({num}) is not an instance of ({n.premise})")
            if n.rule == "gamma":
                if not (isinstance(n.witness, Free) and n.witness.type == E):
                    raise InvalidProof(f"({num}): gamma witness must be a fresh variable")
                uses[n.premise] += 1
                if uses[n.premise] > gamma_limit:
                    raise InvalidProof(f"({n.premise}) instantiated more than {gamma_limit} times")
            else:
                head, args = spine(n.witness)
                if not isinstance(head, Const) or head.name in seen_before[num]:
                    raise InvalidProof(f"({num}): skolem {head} is not fresh")
                if not all(isinstance(a, Free) for a in args):
                    raise InvalidProof(f"({num}): skolem arguments must be variables")
        else:
            raise InvalidProof(f"({num}): unexpected rule {n.rule}")

    def walk(entries, branch, uses):
        for k, entry in enumerate(entries):
            kind = entry[0]
            if kind == "node":
                derive(entry[1], branch, uses)
                branch = branch + [entry[1]]
            elif kind == "close":
                c = entry[1]
                if c.positive not in branch or c.negative not in branch:
                    raise InvalidProof("closure uses a formula off the branch")
                pos = apply(nodes[c.positive].formula, sub)
                neg = apply(nodes[c.negative].formula, sub)
                if neg != _neg(pos) or _op(pos)[0] is not None:
                    raise InvalidProof(f"({c.positive}) and ({c.negative}) are not complementary literals")
                if k != len(entries) - 1:
                    raise InvalidProof("steps after a closure")
                closed.append(c)
                return
            elif kind == "split":
                left, right = entry[1]
                heads = [sub_entries[0] for sub_entries in (left, right)]
                if any(h[0] != "node" for h in heads):
                    raise InvalidProof("split children must start with a node")
                a, b = (nodes[h[1]] for h in heads)
                if a.rule != "beta" or b.rule != "beta" or a.premise != b.premise:
                    raise InvalidProof("split children are not a beta pair")
                if a.premise not in branch:
                    raise InvalidProof("beta premise is not on the branch")
                if disjuncts(nodes[a.premise].formula) != [a.formula, b.formula]:
                    raise InvalidProof(f"({a.num}), ({b.num}) are not the disjuncts of ({a.premise})")
                walk(left[1:], branch + [a.num], Counter(uses))
                walk(right[1:], branch + [b.num], Counter(uses))
                if k != len(entries) - 1:
                    raise InvalidProof("steps after a split")
                return
        raise InvalidProof("open branch")

    walk(result.tree, list(result.roots), Counter())
    return closed
