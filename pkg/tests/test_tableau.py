import itertools
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import trace_checker
from sloppy.parallelism import resolve
from sloppy.problem import load_problem
from sloppy.syntax import parse_term
from sloppy.tableau import TableauLimits, check_relation, classify, predicates_of, prove
from sloppy.terms import Const, Free, Signature, app, erase_colours, logical
from sloppy.types import E, T, arrow

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

SIG = Signature(
    {
        "a": T,
        "b": T,
        "c": T,
        "j": E,
        "p": E,
        "m": E,
        "k": E,
        "g": arrow(E, E),
        "q": arrow(E, T),
        "po": arrow(E, T),
        "ar": arrow(E, E, T),
        "col": arrow(E, E, T),
        "nasty": arrow(E, E, T),
        "cr": arrow(E, E, T),
        "ins": arrow(E, E, T),
    },
    {"x": E},
)

NASTY = [
    "forall x:e. forall y:e. ar(x, y) => nasty(x, y)",
    "forall x:e. forall y:e. col(x, y) => nasty(x, y)",
]


def f(text):
    return parse_term(text, SIG)


def checked(result, axioms, goal, gamma=2):
    trace_checker.check(result, [erase_colours(a) for a in axioms], erase_colours(goal), gamma)
    return result


def imp(a, b):
    return app(logical("imp"), a, b)


# -- classification -----------------------------------------------------------


@pytest.mark.parametrize(
    "text, kind",
    [
        ("a & b", "alpha"),
        ("a | b", "beta"),
        ("a => b", "beta"),
        ("a <= b", "beta"),
        ("~(a => b)", "alpha"),
        ("~(a | b)", "alpha"),
        ("~(a & b)", "beta"),
        ("~~a", "alpha"),
        ("forall x:e. q(x)", "gamma"),
        ("~(exists x:e. q(x))", "gamma"),
        ("exists x:e. q(x)", "delta"),
        ("~(forall x:e. q(x))", "delta"),
        ("q(j)", "literal"),
        ("~q(j)", "literal"),
    ],
)
def test_classify(text, kind):
    assert classify(f(text))[0] == kind


def test_negated_implication_splits_into_antecedent_and_negated_consequent():
    _, parts = classify(f("~(a => b)"))
    assert parts == [f("a"), f("~b")]


# -- small proofs ---------------------------------------------------------------


def test_tautology():
    goal = f("a => a")
    r = prove([], goal)
    assert r.proved and len(r.closures) == 1
    checked(r, [], goal)


def test_non_theorem_fails():
    r = prove([], f("a => b"))
    assert r.status == "failed" and not r.closures


def test_modus_ponens_with_axioms():
    axioms = [f("a"), f("a => b")]
    r = prove(axioms, f("b"))
    checked(r, axioms, f("b"))


def test_needs_two_instances_of_one_universal():
    axioms = [f("forall x:e. q(x) => q(g(x))"), f("q(j)")]
    goal = f("q(g(g(j)))")
    checked(prove(axioms, goal), axioms, goal)


def test_gamma_bound_gives_resource_out():
    axioms = [f("forall x:e. q(x) => q(g(x))"), f("q(j)")]
    goal = f("q(g(g(g(j))))")
    assert prove(axioms, goal).status == "resource-out"
    r = prove(axioms, goal, TableauLimits(gamma=3))
    checked(r, axioms, goal, gamma=3)


def test_step_budget_gives_resource_out():
    axioms = [f("forall x:e. q(x) => q(g(x))"), f("q(j)")]
    r = prove(axioms, f("q(g(g(j)))"), TableauLimits(max_steps=3))
    assert r.status == "resource-out"


def test_universal_entails_existential():
    goal = f("(forall x:e. q(x)) => (exists x:e. q(x))")
    checked(prove([], goal), [], goal)


def test_skolem_constants_are_fresh():
    goal = f("(exists x:e. q(x)) => (exists x:e. q(x))")
    r = checked(prove([], goal), [], goal)
    skolems = [n.witness for n in r.nodes.values() if n.rule == "delta"]
    assert skolems and all(isinstance(s, Const) and s.name not in {"j", "p", "m", "k"} for s in skolems)


def test_proofs_are_deterministic():
    axioms = [f(t) for t in NASTY]
    lhs, rhs = f("exists x:e. po(x) & ar(x, p)"), f("exists x:e. po(x) & col(x, p)")
    one = check_relation(lhs, rhs, "common-gen", axioms)
    two = check_relation(lhs, rhs, "common-gen", axioms)
    assert one.trace() == two.trace()


# -- relations ------------------------------------------------------------------


def _goal_of(result):
    # the negated goal is the last root
    return result.nodes[result.roots[-1]].formula.arg


def test_common_generalization_with_nasty_axioms():
    axioms = [f(t) for t in NASTY]
    lhs = f("exists x:e. po(x) & ar(x, p)")
    rhs = f("exists x:e. po(x) & col(x, p)")
    r = check_relation(lhs, rhs, "common-gen", axioms)
    checked(r, axioms, _goal_of(r))
    y = trace_checker.apply(Free("Y", T), r.substitution)
    assert y.fn.fn == Const("nasty", arrow(E, E, T))
    assert y.arg == Const("p", E)
    bindings = [c.bindings for c in r.closures]
    assert any(v == Const("p", E) for b in bindings for v in b.values())
    assert any("Y" in b and b["Y"].fn.fn.name == "nasty" for b in bindings)


def test_common_generalization_goal_shape():
    axioms = [f(t) for t in NASTY]
    r = check_relation(f("exists x:e. po(x) & ar(x, p)"), f("exists x:e. po(x) & col(x, p)"), "common-gen", axioms)
    y = Free("Y", T)
    goal = _goal_of(r)
    assert goal.fn.fn == logical("and")
    for side in (goal.fn.arg, goal.arg):
        # the relation variable sits under the existential prefix
        assert side.fn == logical("exists")
        assert side.arg.body.fn.fn == logical("imp") and side.arg.body.arg == y


def test_common_generalization_needs_a_shared_atom():
    axioms = [f(t) for t in NASTY]
    r = check_relation(f("exists x:e. po(x) & ar(x, j)"), f("exists x:e. po(x) & col(x, p)"), "common-gen", axioms)
    assert not r.proved


def test_relation_variable_cannot_become_a_disjunction():
    # without axioms there is no predicate Y may stand for
    r = check_relation(f("q(j)"), f("q(p)"), "common-gen", [])
    assert not r.proved


def test_entailment_resolves_the_target_pronoun():
    axioms = [f("forall x:e. forall y:e. cr(x, y) => ins(x, y)")]
    r = check_relation(f("cr(p, m)"), f("ins(p, x)"), "entail", axioms)
    checked(r, axioms, imp(f("cr(p, m)"), f("ins(p, x)")))
    assert r.binding("x") == Const("m", E)


def test_entailment_failure():
    axioms = [f("forall x:e. forall y:e. cr(x, y) => ins(x, y)")]
    assert not check_relation(f("ins(p, m)"), f("cr(p, x)"), "entail", axioms).proved


def test_unknown_relation_is_rejected():
    with pytest.raises(ValueError):
        check_relation(f("a"), f("b"), "identity", [])


def test_predicates_of_axioms():
    assert predicates_of([f(t) for t in NASTY]) == {"ar", "col", "nasty"}


def test_trace_shows_numbered_lines_and_closures():
    axioms = [f(t) for t in NASTY]
    r = check_relation(f("exists x:e. po(x) & ar(x, p)"), f("exists x:e. po(x) & col(x, p)"), "common-gen", axioms)
    text = r.trace()
    assert text.splitlines()[0].startswith("(1) forall x:e. forall y:e. ar(x, y) => nasty(x, y)")
    assert "[negated goal]" in text and "* closed by" in text and "Y <- nasty(" in text
    assert text.endswith("status: proved")


# -- corpus proofs --------------------------------------------------------------------


@pytest.mark.parametrize("name, mode", [("e39c", "common-gen"), ("e39a", "entail")])
def test_every_corpus_proof_is_valid(name, mode):
    p = load_problem(CORPUS / f"{name}.prob")
    res = resolve(p, relation=mode)
    assert res.readings
    for r in res.readings:
        proof = r.proof
        assert proof is not None and proof.proved
        checked(proof, p.axioms, _goal_of(proof))


# -- random propositional problems ------------------------------------------------------

ATOMS = ["a", "b", "c"]


@st.composite
def formulas(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return f(draw(st.sampled_from(ATOMS)))
    op = draw(st.sampled_from(["and", "or", "imp", "not"]))
    if op == "not":
        return app(logical("not"), draw(formulas(depth - 1)))
    return app(logical(op), draw(formulas(depth - 1)), draw(formulas(depth - 1)))


def _truth(t, env):
    head = t
    args = []
    while hasattr(head, "fn"):
        args.insert(0, head.arg)
        head = head.fn
    if head.name in env:
        return env[head.name]
    vals = [_truth(a, env) for a in args]
    return {
        "and": lambda: vals[0] and vals[1],
        "or": lambda: vals[0] or vals[1],
        "imp": lambda: (not vals[0]) or vals[1],
        "not": lambda: not vals[0],
    }[head.name]()


def _valid(t):
    return all(
        _truth(t, dict(zip(ATOMS, bits))) for bits in itertools.product([False, True], repeat=len(ATOMS))
    )


@settings(max_examples=200, deadline=None)
@given(formulas())
def test_propositional_proofs_match_truth_tables(goal):
    r = prove([], goal)
    assert r.proved == _valid(goal)
    if r.proved:
        checked(r, [], goal)
