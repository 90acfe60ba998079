from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nelson_topos.errors import FormulaError
from nelson_topos.formula import (
    And,
    Atom,
    Bottom,
    Eq,
    Iff,
    Implies,
    Not,
    Or,
    Quant,
    St,
    Top,
    check_sorts,
    free_vars,
    parse,
    tokenize,
)


def test_atoms():
    assert parse("true") == Top()
    assert parse("false") == Bottom()
    assert parse("st(x)") == St("x")
    assert parse("x = y") == Eq("x", "y")
    assert parse("x in s") == Atom("in", ("x", "s"))
    assert parse("R(x, y')") == Atom("R", ("x", "y'"))


def test_precedence_and_associativity():
    p, q, r = (Atom(n, ("x",)) for n in "PQR")
    assert parse("P(x) & Q(x) | R(x)") == Or(And(p, q), r)
    assert parse("P(x) | Q(x) & R(x)") == Or(p, And(q, r))
    assert parse("P(x) => Q(x) => R(x)") == Implies(p, Implies(q, r))
    assert parse("P(x) & Q(x) & R(x)") == And(And(p, q), r)
    assert parse("~P(x) & Q(x)") == And(Not(p), q)
    assert parse("P(x) <=> Q(x)") == Iff(p, q)


def test_quantifier_body_extends_right():
    p, q = Atom("P", ("x",)), Atom("Q", ("x",))
    assert parse("forall x:A. P(x) => Q(x)") == Quant("forall", "x", "A", Implies(p, q))
    assert parse("(exists x:A. P(x)) & true") == And(Quant("exists", "x", "A", p), Top())
    assert parse("P(x) & exists y:B. Q(x)") == And(p, Quant("exists", "y", "B", q))


def test_bounded_quantifiers_unfold():
    p = Atom("P", ("x",))
    assert parse("forall^st x:A. P(x)") == Quant("forall", "x", "A", Implies(St("x"), p))
    assert parse("exists^st x:A. P(x)") == Quant("exists", "x", "A", And(St("x"), p))


def test_unicode_synonyms():
    ascii_ = parse("forall x:A. (exists y:A. x = y & ~false) | true => (P(x) <=> P(x))")
    uni = parse("∀ x:A. (∃ y:A. x = y ∧ ¬⊥) ∨ ⊤ ⇒ (P(x) ⇔ P(x))")
    assert ascii_ == uni
    assert parse("x ∈ s") == parse("x in s")
    assert parse("P(x) → Q(x)") == parse("P(x) => Q(x)")


@pytest.mark.parametrize(
    "text, pos",
    [
        ("P(x", 3),
        ("true & @", 7),
        ("forall x A. true", 9),
        ("", 0),
        ("P(x) &", 6),
        ("x", 1),
        ("exists true:A. true", 7),
        ("(true", 5),
        ("true true", 5),
        ("st(in)", 3),
        ("R(x,)", 4),
    ],
)
def test_errors_report_the_offset(text, pos):
    with pytest.raises(FormulaError) as info:
        parse(text)
    assert info.value.pos == pos


def test_tokens_carry_offsets():
    toks = tokenize("  forall^st x:A.P(x)")
    assert [(t.text, t.pos) for t in toks] == [
        ("forall", 2),
        ("^st", 8),
        ("x", 12),
        (":", 13),
        ("A", 14),
        (".", 15),
        ("P", 16),
        ("(", 17),
        ("x", 18),
        (")", 19),
        ("", 20),
    ]


def test_free_variables():
    assert free_vars(parse("forall x:A. R(x, y) & st(z)")) == {"y", "z"}
    assert free_vars(parse("exists x:A. x = x")) == set()
    assert free_vars(parse("(forall x:A. P(x)) & P(x)")) == {"x"}


def test_sort_checking():
    sigs = {"R": ("A", "B"), "P": ("A",)}
    sorts = {"A", "B"}
    check_sorts(parse("forall x:A. exists y:B. R(x, y)"), [], sorts, sigs)
    check_sorts(parse("P(x) & st(x)"), [("x", "A")], sorts, sigs)
    bad = [
        ("forall x:C. true", []),
        ("R(y, x)", [("x", "A"), ("y", "B")]),
        ("x = y", [("x", "A"), ("y", "B")]),
        ("Q(x)", [("x", "A")]),
        ("P(z)", [("x", "A")]),
        ("st(z)", []),
        ("P(x) & P(x, x)", [("x", "A")]),
    ]
    for text, ctx in bad:
        with pytest.raises(FormulaError):
            check_sorts(parse(text), ctx, sorts, sigs)
    with pytest.raises(FormulaError):
        check_sorts(Top(), [("x", "C")], sorts, sigs)


def test_shadowing_uses_the_innermost_binder():
    sigs = {"P": ("A",), "Q": ("B",)}
    check_sorts(parse("forall x:A. exists x:B. Q(x)"), [], {"A", "B"}, sigs)
    with pytest.raises(FormulaError):
        check_sorts(parse("forall x:A. exists x:B. P(x)"), [], {"A", "B"}, sigs)


# ---------------------------------------------------------------- round trip

VARS = st.sampled_from(["x", "y", "z", "u1", "v'"])
SORTS = st.sampled_from(["A", "B"])


def formulas() -> st.SearchStrategy:
    leaves = st.one_of(
        st.just(Top()),
        st.just(Bottom()),
        VARS.map(St),
        st.builds(Eq, VARS, VARS),
        st.builds(lambda a: Atom("P", (a,)), VARS),
        st.builds(lambda a, b: Atom("R", (a, b)), VARS, VARS),
        st.builds(lambda a, b: Atom("in", (a, b)), VARS, VARS),
    )

    def extend(children):
        return st.one_of(
            st.builds(And, children, children),
            st.builds(Or, children, children),
            st.builds(Implies, children, children),
            st.builds(Quant, st.sampled_from(["forall", "exists"]), VARS, SORTS, children),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_printing_then_parsing_is_the_identity(f):
    assert parse(str(f)) == f


@settings(max_examples=100, deadline=None)
@given(formulas())
def test_free_variables_survive_printing(f):
    assert free_vars(parse(str(f))) == free_vars(f)
