from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import fixed_point_set, principal_at
from nelson_topos.axioms import (
    IDEALISATION_CONCLUSION,
    IDEALISATION_HYPOTHESIS,
    IdealisationInstance,
    Interpretation,
    adequate_ultrapower,
    check_idealisation,
    check_standardisation,
    check_transfer,
    evaluate,
    holds,
    realize_point,
    soundness_suite,
)
from nelson_topos.catalog import finite_set, regular
from nelson_topos.category import Subobject, sum_bits
from nelson_topos.errors import AmbientMismatch, FormulaError, NotUltra
from nelson_topos.formula import parse
from nelson_topos.nelson import build_nelson, check_lax_naturality, corrupt_sigma
from nelson_topos.ultra import enumerate_internal_ultrafilters, k_finite_object, up_filter


def finset_structure(fs, x_size=2, sizes=(1, 2), path="explicit"):
    X = finite_set(fs, x_size)
    fam = [finite_set(fs, n) for n in sizes]
    return build_nelson(fs, X, principal_at(fs, X), fam, path=path)


def z2_structure(z2, path="explicit"):
    Y = fixed_point_set(z2)
    return build_nelson(z2, Y, principal_at(z2, Y), [z2.terminal(), regular(z2), Y], path=path)


# ------------------------------------------------------------------ evaluation


def test_evaluation_examples(fs):
    N = finset_structure(fs)
    A = N.family[-1]
    interp = Interpretation().sort("A", A)
    assert holds(N, "true", interp)
    assert not holds(N, "false", interp)
    assert holds(N, "forall x:A. st(x)", interp)
    assert holds(N, "forall x:A. x = x", interp)
    assert not holds(N, "forall x:A. forall y:A. x = y", interp)
    assert evaluate(N, "st(x)", interp, [("x", "A")]).is_top


def test_evaluation_refuses_ill_sorted_input(fs):
    N = finset_structure(fs)
    A = N.family[-1]
    S = fs.top(A)
    interp = Interpretation().sort("A", A).standard("P", ["A"], S)
    with pytest.raises(FormulaError):
        holds(N, "P(x)", interp)
    with pytest.raises(FormulaError):
        holds(N, "forall x:B. true", interp)
    wrong = Interpretation().sort("A", A).standard("P", ["A"], fs.top(finite_set(fs, 2)))
    with pytest.raises(FormulaError):
        holds(N, "forall x:A. P(x)", wrong)


def classical(f, env, sorts, preds):
    """Tarskian truth over finite sets: the oracle for Boolean bases with every element standard."""
    from nelson_topos import formula as F

    if isinstance(f, F.Top):
        return True
    if isinstance(f, F.Bottom):
        return False
    if isinstance(f, F.St):
        return True
    if isinstance(f, F.Eq):
        return env[f.left] == env[f.right]
    if isinstance(f, F.Atom):
        return tuple(env[v] for v in f.args) in preds[f.name]
    if isinstance(f, F.And):
        return classical(f.left, env, sorts, preds) and classical(f.right, env, sorts, preds)
    if isinstance(f, F.Or):
        return classical(f.left, env, sorts, preds) or classical(f.right, env, sorts, preds)
    if isinstance(f, F.Implies):
        return (not classical(f.left, env, sorts, preds)) or classical(f.right, env, sorts, preds)
    vals = (classical(f.body, {**env, f.var: a}, sorts, preds) for a in sorts[f.sort])
    return any(vals) if f.kind == "exists" else all(vals)


@st.composite
def closed_formula(draw, depth=3, env=()):
    env = dict(env)
    names = sorted(env)
    options = ["top", "bottom"] if names or depth == 0 else ["quant"]
    if names:
        options += ["st", "eq", "atom"]
    if depth > 0:
        options += ["and", "or", "implies", "quant", "quant"]
    kind = draw(st.sampled_from(options))
    if kind == "top":
        return "true"
    if kind == "bottom":
        return "false"
    if kind == "st":
        return f"st({draw(st.sampled_from(names))})"
    if kind == "eq":
        x = draw(st.sampled_from(names))
        same = [y for y in names if env[y] == env[x]]
        return f"{x} = {draw(st.sampled_from(same))}"
    if kind == "atom":
        by_sort = {s: [v for v in names if env[v] == s] for s in "AB"}
        if by_sort["A"] and by_sort["B"] and draw(st.booleans()):
            return f"R({draw(st.sampled_from(by_sort['A']))}, {draw(st.sampled_from(by_sort['B']))})"
        s = env[names[0]]
        return f"{'P' if s == 'A' else 'Q'}({names[0]})"
    if kind == "quant":
        v = f"v{len(env)}"
        sort = draw(st.sampled_from("AB"))
        q = draw(st.sampled_from(["forall", "exists", "forall^st", "exists^st"]))
        body = draw(closed_formula(depth=depth - 1, env={**env, v: sort}))
        return f"({q} {v}:{sort}. {body})"
    left = draw(closed_formula(depth=depth - 1, env=env))
    right = draw(closed_formula(depth=depth - 1, env=env))
    op = {"and": "&", "or": "|", "implies": "=>"}[kind]
    return f"({left} {op} {right})"


def boolean_setup(ctx, N, A, B, p_mask, q_mask, r_mask):
    prod = ctx.product(A, B)
    P, Q, R = Subobject(A, p_mask), Subobject(B, q_mask), Subobject(prod.obj, r_mask)
    interp = Interpretation().sort("A", A).sort("B", B)
    interp.standard("P", ["A"], P).standard("Q", ["B"], Q).standard("R", ["A", "B"], R)
    preds = {
        "P": {(a,) for a in range(A.size) if p_mask >> a & 1},
        "Q": {(b,) for b in range(B.size) if q_mask >> b & 1},
        "R": {prod.tuple_of(e) for e in range(prod.obj.size) if r_mask >> e & 1},
    }
    return interp, preds, {"A": range(A.size), "B": range(B.size)}


@settings(max_examples=150, deadline=None)
@given(closed_formula(), st.integers(0, 3), st.integers(0, 7), st.integers(0, 63))
def test_closed_formulas_match_tarskian_truth_over_finset(text, p, q, r):
    from nelson_topos.catalog import BASES
    from nelson_topos.topos import ToposCtx

    fs = ToposCtx(BASES["terminal"]())
    X = finite_set(fs, 2)
    A, B = finite_set(fs, 2), finite_set(fs, 3)
    for path in ("explicit", "shortcut"):
        N = build_nelson(fs, X, principal_at(fs, X), [A, B], path=path, verify=False)
        interp, preds, sorts = boolean_setup(fs, N, A, B, p, q, r)
        assert holds(N, text, interp) == classical(parse(text), {}, sorts, preds)


@settings(max_examples=60, deadline=None)
@given(closed_formula(depth=2), st.data())
def test_closed_formulas_match_tarskian_truth_over_z2(text, data):
    from nelson_topos.catalog import BASES
    from nelson_topos.topos import ToposCtx

    z2 = ToposCtx(BASES["Z/2"]())
    A, B = regular(z2), fixed_point_set(z2)
    N = build_nelson(z2, B, principal_at(z2, B), [A, B], path="shortcut", verify=False)
    pick = lambda Y: data.draw(st.sampled_from(z2.subobjects(Y))).mask
    interp, preds, sorts = boolean_setup(z2, N, A, B, pick(A), pick(B), pick(z2.product(A, B).obj))
    assert holds(N, text, interp) == classical(parse(text), {}, sorts, preds)


def test_connectives_evaluate_to_lattice_operations(fs):
    X = finite_set(fs, 2)
    A = finite_set(fs, 2)
    N = build_nelson(fs, X, up_filter(fs, fs.top(X)), [A], path="explicit", require_ultra=False, verify=False)
    H = N.heyting(A)
    ctxt = [("x", "A")]
    for W1 in N.predicates(A)[::3]:
        for W2 in N.predicates(A)[::2]:
            interp = Interpretation().sort("A", A).external("V", ["A"], W1).external("W", ["A"], W2)
            ev = lambda t: evaluate(N, t, interp, ctxt)
            assert ev("V(x) & W(x)") == H.meet(W1, W2)
            assert ev("V(x) | W(x)") == H.join(W1, W2)
            assert ev("V(x) => W(x)") == H.implies(W1, W2)
            assert ev("~V(x)") == H.neg(W1)
            assert ev("st(x) & V(x)") == H.meet(N.sigma(A), W1)


# -------------------------------------------------------------------- transfer


def all_transfer(N):
    ctx = N.ctx
    for A in N.family:
        for B in N.family:
            for f in ctx.maps(A, B):
                for S in ctx.subobjects(A):
                    yield check_transfer(N, f, S)


def test_transfer_over_finset_and_z2(fs, z2):
    for N in (finset_structure(fs, sizes=(1, 2)), z2_structure(z2)):
        reports = list(all_transfer(N))
        assert reports and all(r.passed for r in reports)


def test_transfer_needs_matching_ambient(fs):
    N = finset_structure(fs)
    A, B = N.family[-2:]
    f = fs.maps(A, B)[0]
    with pytest.raises(AmbientMismatch):
        check_transfer(N, f, fs.top(B))


# ------------------------------------------------------------- standardisation


def test_standardisation_exhaustive(fs, z2):
    N = finset_structure(fs)
    A = N.family[-1]
    r = check_standardisation(N, A)
    assert r.passed and r.info["predicates"] == 4
    X = finite_set(fs, 2)
    M = build_nelson(fs, X, up_filter(fs, fs.top(X)), [finite_set(fs, 2)], path="explicit", require_ultra=False, verify=False)
    r = check_standardisation(M, M.family[-1])
    assert r.passed and r.info["predicates"] == 16
    Z = z2_structure(z2)
    assert all(check_standardisation(Z, A).passed for A in Z.family)


def test_standardisation_fails_under_corruption(fs):
    bad = corrupt_sigma(finset_structure(fs))
    r = check_standardisation(bad, bad.family[-1])
    assert {law.name for law in r.violations} >= {"sigma-is-full", "unique"}


# ------------------------------------------------------------------- adequacy


def point_as_family(ctx, adq):
    """The element of K(P(B)) at which U is principal, as a set of subset masks of B."""
    PB = ctx.power(adq.B)
    K = k_finite_object(ctx, PB.obj)
    x0 = adq.U.point.flat[0]
    held = K.power.mask_of(K.incl.flat[x0])
    return sorted(PB.mask_of(p) for p in range(PB.obj.size) if held >> p & 1)


@pytest.mark.parametrize("n", [1, 2])
def test_adequate_point_holds_every_subset(fs, n):
    B = finite_set(fs, n)
    adq = adequate_ultrapower(fs, B)
    assert adq.X.size == 2 ** (2**n)
    assert point_as_family(fs, adq) == list(range(2**n))
    # every generator E^! contains the point
    assert all(G.mask >> adq.U.point.flat[0] & 1 for G in adq.generators.values())


@pytest.mark.parametrize("n", [1, 2])
def test_realised_points_recover_every_ultrafilter(fs, n):
    B = finite_set(fs, n)
    adq = adequate_ultrapower(fs, B)
    seen = set()
    for V in enumerate_internal_ultrafilters(fs, B):
        pt = realize_point(adq, V)
        assert pt.report.passed
        b = V.point.flat[0]
        # the family need only pass through b at the point; its class is that of the constant map
        assert pt.choice.flat[adq.U.point.flat[0]] == b
        assert pt.xi.flat == (b,)
        seen.add(pt.xi.flat)
    assert len(seen) == n


def test_realize_point_refuses_non_ultra(fs):
    B = finite_set(fs, 2)
    adq = adequate_ultrapower(fs, B)
    with pytest.raises(NotUltra):
        realize_point(adq, up_filter(fs, fs.top(B)))
    with pytest.raises(AmbientMismatch):
        realize_point(adq, principal_at(fs, finite_set(fs, 2)))


def test_adequate_over_z2_fixed_point(z2):
    B = fixed_point_set(z2)
    adq = adequate_ultrapower(z2, B)
    Vs = enumerate_internal_ultrafilters(z2, B)
    assert len(Vs) == 1
    assert realize_point(adq, Vs[0]).report.passed


# ---------------------------------------------------------------- idealisation


def relations(ctx, A, B):
    return ctx.subobjects(ctx.product(A, B).obj)


def test_idealisation_examples(fs):
    B = finite_set(fs, 2)
    adq = adequate_ultrapower(fs, B)
    full = fs.top(fs.product(B, B).obj)
    r = check_idealisation(adq.N, IdealisationInstance(B, B, full))
    assert r.passed and r.info["hypothesis"] and r.info["conclusion"]
    prod = fs.product(B, B)
    neq = Subobject(prod.obj, sum_bits(e for e in range(prod.obj.size) if len(set(prod.tuple_of(e))) == 2))
    r = check_idealisation(adq.N, IdealisationInstance(B, B, neq))
    assert r.passed and not r.info["hypothesis"] and not r.info["conclusion"]


@pytest.mark.parametrize("n", [1, 2])
def test_idealisation_for_every_relation(fs, n):
    B = finite_set(fs, n)
    adq = adequate_ultrapower(fs, B)
    count = 0
    for a in range(3):
        A = finite_set(fs, a)
        for R in relations(fs, A, B):
            assert check_idealisation(adq.N, IdealisationInstance(A, B, R)).passed
            count += 1
    assert count == sum(2 ** (a * n) for a in range(3))


def test_idealisation_sides_match_a_direct_reading(fs):
    # over FinSet every element is standard and K-finite subsets are all subsets,
    # so the hypothesis says every finite subset of A has a common R-neighbour
    B = finite_set(fs, 2)
    adq = adequate_ultrapower(fs, B)
    A = finite_set(fs, 2)
    prod = fs.product(A, B)
    for R in relations(fs, A, B):
        pairs = {prod.tuple_of(e) for e in range(prod.obj.size) if R.mask >> e & 1}
        hyp = all(
            any(all((x, y) in pairs for x in z) for y in range(2))
            for k in range(3)
            for z in itertools.combinations(range(2), k)
        )
        concl = any(all((x, y) in pairs for x in range(2)) for y in range(2))
        r = check_idealisation(adq.N, IdealisationInstance(A, B, R))
        assert (r.info["hypothesis"], r.info["conclusion"]) == (hyp, concl)


def test_idealisation_formulas_parse():
    assert parse(IDEALISATION_HYPOTHESIS) and parse(IDEALISATION_CONCLUSION)


def test_idealisation_needs_a_relation_on_a_times_b(fs):
    B = finite_set(fs, 1)
    adq = adequate_ultrapower(fs, B)
    with pytest.raises(AmbientMismatch):
        check_idealisation(adq.N, IdealisationInstance(B, B, fs.top(B)))


# -------------------------------------------------------------------- soundness


def test_soundness_over_finset_and_z2(fs, z2):
    for N in (finset_structure(fs, sizes=(1, 2)), z2_structure(z2)):
        r = soundness_suite(N)
        assert r.passed, [v.name for v in r.violations]


def test_soundness_flags_corrupted_sigma(fs, z2):
    for N in (finset_structure(fs), z2_structure(z2)):
        bad = corrupt_sigma(N)
        assert not check_lax_naturality(bad).passed
        r = soundness_suite(bad)
        names = {v.name for v in r.violations}
        assert "definition/sigma-lax-natural" in names
        assert "standardisation-internal" in names or "transfer-internal-exists" in names
