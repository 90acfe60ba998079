from __future__ import annotations

import pytest

from helpers import fixed_point_set
from nelson_topos import laws
from nelson_topos.catalog import BASES, all_presheaves, finite_set, regular
from nelson_topos.category import PsMap, Subobject, validate
from nelson_topos.errors import BudgetExceeded, ShapeMismatch
from nelson_topos.topos import ToposCtx


# ------------------------------------------------------------ limits


def test_product_of_two_and_three_has_six_elements(fs):
    P, projs = fs.finite_limit("product", [finite_set(fs, 2), finite_set(fs, 3)])
    assert P.size == 6 and len(projs) == 2
    assert all(validate(p).passed for p in projs)


def test_equalizer_of_a_map_with_itself_is_the_domain(z2):
    G = regular(z2)
    f = PsMap.identity(G)
    E, (incl,) = z2.finite_limit("equalizer", [f, f])
    assert incl.is_iso and E.size == G.size


def test_pullback_of_distinct_points_of_omega_is_empty(fs):
    Om = fs.omega()
    t, f = fs.global_elements(Om.obj)
    P, _ = fs.finite_limit("pullback", [t, f])
    assert P.size == 0


def test_limits_reject_bad_shapes(fs):
    A, B = finite_set(fs, 2), finite_set(fs, 3)
    f = fs.maps(A, B)[0]
    g = fs.maps(B, B)[0]
    with pytest.raises(ShapeMismatch):
        fs.finite_limit("equalizer", [f, g])
    with pytest.raises(ShapeMismatch):
        fs.finite_limit("pullback", [f, fs.maps(B, A)[0]])
    with pytest.raises(ShapeMismatch):
        fs.finite_limit("coend", [f])


@pytest.mark.parametrize("base", ["terminal", "Z/2", "arrow"])
def test_product_universal_property(base):
    ctx = ToposCtx(BASES[base]())
    objs = all_presheaves(ctx, 2)
    for A in objs:
        for B in objs:
            for T in objs:
                assert laws.check_product(ctx, A, B, T).passed


# ----------------------------------------------------------- colimits


def test_coequalizer_of_equal_pair_is_iso(z2):
    G = regular(z2)
    Q, q = z2.coequalizer(PsMap.identity(G), PsMap.identity(G))
    assert q.is_iso


def test_coequalizer_of_two_points_is_a_point(fs):
    two = finite_set(fs, ["a", "b"])
    a, b = fs.global_elements(two)
    Q, q = fs.coequalizer(a, b)
    assert Q.size == 1


def test_coequalizer_of_swap_and_identity_is_terminal(z2):
    G = regular(z2)
    swap = [h for h in z2.maps(G, G) if not h == PsMap.identity(G)][0]
    Q, q = z2.coequalizer(swap, PsMap.identity(G))
    assert Q.size == 1


def test_coequalizer_universal_property(z2):
    G = regular(z2)
    X = fixed_point_set(z2)
    tests = all_presheaves(z2, 3)
    for f in z2.maps(G, X):
        for g in z2.maps(G, X):
            assert laws.check_coequalizer(z2, f, g, tests).passed


def test_coequalizer_classes_are_named_by_least_members(fs):
    four = finite_set(fs, 4)
    two = finite_set(fs, 2)
    f = PsMap.from_flat(two, four, [3, 1])
    g = PsMap.from_flat(two, four, [2, 0])
    Q, q = fs.coequalizer(f, g)
    assert [Q.value(e) for e in range(Q.size)] == [four.value(0), four.value(2)]


# -------------------------------------------------------------- images


def test_image_of_identity_is_full(z2):
    G = regular(z2)
    epi, mono = z2.image(PsMap.identity(G))
    assert mono.is_top and epi.is_iso


def test_image_of_constant_map_is_a_point(fs):
    A, B = finite_set(fs, 3), finite_set(fs, 2)
    const = PsMap.from_flat(A, B, [1, 1, 1])
    epi, mono = fs.image(const)
    assert len(mono) == 1 and epi.is_epi


def test_image_of_regular_onto_trivial_two_set_is_full(z2):
    G, T = regular(z2), finite_set(z2, 2)
    # equivariant maps G -> T are constant; the image of G + G -> T via both constants is full
    S, (i1, i2) = z2.coproduct(G, G)
    consts = z2.maps(G, T)
    f = PsMap.from_flat(S, T, list(consts[0].flat) + list(consts[1].flat))
    assert validate(f).passed
    assert z2.image(f)[1].is_top


# ---------------------------------------------------------------- omega


@pytest.mark.parametrize("base, sizes", [("terminal", [2]), ("Z/2", [2]), ("Z/3", [2]), ("arrow", [2, 3]), ("groupoid2", [2, 2])])
def test_omega_carrier_sizes(base, sizes):
    ctx = ToposCtx(BASES[base]())
    assert [len(c) for c in ctx.omega().obj.carriers] == sizes


def test_omega_over_a_group_has_trivial_action(z2):
    Om = z2.omega().obj
    assert all(list(row) == list(range(2)) for row in Om.act)


def test_classify_full_and_empty(arrow):
    A = all_presheaves(arrow, 3)[-1]
    Om = arrow.omega()
    top_chi = arrow.classify(arrow.top(A))
    assert all(top_chi.flat[e] == Om.top_index(A.stage[e]) for e in range(A.size))
    bot_chi = arrow.classify(arrow.bottom(A))
    assert arrow.subobject_of(bot_chi).is_bottom


def test_classifier_round_trip_on_three_element_arrow_presheaves(arrow):
    for A in all_presheaves(arrow, 3):
        for S in arrow.subobjects(A):
            assert arrow.subobject_of(arrow.classify(S)) == S


# --------------------------------------------------------- power objects


def test_power_of_two_element_set_has_four_elements(fs):
    assert fs.power(finite_set(fs, 2)).obj.size == 4


def test_power_of_regular_swaps_singletons(z2):
    P = z2.power(regular(z2))
    assert P.obj.size == 4
    g = z2.base.mor_index["g"]
    moved = [e for e in range(P.obj.size) if P.obj.restrict(g, e) != e]
    assert len(moved) == 2
    sizes = sorted(bin(P.mask_of(e)).count("1") for e in moved)
    assert sizes == [2, 2]  # each singleton {x} is its graph {(x, e), (xg, g)} in A x y(*)


def test_power_of_empty_is_terminal(arrow):
    assert [len(c) for c in arrow.power(arrow.initial()).obj.carriers] == [1, 1]


def test_name_of_rejects_non_product_ambient(fs):
    A = finite_set(fs, 2)
    with pytest.raises(ShapeMismatch):
        fs.name_of(fs.top(A), A)


# ---------------------------------------------------------- exponentials


def test_exponential_by_terminal_is_the_base_object(z2):
    B = fixed_point_set(z2)
    assert z2.exponential(z2.terminal(), B).obj.size == B.size


def test_exponential_sizes_over_finset(fs):
    for a in range(3):
        for b in range(4):
            assert fs.exponential(finite_set(fs, a), finite_set(fs, b)).obj.size == b**a


def test_partial_maps_from_regular_into_a_three_element_representer(z2):
    At = z2.representer(finite_set(z2, 2)).obj
    assert At.size == 3
    E = z2.exponential(regular(z2), At)
    assert E.obj.size == 9
    # conjugation fixes exactly the equivariant functions G -> At, one per element of At
    g = z2.base.mor_index["g"]
    assert sum(E.obj.restrict(g, e) == e for e in range(E.obj.size)) == len(z2.maps(regular(z2), At)) == 3


# ----------------------------------------------------------- representer


def test_representer_over_finset_adds_one_element(fs):
    for n in range(4):
        assert fs.representer(finite_set(fs, n)).obj.size == n + 1


def test_representer_of_regular_adds_a_fixed_bottom(z2):
    G = regular(z2)
    R = z2.representer(G)
    assert R.obj.size == 3
    bot = R.bottom[0]
    assert all(R.obj.restrict(m, bot) == bot for m in range(2))
    assert not R.is_total(bot)


# ------------------------------------------------------------ the suite


@pytest.mark.parametrize("base", sorted(BASES))
def test_topos_laws_on_objects_up_to_size_two(base):
    ctx = ToposCtx(BASES[base]())
    rep = laws.topos_law_suite(ctx, all_presheaves(ctx, 2))
    assert rep.passed, rep.violations


def test_law_suite_detects_a_wrong_name(fs, monkeypatch):
    A = finite_set(fs, 2)
    orig = ToposCtx.name_of

    def skewed(self, R, A_):
        h = orig(self, R, A_)
        P = self.power(A_)
        return PsMap.from_flat(h.source, h.target, [(x + 1) % P.obj.size for x in h.flat])

    monkeypatch.setattr(ToposCtx, "name_of", skewed)
    rep = laws.check_power_object(fs, A, A)
    assert [law.name for law in rep.violations] == ["name_of-is-the-name"]


def test_law_suite_detects_a_wrong_curry(fs, monkeypatch):
    A = finite_set(fs, 2)
    orig = ToposCtx.curry

    def off(self, g, C, A_):
        h = orig(self, g, C, A_)
        return PsMap.from_flat(h.source, h.target, [(x + 1) % h.target.size for x in h.flat])

    monkeypatch.setattr(ToposCtx, "curry", off)
    names = {law.name for law in laws.check_exponential(fs, A, A, A).violations}
    assert "curry-uncurry" in names


def test_law_suite_detects_a_wrong_extension(arrow, monkeypatch):
    A = all_presheaves(arrow, 2)[-1]
    monkeypatch.setattr(ToposCtx, "extend_partial", lambda self, D, f, R: self.maps(D.ambient, R.obj)[0])
    assert not laws.check_representer(arrow, A, A).passed


# ------------------------------------------------------- budget, memo


def test_budget_is_enforced():
    ctx = ToposCtx(BASES["terminal"](), budget=50)
    with pytest.raises(BudgetExceeded):
        ctx.subobjects(finite_set(ctx, 8))
    with pytest.raises(BudgetExceeded):
        ctx.product(finite_set(ctx, 8), finite_set(ctx, 8))
    with pytest.raises(ValueError):
        ToposCtx(BASES["terminal"](), budget=0)


def test_constructions_are_memoised(z2):
    G = regular(z2)
    assert z2.power(G) is z2.power(G)
    assert z2.omega() is z2.omega()
    assert z2.representer(G) is z2.representer(G)
    assert z2.subobjects(G) is z2.subobjects(G)


def test_groupoid_subobject_lattices_are_boolean(gpd):
    for A in all_presheaves(gpd, 4):
        for S in gpd.subobjects(A):
            assert Subobject(A, A.full & ~S.mask).is_subfunctor()


def test_arrow_subobject_lattices_are_not_boolean(arrow):
    y1 = arrow.representable(1)
    assert any(not Subobject(y1, y1.full & ~S.mask).is_subfunctor() for S in arrow.subobjects(y1))
