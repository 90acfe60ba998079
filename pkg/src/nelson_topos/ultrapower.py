"""Ultrapowers ``A^X/U`` built from partial-map representers, and the diagonal ``d_U``.

Explicit path: take ``Atilde^X``, keep the partial maps whose domain lies
in ``U``, and divide by agreement on a member of ``U``. Shortcut path (for
a principal ``U`` at a global point ``x0``): the ultrapower is ``A`` itself
and the quotient is evaluation at ``x0``. Both paths are compared by
:func:`compare_paths`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from .category import Presheaf, PsMap, Subobject, sum_bits
from .doctrine import exists_along, sub_heyting
from .errors import NotUltra, ShapeMismatch
from .report import Report
from .topos import Exponential, Representer, ToposCtx
from .ultra import InternalFilter

#: square sizes up to this are materialised as a subobject and coequalised directly
KU_MATERIALISE = 250_000


@dataclass(eq=False)
class UltrapowerBundle:
    A: Presheaf
    U: InternalFilter
    path: str
    result: Presheaf
    d: PsMap  # A -> result
    diag: Subobject
    rep: Representer | None = None
    power: Exponential | None = None  # Atilde^X
    over_U: Subobject | None = None  # of power.obj
    over_obj: Presheaf | None = None
    over_incl: PsMap | None = None
    KU: Subobject | None = None  # of over_obj x over_obj, when materialised
    q: PsMap | None = None  # over_obj -> result
    info: dict[str, Any] = field(default_factory=dict)

    def describe(self) -> dict[str, Any]:
        return {"of": self.A.name or "?", "path": self.path, "size": self.result.size, **self.info}


# ------------------------------------------------------------------ tilde


def tilde_map(ctx: ToposCtx, f: PsMap) -> PsMap:
    """``ftilde: Atilde -> Btilde``, post-composition of partial maps with ``f``."""
    ra, rb = ctx.representer(f.source), ctx.representer(f.target)
    cat = ctx.base

    def build():
        flat = []
        for e in range(ra.obj.size):
            c = ra.obj.stage[e]
            row = ra.entries(e)
            img = tuple(None if a is None else f.comps[cat.dom[v]][a] for v, a in zip(cat.into[c], row))
            flat.append(rb.obj.lookup(c, img))
        return PsMap.from_flat(ra.obj, rb.obj, flat, "tilde")

    return ctx._cached(("tilde", f.source, f.target, f.comps), build)


def intersect_tilde(ctx: ToposCtx, A: Presheaf) -> PsMap:
    """``Atilde x Atilde -> Atilde``: defined where both sides are defined and agree."""

    def build():
        rep = ctx.representer(A)
        T = rep.obj
        prod = ctx.product(T, T)
        flat = []
        for e in range(prod.obj.size):
            s, t = prod.tuple_of(e)
            c = T.stage[s]
            row = tuple(a if a is not None and a == b else None for a, b in zip(rep.entries(s), rep.entries(t)))
            flat.append(T.lookup(c, row))
        return PsMap.from_flat(prod.obj, T, flat, "cap~")

    return ctx._cached(("cap~", A), build)


def intersect_tilde_ump(ctx: ToposCtx, A: Presheaf) -> PsMap:
    """The same map, obtained from the representer's universal property.

    The partial map is ``A >-> Atilde x Atilde`` (diagonal then ``eta``) with
    value the identity; its classifying total map is ``cap~``.
    """
    rep = ctx.representer(A)
    prod = ctx.product(rep.obj, rep.obj)
    diag = prod.pair([rep.eta_map, rep.eta_map])
    D = Subobject(prod.obj, diag.image_mask())
    Dp, incl = ctx.restrict(D)
    back = {t: a for a, t in enumerate(diag.flat)}
    f = PsMap.from_flat(Dp, A, [back[incl.flat[k]] for k in range(Dp.size)], "value")
    return ctx.extend_partial(D, f, rep)


# ---------------------------------------------------------------- building


def _stage_tables(E: Exponential, e: int) -> tuple[int, ...]:
    return E.obj.value(e)  # type: ignore[return-value]


def build_ultrapower(ctx: ToposCtx, A: Presheaf, U: InternalFilter, path: str = "auto") -> UltrapowerBundle:
    """``A^X/U`` with its diagonal; ``path`` is ``explicit``, ``shortcut`` or ``auto``."""
    if U.ctx is not ctx:
        raise ShapeMismatch("filter belongs to another context")
    if path == "auto":
        path = "shortcut" if U.point is not None else "explicit"
    if path == "shortcut":
        if U.point is None:
            raise NotUltra("the shortcut path needs a principal filter with a designated point")
        return ctx._cached(("up-short", A, id(U)), lambda: _build_shortcut(ctx, A, U))
    if path != "explicit":
        raise ValueError(f"unknown path {path!r}")
    return ctx._cached(("up-explicit", A, id(U)), lambda: _build_explicit(ctx, A, U))


def _build_shortcut(ctx: ToposCtx, A: Presheaf, U: InternalFilter) -> UltrapowerBundle:
    ident = PsMap.identity(A)
    return UltrapowerBundle(A, U, "shortcut", A, ident, ctx.top(A), info={"point": [U.X.label(e) for e in U.point.flat]})


def domain_mask(rep: Representer, table: Sequence[int]) -> int:
    """Positions of ``X x y(c)`` where a partial-map family is defined."""
    return sum_bits(k for k, t in enumerate(table) if rep.is_total(t))


def agreement_mask(rep: Representer, s: Sequence[int], t: Sequence[int]) -> int:
    """Positions where both families are defined and equal (the domain of ``cap~`` of them)."""
    return sum_bits(k for k, (a, b) in enumerate(zip(s, t)) if a == b and rep.is_total(a))


def _build_explicit(ctx: ToposCtx, A: Presheaf, U: InternalFilter) -> UltrapowerBundle:
    cat = ctx.base
    X = U.X
    rep = ctx.representer(A)
    E = ctx.exponential(X, rep.obj)
    # partial maps with domain in U
    keep = sum_bits(e for e in range(E.obj.size) if U.stage_member(E.obj.stage[e], domain_mask(rep, _stage_tables(E, e))))
    over = Subobject(E.obj, keep)
    if not over.is_subfunctor():
        raise ShapeMismatch("U is not stable under restriction")
    O, incl = ctx.restrict(over)
    tables = [_stage_tables(E, incl.flat[k]) for k in range(O.size)]
    square = sum(len(c) ** 2 for c in O.carriers)
    KU = None
    if square <= KU_MATERIALISE:
        sq = ctx.product(O, O)
        p1, p2 = sq.projections
        mask = 0
        for e in range(sq.obj.size):
            s, t = p1.flat[e], p2.flat[e]
            if U.stage_member(O.stage[s], agreement_mask(rep, tables[s], tables[t])):
                mask |= 1 << e
        KU = Subobject(sq.obj, mask)
        K, k = ctx.restrict(KU)
        result, q = ctx.coequalizer(k.then(p1), k.then(p2))
        method = "coequaliser"
    else:
        reps = list(range(O.size))
        for c in range(len(cat.objects)):
            heads: list[int] = []
            for s in range(O.offsets[c], O.offsets[c] + len(O.carriers[c])):
                for h in heads:
                    if U.stage_member(c, agreement_mask(rep, tables[h], tables[s])):
                        reps[s] = h
                        break
                else:
                    heads.append(s)
        result, q = ctx.quotient_by_representatives(O, reps)
        method = "representative-scan"
    result.name = f"{A.name or '?'}^X/U"
    d = _diagonal(ctx, A, X, rep, E, O, incl, q)
    bundle = UltrapowerBundle(
        A,
        U,
        "explicit",
        result,
        d,
        Subobject(result, d.image_mask()),
        rep=rep,
        power=E,
        over_U=over,
        over_obj=O,
        over_incl=incl,
        KU=KU,
        q=q,
        info={"partial_maps": E.obj.size, "in_U": O.size, "quotient": method},
    )
    return bundle


def _diagonal(ctx, A, X, rep, E, O, incl, q) -> PsMap:
    """``A -> A^X -> Atilde^X/U -> A^X/U``: classes of constant maps."""
    cat = ctx.base
    back = {t: k for k, t in enumerate(incl.flat)}
    flat = []
    for a in range(A.size):
        c = A.stage[a]
        st = E.stage_products[c]
        y = ctx.representable(c)
        table = []
        for t in range(st.obj.size):
            _, v = st.tuple_of(t)
            v_m = cat.mor_index[y.value(v)]
            table.append(rep.eta_map.flat[A.restrict(v_m, a)])
        flat.append(q.flat[back[E.find(c, tuple(table))]])
    return PsMap.from_flat(A, q.target, flat, "d_U")


# ------------------------------------------------------------ functoriality


def ultrapower_map(ctx: ToposCtx, f: PsMap, U: InternalFilter, path: str = "auto") -> PsMap:
    """``f^X/U`` between the ultrapowers of source and target."""
    bs = build_ultrapower(ctx, f.source, U, path)
    bt = build_ultrapower(ctx, f.target, U, path)
    if bs.U is not bt.U:
        raise ShapeMismatch("bundles built over different filters")
    if bs.path == "shortcut":
        return f
    key = ("up-map", f.source, f.target, f.comps, id(U))
    return ctx._cached(key, lambda: _explicit_map(ctx, f, bs, bt))


def _explicit_map(ctx: ToposCtx, f: PsMap, bs: UltrapowerBundle, bt: UltrapowerBundle) -> PsMap:
    ft = tilde_map(ctx, f)
    Es, Et = bs.power, bt.power
    back_t = {t: k for k, t in enumerate(bt.over_incl.flat)}
    image = []
    for k in range(bs.over_obj.size):
        c = bs.over_obj.stage[k]
        table = tuple(ft.flat[t] for t in _stage_tables(Es, bs.over_incl.flat[k]))
        image.append(bt.q.flat[back_t[Et.find(c, table)]])
    # well defined on classes: every member of a class lands in one class
    flat: list[int] = [-1] * bs.result.size
    for k, cls in enumerate(bs.q.flat):
        if flat[cls] < 0:
            flat[cls] = image[k]
        elif flat[cls] != image[k]:
            raise ShapeMismatch("induced map does not respect the ultrapower quotient")
    return PsMap.from_flat(bs.result, bt.result, flat, f"{f.name or 'f'}^X/U")


def embed_subobject(ctx: ToposCtx, S: Subobject, U: InternalFilter, path: str = "auto") -> Subobject:
    """``S^X/U`` as a subobject of ``A^X/U`` (image of the ultrapowered inclusion)."""
    Sp, incl = ctx.restrict(S)
    m = ultrapower_map(ctx, incl, U, path)
    return Subobject(m.target, m.image_mask())


def embed_direct(ctx: ToposCtx, S: Subobject, U: InternalFilter, path: str = "auto") -> Subobject:
    """``S^X/U`` computed elementwise: classes with a representative landing in ``S`` on a member of ``U``."""
    b = build_ultrapower(ctx, S.ambient, U, path)
    if b.path == "shortcut":
        return S
    rep = b.rep
    # positions of Atilde that are total with value in S
    good = set()
    for t in range(rep.obj.size):
        if rep.is_total(t):
            a = rep.eta_map.fibers[t]
            if a & S.mask:
                good.add(t)
    mask = 0
    for k in range(b.over_obj.size):
        c = b.over_obj.stage[k]
        table = _stage_tables(b.power, b.over_incl.flat[k])
        if U.stage_member(c, sum_bits(j for j, t in enumerate(table) if t in good)):
            mask |= 1 << b.q.flat[k]
    return Subobject(b.result, mask)


# ------------------------------------------------------------- comparisons


def evaluation_at_point(ctx: ToposCtx, b: UltrapowerBundle) -> PsMap:
    """For an explicit bundle over a principal filter: ``[phi] -> phi(x0)`` into ``A``."""
    U, A, rep = b.U, b.A, b.rep
    if U.point is None or b.path != "explicit":
        raise ShapeMismatch("evaluation needs an explicit bundle over a principal filter")
    cat = ctx.base
    x0 = U.point
    inv_eta = {t: a for a, t in enumerate(rep.eta_map.flat)}
    flat: list[int] = [-1] * b.result.size
    for k in range(b.over_obj.size):
        c = b.over_obj.stage[k]
        st = b.power.stage_products[c]
        y = ctx.representable(c)
        pos = st.encode(c, [x0.comps[c][0], y.index[c][cat.mor_names[cat.ident[c]]]])
        val = _stage_tables(b.power, b.over_incl.flat[k])[pos]
        a = inv_eta.get(val)
        if a is None:
            raise ShapeMismatch("a family with domain in U is undefined at the point")
        cls = b.q.flat[k]
        if flat[cls] < 0:
            flat[cls] = a
        elif flat[cls] != a:
            raise ShapeMismatch("evaluation at the point is not constant on a class")
    return PsMap.from_flat(b.result, A, flat, "ev_x0")


def compare_paths(ctx: ToposCtx, A: Presheaf, U: InternalFilter) -> Report:
    """Explicit and shortcut ultrapowers agree via a natural iso commuting with ``q`` and ``d_U``."""
    from .category import validate

    rep = Report(f"paths for {A.name or '?'}^X/U")
    ex = build_ultrapower(ctx, A, U, "explicit")
    sh = build_ultrapower(ctx, A, U, "shortcut")
    try:
        ev = evaluation_at_point(ctx, ex)
    except ShapeMismatch as err:
        rep.check("q-compatible", False, error=str(err))
        return rep
    rep.check("q-compatible", True)
    rep.check("natural", validate(ev).passed)
    rep.check("iso", ev.is_iso, sizes=[ex.result.size, sh.result.size])
    rep.check("d_U", ex.d.then(ev) == sh.d)
    rep.info["size"] = ex.result.size
    return rep


def check_bundle(ctx: ToposCtx, b: UltrapowerBundle) -> Report:
    """Coequaliser property of ``q``, monicity of ``d_U``, naturality of the pieces."""
    from .category import validate

    rep = Report(f"bundle {b.A.name or '?'}^X/U")
    rep.check("result-valid", validate(b.result).passed)
    rep.check("d-natural", validate(b.d).passed)
    if b.U.is_proper is not False:
        rep.check("d-monic", b.d.is_mono, A=b.A)
    if b.KU is not None:
        K, k = ctx.restrict(b.KU)
        sq = ctx.product_of(b.KU.ambient)
        p1, p2 = sq.projections
        rep.check("q-coequalises", k.then(p1).then(b.q) == k.then(p2).then(b.q))
        rep.check("KU-reflexive", all((b.KU.mask >> sq.encode(b.over_obj.stage[s], [b.over_obj.local[s]] * 2)) & 1 for s in range(b.over_obj.size)))
    if b.q is not None:
        rep.check("q-epi", b.q.is_epi)
    return rep


# ---------------------------------------------------------- Heyting functor


def check_heyting_functor(
    ctx: ToposCtx,
    U: InternalFilter,
    test_objects: Sequence[Presheaf],
    epis: Sequence[PsMap] = (),
    path: str = "auto",
) -> Report:
    """Preservation of finite limits, images and Heyting operations by ``(-)^X/U``."""
    rep = Report("ultrapower is a Heyting functor")
    if not ctx.base.is_groupoid:
        rep.info["outside_internal_choice_guarantee"] = True
    objs = list(test_objects)
    one = ctx.terminal()
    rep.check("terminal", build_ultrapower(ctx, one, U, path).result.size == one.size)
    for A in objs:
        H = sub_heyting(ctx, A)
        b = build_ultrapower(ctx, A, U, path)
        Hs = sub_heyting(ctx, b.result)
        subs = ctx.subobjects(A)
        emb = {S.mask: embed_subobject(ctx, S, U, path) for S in subs}
        rep.check("top", emb[A.full] == Hs.top, A=A)
        rep.check("bottom", emb[0] == Hs.bottom, A=A)
        for S in subs:
            for T in subs:
                iS, iT = emb[S.mask], emb[T.mask]
                rep.check("meet", emb[H.meet(S, T).mask] == Hs.meet(iS, iT), S=S, T=T)
                rep.check("join", emb[H.join(S, T).mask] == Hs.join(iS, iT), S=S, T=T)
                rep.check("implies", emb[H.implies(S, T).mask] == Hs.implies(iS, iT), S=S, T=T)
        if ctx.base.is_groupoid:
            for S in subs:
                nS = emb[H.neg(S).mask]
                rep.check("complement", Hs.meet(nS, emb[S.mask]).is_bottom and Hs.join(nS, emb[S.mask]).is_top, S=S)
    for A in objs:
        for B in objs:
            prod = ctx.product(A, B)
            ba, bb = build_ultrapower(ctx, A, U, path), build_ultrapower(ctx, B, U, path)
            target = ctx.product(ba.result, bb.result)
            cmp = target.pair([ultrapower_map(ctx, p, U, path) for p in prod.projections])
            rep.check("product", cmp.is_iso, A=A, B=B)
            for f in ctx.maps(A, B):
                F = ultrapower_map(ctx, f, U, path)
                im = Subobject(B, f.image_mask())
                rep.check("image", exists_along(F, sub_heyting(ctx, ba.result).top) == embed_subobject(ctx, im, U, path), f=f)
                for g in ctx.maps(A, B):
                    E, incl = ctx.equalizer(f, g)
                    G = ultrapower_map(ctx, g, U, path)
                    eq = sum_bits(e for e in range(ba.result.size) if F.flat[e] == G.flat[e])
                    got = embed_subobject(ctx, Subobject(A, incl.image_mask()), U, path)
                    rep.check("equalizer", got.mask == eq, f=f, g=g)
    for e in epis:
        if not e.is_epi:
            raise ShapeMismatch("supplied map is not epi")
        et = tilde_map(ctx, e)
        Ea = ctx.exponential(U.X, et.source)
        Eb = ctx.exponential(U.X, et.target)
        post = [Eb.find(Ea.obj.stage[k], tuple(et.flat[t] for t in _stage_tables(Ea, k))) for k in range(Ea.obj.size)]
        rep.check("tilde-power-preserves-epi", len(set(post)) == Eb.obj.size, epi=e)
    return rep


def omega_diagonal_is_iso(ctx: ToposCtx, U: InternalFilter, path: str = "explicit") -> bool:
    b = build_ultrapower(ctx, ctx.omega().obj, U, path)
    return b.d.is_iso


__all__ = [
    "KU_MATERIALISE",
    "UltrapowerBundle",
    "agreement_mask",
    "build_ultrapower",
    "check_bundle",
    "check_heyting_functor",
    "compare_paths",
    "domain_mask",
    "embed_direct",
    "embed_subobject",
    "evaluation_at_point",
    "intersect_tilde",
    "intersect_tilde_ump",
    "omega_diagonal_is_iso",
    "tilde_map",
    "ultrapower_map",
]
