"""Brute-force universal-property checks for the topos constructions.

Each check enumerates every candidate (subobject, relation, map, partial map)
and confirms that the mediating arrow exists, is unique and is the one the
construction returns. Candidates come from ``ToposCtx.maps`` and
``ToposCtx.subobjects``; the constructions themselves are never consulted to
decide what the right answer is.
"""

from __future__ import annotations

from typing import Sequence

from .category import Presheaf, PsMap, Subobject, sum_bits
from .report import Report
from .topos import ToposCtx


def check_classifier(ctx: ToposCtx, A: Presheaf) -> Report:
    """Sub(A) and Hom(A, Omega) are in bijection via pullback of ``true``."""
    rep = Report(f"classifier on {A.name or '?'}")
    Om = ctx.omega()
    subs = ctx.subobjects(A)
    chis = ctx.maps(A, Om.obj)
    rep.check("bijection/counts", len(subs) == len(chis), subobjects=len(subs), maps=len(chis))
    seen: dict[int, PsMap] = {}
    for chi in chis:
        _, p1, _ = ctx.pullback(chi, Om.truth)
        pulled = Subobject(A, p1.image_mask())
        rep.check("pullback-is-subobject_of", pulled == ctx.subobject_of(chi), chi=chi.flat)
        rep.check("injective", pulled.mask not in seen, chi=chi.flat)
        seen[pulled.mask] = chi
    for S in subs:
        chi = ctx.classify(S)
        rep.check("classify-hits-the-unique-map", seen.get(S.mask) == chi, subobject=S.parts())
        rep.check("round-trip", ctx.subobject_of(chi) == S, subobject=S.parts())
    return rep


def _pulled_back_membership(ctx: ToposCtx, A: Presheaf, B: Presheaf, h: PsMap) -> Subobject:
    P = ctx.power(A)
    rel = ctx.product(A, B)
    mem = P.membership_product
    mask = sum_bits(
        e
        for e in range(rel.obj.size)
        if (P.member.mask >> mem.encode(rel.obj.stage[e], [A.local[rel.tuple_of(e)[0]], P.obj.local[h.flat[rel.tuple_of(e)[1]]]])) & 1
    )
    return Subobject(rel.obj, mask)


def check_power_object(ctx: ToposCtx, A: Presheaf, B: Presheaf) -> Report:
    """Every relation on ``A x B`` has exactly one name ``B -> P(A)``."""
    rep = Report(f"power object P({A.name or '?'}) against {B.name or '?'}")
    P = ctx.power(A)
    rel = ctx.product(A, B)
    names: dict[int, list[PsMap]] = {}
    for h in ctx.maps(B, P.obj):
        names.setdefault(_pulled_back_membership(ctx, A, B, h).mask, []).append(h)
    for R in ctx.subobjects(rel.obj):
        found = names.get(R.mask, [])
        rep.check("name-exists", len(found) >= 1, relation=R.parts())
        rep.check("name-unique", len(found) <= 1, relation=R.parts())
        if len(found) == 1:
            rep.check("name_of-is-the-name", ctx.name_of(R, A) == found[0], relation=R.parts())
    rep.check("no-stray-names", sum(map(len, names.values())) == len(ctx.subobjects(rel.obj)))
    return rep


def check_exponential(ctx: ToposCtx, C: Presheaf, A: Presheaf, B: Presheaf) -> Report:
    """Evaluation sets up a bijection ``Hom(C, B^A) = Hom(C x A, B)``."""
    rep = Report(f"currying {C.name or '?'} x {A.name or '?'} -> {B.name or '?'}")
    ex = ctx.exponential(A, B)
    prod = ctx.product(C, A)
    transposes = ctx.maps(C, ex.obj)
    targets = ctx.maps(prod.obj, B)
    rep.check("bijection/counts", len(transposes) == len(targets), transposes=len(transposes), maps=len(targets))
    images: set[tuple[int, ...]] = set()
    for h in transposes:
        g = ctx.uncurry(h, A)
        # eval . (h x id) computed directly from the evaluation map
        direct = tuple(
            ex.eval.flat[ex.eval_product.encode(C.stage[x], [ex.obj.local[h.flat[x]], A.local[a]])]
            for x, a in map(prod.tuple_of, range(prod.obj.size))
        )
        rep.check("uncurry-is-eval", g.flat == direct, h=h.flat)
        rep.check("transpose-unique", g.flat not in images, h=h.flat)
        images.add(g.flat)
        rep.check("curry-uncurry", ctx.curry(g, C, A) == h, h=h.flat)
    for g in targets:
        rep.check("transpose-exists", g.flat in images, g=g.flat)
        rep.check("uncurry-curry", ctx.uncurry(ctx.curry(g, C, A), A) == g, g=g.flat)
    return rep


def check_representer(ctx: ToposCtx, A: Presheaf, B: Presheaf) -> Report:
    """Partial maps ``B -/-> A`` correspond to total maps ``B -> A~`` via ``eta``."""
    rep = Report(f"representer {A.name or '?'}~ against {B.name or '?'}")
    R = ctx.representer(A)
    back = {t: a for a, t in enumerate(R.eta_map.flat)}
    classified: dict[tuple, list[PsMap]] = {}
    for g in ctx.maps(B, R.obj):
        dom = sum_bits(b for b in range(B.size) if g.flat[b] in back)
        graph = tuple(back[g.flat[b]] for b in range(B.size) if g.flat[b] in back)
        classified.setdefault((dom, graph), []).append(g)
    count = 0
    for D in ctx.subobjects(B):
        Dp, incl = ctx.restrict(D)
        for f in ctx.maps(Dp, A):
            count += 1
            key = (D.mask, tuple(f.flat))
            found = classified.get(key, [])
            rep.check("classifier-exists", len(found) >= 1, domain=D.parts(), f=f.flat)
            rep.check("classifier-unique", len(found) <= 1, domain=D.parts(), f=f.flat)
            if len(found) == 1:
                rep.check("extend_partial-is-the-classifier", ctx.extend_partial(D, f, R) == found[0], f=f.flat)
    rep.check("every-total-map-is-partial", count == sum(map(len, classified.values())))
    rep.check("eta-mono", R.eta_map.is_mono)
    return rep


def check_product(ctx: ToposCtx, A: Presheaf, B: Presheaf, T: Presheaf) -> Report:
    """Pairs of maps out of ``T`` correspond to maps into ``A x B``."""
    rep = Report(f"product {A.name or '?'} x {B.name or '?'}")
    prod = ctx.product(A, B)
    p1, p2 = prod.projections
    into = ctx.maps(T, prod.obj)
    pairs = {(h.then(p1).flat, h.then(p2).flat) for h in into}
    rep.check("pairing-unique", len(pairs) == len(into))
    for f in ctx.maps(T, A):
        for g in ctx.maps(T, B):
            rep.check("pairing-exists", (f.flat, g.flat) in pairs, f=f.flat, g=g.flat)
    return rep


def check_coequalizer(ctx: ToposCtx, f: PsMap, g: PsMap, tests: Sequence[Presheaf]) -> Report:
    """Maps out of the quotient are exactly the maps that merge ``f`` and ``g``."""
    rep = Report("coequalizer")
    Q, q = ctx.coequalizer(f, g)
    rep.check("q-coequalizes", f.then(q) == g.then(q))
    rep.check("q-epi", q.is_epi)
    for T in tests:
        merging = [h for h in ctx.maps(f.target, T) if f.then(h) == g.then(h)]
        factored = [k for k in ctx.maps(Q, T)]
        rep.check("factorisation-bijective", sorted(q.then(k).flat for k in factored) == sorted(h.flat for h in merging), test=T.name)
    return rep


def topos_law_suite(ctx: ToposCtx, objects: Sequence[Presheaf], *, currying_objects: Sequence[Presheaf] | None = None) -> Report:
    """Classifier, power object, exponential and representer laws over ``objects``.

    Currying ranges over triples drawn from ``currying_objects`` (default:
    ``objects``), which keeps the cubic part of the suite controllable.
    """
    rep = Report(f"topos laws over {ctx.base.name or '?'}")
    for A in objects:
        rep.merge(check_classifier(ctx, A), "classifier")
        for B in objects:
            rep.merge(check_power_object(ctx, A, B), "power-object")
            rep.merge(check_representer(ctx, A, B), "representer")
    cur = objects if currying_objects is None else currying_objects
    for C in cur:
        for A in cur:
            for B in cur:
                rep.merge(check_exponential(ctx, C, A, B), "exponential")
    rep.info["objects"] = len(objects)
    return rep
