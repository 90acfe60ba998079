"""Heyting structure on subobject lattices, quantifiers, and doctrine-level checks.

Quantifiers are given by closed formulas (image, Kripke-style universal) and
by a brute-force adjoint search; the checks compare the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from .category import Presheaf, PsMap, Subobject, sum_bits
from .errors import AmbientMismatch, NotAPullback, ShapeMismatch
from .report import Report
from .topos import ToposCtx


# ----------------------------------------------------------------- lattices


@dataclass(frozen=True)
class HeytingOps:
    """The Heyting algebra ``Sub(A)``; operations act on masks of ``ambient``."""

    ctx: ToposCtx
    ambient: Presheaf

    def _own(self, *subs: Subobject) -> None:
        for S in subs:
            if S.ambient is not self.ambient:
                raise AmbientMismatch(f"{S!r} does not live over {self.ambient!r}")

    @property
    def top(self) -> Subobject:
        return Subobject(self.ambient, self.ambient.full)

    @property
    def bottom(self) -> Subobject:
        return Subobject(self.ambient, 0)

    def meet(self, S: Subobject, T: Subobject) -> Subobject:
        self._own(S, T)
        return Subobject(self.ambient, S.mask & T.mask)

    def join(self, S: Subobject, T: Subobject) -> Subobject:
        self._own(S, T)
        return Subobject(self.ambient, S.mask | T.mask)

    def implies(self, S: Subobject, T: Subobject) -> Subobject:
        """Elements all of whose restrictions that lie in ``S`` also lie in ``T``."""
        self._own(S, T)
        bad = S.mask & ~T.mask
        down = self.ambient.down
        return Subobject(self.ambient, sum_bits(e for e in range(self.ambient.size) if not down[e] & bad))

    def neg(self, S: Subobject) -> Subobject:
        return self.implies(S, self.bottom)

    def leq(self, S: Subobject, T: Subobject) -> bool:
        self._own(S, T)
        return S <= T

    def elements(self) -> list[Subobject]:
        return self.ctx.subobjects(self.ambient)


def sub_heyting(ctx: ToposCtx, A: Presheaf) -> HeytingOps:
    return HeytingOps(ctx, A)


def check_heyting_laws(ops: HeytingOps) -> Report:
    """Lattice laws and residuation, over every element (and pair/triple) of ``Sub(A)``."""
    rep = Report(f"Heyting laws on Sub({ops.ambient.name or '?'})")
    subs = ops.elements()
    top, bot = ops.top, ops.bottom
    for a in subs:
        rep.check("bounds", bot <= a <= top, a=a)
        rep.check("meet-top", ops.meet(top, a) == a, a=a)
        rep.check("join-bottom", ops.join(bot, a) == a, a=a)
        rep.check("implies-self", ops.implies(a, a) == top, a=a)
        rep.check("closed", ops.implies(a, bot).is_subfunctor(), a=a)
        for b in subs:
            m, j = ops.meet(a, b), ops.join(a, b)
            rep.check("meet-glb", m <= a and m <= b, a=a, b=b)
            rep.check("join-lub", a <= j and b <= j, a=a, b=b)
            rep.check("absorption", ops.meet(a, j) == a and ops.join(a, m) == a, a=a, b=b)
            imp = ops.implies(a, b)
            for x in subs:
                rep.check("residuation", (ops.meet(a, x) <= b) == (x <= imp), a=a, b=b, x=x)
    return rep


# -------------------------------------------------------------- quantifiers


def _check_target(f: PsMap, S: Subobject) -> None:
    if S.ambient is not f.target:
        raise AmbientMismatch(f"predicate over {S.ambient!r}, map into {f.target!r}")


def _check_source(f: PsMap, S: Subobject) -> None:
    if S.ambient is not f.source:
        raise AmbientMismatch(f"predicate over {S.ambient!r}, map out of {f.source!r}")


def substitute(f: PsMap, S: Subobject) -> Subobject:
    """Pullback of ``S`` along ``f``: the preimage."""
    _check_target(f, S)
    return Subobject(f.source, f.preimage_mask(S.mask))


def exists_along(f: PsMap, S: Subobject) -> Subobject:
    """Left adjoint to ``substitute``: the image of ``S``."""
    _check_source(f, S)
    return Subobject(f.target, f.image_mask(S.mask))


def forall_along(f: PsMap, S: Subobject) -> Subobject:
    """Right adjoint: ``b`` such that every restriction of ``b`` has its fibre inside ``S``."""
    _check_source(f, S)
    B = f.target
    fibers = f.fibers
    outside = ~S.mask
    bad = sum_bits(t for t in range(B.size) if fibers[t] & outside)
    down = B.down
    return Subobject(B, sum_bits(b for b in range(B.size) if not down[b] & bad))


def exists_bruteforce(ctx: ToposCtx, f: PsMap, S: Subobject) -> Subobject:
    """Least ``T`` with ``S <= f*(T)``, by scanning ``Sub(B)``."""
    _check_source(f, S)
    cands = [T for T in ctx.subobjects(f.target) if S <= substitute(f, T)]
    mask = f.target.full
    for T in cands:
        mask &= T.mask
    return Subobject(f.target, mask)


def forall_bruteforce(ctx: ToposCtx, f: PsMap, S: Subobject) -> Subobject:
    """Greatest ``T`` with ``f*(T) <= S``, by scanning ``Sub(B)``."""
    _check_source(f, S)
    mask = 0
    for T in ctx.subobjects(f.target):
        if substitute(f, T) <= S:
            mask |= T.mask
    return Subobject(f.target, mask)


def check_quantifiers(ctx: ToposCtx, f: PsMap) -> Report:
    """Adjunctions, Frobenius, oracle agreement and Heyting-ness of ``f*`` for one map."""
    rep = Report(f"quantifiers along {f.source.name or '?'} -> {f.target.name or '?'}")
    A, B = f.source, f.target
    HA, HB = sub_heyting(ctx, A), sub_heyting(ctx, B)
    subs_a, subs_b = ctx.subobjects(A), ctx.subobjects(B)
    for S in subs_a:
        ex, fa = exists_along(f, S), forall_along(f, S)
        rep.check("exists=oracle", ex == exists_bruteforce(ctx, f, S), S=S)
        rep.check("forall=oracle", fa == forall_bruteforce(ctx, f, S), S=S)
        rep.check("forall-subfunctor", fa.is_subfunctor(), S=S)
        for T in subs_b:
            pb = substitute(f, T)
            rep.check("exists-adjunction", (ex <= T) == (S <= pb), S=S, T=T)
            rep.check("forall-adjunction", (pb <= S) == (T <= fa), S=S, T=T)
            rep.check("frobenius", exists_along(f, HA.meet(S, pb)) == HB.meet(ex, T), S=S, T=T)
    rep.check("subst-top", substitute(f, HB.top) == HA.top)
    rep.check("subst-bottom", substitute(f, HB.bottom) == HA.bottom)
    for T1 in subs_b:
        for T2 in subs_b:
            p1, p2 = substitute(f, T1), substitute(f, T2)
            rep.check("subst-meet", substitute(f, HB.meet(T1, T2)) == HA.meet(p1, p2), T1=T1, T2=T2)
            rep.check("subst-join", substitute(f, HB.join(T1, T2)) == HA.join(p1, p2), T1=T1, T2=T2)
            rep.check("subst-implies", substitute(f, HB.implies(T1, T2)) == HA.implies(p1, p2), T1=T1, T2=T2)
    if ctx.base.is_groupoid:
        for S in subs_a:
            dual = HB.neg(exists_along(f, HA.neg(S)))
            rep.check("de-morgan", forall_along(f, S) == dual, S=S)
    return rep


# ---------------------------------------------------------------- doctrines


class DoctrineIface:
    """An indexed preorder of predicates with substitution and both quantifiers.

    Index objects and maps are those of the standard topos ``ctx``. The test
    family bounds what the generic checks enumerate.
    """

    name = "doctrine"

    def __init__(self, ctx: ToposCtx, family: Sequence[Presheaf]):
        self.ctx = ctx
        self.family = list(family)

    # predicates
    def predicates(self, A: Presheaf) -> list[Hashable]:
        raise NotImplementedError

    def leq(self, A: Presheaf, p, q) -> bool:
        raise NotImplementedError

    def equiv(self, A: Presheaf, p, q) -> bool:
        return self.leq(A, p, q) and self.leq(A, q, p)

    def top(self, A: Presheaf):
        raise NotImplementedError

    def bottom(self, A: Presheaf):
        raise NotImplementedError

    def meet(self, A: Presheaf, p, q):
        raise NotImplementedError

    def join(self, A: Presheaf, p, q):
        raise NotImplementedError

    def implies(self, A: Presheaf, p, q):
        raise NotImplementedError

    # reindexing
    def substitute(self, f: PsMap, q):
        raise NotImplementedError

    def exists(self, f: PsMap, p):
        raise NotImplementedError

    def forall(self, f: PsMap, p):
        raise NotImplementedError

    # tripos structure
    def generic(self) -> tuple[Presheaf, Hashable]:
        """An index object and a predicate over it proposed as generic."""
        raise NotImplementedError

    def maps(self, A: Presheaf, B: Presheaf) -> list[PsMap]:
        return self.ctx.maps(A, B)


class SubDoctrine(DoctrineIface):
    """Subobjects of the standard topos with their usual order."""

    name = "Sub"

    def predicates(self, A):
        return self.ctx.subobjects(A)

    def leq(self, A, p, q):
        return p <= q

    def top(self, A):
        return self.ctx.top(A)

    def bottom(self, A):
        return self.ctx.bottom(A)

    def meet(self, A, p, q):
        return sub_heyting(self.ctx, A).meet(p, q)

    def join(self, A, p, q):
        return sub_heyting(self.ctx, A).join(p, q)

    def implies(self, A, p, q):
        return sub_heyting(self.ctx, A).implies(p, q)

    def substitute(self, f, q):
        return substitute(f, q)

    def exists(self, f, p):
        return exists_along(f, p)

    def forall(self, f, p):
        return forall_along(f, p)

    def generic(self):
        Om = self.ctx.omega()
        return Om.obj, Subobject(Om.obj, Om.truth.image_mask())


@dataclass
class HeytingTransf:
    """Componentwise map of predicates between two doctrines over the same index topos."""

    source: DoctrineIface
    target: DoctrineIface
    component: Callable[[Presheaf, Hashable], Hashable]
    name: str = "transformation"

    def __call__(self, A: Presheaf, p):
        return self.component(A, p)


def check_heyting_transf(T: HeytingTransf, family: Sequence[Presheaf] | None = None) -> Report:
    """Monotone, Heyting componentwise, natural in substitution, commutes with both quantifiers."""
    D, E = T.source, T.target
    fam = list(family if family is not None else D.family)
    rep = Report(f"{T.name}: {D.name} -> {E.name}")
    for A in fam:
        preds = D.predicates(A)
        rep.check("top", E.equiv(A, T(A, D.top(A)), E.top(A)), A=A)
        rep.check("bottom", E.equiv(A, T(A, D.bottom(A)), E.bottom(A)), A=A)
        for p in preds:
            for q in preds:
                tp, tq = T(A, p), T(A, q)
                if D.leq(A, p, q):
                    rep.check("monotone", E.leq(A, tp, tq), A=A, p=p, q=q)
                rep.check("meet", E.equiv(A, T(A, D.meet(A, p, q)), E.meet(A, tp, tq)), A=A, p=p, q=q)
                rep.check("join", E.equiv(A, T(A, D.join(A, p, q)), E.join(A, tp, tq)), A=A, p=p, q=q)
                rep.check("implies", E.equiv(A, T(A, D.implies(A, p, q)), E.implies(A, tp, tq)), A=A, p=p, q=q)
    for A in fam:
        for B in fam:
            for f in D.maps(A, B):
                for q in D.predicates(B):
                    lhs = T(A, D.substitute(f, q))
                    rep.check("natural", E.equiv(A, lhs, E.substitute(f, T(B, q))), f=f, q=q)
                for p in D.predicates(A):
                    rep.check("exists", E.equiv(B, T(B, D.exists(f, p)), E.exists(f, T(A, p))), f=f, p=p)
                    rep.check("forall", E.equiv(B, T(B, D.forall(f, p)), E.forall(f, T(A, p))), f=f, p=p)
    return rep


def check_doctrine_laws(D: DoctrineIface, family: Sequence[Presheaf] | None = None) -> Report:
    """Heyting pre-algebra laws per fibre, adjunctions and Frobenius per map."""
    fam = list(family if family is not None else D.family)
    rep = Report(f"{D.name} doctrine laws")
    for A in fam:
        preds = D.predicates(A)
        top, bot = D.top(A), D.bottom(A)
        for a in preds:
            rep.check("bounds", D.leq(A, bot, a) and D.leq(A, a, top), A=A, a=a)
            for b in preds:
                m, j, imp = D.meet(A, a, b), D.join(A, a, b), D.implies(A, a, b)
                rep.check("meet-glb", D.leq(A, m, a) and D.leq(A, m, b), A=A, a=a, b=b)
                rep.check("join-lub", D.leq(A, a, j) and D.leq(A, b, j), A=A, a=a, b=b)
                for x in preds:
                    rep.check(
                        "residuation",
                        D.leq(A, D.meet(A, a, x), b) == D.leq(A, x, imp),
                        A=A,
                        a=a,
                        b=b,
                        x=x,
                    )
    for A in fam:
        for B in fam:
            for f in D.maps(A, B):
                pa, pb = D.predicates(A), D.predicates(B)
                for q1 in pb:
                    for q2 in pb:
                        if D.leq(B, q1, q2):
                            rep.check("subst-monotone", D.leq(A, D.substitute(f, q1), D.substitute(f, q2)), f=f)
                for p in pa:
                    ex, fa = D.exists(f, p), D.forall(f, p)
                    for q in pb:
                        sq = D.substitute(f, q)
                        rep.check("exists-adjunction", D.leq(B, ex, q) == D.leq(A, p, sq), f=f, p=p, q=q)
                        rep.check("forall-adjunction", D.leq(A, sq, p) == D.leq(B, q, fa), f=f, p=p, q=q)
                        rep.check(
                            "frobenius",
                            D.equiv(B, D.exists(f, D.meet(A, p, sq)), D.meet(B, ex, q)),
                            f=f,
                            p=p,
                            q=q,
                        )
    return rep


# ------------------------------------------------------------ squares, BC


@dataclass(frozen=True)
class Square:
    """A commutative square ``p: P -> A``, ``q: P -> B`` over ``f: A -> C``, ``g: B -> C``."""

    p: PsMap
    q: PsMap
    f: PsMap
    g: PsMap


def is_pullback(ctx: ToposCtx, sq: Square) -> bool:
    p, q, f, g = sq.p, sq.q, sq.f, sq.g
    if p.source is not q.source or p.target is not f.source or q.target is not g.source or f.target is not g.target:
        return False
    if p.then(f) != q.then(g):
        return False
    P, p1, p2 = ctx.pullback(f, g)
    # P is a subpresheaf of A x B; the canonical comparison must be bijective
    pairs = {(p1.flat[e], p2.flat[e]) for e in range(P.size)}
    ours = [(p.flat[e], q.flat[e]) for e in range(p.source.size)]
    return len(set(ours)) == len(ours) and set(ours) == pairs


def pullback_square(ctx: ToposCtx, f: PsMap, g: PsMap) -> Square:
    _, p1, p2 = ctx.pullback(f, g)
    return Square(p1, p2, f, g)


def check_beck_chevalley(D: DoctrineIface, sq: Square) -> Report:
    """``f* . E_g = E_p . q*`` and ``f* . A_g = A_p . q*`` for every predicate on ``B``."""
    if not is_pullback(D.ctx, sq):
        raise NotAPullback("square is not a pullback")
    rep = Report(f"Beck-Chevalley in {D.name}")
    A = sq.f.source
    for S in D.predicates(sq.g.source):
        lhs = D.substitute(sq.f, D.exists(sq.g, S))
        rhs = D.exists(sq.p, D.substitute(sq.q, S))
        rep.check("exists", D.equiv(A, lhs, rhs), S=S)
        lhs = D.substitute(sq.f, D.forall(sq.g, S))
        rhs = D.forall(sq.p, D.substitute(sq.q, S))
        rep.check("forall", D.equiv(A, lhs, rhs), S=S)
    return rep


def cospan_squares(ctx: ToposCtx, objects: Iterable[Presheaf]) -> list[Square]:
    """Pullback squares of every cospan ``A -> C <- B`` among ``objects``."""
    objs = list(objects)
    out = []
    for C in objs:
        for A in objs:
            for B in objs:
                for f in ctx.maps(A, C):
                    for g in ctx.maps(B, C):
                        out.append(pullback_square(ctx, f, g))
    return out


def check_generic_predicate(D: DoctrineIface, family: Sequence[Presheaf] | None = None) -> Report:
    """Every predicate over every family object is a substitution instance of the generic one."""
    fam = list(family if family is not None else D.family)
    G, truth = D.generic()
    rep = Report(f"generic predicate for {D.name}")
    for A in fam:
        classifiers = D.maps(A, G)
        for p in D.predicates(A):
            hits = [f for f in classifiers if D.equiv(A, D.substitute(f, truth), p)]
            rep.check("classified", bool(hits), A=A, p=p)
    return rep


def as_subobject(ctx: ToposCtx, m: PsMap) -> Subobject:
    """Normalise a monic map to the subobject of its image."""
    if not m.is_mono:
        raise ShapeMismatch("only monic maps name subobjects")
    return Subobject(m.target, m.image_mask())


__all__ = [
    "DoctrineIface",
    "HeytingOps",
    "HeytingTransf",
    "Square",
    "SubDoctrine",
    "as_subobject",
    "check_beck_chevalley",
    "check_doctrine_laws",
    "check_generic_predicate",
    "check_heyting_laws",
    "check_heyting_transf",
    "check_quantifiers",
    "cospan_squares",
    "exists_along",
    "exists_bruteforce",
    "forall_along",
    "forall_bruteforce",
    "is_pullback",
    "pullback_square",
    "sub_heyting",
    "substitute",
]
