"""Internal filters and ultrafilters on an object, and Kuratowski-finite subobjects.

A filter on ``X`` is a subobject of the power object ``P(X)`` (which stands
in for ``Omega^X``; the two are canonically isomorphic). It is carried by a
decision procedure on generalised elements: ``stage_member(c, R)`` says
whether the subfunctor ``R`` of ``X x y(c)`` lies in the filter at stage
``c``. Global membership of a subobject ``S`` of ``X`` is membership of its
name at every stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .category import Presheaf, PsMap, Subobject, iter_bits, sum_bits
from .errors import NotUltra, ShapeMismatch
from .topos import PowerObject, ToposCtx


def name_mask(ctx: ToposCtx, S: Subobject, c: int) -> int:
    """Mask over ``X x y(c)`` of the pairs ``(x, v)`` with ``x`` in ``S``."""
    X = S.ambient
    st = ctx.product(X, ctx.representable(c))
    p1 = st.projections[0]
    return sum_bits(e for e in range(st.obj.size) if (S.mask >> p1.flat[e]) & 1)


class InternalFilter:
    """A candidate internal filter, with flags filled in by :func:`classify_filter`."""

    def __init__(
        self,
        ctx: ToposCtx,
        X: Presheaf,
        stage_member: Callable[[int, int], bool],
        *,
        name: str = "U",
        generator: Subobject | None = None,
        point: PsMap | None = None,
        extensional: Subobject | None = None,
    ):
        self.ctx = ctx
        self.X = X
        self.stage_member = stage_member
        self.name = name
        self.generator = generator
        self.point = point
        self._extensional = extensional
        self.is_filter: bool | None = None
        self.is_proper: bool | None = None
        self.is_ultra: bool | None = None
        self.flags_source = "unchecked"

    def __repr__(self) -> str:
        return f"InternalFilter({self.name} on {self.X.name or '?'})"

    def member(self, S: Subobject) -> bool:
        if S.ambient is not self.X:
            raise ShapeMismatch("filters decide subobjects of their own object")
        return all(self.stage_member(c, name_mask(self.ctx, S, c)) for c in range(len(self.ctx.base.objects)))

    @property
    def is_principal(self) -> bool:
        return self.point is not None

    def as_subobject(self) -> Subobject:
        """The extensional form: a subobject of ``P(X)``."""
        if self._extensional is None:
            P = self.ctx.power(self.X)
            mask = sum_bits(e for e in range(P.obj.size) if self.stage_member(P.obj.stage[e], P.mask_of(e)))
            self._extensional = Subobject(P.obj, mask)
        return self._extensional

    def describe(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "on": self.X.name or "?"}
        if self.point is not None:
            out["principal_at"] = [self.X.label(e) for e in self.point.flat]
        elif self.generator is not None:
            out["generated_by"] = self.generator.parts()
        out["flags"] = {"filter": self.is_filter, "proper": self.is_proper, "ultra": self.is_ultra}
        out["flags_source"] = self.flags_source
        return out


# ------------------------------------------------------------- constructors


def up_filter(ctx: ToposCtx, G: Subobject, name: str = "") -> InternalFilter:
    """The filter of subobjects containing ``G`` (internally ``{K : G <= K}``)."""
    X = G.ambient
    need = [name_mask(ctx, G, c) for c in range(len(ctx.base.objects))]

    def stage_member(c: int, R: int) -> bool:
        return need[c] & ~R == 0

    return InternalFilter(ctx, X, stage_member, name=name or f"up({len(G)})", generator=G)


def generated_filter(ctx: ToposCtx, X: Presheaf, generators: list[Subobject], name: str = "") -> InternalFilter:
    """Filter generated by finitely many subobjects: everything above their meet."""
    mask = X.full
    for G in generators:
        if G.ambient is not X:
            raise ShapeMismatch("generators must be subobjects of X")
        mask &= G.mask
    return up_filter(ctx, Subobject(X, mask), name or "generated")


def principal_ultrafilter(ctx: ToposCtx, x: PsMap, name: str = "") -> InternalFilter:
    """``{S : x factors through S}`` for a global element ``x: 1 -> X``."""
    if x.source is not ctx.terminal():
        raise ShapeMismatch("principal filters need a global element")
    X = x.target
    U = up_filter(ctx, Subobject(X, x.image_mask()), name or "principal")
    U.point = x
    U.generator = Subobject(X, x.image_mask())
    if ctx.base.is_groupoid:
        # over a groupoid base a global point gives an ultrafilter; the
        # flags are re-derived by classify_filter whenever P(X) is small
        U.is_filter = U.is_proper = U.is_ultra = True
        U.flags_source = "principal"
    return U


def filter_from_subobject(ctx: ToposCtx, X: Presheaf, Usub: Subobject, name: str = "") -> InternalFilter:
    P = ctx.power(X)
    if Usub.ambient is not P.obj:
        raise ShapeMismatch("extensional filters are subobjects of P(X)")
    lookup = P._lookup

    def stage_member(c: int, R: int) -> bool:
        return (Usub.mask >> lookup[c][R]) & 1 == 1

    return InternalFilter(ctx, X, stage_member, name=name or "U", extensional=Usub)


def extend_to_ultrafilter(ctx: ToposCtx, F: InternalFilter) -> InternalFilter:
    """Principal ultrafilter at the least global element inside the generator of ``F``."""
    if F.generator is None:
        raise NotUltra("only generated filters can be extended")
    G = F.generator
    for x in ctx.global_elements(F.X):
        if x.image_mask() & ~G.mask == 0:
            return principal_ultrafilter(ctx, x, name=f"{F.name}+")
    raise NotUltra("the generating intersection has no global element")


# ---------------------------------------------------------- classification


@dataclass
class FilterReport:
    is_filter: bool
    is_proper: bool
    is_ultra: bool
    witnesses: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "filter": self.is_filter,
            "proper": self.is_proper,
            "ultra": self.is_ultra,
            "witnesses": self.witnesses,
        }


def _chi_table(ctx: ToposCtx, P: PowerObject, mem: list[bool]) -> list[int]:
    """Per element ``R`` of ``P(X)``: the sieve of ``v`` with ``R . v`` in the filter."""
    cat = ctx.base
    out = []
    for e in range(P.obj.size):
        c = P.obj.stage[e]
        out.append(sum_bits(k for k, v in enumerate(cat.into[c]) if mem[P.obj.restrict(v, e)]))
    return out


def classify_filter(ctx: ToposCtx, U: InternalFilter) -> FilterReport:
    """Decide the three flags by direct verification over every generalised element of ``P(X)``."""
    P = ctx.power(U.X)
    cat = ctx.base
    n = P.obj.size
    ctx.guard("filter classification pairs", sum(len(m) ** 2 for m in P.masks))
    mem = [bool(U.stage_member(P.obj.stage[e], P.mask_of(e))) for e in range(n)]
    chi = _chi_table(ctx, P, mem)
    wit: dict[str, Any] = {}

    def note(key: str, **w: Any) -> None:
        wit.setdefault(key, {k: v for k, v in w.items()})

    def label(e: int) -> str:
        return ctx.describe_element(P.obj, e)

    # U must itself be a subobject of P(X)
    subfunctor = True
    for e in range(n):
        if mem[e] and any(not mem[r] for _, r in P.obj.restrictions[e]):
            subfunctor = False
            note("subfunctor", element=label(e))
            break
    top_ok = True
    meet_ok = True
    proper_ok = True
    implies_ok = True
    for c in range(len(cat.objects)):
        st = P.stage_products[c]
        top_c = P.find(c, st.obj.full)
        full_sieve = (1 << len(cat.into[c])) - 1
        if chi[top_c] != full_sieve:
            top_ok = False
            note("top", stage=cat.objects[c])
        # which sieve position each element of X x y(c) sits over
        p2 = st.projections[1]
        y = ctx.representable(c)
        where = [y.local[p2.flat[t]] + y.offsets[y.stage[p2.flat[t]]] for t in range(st.obj.size)]
        down = st.obj.down
        masks = P.masks[c]
        for R in masks:
            e = P.find(c, R)
            inhabited = sum_bits(where[t] for t in iter_bits(R))
            if chi[e] & ~inhabited:
                proper_ok = False
                note("proper", element=label(e))
        for R1 in masks:
            e1 = P.find(c, R1)
            for R2 in masks:
                e2 = P.find(c, R2)
                em = P.find(c, R1 & R2)
                if chi[em] != chi[e1] & chi[e2]:
                    meet_ok = False
                    note("meet", left=label(e1), right=label(e2))
                bad = R1 & ~R2
                imp = sum_bits(t for t in range(st.obj.size) if not down[t] & bad)
                ei = P.find(c, imp)
                if chi[ei] != ctx.sieve_implies(c, chi[e1], chi[e2]):
                    implies_ok = False
                    note("implies", left=label(e1), right=label(e2))
    is_filter = subfunctor and top_ok and meet_ok
    is_proper = is_filter and proper_ok
    is_ultra = is_proper and implies_ok
    U.is_filter, U.is_proper, U.is_ultra = is_filter, is_proper, is_ultra
    U.flags_source = "verified"
    return FilterReport(is_filter, is_proper, is_ultra, wit)


def enumerate_internal_ultrafilters(ctx: ToposCtx, X: Presheaf) -> list[InternalFilter]:
    """Every internal ultrafilter on ``X``, ordered by the mask of its extensional form."""
    P = ctx.power(X)
    cat = ctx.base
    tops = sum_bits(P.find(c, P.stage_products[c].obj.full) for c in range(len(cat.objects)))
    bottoms = sum_bits(P.find(c, 0) for c in range(len(cat.objects)))
    out = []
    for Usub in ctx.subobjects(P.obj):
        # cheap necessary conditions before the full classification
        if Usub.mask & tops != tops or Usub.mask & bottoms:
            continue
        U = filter_from_subobject(ctx, X, Usub, name=f"U{len(out)}")
        if classify_filter(ctx, U).is_ultra:
            U.point = principal_point(ctx, U)
            out.append(U)
    return out


def principal_point(ctx: ToposCtx, U: InternalFilter) -> PsMap | None:
    """The least global element ``x`` with ``U`` equal to the filter above ``x``, if any."""
    ext = U.as_subobject()
    for x in ctx.global_elements(U.X):
        if up_filter(ctx, Subobject(U.X, x.image_mask())).as_subobject() == ext:
            return x
    return None


# --------------------------------------------------------------- K-finite


@dataclass(frozen=True)
class KFinite:
    """``K(A)`` as a subobject of ``P(A)``, its restriction, and membership ``A x K(A)``."""

    A: Presheaf
    power: PowerObject
    KA: Subobject
    obj: Presheaf
    incl: PsMap
    member: Subobject
    steps: int

    def describe(self) -> dict[str, Any]:
        return {"of": self.A.name or "?", "size": len(self.KA), "steps": self.steps}


def singleton_mask(ctx: ToposCtx, A: Presheaf, a: int) -> int:
    """Mask over ``A x y(c)`` of the singleton of ``a`` (its graph ``{(a.v, v)}``)."""
    c = A.stage[a]
    cat = ctx.base
    y = ctx.representable(c)
    st = ctx.product(A, y)
    out = 0
    for v in cat.into[c]:
        d = cat.dom[v]
        out |= 1 << st.encode(d, [A.local[A.restrict(v, a)], y.index[d][cat.mor_names[v]]])
    return out


def k_finite_object(ctx: ToposCtx, A: Presheaf) -> KFinite:
    """Least sub-join-semilattice of ``P(A)`` holding the empty subobject and all singletons."""

    def build():
        P = ctx.power(A)
        cat = ctx.base
        masks: list[set[int]] = []
        steps = 0
        for c in range(len(cat.objects)):
            layer = {0} | {singleton_mask(ctx, A, a) for a in range(A.offsets[c], A.offsets[c] + len(A.carriers[c]))}
            while True:
                steps += 1
                grown = layer | {m1 | m2 for m1 in layer for m2 in layer}
                if grown == layer:
                    break
                layer = grown
            masks.append(layer)
        KA = Subobject(P.obj, sum_bits(P.find(c, m) for c in range(len(cat.objects)) for m in masks[c]))
        if not KA.is_subfunctor():
            raise ShapeMismatch("K-finite closure is not stable under restriction")
        obj, incl = ctx.restrict(KA)
        member = _membership(ctx, A, P, obj, incl)
        return KFinite(A, P, KA, obj, incl, member, steps)

    return ctx._cached(("K", A), build)


def _membership(ctx: ToposCtx, A: Presheaf, P: PowerObject, K: Presheaf, incl: PsMap) -> Subobject:
    prod = ctx.product(A, K)
    mp = P.membership_product
    mask = 0
    for e in range(prod.obj.size):
        a, z = prod.tuple_of(e)
        c = A.stage[a]
        if (P.member.mask >> mp.encode(c, [A.local[a], P.obj.local[incl.flat[z]]])) & 1:
            mask |= 1 << e
    return Subobject(prod.obj, mask)


def is_k_finite(ctx: ToposCtx, A: Presheaf) -> bool:
    """Whether the name of the top subobject factors through ``K(A)``."""
    K = k_finite_object(ctx, A)
    P = K.power
    return all(
        (K.KA.mask >> P.find(c, P.stage_products[c].obj.full)) & 1 for c in range(len(ctx.base.objects))
    )


__all__ = [
    "FilterReport",
    "InternalFilter",
    "KFinite",
    "classify_filter",
    "enumerate_internal_ultrafilters",
    "extend_to_ultrafilter",
    "filter_from_subobject",
    "generated_filter",
    "is_k_finite",
    "k_finite_object",
    "name_mask",
    "principal_ultrafilter",
    "singleton_mask",
    "up_filter",
]
