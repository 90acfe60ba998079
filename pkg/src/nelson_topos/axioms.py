"""Formula evaluation in ``X*`` and the transfer, standardisation and idealisation checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .category import Presheaf, PsMap, Subobject, validate
from .doctrine import (
    check_beck_chevalley,
    check_doctrine_laws,
    check_generic_predicate,
    cospan_squares,
    exists_along,
    forall_along,
    sub_heyting,
    substitute,
)
from .errors import AmbientMismatch, FormulaError, NotUltra, ToposError
from .formula import And, Atom, Bottom, Eq, Formula, Implies, Or, Quant, St, Top, check_sorts, parse
from .nelson import (
    NelsonStructure,
    build_nelson,
    check_invariants,
    equiv_st,
    export_subst_doctrine,
    leq_st,
    sigma_exists,
    sigma_forall,
    standardise,
)
from .report import Report
from .topos import ToposCtx
from .ultra import InternalFilter, classify_filter, extend_to_ultrafilter, generated_filter, k_finite_object, name_mask

# ------------------------------------------------------------ interpretation


@dataclass
class Interpretation:
    """Sorts name standard objects; predicates are standard subobjects or external ones."""

    sorts: dict[str, Presheaf] = field(default_factory=dict)
    predicates: dict[str, tuple[tuple[str, ...], Subobject, str]] = field(default_factory=dict)

    def sort(self, name: str, A: Presheaf) -> "Interpretation":
        self.sorts[name] = A
        return self

    def standard(self, name: str, sorts: Sequence[str], S: Subobject) -> "Interpretation":
        self.predicates[name] = (tuple(sorts), S, "standard")
        return self

    def external(self, name: str, sorts: Sequence[str], W: Subobject) -> "Interpretation":
        self.predicates[name] = (tuple(sorts), W, "external")
        return self

    def signatures(self) -> dict[str, tuple[str, ...]]:
        return {k: v[0] for k, v in self.predicates.items()}


class Evaluator:
    """Evaluates formulas of an interpretation to subobjects of ``Gamma^X/U``."""

    def __init__(self, N: NelsonStructure, interp: Interpretation):
        self.N = N
        self.ctx = N.ctx
        self.interp = interp

    # contexts are lists of standard objects; their product is the index object
    def obj(self, objs: Sequence[Presheaf]) -> Presheaf:
        if not objs:
            return self.ctx.terminal()
        if len(objs) == 1:
            return objs[0]
        return self.ctx.product(*objs).obj

    def proj(self, objs: Sequence[Presheaf], k: int) -> PsMap:
        if len(objs) == 1:
            return PsMap.identity(objs[0])
        return self.ctx.product(*objs).projections[k]

    def pick(self, objs: Sequence[Presheaf], idxs: Sequence[int]) -> PsMap:
        """The map ``Gamma -> prod_{i in idxs} Gamma_i``."""
        src = self.obj(objs)
        if not idxs:
            return self.ctx.terminal_map(src)
        if len(idxs) == 1:
            return self.proj(objs, idxs[0])
        if list(idxs) == list(range(len(objs))):
            return PsMap.identity(src)
        target = self.ctx.product(*[objs[i] for i in idxs])
        return target.pair([self.proj(objs, i) for i in idxs])

    def evaluate(self, f: Formula, context: Sequence[tuple[str, str]] = ()) -> Subobject:
        sorts = self.interp.sorts
        check_sorts(f, context, sorts, self.interp.signatures())
        names = [v for v, _ in context]
        objs = [sorts[s] for _, s in context]
        return self._eval(f, names, objs)

    def _var(self, names: list[str], v: str) -> int:
        return len(names) - 1 - names[::-1].index(v)

    def _pull(self, names, objs, args: Sequence[str], P: Subobject) -> Subobject:
        """Reindex a predicate on ``prod(args)^X/U`` to the context."""
        m = self.pick(objs, [self._var(names, v) for v in args])
        return substitute(self.N.map(m), P)

    def _eval(self, f: Formula, names: list[str], objs: list[Presheaf]) -> Subobject:
        N = self.N
        G = self.obj(objs)
        H = N.heyting(G)
        if isinstance(f, Top):
            return H.top
        if isinstance(f, Bottom):
            return H.bottom
        if isinstance(f, St):
            k = self._var(names, f.var)
            return self._pull(names, objs, [f.var], N.sigma(objs[k]))
        if isinstance(f, Eq):
            A = objs[self._var(names, f.left)]
            sq = self.ctx.product(A, A)
            diag = sq.pair([PsMap.identity(A), PsMap.identity(A)])
            return self._pull(names, objs, [f.left, f.right], N.embed(Subobject(sq.obj, diag.image_mask())))
        if isinstance(f, Atom):
            arg_sorts, P, kind = self.interp.predicates[f.name]
            amb = self.obj([self.interp.sorts[s] for s in arg_sorts])
            if kind == "standard":
                if P.ambient is not amb:
                    raise FormulaError(f"predicate {f.name} is not a subobject of its declared sorts")
                P = N.embed(P)
            elif P.ambient is not N.star(amb):
                raise FormulaError(f"external predicate {f.name} is not over the ultrapower of its sorts")
            return self._pull(names, objs, f.args, P)
        if isinstance(f, Quant):
            A = self.interp.sorts[f.sort]
            inner = objs + [A]
            body = self._eval(f.body, names + [f.var], inner)
            drop = N.map(self.pick(inner, list(range(len(objs)))))
            return exists_along(drop, body) if f.kind == "exists" else forall_along(drop, body)
        left = self._eval(f.left, names, objs)
        right = self._eval(f.right, names, objs)
        if isinstance(f, And):
            return H.meet(left, right)
        if isinstance(f, Or):
            return H.join(left, right)
        if isinstance(f, Implies):
            return H.implies(left, right)
        raise FormulaError(f"cannot evaluate {f!r}")


def evaluate(
    N: NelsonStructure, f: Formula | str, interp: Interpretation, context: Sequence[tuple[str, str]] = ()
) -> Subobject:
    """Interpretation of ``f`` in ``X*`` of the context's product."""
    if isinstance(f, str):
        f = parse(f)
    return Evaluator(N, interp).evaluate(f, context)


def holds(N: NelsonStructure, f: Formula | str, interp: Interpretation) -> bool:
    """A closed formula is true when it evaluates to top."""
    return evaluate(N, f, interp).is_top


# ------------------------------------------------------------------ transfer

TRANSFER_EXISTS = "(exists x:A. P(x)) => exists^st x:A. P(x)"
TRANSFER_FORALL = "(forall^st x:A. P(x)) => forall x:A. P(x)"
TRANSFER_EXISTS_PARAM = "forall^st y:B. (exists x:A. G(x, y) & P(x)) => exists^st x:A. G(x, y) & P(x)"
TRANSFER_FORALL_PARAM = "forall^st y:B. (forall^st x:A. G(x, y) => P(x)) => forall x:A. G(x, y) => P(x)"
STANDARDISATION_IL = "forall^st x:A. W(x) <=> D(x)"


def graph(ctx: ToposCtx, f: PsMap) -> Subobject:
    prod = ctx.product(f.source, f.target)
    return Subobject(prod.obj, prod.pair([PsMap.identity(f.source), f]).image_mask())


def check_transfer(N: NelsonStructure, f: PsMap, S: Subobject) -> Report:
    """Both transfer equivalences along ``f`` for ``S``, the trivial halves, and the sequent forms."""
    if S.ambient is not f.source:
        raise AmbientMismatch("subobject is not over the source of the map")
    ctx = N.ctx
    rep = Report("transfer")
    iS = N.embed(S)
    ex_std, fa_std = N.embed(exists_along(f, S)), N.embed(forall_along(f, S))
    ex_sig, fa_sig = sigma_exists(N, f, iS), sigma_forall(N, f, iS)
    rep.check("exists", equiv_st(N, ex_std, ex_sig), f=f, S=S)
    rep.check("forall", equiv_st(N, fa_std, fa_sig), f=f, S=S)
    rep.check("exists-trivial-half", leq_st(N, ex_sig, ex_std), f=f, S=S)
    rep.check("forall-trivial-half", leq_st(N, fa_std, fa_sig), f=f, S=S)
    interp = Interpretation().sort("A", f.source).sort("B", f.target)
    interp.standard("P", ["A"], S).standard("G", ["A", "B"], graph(ctx, f))
    rep.check("exists-internal", holds(N, TRANSFER_EXISTS, interp), S=S)
    rep.check("forall-internal", holds(N, TRANSFER_FORALL, interp), S=S)
    rep.check("exists-internal-along-f", holds(N, TRANSFER_EXISTS_PARAM, interp), f=f, S=S)
    rep.check("forall-internal-along-f", holds(N, TRANSFER_FORALL_PARAM, interp), f=f, S=S)
    return rep


# ----------------------------------------------------------- standardisation


def check_standardisation(N: NelsonStructure, A: Presheaf, sample: Iterable[Subobject] | None = None) -> Report:
    """Every external predicate has exactly one standard subobject agreeing with it on standard elements."""
    ctx = N.ctx
    rep = Report("standardisation")
    subs = ctx.subobjects(A)
    emb = [(S, N.embed(S)) for S in subs]
    preds = list(sample) if sample is not None else N.predicates(A)
    for W in preds:
        Ws = standardise(N, W)
        rep.check("agrees", equiv_st(N, N.embed(Ws), W), W=W)
        hits = [S for S, iS in emb if equiv_st(N, iS, W)]
        rep.check("unique", hits == [Ws], W=W, found=len(hits))
    for S, iS in emb:
        rep.check("recovers-standard", standardise(N, iS) == S, S=S)
    rep.check("sigma-is-full", standardise(N, N.sigma(A)).is_top)
    rep.check("bottom-is-empty", standardise(N, N.heyting(A).bottom).is_bottom)
    rep.info["predicates"] = len(preds)
    return rep


# --------------------------------------------------------- adequate powers


@dataclass
class AdequateUltrapower:
    B: Presheaf
    X: Presheaf
    U: InternalFilter
    N: NelsonStructure
    generators: dict[int, Subobject]  # mask of E in B -> E^! in X

    def describe(self) -> dict:
        return {"B": self.B.name or "?", "X_size": self.X.size, "U": self.U.describe()}


def _powerset_pair_index(ctx: ToposCtx, K, p: int) -> tuple[int, int]:
    """For ``p`` in ``P(B)(c)``, the stage and position of ``(p, id_c)`` in ``P(B) x y(c)``."""
    cat = ctx.base
    PB = K.A
    c = PB.stage[p]
    y = ctx.representable(c)
    st = K.power.stage_products[c]
    return c, st.encode(c, [PB.local[p], y.index[c][cat.mor_names[cat.ident[c]]]])


def adequate_ultrapower(
    ctx: ToposCtx, B: Presheaf, family: Sequence[Presheaf] | None = None, verify: bool = True
) -> AdequateUltrapower:
    """``X = K(P(B))`` with the principal ultrafilter at the least point of every ``E^!``."""
    cat = ctx.base
    PB = ctx.power(B)
    K = k_finite_object(ctx, PB.obj)
    X = K.obj
    X.name = "K(P(B))"
    xmask = [K.power.mask_of(K.incl.flat[x]) for x in range(X.size)]
    generators: dict[int, Subobject] = {}
    for E in ctx.subobjects(B):
        names = [PB.find(c, name_mask(ctx, E, c)) for c in range(len(cat.objects))]
        mask = 0
        for x in range(X.size):
            c, pos = _powerset_pair_index(ctx, K, names[X.stage[x]])
            if (xmask[x] >> pos) & 1:
                mask |= 1 << x
        G = Subobject(X, mask)
        if not G.is_subfunctor():
            raise ToposError("E^! is not a subobject")
        generators[E.mask] = G
    F = generated_filter(ctx, X, list(generators.values()), name="E!")
    U = extend_to_ultrafilter(ctx, F)
    fam = list(family) if family is not None else [ctx.terminal(), B]
    N = build_nelson(ctx, X, U, fam, path="shortcut", verify=verify)
    return AdequateUltrapower(B, X, U, N, generators)


@dataclass
class RealizedPoint:
    xi: PsMap  # 1 -> B^X/U
    choice: PsMap  # X -> B, the family x |-> xi_x
    report: Report


def realize_point(adq: AdequateUltrapower, V: InternalFilter) -> RealizedPoint:
    """A single point of ``B^X/U`` lying in exactly the embedded members of ``V``."""
    N, B, X = adq.N, adq.B, adq.X
    ctx = N.ctx
    cat = ctx.base
    if V.X is not B:
        raise AmbientMismatch("V must be a filter on B")
    if V.is_ultra is None:
        classify_filter(ctx, V)
    if not V.is_ultra:
        raise NotUltra(f"{V.name} is not an ultrafilter on B")
    PB = ctx.power(B)
    K = k_finite_object(ctx, PB.obj)
    flat = []
    for x in range(X.size):
        c = X.stage[x]
        xm = K.power.mask_of(K.incl.flat[x])
        st = ctx.product(B, ctx.representable(c))
        Bx = st.obj.full
        for p in range(PB.obj.offsets[c], PB.obj.offsets[c] + len(PB.obj.carriers[c])):
            _, pos = _powerset_pair_index(ctx, K, p)
            if (xm >> pos) & 1 and V.stage_member(c, PB.mask_of(p)):
                Bx &= PB.mask_of(p)
        ident = ctx.representable(c).index[c][cat.mor_names[cat.ident[c]]]
        least = next((b for b in range(len(B.carriers[c])) if (Bx >> st.encode(c, [b, ident])) & 1), None)
        if least is None:
            raise ToposError(f"B_x is empty at {X.label(x)}")
        flat.append(B.offsets[c] + least)
    choice = PsMap.from_flat(X, B, flat, "xi")
    if not validate(choice).passed:
        raise ToposError("the least choice of xi_x is not natural in x")
    xi = _class_of_global_family(N, choice)
    rep = Report("realised ultrafilter")
    for E in ctx.subobjects(B):
        inside = xi.image_mask() & ~N.embed(E).mask == 0
        rep.check("recovers-V", inside == V.member(E), E=E)
    return RealizedPoint(xi, choice, rep)


def _class_of_global_family(N: NelsonStructure, g: PsMap) -> PsMap:
    """The global element of ``B^X/U`` named by ``g: X -> B``."""
    ctx = N.ctx
    one = ctx.terminal()
    b = N.bundle(g.target)
    if b.path == "shortcut":
        return N.U.point.then(g)
    rep, E = b.rep, b.power
    back = {t: k for k, t in enumerate(b.over_incl.flat)}
    flat = []
    for c in range(len(ctx.base.objects)):
        st = E.stage_products[c]
        table = tuple(rep.eta_map.flat[g.flat[st.tuple_of(t)[0]]] for t in range(st.obj.size))
        flat.append(b.q.flat[back[E.find(c, table)]])
    return PsMap.from_flat(one, b.result, flat, "[xi]")


# -------------------------------------------------------------- idealisation


@dataclass(frozen=True)
class IdealisationInstance:
    A: Presheaf
    B: Presheaf
    R: Subobject  # of A x B

    def describe(self) -> dict:
        return {"A": self.A.name or "?", "B": self.B.name or "?", "R": self.R.parts()}


IDEALISATION_HYPOTHESIS = "forall^st z:K. exists y:B. forall x:A. x in z => R(x, y)"
IDEALISATION_CONCLUSION = "exists y:B. forall^st x:A. R(x, y)"


def check_idealisation(N: NelsonStructure, inst: IdealisationInstance) -> Report:
    """Evaluate both sides of K-finite idealisation for a standard relation."""
    ctx = N.ctx
    A, B, R = inst.A, inst.B, inst.R
    if R.ambient is not ctx.product(A, B).obj:
        raise AmbientMismatch("R must be a subobject of A x B")
    K = k_finite_object(ctx, A)
    interp = Interpretation().sort("A", A).sort("B", B).sort("K", K.obj)
    interp.standard("R", ["A", "B"], R).standard("in", ["A", "K"], K.member)
    hyp = holds(N, IDEALISATION_HYPOTHESIS, interp)
    concl = holds(N, IDEALISATION_CONCLUSION, interp)
    rep = Report("idealisation")
    rep.info["hypothesis"] = hyp
    rep.info["conclusion"] = concl
    rep.check("implication", (not hyp) or concl, R=R)
    return rep


# ------------------------------------------------------------------ soundness


def _capped(items: list, cap: int) -> list:
    return items if len(items) <= cap else items[:cap]


def soundness_suite(N: NelsonStructure, family: Sequence[Presheaf] | None = None, cap: int = 32) -> Report:
    """The fixed corpus of internal-logic, adjunction, doctrine and embedding checks."""
    ctx = N.ctx
    one = ctx.terminal()
    fam = list(family) if family is not None else list(N.family)
    if one not in fam:
        fam.insert(0, one)
    rep = Report("soundness")
    rep.merge(check_invariants(N), "definition")
    sampled = False
    for A in fam:
        preds = N.predicates(A)
        sampled |= len(preds) > cap
        preds = _capped(preds, cap)
        subs = ctx.subobjects(A)
        for W in preds:
            interp = Interpretation().sort("A", A)
            interp.external("W", ["A"], W).standard("D", ["A"], standardise(N, W))
            rep.check("standardisation-internal", holds(N, STANDARDISATION_IL, interp), A=A, W=W)
        for S in subs:
            interp = Interpretation().sort("A", A).standard("P", ["A"], S)
            rep.check("transfer-internal-exists", holds(N, TRANSFER_EXISTS, interp), S=S)
            rep.check("transfer-internal-forall", holds(N, TRANSFER_FORALL, interp), S=S)
        # embedding: split mono, reflection, factoring through internal predicates
        emb = {S.mask: N.embed(S) for S in subs}
        for S in subs:
            rep.check("split-mono", standardise(N, emb[S.mask]) == S, S=S)
            rep.check("factors-through-internal", emb[S.mask] == N.embed_internal(S), S=S)
            for T in subs:
                if equiv_st(N, emb[S.mask], emb[T.mask]):
                    rep.check("embedding-reflects", S == T, S=S, T=T)
                rep.check("same-standard-elements", leq_st(N, emb[S.mask], emb[T.mask]) == (emb[S.mask] <= emb[T.mask]), S=S, T=T)
        H = N.heyting(A)
        for a in preds:
            for b in preds:
                sa, sb = standardise(N, a), standardise(N, b)
                rep.check("standardise-meet", standardise(N, H.meet(a, b)).mask == sa.mask & sb.mask, a=a, b=b)
                rep.check("standardise-join", standardise(N, H.join(a, b)).mask == sa.mask | sb.mask, a=a, b=b)
                rep.check("standardise-implies", standardise(N, H.implies(a, b)) == sub_heyting(ctx, A).implies(sa, sb), a=a, b=b)
                if not leq_st(N, a, b):
                    continue
                for c in preds:
                    rep.check("st-order-meet", leq_st(N, H.meet(c, a), H.meet(c, b)), a=a, b=b, c=c)
                    rep.check("st-order-join", leq_st(N, H.join(c, a), H.join(c, b)), a=a, b=b, c=c)
                    rep.check("st-order-implies", leq_st(N, H.implies(c, a), H.implies(c, b)), a=a, b=b, c=c)
    for A in fam:
        for B in fam:
            for f in ctx.maps(A, B):
                F = N.map(f)
                pa, pb = _capped(N.predicates(A), cap), _capped(N.predicates(B), cap)
                for psi in pb:
                    back = substitute(F, psi)
                    for phi in pa:
                        rep.check("sigma-exists-adjoint", leq_st(N, sigma_exists(N, f, phi), psi) == leq_st(N, phi, back), f=f)
                        rep.check("sigma-forall-adjoint", leq_st(N, back, phi) == leq_st(N, psi, sigma_forall(N, f, phi)), f=f)
                for p1 in pb:
                    for p2 in pb:
                        if leq_st(N, p1, p2):
                            rep.check("substitution-preserves-st-order", leq_st(N, substitute(F, p1), substitute(F, p2)), f=f)
                    rep.check("standardise-natural", standardise(N, substitute(F, p1)) == substitute(f, standardise(N, p1)), f=f)
    ex = export_subst_doctrine(N, fam)
    rep.merge(check_doctrine_laws(ex.doctrine, fam), "Sub^st")
    rep.merge(check_generic_predicate(ex.doctrine, fam), "Sub^st")
    for sq in cospan_squares(ctx, fam):
        rep.merge(check_beck_chevalley(ex.doctrine, sq), "Sub^st/beck-chevalley")
    if sampled:
        rep.info["predicates_capped_at"] = cap
    return rep


__all__ = [
    "AdequateUltrapower",
    "Evaluator",
    "IDEALISATION_CONCLUSION",
    "IDEALISATION_HYPOTHESIS",
    "IdealisationInstance",
    "Interpretation",
    "RealizedPoint",
    "STANDARDISATION_IL",
    "TRANSFER_EXISTS",
    "TRANSFER_FORALL",
    "adequate_ultrapower",
    "check_idealisation",
    "check_standardisation",
    "check_transfer",
    "evaluate",
    "graph",
    "holds",
    "realize_point",
    "soundness_suite",
]
