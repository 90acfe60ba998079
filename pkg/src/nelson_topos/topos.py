"""Topos structure of presheaves on a finite category, by enumeration.

Every construction is memoised on the context, so asking twice returns the
very same object. That identity is what lets ``Subobject`` equality be a
mask comparison.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Hashable, Sequence

from . import kernels
from .category import (
    FinCategory,
    Presheaf,
    PsMap,
    Subobject,
    iter_bits,
    render,
    sum_bits,
)
from .errors import BudgetExceeded, ShapeMismatch

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class Product:
    obj: Presheaf
    factors: tuple[Presheaf, ...]
    projections: tuple[PsMap, ...]

    def encode(self, c: int, locals_: Sequence[int]) -> int:
        """Flat index of the tuple of local indices at stage ``c``."""
        idx = 0
        for F, i in zip(self.factors, locals_):
            idx = idx * len(F.carriers[c]) + i
        return self.obj.offsets[c] + idx

    def tuple_of(self, e: int) -> tuple[int, ...]:
        """Flat indices (in each factor) of the components of ``e``."""
        return tuple(p.flat[e] for p in self.projections)

    def pair(self, maps: Sequence[PsMap]) -> PsMap:
        """The map ``<f1, ..., fn>`` into this product."""
        if len(maps) != len(self.factors):
            raise ShapeMismatch("one map per factor required")
        src = maps[0].source if maps else None
        if src is None:
            raise ShapeMismatch("pairing needs at least one map; use the terminal map")
        for f, F in zip(maps, self.factors):
            if f.source is not src or f.target is not F:
                raise ShapeMismatch("pairing maps must share a source and hit the factors")
        flat = []
        for e in range(src.size):
            c = src.stage[e]
            flat.append(self.encode(c, [f.comps[c][src.local[e]] for f in maps]))
        return PsMap.from_flat(src, self.obj, flat)


@dataclass(frozen=True)
class Omega:
    obj: Presheaf
    truth: PsMap
    sieves: tuple[tuple[int, ...], ...]  # per stage: sieve masks over into[c]

    def top_index(self, c: int) -> int:
        return self.obj.offsets[c] + len(self.sieves[c]) - 1


@dataclass(frozen=True)
class PowerObject:
    obj: Presheaf
    member: Subobject  # of base x obj
    base: Presheaf
    membership_product: Product
    stage_products: tuple[Product, ...]  # A x y(c)
    masks: tuple[tuple[int, ...], ...]  # per stage, subfunctor masks of A x y(c)

    def element(self, c: int, mask: int) -> int:
        return self.obj.offsets[c] + self.masks[c].index(mask)

    @cached_property
    def _lookup(self) -> tuple[dict[int, int], ...]:
        return tuple({m: self.obj.offsets[c] + i for i, m in enumerate(ms)} for c, ms in enumerate(self.masks))

    def find(self, c: int, mask: int) -> int:
        return self._lookup[c][mask]

    def mask_of(self, e: int) -> int:
        return self.masks[self.obj.stage[e]][self.obj.local[e]]


@dataclass(frozen=True)
class Exponential:
    obj: Presheaf  # B^A
    eval: PsMap  # B^A x A -> B
    base: Presheaf  # A
    codomain: Presheaf  # B
    eval_product: Product
    stage_products: tuple[Product, ...]  # A x y(c)

    def table(self, e: int) -> tuple[int, ...]:
        """Flat indices in B of the natural family named by ``e``."""
        return self.obj.value(e)  # type: ignore[return-value]

    def find(self, c: int, table: tuple[int, ...]) -> int:
        return self.obj.lookup(c, table)


@dataclass(frozen=True)
class Representer:
    """Partial-map classifier: ``Atilde(c)`` = partial maps ``y(c) -/-> A``."""

    obj: Presheaf
    base: Presheaf
    eta_map: PsMap
    eta: Subobject

    def entries(self, e: int) -> tuple[int | None, ...]:
        """Per morphism in ``into[c]``, the local index of the value or None."""
        return self.obj.value(e)  # type: ignore[return-value]

    def is_total(self, e: int) -> bool:
        return (self.eta.mask >> e) & 1 == 1

    @cached_property
    def bottom(self) -> tuple[int, ...]:
        """Flat index of the nowhere-defined partial map at each stage."""
        cat = self.obj.cat
        return tuple(self.obj.lookup(c, (None,) * len(cat.into[c])) for c in range(len(cat.objects)))


class ToposCtx:
    """Presheaf topos over a finite base, with a shared memo and size budget."""

    def __init__(self, base: FinCategory, budget: int = DEFAULT_BUDGET):
        if budget <= 0:
            raise ValueError("budget must be positive")
        self.base = base
        self.budget = budget
        self._memo: dict[Hashable, object] = {}
        self._lock = threading.RLock()
        self._products: dict[Presheaf, Product] = {}
        self._exponentials: dict[Presheaf, Exponential] = {}

    def __repr__(self) -> str:
        return f"ToposCtx({self.base.name or '?'}, budget={self.budget})"

    # ------------------------------------------------------------------ memo

    def _cached(self, key: Hashable, build: Callable[[], object]):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
            value = build()
            return self._memo.setdefault(key, value)

    def guard(self, what: str, n: int) -> None:
        if n > self.budget:
            raise BudgetExceeded(what, n, self.budget)

    def _limit(self) -> int:
        return self.budget

    # --------------------------------------------------------------- objects

    def terminal(self) -> Presheaf:
        cat = self.base
        return self._cached(
            "terminal",
            lambda: Presheaf(cat, [("*",)] * len(cat.objects), [(0,)] * len(cat.mor_names), "1"),
        )

    def initial(self) -> Presheaf:
        cat = self.base
        return self._cached(
            "initial", lambda: Presheaf(cat, [()] * len(cat.objects), [()] * len(cat.mor_names), "0")
        )

    def representable(self, c: int) -> Presheaf:
        def build():
            cat = self.base
            carriers = [[cat.mor_names[v] for v in cat.hom(d, c)] for d in range(len(cat.objects))]
            pos = {v: i for d in range(len(cat.objects)) for i, v in enumerate(cat.hom(d, c))}
            act = []
            for u in range(len(cat.mor_names)):
                d = cat.cod[u]
                act.append([pos[cat.compose(v, u)] for v in cat.hom(d, c)])
            return Presheaf(cat, carriers, act, f"y({cat.objects[c]})")

        return self._cached(("y", c), build)

    def terminal_map(self, A: Presheaf) -> PsMap:
        one = self.terminal()
        return self._cached(("!", A), lambda: PsMap(A, one, tuple((0,) * len(c) for c in A.carriers), "!"))

    # ---------------------------------------------------------------- limits

    def product(self, *factors: Presheaf) -> Product:
        def build():
            cat = self.base
            n_obj = len(cat.objects)
            sizes = [[len(F.carriers[c]) for F in factors] for c in range(n_obj)]
            total = sum(_prod(s) for s in sizes)
            self.guard("product", total)
            carriers, act = [], []
            for c in range(n_obj):
                carriers.append(
                    [
                        tuple(F.carriers[c][i] for F, i in zip(factors, idx))
                        for idx in itertools.product(*(range(k) for k in sizes[c]))
                    ]
                )
            for m in range(len(cat.mor_names)):
                d, c = cat.dom[m], cat.cod[m]
                row = []
                for idx in itertools.product(*(range(k) for k in sizes[c])):
                    img = 0
                    for F, i, k in zip(factors, idx, sizes[d]):
                        img = img * k + F.act[m][i]
                    row.append(img)
                act.append(row)
            name = "x".join(F.name or "?" for F in factors) if factors else "1"
            P = Presheaf(cat, carriers, act, f"({name})")
            projections = []
            for k, F in enumerate(factors):
                comps = []
                for c in range(n_obj):
                    comps.append(
                        tuple(idx[k] for idx in itertools.product(*(range(s) for s in sizes[c])))
                    )
                projections.append(PsMap(P, F, tuple(comps), f"pi{k + 1}"))
            prod = Product(P, tuple(factors), tuple(projections))
            self._products[P] = prod
            return prod

        if not factors:
            one = self.terminal()
            return self._cached("product()", lambda: Product(one, (), ()))
        return self._cached(("product",) + tuple(factors), build)

    def coproduct(self, *summands: Presheaf) -> tuple[Presheaf, tuple[PsMap, ...]]:
        def build():
            cat = self.base
            carriers, act = [], []
            for c in range(len(cat.objects)):
                carriers.append([(k, v) for k, F in enumerate(summands) for v in F.carriers[c]])
            for m in range(len(cat.mor_names)):
                d = cat.dom[m]
                row, shift = [], 0
                for F in summands:
                    row.extend(shift + j for j in F.act[m])
                    shift += len(F.carriers[d])
                act.append(row)
            name = "+".join(F.name or "?" for F in summands) if summands else "0"
            S = Presheaf(cat, carriers, act, f"({name})")
            injections = []
            for k, F in enumerate(summands):
                comps = []
                for c in range(len(cat.objects)):
                    shift = sum(len(G.carriers[c]) for G in summands[:k])
                    comps.append(tuple(shift + i for i in range(len(F.carriers[c]))))
                injections.append(PsMap(F, S, tuple(comps), f"in{k + 1}"))
            return S, tuple(injections)

        return self._cached(("coproduct",) + tuple(summands), build)

    def restrict(self, S: Subobject) -> tuple[Presheaf, PsMap]:
        """The subfunctor ``S`` as a presheaf in its own right, with its inclusion."""

        def build():
            A = S.ambient
            cat = A.cat
            keep = [[i for i in range(len(A.carriers[c])) if (S.mask >> (A.offsets[c] + i)) & 1] for c in range(len(cat.objects))]
            pos = [{i: k for k, i in enumerate(ks)} for ks in keep]
            carriers = [[A.carriers[c][i] for i in keep[c]] for c in range(len(cat.objects))]
            act = []
            for m in range(len(cat.mor_names)):
                d, c = cat.dom[m], cat.cod[m]
                act.append([pos[d][A.act[m][i]] for i in keep[c]])
            name = f"{A.name or '?'}|{len(S)}"
            R = Presheaf(cat, carriers, act, name)
            return R, PsMap(R, A, tuple(tuple(k) for k in keep), "incl")

        if not S.is_subfunctor():
            raise ShapeMismatch("mask is not closed under the action")
        return self._cached(("restrict", S.ambient, S.mask), build)

    def equalizer(self, f: PsMap, g: PsMap) -> tuple[Presheaf, PsMap]:
        if f.source is not g.source or f.target is not g.target:
            raise ShapeMismatch("equalizer needs a parallel pair")
        mask = sum_bits(e for e in range(f.source.size) if f.flat[e] == g.flat[e])
        return self.restrict(Subobject(f.source, mask))

    def pullback(self, f: PsMap, g: PsMap) -> tuple[Presheaf, PsMap, PsMap]:
        """Pullback of the cospan ``f: A -> C <- B :g``."""
        if f.target is not g.target:
            raise ShapeMismatch("pullback needs a cospan")
        prod = self.product(f.source, g.source)
        p1, p2 = prod.projections
        mask = sum_bits(e for e in range(prod.obj.size) if f.flat[p1.flat[e]] == g.flat[p2.flat[e]])
        P, incl = self.restrict(Subobject(prod.obj, mask))
        return P, incl.then(p1), incl.then(p2)

    def finite_limit(self, kind: str, data: Sequence) -> tuple[Presheaf, list[PsMap]]:
        if kind == "product":
            prod = self.product(*data)
            return prod.obj, list(prod.projections)
        if kind == "equalizer":
            if len(data) != 2:
                raise ShapeMismatch("equalizer takes two maps")
            E, incl = self.equalizer(*data)
            return E, [incl]
        if kind == "pullback":
            if len(data) != 2:
                raise ShapeMismatch("pullback takes two maps")
            P, p1, p2 = self.pullback(*data)
            return P, [p1, p2]
        raise ShapeMismatch(f"unknown limit kind {kind!r}")

    # -------------------------------------------------------------- colimits

    def coequalizer(self, f: PsMap, g: PsMap) -> tuple[Presheaf, PsMap]:
        if f.source is not g.source or f.target is not g.target:
            raise ShapeMismatch("coequalizer needs a parallel pair")
        Q = f.target
        pairs = [(f.flat[x], g.flat[x]) for x in range(f.source.size) if f.flat[x] != g.flat[x]]
        return self.quotient(Q, pairs)

    def quotient(self, Q: Presheaf, pairs: Sequence[tuple[int, int]]) -> tuple[Presheaf, PsMap]:
        """Quotient of ``Q`` by the least action-compatible equivalence containing ``pairs``."""
        rep = kernels.congruence(Q.size, pairs, Q.flat_act)
        return self.quotient_by_representatives(Q, rep)

    def quotient_by_representatives(self, Q: Presheaf, rep: Sequence[int]) -> tuple[Presheaf, PsMap]:
        """Quotient given, per element, the least member of its class."""
        cat = self.base
        reps = [[e for e in range(Q.offsets[c], Q.offsets[c] + len(Q.carriers[c])) if rep[e] == e] for c in range(len(cat.objects))]
        pos = {e: k for rs in reps for k, e in enumerate(rs)}
        carriers = [[Q.value(e) for e in rs] for rs in reps]
        act = []
        for m in range(len(cat.mor_names)):
            c = cat.cod[m]
            act.append([pos[rep[Q.restrict(m, e)]] for e in reps[c]])
        R = Presheaf(cat, carriers, act, f"{Q.name or '?'}/~")
        q = PsMap.from_flat(Q, R, [R.offsets[Q.stage[e]] + pos[rep[e]] for e in range(Q.size)], "q")
        return R, q

    def image(self, f: PsMap) -> tuple[PsMap, Subobject]:
        """Epi-mono factorisation; the mono is the pointwise set-image."""
        mono = Subobject(f.target, f.image_mask())
        I, incl = self.restrict(mono)
        back = {t: k for k, t in enumerate(incl.flat)}
        epi = PsMap.from_flat(f.source, I, [back[t] for t in f.flat], "epi")
        return epi, mono

    # ------------------------------------------------------------ subobjects

    def subobjects(self, A: Presheaf) -> list[Subobject]:
        def build():
            try:
                masks = kernels.closed_subsets(A.down, self._limit())
            except kernels.KernelLimit:
                raise BudgetExceeded(f"Sub({A.name or '?'})", None, self.budget) from None
            return [Subobject(A, m) for m in masks]

        return self._cached(("sub", A), build)

    def top(self, A: Presheaf) -> Subobject:
        return Subobject(A, A.full)

    def bottom(self, A: Presheaf) -> Subobject:
        return Subobject(A, 0)

    def maps(self, P: Presheaf, Q: Presheaf) -> list[PsMap]:
        """Every natural map ``P -> Q``, canonically ordered."""

        def build():
            candidates = [
                tuple(range(Q.offsets[P.stage[e]], Q.offsets[P.stage[e]] + len(Q.carriers[P.stage[e]])))
                for e in range(P.size)
            ]
            try:
                tables = kernels.natural_maps(P.restrictions, candidates, Q.flat_act, self._limit())
            except kernels.KernelLimit:
                raise BudgetExceeded(f"Hom({P.name or '?'}, {Q.name or '?'})", None, self.budget) from None
            return [PsMap.from_flat(P, Q, t) for t in tables]

        return self._cached(("hom", P, Q), build)

    def global_elements(self, A: Presheaf) -> list[PsMap]:
        return self.maps(self.terminal(), A)

    def point_mask(self, x: PsMap) -> int:
        """Mask of the components of a global element."""
        return x.image_mask()

    # ----------------------------------------------------------------- omega

    def omega(self) -> Omega:
        def build():
            cat = self.base
            sieves, carriers = [], []
            for c in range(len(cat.objects)):
                y = self.representable(c)
                masks = kernels.closed_subsets(y.down)
                sieves.append(tuple(masks))
                into = cat.into[c]
                carriers.append([tuple(cat.mor_names[into[k]] for k in iter_bits(s)) for s in masks])
            pos = [{s: i for i, s in enumerate(ms)} for ms in sieves]
            act = []
            for w in range(len(cat.mor_names)):
                d, c = cat.dom[w], cat.cod[w]
                pullback = self._sieve_pullback_index(w)
                act.append([pos[d][sum_bits(k for k, j in enumerate(pullback) if (s >> j) & 1)] for s in sieves[c]])
            O = Presheaf(cat, carriers, act, "Omega")
            self.guard("Omega", O.size)
            truth = PsMap(self.terminal(), O, tuple((len(ms) - 1,) for ms in sieves), "true")
            return Omega(O, truth, tuple(sieves))

        return self._cached("omega", build)

    def _sieve_pullback_index(self, w: int) -> tuple[int, ...]:
        """For ``w: d -> c``: position in ``into[c]`` of ``w . v`` for each ``v`` in ``into[d]``."""
        cat = self.base
        c = cat.cod[w]
        where = {m: k for k, m in enumerate(cat.into[c])}
        return tuple(where[cat.compose(w, v)] for v in cat.into[cat.dom[w]])

    def sieve_of(self, A: Presheaf, mask: int, e: int) -> int:
        """Sieve mask ``{v : A(v)(e) in mask}`` at the stage of ``e``."""
        c = A.stage[e]
        return sum_bits(k for k, v in enumerate(self.base.into[c]) if (mask >> A.restrict(v, e)) & 1)

    def classify(self, S: Subobject) -> PsMap:
        Om = self.omega()
        A = S.ambient
        flat = [Om.obj.offsets[A.stage[e]] + Om.sieves[A.stage[e]].index(self.sieve_of(A, S.mask, e)) for e in range(A.size)]
        return PsMap.from_flat(A, Om.obj, flat, "chi")

    def subobject_of(self, chi: PsMap) -> Subobject:
        Om = self.omega()
        if chi.target is not Om.obj:
            raise ShapeMismatch("classifying maps must land in Omega")
        A = chi.source
        return Subobject(A, sum_bits(e for e in range(A.size) if chi.flat[e] == Om.top_index(A.stage[e])))

    def sieve_meet(self, s: int, t: int) -> int:
        return s & t

    def sieve_implies(self, c: int, s: int, t: int) -> int:
        """Heyting implication of sieves on ``c``."""
        y = self.representable(c)
        down = y.down
        return sum_bits(k for k in range(y.size) if down[k] & s & ~t == 0)

    # ---------------------------------------------------------- power object

    def power(self, A: Presheaf) -> PowerObject:
        def build():
            cat = self.base
            n_obj = len(cat.objects)
            prods = [self.product(A, self.representable(c)) for c in range(n_obj)]
            masks = []
            total = 0
            for c in range(n_obj):
                try:
                    ms = kernels.closed_subsets(prods[c].obj.down, self._limit() - total)
                except kernels.KernelLimit:
                    raise BudgetExceeded(f"P({A.name or '?'})", None, self.budget) from None
                total += len(ms)
                masks.append(tuple(ms))
            self.guard(f"P({A.name or '?'})", total)
            carriers = [
                [tuple(prods[c].obj.value(e) for e in iter_bits(m)) for m in masks[c]] for c in range(n_obj)
            ]
            pos = [{m: i for i, m in enumerate(ms)} for ms in masks]
            act = []
            for w in range(len(cat.mor_names)):
                d, c = cat.dom[w], cat.cod[w]
                pull = self._pair_pullback_index(A, w)
                act.append([pos[d][sum_bits(k for k, j in enumerate(pull) if (m >> j) & 1)] for m in masks[c]])
            PA = Presheaf(cat, carriers, act, f"P({A.name or '?'})")
            mp = self.product(A, PA)
            mem = []
            for e in range(mp.obj.size):
                a, R = mp.tuple_of(e)
                c = A.stage[a]
                yc = self.representable(c)
                ident = prods[c].encode(c, [A.local[a], yc.index[c][cat.mor_names[cat.ident[c]]]])
                if (masks[c][PA.local[R]] >> ident) & 1:
                    mem.append(e)
            member = Subobject(mp.obj, sum_bits(mem))
            return PowerObject(PA, member, A, mp, tuple(prods), tuple(masks))

        return self._cached(("power", A), build)

    def _pair_pullback_index(self, A: Presheaf, w: int) -> tuple[int, ...]:
        """For ``w: d -> c``: flat index in ``A x y(c)`` of ``(a, w . v)`` for each ``(a, v)`` in ``A x y(d)``."""
        cat = self.base
        d, c = cat.dom[w], cat.cod[w]
        src = self.product(A, self.representable(d))
        dst = self.product(A, self.representable(c))
        yc = self.representable(c)
        out = []
        for e in range(src.obj.size):
            a, v = src.tuple_of(e)
            s = A.stage[a]
            v_m = cat.mor_index[self.representable(d).value(v)]  # type: ignore[index]
            wv = cat.compose(w, v_m)
            out.append(dst.encode(s, [A.local[a], yc.index[s][cat.mor_names[wv]]]))
        return tuple(out)

    def name_of(self, R: Subobject, A: Presheaf) -> PsMap:
        """For ``R`` a subobject of ``A x B``, the map ``B -> P(A)`` naming it."""
        prod = self.product_of(R.ambient)
        if len(prod.factors) != 2 or prod.factors[0] is not A:
            raise ShapeMismatch("relation must live on A x B")
        B = prod.factors[1]
        P = self.power(A)
        cat = self.base
        flat = []
        for b in range(B.size):
            c = B.stage[b]
            st = P.stage_products[c]
            yc = self.representable(c)
            mask = 0
            for e in range(st.obj.size):
                a, v = st.tuple_of(e)
                s = A.stage[a]
                v_m = cat.mor_index[yc.value(v)]  # type: ignore[index]
                bv = B.restrict(v_m, b)
                if (R.mask >> prod.encode(s, [A.local[a], B.local[bv]])) & 1:
                    mask |= 1 << e
            flat.append(P.find(c, mask))
        return PsMap.from_flat(B, P.obj, flat, "name")

    def product_of(self, P: Presheaf) -> Product:
        """The product structure of an object built by ``product``."""
        try:
            return self._products[P]
        except KeyError:
            raise ShapeMismatch(f"{P!r} is not a product built by this context") from None

    # ----------------------------------------------------------- exponential

    def exponential(self, A: Presheaf, B: Presheaf) -> Exponential:
        """``B^A`` with ``B^A(c)`` the natural maps ``A x y(c) -> B``."""

        def build():
            cat = self.base
            n_obj = len(cat.objects)
            prods = [self.product(A, self.representable(c)) for c in range(n_obj)]
            tables = []
            total = 0
            for c in range(n_obj):
                P = prods[c].obj
                candidates = [
                    tuple(range(B.offsets[P.stage[e]], B.offsets[P.stage[e]] + len(B.carriers[P.stage[e]])))
                    for e in range(P.size)
                ]
                try:
                    ts = kernels.natural_maps(P.restrictions, candidates, B.flat_act, self._limit() - total)
                except kernels.KernelLimit:
                    raise BudgetExceeded(f"{B.name or '?'}^{A.name or '?'}", None, self.budget) from None
                total += len(ts)
                tables.append(ts)
            pos = [{t: i for i, t in enumerate(ts)} for ts in tables]
            act = []
            for w in range(len(cat.mor_names)):
                d, c = cat.dom[w], cat.cod[w]
                pull = self._pair_pullback_index(A, w)
                act.append([pos[d][tuple(t[j] for j in pull)] for t in tables[c]])
            E = Presheaf(cat, tables, act, f"{B.name or '?'}^{A.name or '?'}")
            ep = self.product(E, A)
            flat = []
            for e in range(ep.obj.size):
                phi, a = ep.tuple_of(e)
                c = A.stage[a]
                yc = self.representable(c)
                k = prods[c].encode(c, [A.local[a], yc.index[c][cat.mor_names[cat.ident[c]]]])
                flat.append(E.value(phi)[k])  # type: ignore[index]
            ev = PsMap.from_flat(ep.obj, B, flat, "eval")
            ex = Exponential(E, ev, A, B, ep, tuple(prods))
            self._exponentials[E] = ex
            return ex

        return self._cached(("exp", A, B), build)

    def curry(self, g: PsMap, C: Presheaf, A: Presheaf) -> PsMap:
        """For ``g: C x A -> B``, the transpose ``C -> B^A``."""
        prod = self.product(C, A)
        if g.source is not prod.obj:
            raise ShapeMismatch("curry expects a map out of C x A")
        B = g.target
        ex = self.exponential(A, B)
        cat = self.base
        flat = []
        for x in range(C.size):
            c = C.stage[x]
            st = ex.stage_products[c]
            yc = self.representable(c)
            table = []
            for e in range(st.obj.size):
                a, v = st.tuple_of(e)
                s = A.stage[a]
                xv = C.restrict(cat.mor_index[yc.value(v)], x)  # type: ignore[index]
                table.append(g.flat[prod.encode(s, [C.local[xv], A.local[a]])])
            flat.append(ex.find(c, tuple(table)))
        return PsMap.from_flat(C, ex.obj, flat, "curry")

    def uncurry(self, h: PsMap, A: Presheaf) -> PsMap:
        """For ``h: C -> B^A``, the map ``C x A -> B`` via evaluation."""
        ex = self._exponentials.get(h.target)
        if ex is None or ex.base is not A:
            raise ShapeMismatch("target is not an exponential built by this context")
        C = h.source
        prod = self.product(C, A)
        pair = ex.eval_product
        flat = []
        for e in range(prod.obj.size):
            x, a = prod.tuple_of(e)
            c = C.stage[x]
            flat.append(ex.eval.flat[pair.encode(c, [ex.obj.local[h.flat[x]], A.local[a]])])
        return PsMap.from_flat(prod.obj, ex.codomain, flat, "uncurry")

    # ----------------------------------------------------------- representer

    def representer(self, A: Presheaf) -> Representer:
        def build():
            cat = self.base
            n_obj = len(cat.objects)
            carriers = []
            for c in range(n_obj):
                y = self.representable(c)
                into = cat.into[c]
                entries = []
                for D in kernels.closed_subsets(y.down):
                    Dp, incl = self.restrict(Subobject(y, D))
                    for f in self.maps(Dp, A):
                        row: list[int | None] = [None] * len(into)
                        for k in range(Dp.size):
                            row[incl.flat[k]] = A.local[f.flat[k]]
                        entries.append(tuple(row))
                    self.guard(f"{A.name or '?'}~", len(entries))
                carriers.append(entries)
            pos = [{t: i for i, t in enumerate(es)} for es in carriers]
            act = []
            for w in range(len(cat.mor_names)):
                d, c = cat.dom[w], cat.cod[w]
                pull = self._sieve_pullback_index(w)
                act.append([pos[d][tuple(p[j] for j in pull)] for p in carriers[c]])
            T = Presheaf(cat, carriers, act, f"{A.name or '?'}~")
            self.guard(T.name, T.size)
            flat = []
            for a in range(A.size):
                c = A.stage[a]
                row = tuple(A.act[v][A.local[a]] for v in cat.into[c])
                flat.append(T.lookup(c, row))
            eta_map = PsMap.from_flat(A, T, flat, "eta")
            return Representer(T, A, eta_map, Subobject(T, eta_map.image_mask()))

        return self._cached(("repr", A), build)

    def extend_partial(self, D: Subobject, f: PsMap, rep: Representer) -> PsMap:
        """The total map ``B -> A~`` classifying the partial map ``(D >-> B, f: D -> A)``."""
        Dp, incl = self.restrict(D)
        if f.source is not Dp or f.target is not rep.base:
            raise ShapeMismatch("partial map must be defined on the restricted subobject")
        B, A, cat = D.ambient, rep.base, self.base
        where = {t: k for k, t in enumerate(incl.flat)}
        flat = []
        for b in range(B.size):
            c = B.stage[b]
            row = []
            for v in cat.into[c]:
                bv = B.restrict(v, b)
                row.append(A.local[f.flat[where[bv]]] if bv in where else None)
            flat.append(rep.obj.lookup(c, tuple(row)))
        return PsMap.from_flat(B, rep.obj, flat, "extend")

    def describe_element(self, P: Presheaf, e: int) -> str:
        return f"{self.base.objects[P.stage[e]]}:{render(P.value(e))}"


def _prod(xs: Sequence[int]) -> int:
    out = 1
    for x in xs:
        out *= x
    return out
