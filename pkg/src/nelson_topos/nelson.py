"""Nelson structures ``N_U``: standard elements, the embedding ``i`` and the ``Sub^st`` doctrine.

External predicates over a standard object ``A`` are subobjects of the
ultrapower ``A^X/U``. The standard-elements predicate ``sigma_A`` is the
image of the diagonal ``d_U``; standard subobjects embed as ``S^X/U``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .category import Presheaf, PsMap, Subobject
from .doctrine import (
    DoctrineIface,
    HeytingTransf,
    SubDoctrine,
    check_heyting_transf,
    exists_along,
    forall_along,
    sub_heyting,
    substitute,
)
from .errors import AmbientMismatch, NelsonInvariantError, NotUltra, ShapeMismatch
from .report import Report
from .topos import ToposCtx
from .ultra import InternalFilter, classify_filter
from .ultrapower import UltrapowerBundle, build_ultrapower, embed_direct, embed_subobject, ultrapower_map

#: filters on objects whose power object exceeds this are not re-classified
CLASSIFY_LIMIT = 4096


class NelsonStructure:
    """The standard topos ``ctx`` with the ultrapower doctrine over ``X`` and ``U``."""

    def __init__(self, ctx: ToposCtx, U: InternalFilter, path: str, family: Sequence[Presheaf]):
        self.ctx = ctx
        self.U = U
        self.X = U.X
        self.path = path
        self.family = list(family)
        self.sigma_override: Callable[[Presheaf], Subobject] | None = None
        self._origin: dict[int, Presheaf] = {}

    def __repr__(self) -> str:
        return f"NelsonStructure(X={self.X.name or '?'}, U={self.U.name}, path={self.path})"

    # ---------------------------------------------------------- ultrapowers

    def bundle(self, A: Presheaf) -> UltrapowerBundle:
        b = build_ultrapower(self.ctx, A, self.U, self.path)
        self._origin.setdefault(id(b.result), A)
        return b

    def star(self, A: Presheaf) -> Presheaf:
        """``A^X/U``."""
        return self.bundle(A).result

    def map(self, f: PsMap) -> PsMap:
        """``f^X/U``."""
        self.bundle(f.source), self.bundle(f.target)
        return ultrapower_map(self.ctx, f, self.U, self.path)

    def d(self, A: Presheaf) -> PsMap:
        return self.bundle(A).d

    def origin(self, P: Presheaf) -> Presheaf:
        """The standard object whose ultrapower is ``P``."""
        try:
            return self._origin[id(P)]
        except KeyError:
            raise AmbientMismatch(f"{P!r} is not an ultrapower built by this structure") from None

    def heyting(self, A: Presheaf):
        return sub_heyting(self.ctx, self.star(A))

    # ------------------------------------------------------------ predicates

    def sigma(self, A: Presheaf) -> Subobject:
        """Standard elements of ``A^X/U``."""
        if self.sigma_override is not None:
            return self.sigma_override(A)
        return self.bundle(A).diag

    def embed(self, S: Subobject) -> Subobject:
        """``i(S) = S^X/U``."""
        self.bundle(S.ambient)
        return embed_subobject(self.ctx, S, self.U, self.path)

    def embed_internal(self, S: Subobject) -> Subobject:
        """``i(S)`` through the internal-predicate view: classes landing in ``S`` on a ``U``-set."""
        self.bundle(S.ambient)
        return embed_direct(self.ctx, S, self.U, self.path)

    def predicates(self, A: Presheaf) -> list[Subobject]:
        return self.ctx.subobjects(self.star(A))

    def describe(self) -> dict:
        return {
            "X": self.X.name or "?",
            "ultrafilter": self.U.describe(),
            "path": self.path,
            "family": [A.name or "?" for A in self.family],
        }


# ------------------------------------------------------------------- build


def build_nelson(
    ctx: ToposCtx,
    X: Presheaf,
    U: InternalFilter,
    family: Sequence[Presheaf] | None = None,
    path: str = "auto",
    *,
    require_ultra: bool = True,
    require_groupoid: bool = True,
    verify: bool = True,
) -> NelsonStructure:
    """Assemble ``N_U`` and verify the defining clauses over ``family``.

    ``require_ultra=False`` admits proper filters (reduced powers); such
    structures generally fail the Heyting clause, which ``verify`` reports.
    """
    if require_groupoid and not ctx.base.is_groupoid:
        raise ShapeMismatch(f"base {ctx.base.name} is not a groupoid; internal choice is not guaranteed")
    if U.X is not X:
        raise ShapeMismatch("the filter lives on another object")
    if U.is_filter is None:
        P = ctx.power(X)
        if P.obj.size > CLASSIFY_LIMIT:
            raise NotUltra("filter flags are unknown and P(X) is too large to classify")
        classify_filter(ctx, U)
    if require_ultra and not U.is_ultra:
        raise NotUltra(f"{U.name} is not an internal ultrafilter")
    if not (U.is_filter and U.is_proper):
        raise NotUltra(f"{U.name} is not a proper filter")
    if path == "auto":
        path = "shortcut" if U.point is not None else "explicit"
    fam = list(family) if family is not None else [ctx.terminal(), ctx.omega().obj]
    if ctx.terminal() not in fam:
        fam.insert(0, ctx.terminal())
    N = NelsonStructure(ctx, U, path, fam)
    if verify:
        rep = check_invariants(N)
        if not rep.passed:
            v = rep.violations[0]
            raise NelsonInvariantError(v.name, v.witness)
    return N


def corrupt_sigma(N: NelsonStructure) -> NelsonStructure:
    """A copy of ``N`` whose ``sigma`` is empty away from the terminal object (negative control)."""
    bad = NelsonStructure(N.ctx, N.U, N.path, N.family)
    one = N.ctx.terminal()
    bad.sigma_override = lambda A: bad.bundle(A).diag if A is one else Subobject(bad.star(A), 0)
    return bad


def check_invariants(N: NelsonStructure) -> Report:
    """The defining clauses of a Nelson structure, over the declared family."""
    ctx = N.ctx
    rep = Report("Nelson structure")
    one = ctx.terminal()
    rep.check("sigma-terminal-top", N.sigma(one).is_top)
    rep.merge(check_lax_naturality(N))
    for A in N.family:
        rep.check("sigma-monic", N.d(A).is_mono, A=A)
    T = embedding_transf(N)
    rep.merge(check_heyting_transf(T, N.family), "i")
    return rep


def check_lax_naturality(N: NelsonStructure) -> Report:
    """``sigma_A <= (f^X/U)^* sigma_B`` for every standard ``f`` between family objects."""
    rep = Report("sigma lax natural")
    for A in N.family:
        for B in N.family:
            for f in N.ctx.maps(A, B):
                ok = N.sigma(A) <= substitute(N.map(f), N.sigma(B))
                rep.check("sigma-lax-natural", ok, f=f)
    return rep


# ------------------------------------------------------------------ orders


def _over(N: NelsonStructure, *preds: Subobject) -> Presheaf:
    P = preds[0].ambient
    for p in preds[1:]:
        if p.ambient is not P:
            raise AmbientMismatch("predicates over different objects")
    return N.origin(P)


def sigma(N: NelsonStructure, A: Presheaf) -> Subobject:
    return N.sigma(A)


def i_embed(N: NelsonStructure, S: Subobject) -> Subobject:
    return N.embed(S)


def leq_st(N: NelsonStructure, phi: Subobject, psi: Subobject) -> bool:
    """``phi /\\ sigma <= psi``: agreement on standard elements."""
    A = _over(N, phi, psi)
    return N.heyting(A).meet(phi, N.sigma(A)) <= psi


def equiv_st(N: NelsonStructure, phi: Subobject, psi: Subobject) -> bool:
    return leq_st(N, phi, psi) and leq_st(N, psi, phi)


def sigma_exists(N: NelsonStructure, f: PsMap, phi: Subobject) -> Subobject:
    A = _over(N, phi)
    if A is not f.source:
        raise AmbientMismatch("predicate is not over the source of the map")
    return exists_along(N.map(f), N.heyting(A).meet(N.sigma(A), phi))


def sigma_forall(N: NelsonStructure, f: PsMap, phi: Subobject) -> Subobject:
    A = _over(N, phi)
    if A is not f.source:
        raise AmbientMismatch("predicate is not over the source of the map")
    return forall_along(N.map(f), N.heyting(A).implies(N.sigma(A), phi))


def standardise(N: NelsonStructure, phi: Subobject) -> Subobject:
    """The standard subobject of ``A`` cut out by ``phi`` on standard elements."""
    A = _over(N, phi)
    d = N.d(A)
    # sigma /\ phi pulled back along the mono d
    cut = phi.mask & N.sigma(A).mask
    return Subobject(A, d.preimage_mask(cut))


def st_exists(N: NelsonStructure, f: PsMap, S: Subobject) -> Subobject:
    if S.ambient is not f.source:
        raise AmbientMismatch("subobject is not over the source of the map")
    return standardise(N, sigma_exists(N, f, N.embed(S)))


def st_forall(N: NelsonStructure, f: PsMap, S: Subobject) -> Subobject:
    if S.ambient is not f.source:
        raise AmbientMismatch("subobject is not over the source of the map")
    return standardise(N, sigma_forall(N, f, N.embed(S)))


# --------------------------------------------------------------- doctrines


class XStarDoctrine(DoctrineIface):
    """External predicates: ``A |-> Sub(A^X/U)`` with reindexing along ``f^X/U``."""

    name = "X*"

    def __init__(self, N: NelsonStructure, family: Sequence[Presheaf] | None = None):
        super().__init__(N.ctx, family if family is not None else N.family)
        self.N = N

    def predicates(self, A):
        return self.N.predicates(A)

    def leq(self, A, p, q):
        return p <= q

    def top(self, A):
        return self.N.heyting(A).top

    def bottom(self, A):
        return self.N.heyting(A).bottom

    def meet(self, A, p, q):
        return self.N.heyting(A).meet(p, q)

    def join(self, A, p, q):
        return self.N.heyting(A).join(p, q)

    def implies(self, A, p, q):
        return self.N.heyting(A).implies(p, q)

    def substitute(self, f, q):
        return substitute(self.N.map(f), q)

    def exists(self, f, p):
        return exists_along(self.N.map(f), p)

    def forall(self, f, p):
        return forall_along(self.N.map(f), p)

    def generic(self):
        Om = self.ctx.omega()
        return Om.obj, self.N.embed(Subobject(Om.obj, Om.truth.image_mask()))


class StDoctrine(DoctrineIface):
    """``Sub^st``: standard subobjects, ordered on standard elements, with the st-quantifiers."""

    name = "Sub^st"

    def __init__(self, N: NelsonStructure, family: Sequence[Presheaf] | None = None):
        super().__init__(N.ctx, family if family is not None else N.family)
        self.N = N

    def predicates(self, A):
        return self.ctx.subobjects(A)

    def leq(self, A, p, q):
        return leq_st(self.N, self.N.embed(p), self.N.embed(q))

    def top(self, A):
        return self.ctx.top(A)

    def bottom(self, A):
        return self.ctx.bottom(A)

    def _lift(self, A, op, p, q):
        N = self.N
        return standardise(N, op(N.embed(p), N.embed(q)))

    def meet(self, A, p, q):
        return self._lift(A, self.N.heyting(A).meet, p, q)

    def join(self, A, p, q):
        return self._lift(A, self.N.heyting(A).join, p, q)

    def implies(self, A, p, q):
        return self._lift(A, self.N.heyting(A).implies, p, q)

    def substitute(self, f, q):
        return substitute(f, q)

    def exists(self, f, p):
        return st_exists(self.N, f, p)

    def forall(self, f, p):
        return st_forall(self.N, f, p)

    def generic(self):
        Om = self.ctx.omega()
        return Om.obj, Subobject(Om.obj, Om.truth.image_mask())


def embedding_transf(N: NelsonStructure) -> HeytingTransf:
    """``i: Sub -> X*`` as a transformation of doctrines."""
    return HeytingTransf(SubDoctrine(N.ctx, N.family), XStarDoctrine(N), lambda A, S: N.embed(S), "i")


@dataclass
class StExport:
    """``Sub^st`` with its inclusion into ``X*``, the splitting, and the internal-predicate view."""

    doctrine: StDoctrine
    inclusion: HeytingTransf
    splitting: Callable[[Subobject], Subobject]
    internal: Callable[[Subobject], Subobject]


def export_subst_doctrine(N: NelsonStructure, family: Sequence[Presheaf] | None = None) -> StExport:
    D = StDoctrine(N, family)
    incl = HeytingTransf(D, XStarDoctrine(N, family), lambda A, S: N.embed(S), "i^st")
    return StExport(D, incl, lambda W: standardise(N, W), N.embed_internal)


__all__ = [
    "CLASSIFY_LIMIT",
    "NelsonStructure",
    "StDoctrine",
    "StExport",
    "XStarDoctrine",
    "build_nelson",
    "check_invariants",
    "check_lax_naturality",
    "corrupt_sigma",
    "embedding_transf",
    "equiv_st",
    "export_subst_doctrine",
    "i_embed",
    "leq_st",
    "sigma",
    "sigma_exists",
    "sigma_forall",
    "standardise",
    "st_exists",
    "st_forall",
]
