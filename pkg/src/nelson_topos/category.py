"""Finite categories, presheaves on them, natural maps and subobjects.

Conventions
-----------
``compose(u, v)`` is ``u . v`` (apply ``v`` first); it is defined when
``cod(v) == dom(u)``. A presheaf ``P`` assigns to ``u: c -> d`` a function
``P(u): P(d) -> P(c)`` stored as a tuple of local indices, so
``P(u . v) = P(v) . P(u)``.

Elements are addressed by *flat* index: objects in declaration order, and
within an object the carrier order. That order is the canonical total
order on elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import ShapeMismatch
from .report import Report


def render(value: Any) -> str:
    """Canonical string form of an element value."""
    if value is None:
        return "_"
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "T" if value else "F"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, tuple):
        return "(" + ",".join(render(v) for v in value) + ")"
    if isinstance(value, frozenset):
        return "{" + ",".join(sorted(render(v) for v in value)) + "}"
    return repr(value)


class FinCategory:
    """A finite category given by its composition table."""

    def __init__(
        self,
        objects: Sequence[str],
        morphisms: Sequence[tuple[str, str, str]],
        compose: Mapping[tuple[str, str], str] | Iterable[Sequence[str]],
        identities: Mapping[str, str],
        name: str = "",
    ):
        self.name = name
        self.objects = tuple(objects)
        self.obj_index = {o: i for i, o in enumerate(self.objects)}
        if len(self.obj_index) != len(self.objects):
            raise ShapeMismatch("duplicate object names")
        self.mor_names = tuple(m[0] for m in morphisms)
        self.mor_index = {m: i for i, m in enumerate(self.mor_names)}
        if len(self.mor_index) != len(self.mor_names):
            raise ShapeMismatch("duplicate morphism names")
        try:
            self.dom = tuple(self.obj_index[m[1]] for m in morphisms)
            self.cod = tuple(self.obj_index[m[2]] for m in morphisms)
            self.ident = tuple(self.mor_index[identities[o]] for o in self.objects)
        except KeyError as exc:
            raise ShapeMismatch(f"unknown name {exc.args[0]!r}") from None

        items = compose.items() if isinstance(compose, Mapping) else ((tuple(t[:2]), t[2]) for t in compose)
        comp: dict[tuple[int, int], int] = {}
        for (u, v), w in items:
            try:
                comp[self.mor_index[u], self.mor_index[v]] = self.mor_index[w]
            except KeyError as exc:
                raise ShapeMismatch(f"unknown morphism {exc.args[0]!r} in composition table") from None
        # identity composites may be left implicit
        for m in range(len(self.mor_names)):
            comp.setdefault((self.ident[self.cod[m]], m), m)
            comp.setdefault((m, self.ident[self.dom[m]]), m)
        self.comp = comp

    def __repr__(self) -> str:
        return f"FinCategory({self.name or '?'}: {len(self.objects)} objects, {len(self.mor_names)} morphisms)"

    def compose(self, u: int, v: int) -> int:
        return self.comp[u, v]

    @cached_property
    def into(self) -> tuple[tuple[int, ...], ...]:
        """Morphisms with codomain ``c``, ordered by (domain, index)."""
        out: list[list[int]] = [[] for _ in self.objects]
        for m in sorted(range(len(self.mor_names)), key=lambda m: (self.dom[m], m)):
            out[self.cod[m]].append(m)
        return tuple(tuple(x) for x in out)

    def hom(self, d: int, c: int) -> tuple[int, ...]:
        return tuple(m for m in self.into[c] if self.dom[m] == d)

    @cached_property
    def is_groupoid(self) -> bool:
        for m in range(len(self.mor_names)):
            d, c = self.dom[m], self.cod[m]
            if not any(
                self.comp.get((m, n)) == self.ident[c] and self.comp.get((n, m)) == self.ident[d]
                for n in self.hom(c, d)
            ):
                return False
        return True

    def describe(self) -> dict[str, Any]:
        return {
            "objects": list(self.objects),
            "morphisms": [
                {"name": self.mor_names[m], "dom": self.objects[self.dom[m]], "cod": self.objects[self.cod[m]]}
                for m in range(len(self.mor_names))
            ],
            "compose": sorted(
                [self.mor_names[u], self.mor_names[v], self.mor_names[w]] for (u, v), w in self.comp.items()
            ),
            "identities": {o: self.mor_names[self.ident[i]] for i, o in enumerate(self.objects)},
        }


class Presheaf:
    """A finite presheaf; compared by identity, canonical data in ``describe``."""

    def __init__(
        self,
        cat: FinCategory,
        carriers: Sequence[Sequence[Hashable]],
        act: Sequence[Sequence[int]],
        name: str = "",
    ):
        if len(carriers) != len(cat.objects):
            raise ShapeMismatch("one carrier per base object required")
        if len(act) != len(cat.mor_names):
            raise ShapeMismatch("one action table per base morphism required")
        self.cat = cat
        self.carriers = tuple(tuple(c) for c in carriers)
        self.act = tuple(tuple(t) for t in act)
        self.name = name
        for m, table in enumerate(self.act):
            if len(table) != len(self.carriers[cat.cod[m]]):
                raise ShapeMismatch(f"action of {cat.mor_names[m]} has wrong length")
            limit = len(self.carriers[cat.dom[m]])
            if any(not 0 <= x < limit for x in table):
                raise ShapeMismatch(f"action of {cat.mor_names[m]} leaves its codomain carrier")

    def __repr__(self) -> str:
        sizes = ",".join(str(len(c)) for c in self.carriers)
        return f"Presheaf({self.name or '?'}: [{sizes}])"

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for c in self.carriers:
            out.append(acc)
            acc += len(c)
        return tuple(out)

    @cached_property
    def size(self) -> int:
        return sum(len(c) for c in self.carriers)

    @cached_property
    def full(self) -> int:
        return (1 << self.size) - 1

    @cached_property
    def stage(self) -> tuple[int, ...]:
        return tuple(c for c, car in enumerate(self.carriers) for _ in car)

    @cached_property
    def local(self) -> tuple[int, ...]:
        return tuple(i for car in self.carriers for i in range(len(car)))

    def flat(self, obj: int, idx: int) -> int:
        return self.offsets[obj] + idx

    def value(self, e: int) -> Hashable:
        return self.carriers[self.stage[e]][self.local[e]]

    def label(self, e: int) -> str:
        return render(self.value(e))

    @cached_property
    def index(self) -> tuple[dict[Hashable, int], ...]:
        return tuple({v: i for i, v in enumerate(car)} for car in self.carriers)

    def lookup(self, obj: int, value: Hashable) -> int:
        """Flat index of ``value`` at stage ``obj``."""
        return self.offsets[obj] + self.index[obj][value]

    def restrict(self, m: int, e: int) -> int:
        """Flat index of ``P(m)(e)``; ``e`` must live at ``cod(m)``."""
        return self.offsets[self.cat.dom[m]] + self.act[m][self.local[e]]

    @cached_property
    def flat_act(self) -> tuple[tuple[int, ...], ...]:
        """Per morphism, flat image of every flat element (-1 off its codomain)."""
        out = []
        for m, table in enumerate(self.act):
            row = [-1] * self.size
            base_c = self.offsets[self.cat.cod[m]]
            base_d = self.offsets[self.cat.dom[m]]
            for i, j in enumerate(table):
                row[base_c + i] = base_d + j
            out.append(tuple(row))
        return tuple(out)

    @cached_property
    def restrictions(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per flat element ``e``, the pairs ``(m, P(m)(e))`` over morphisms into its stage."""
        cat = self.cat
        out = []
        for e in range(self.size):
            c = self.stage[e]
            out.append(tuple((m, self.restrict(m, e)) for m in cat.into[c]))
        return tuple(out)

    @cached_property
    def down(self) -> tuple[int, ...]:
        """Mask of every restriction of each element (contains the element)."""
        return tuple(sum_bits(j for _, j in r) | (1 << e) for e, r in enumerate(self.restrictions))

    def stage_mask(self, obj: int) -> int:
        return ((1 << len(self.carriers[obj])) - 1) << self.offsets[obj]

    def elements(self, mask: int | None = None) -> Iterator[int]:
        if mask is None:
            yield from range(self.size)
        else:
            yield from iter_bits(mask)

    def describe(self) -> dict[str, Any]:
        cat = self.cat
        action = {}
        for m, table in enumerate(self.act):
            if m in cat.ident:
                continue
            c, d = cat.cod[m], cat.dom[m]
            action[cat.mor_names[m]] = {
                render(self.carriers[c][i]): render(self.carriers[d][j]) for i, j in enumerate(table)
            }
        return {
            "carrier": {o: [render(v) for v in self.carriers[i]] for i, o in enumerate(cat.objects)},
            "action": action,
        }


def sum_bits(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class Subobject:
    """A subfunctor of ``ambient``, stored as a mask over flat elements.

    Equality is structural: same ambient (by identity) and same mask.
    """

    ambient: Presheaf
    mask: int

    def __le__(self, other: "Subobject") -> bool:
        _same(self, other)
        return self.mask & ~other.mask == 0

    def __lt__(self, other: "Subobject") -> bool:
        return self <= other and self.mask != other.mask

    def __contains__(self, e: int) -> bool:
        return bool((self.mask >> e) & 1)

    @property
    def is_top(self) -> bool:
        return self.mask == self.ambient.full

    @property
    def is_bottom(self) -> bool:
        return self.mask == 0

    def elements(self) -> list[int]:
        return list(iter_bits(self.mask))

    def __len__(self) -> int:
        return popcount(self.mask)

    def parts(self) -> dict[str, list[str]]:
        P = self.ambient
        out: dict[str, list[str]] = {o: [] for o in P.cat.objects}
        for e in iter_bits(self.mask):
            out[P.cat.objects[P.stage[e]]].append(P.label(e))
        return out

    def is_subfunctor(self) -> bool:
        down = self.ambient.down
        return all(down[e] & ~self.mask == 0 for e in iter_bits(self.mask))

    def describe(self) -> dict[str, Any]:
        return {"of": self.ambient.name or "?", "parts": self.parts()}

    def __repr__(self) -> str:
        return f"Subobject({self.ambient.name or '?'}, {self.parts()})"


def _same(a: Subobject, b: Subobject) -> None:
    if a.ambient is not b.ambient:
        from .errors import AmbientMismatch

        raise AmbientMismatch(f"{a.ambient!r} vs {b.ambient!r}")


@dataclass(frozen=True)
class PsMap:
    """A natural family of functions; ``comps[c][i]`` is the image of local ``i``."""

    source: Presheaf
    target: Presheaf
    comps: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        if self.source.cat is not self.target.cat:
            raise ShapeMismatch("maps must stay over one base category")
        for c, comp in enumerate(self.comps):
            if len(comp) != len(self.source.carriers[c]):
                raise ShapeMismatch(f"component at {self.source.cat.objects[c]} has wrong length")
            limit = len(self.target.carriers[c])
            if any(not 0 <= x < limit for x in comp):
                raise ShapeMismatch("component leaves target carrier")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PsMap):
            return NotImplemented
        return self.source is other.source and self.target is other.target and self.comps == other.comps

    def __hash__(self) -> int:
        return hash((id(self.source), id(self.target), self.comps))

    @classmethod
    def from_flat(cls, source: Presheaf, target: Presheaf, flat: Sequence[int], name: str = "") -> "PsMap":
        comps = []
        for c in range(len(source.carriers)):
            off_s, off_t = source.offsets[c], target.offsets[c]
            comps.append(tuple(flat[off_s + i] - off_t for i in range(len(source.carriers[c]))))
        return cls(source, target, tuple(comps), name)

    @classmethod
    def from_function(
        cls, source: Presheaf, target: Presheaf, fn: Callable[[int], int], name: str = ""
    ) -> "PsMap":
        """Build from a function on flat indices."""
        return cls.from_flat(source, target, [fn(e) for e in range(source.size)], name)

    @classmethod
    def identity(cls, P: Presheaf) -> "PsMap":
        return cls(P, P, tuple(tuple(range(len(c))) for c in P.carriers), "id")

    @cached_property
    def flat(self) -> tuple[int, ...]:
        out = []
        for c, comp in enumerate(self.comps):
            off = self.target.offsets[c]
            out.extend(off + j for j in comp)
        return tuple(out)

    def __call__(self, e: int) -> int:
        return self.flat[e]

    def then(self, g: "PsMap") -> "PsMap":
        """``g . self``."""
        if g.source is not self.target:
            raise ShapeMismatch("maps are not composable")
        return PsMap(
            self.source,
            g.target,
            tuple(tuple(gc[j] for j in fc) for fc, gc in zip(self.comps, g.comps)),
        )

    def image_mask(self, mask: int | None = None) -> int:
        flat = self.flat
        return sum_bits(flat[e] for e in (range(self.source.size) if mask is None else iter_bits(mask)))

    def preimage_mask(self, mask: int) -> int:
        return sum_bits(e for e, t in enumerate(self.flat) if (mask >> t) & 1)

    @cached_property
    def fibers(self) -> tuple[int, ...]:
        """Per target element, mask of its preimage."""
        out = [0] * self.target.size
        for e, t in enumerate(self.flat):
            out[t] |= 1 << e
        return tuple(out)

    @property
    def is_mono(self) -> bool:
        return len(set(self.flat)) == len(self.flat)

    @property
    def is_epi(self) -> bool:
        return len(set(self.flat)) == self.target.size

    @property
    def is_iso(self) -> bool:
        return self.is_mono and self.is_epi

    def inverse(self) -> "PsMap":
        if not self.is_iso:
            raise ShapeMismatch("map is not invertible")
        inv = [0] * self.target.size
        for e, t in enumerate(self.flat):
            inv[t] = e
        return PsMap.from_flat(self.target, self.source, inv)

    def describe(self) -> dict[str, Any]:
        S, T, cat = self.source, self.target, self.source.cat
        return {
            "source": S.name or "?",
            "target": T.name or "?",
            "components": {
                cat.objects[c]: {render(S.carriers[c][i]): render(T.carriers[c][j]) for i, j in enumerate(comp)}
                for c, comp in enumerate(self.comps)
            },
        }

    def __repr__(self) -> str:
        return f"PsMap({self.source.name or '?'} -> {self.target.name or '?'})"


# --------------------------------------------------------------------------
# validation


def validate(item: FinCategory | Presheaf | PsMap) -> Report:
    """Exhaustive law check; the report has no violations iff ``item`` is valid."""
    if isinstance(item, FinCategory):
        return _validate_category(item)
    if isinstance(item, Presheaf):
        return _validate_presheaf(item)
    if isinstance(item, PsMap):
        return _validate_map(item)
    raise TypeError(f"cannot validate {type(item).__name__}")


def _validate_category(cat: FinCategory) -> Report:
    rep = Report(f"validate category {cat.name or '?'}")
    names, n = cat.mor_names, len(cat.mor_names)
    typing = rep.law("composition typed")
    defined = rep.law("composition defined exactly on composable pairs")
    for (u, v), w in sorted(cat.comp.items()):
        composable = cat.cod[v] == cat.dom[u]
        defined.check(composable, pair=[names[u], names[v]])
        if composable:
            typing.check(
                cat.dom[w] == cat.dom[v] and cat.cod[w] == cat.cod[u],
                pair=[names[u], names[v]],
                result=names[w],
            )
    for u in range(n):
        for v in range(n):
            if cat.cod[v] == cat.dom[u]:
                defined.check((u, v) in cat.comp, pair=[names[u], names[v]], missing=True)
    ident = rep.law("identity typed")
    for c, i in enumerate(cat.ident):
        ident.check(cat.dom[i] == c and cat.cod[i] == c, object=cat.objects[c], identity=names[i])
    unit = rep.law("identity laws")
    for m in range(n):
        unit.check(
            cat.comp.get((cat.ident[cat.cod[m]], m)) == m and cat.comp.get((m, cat.ident[cat.dom[m]])) == m,
            morphism=names[m],
        )
    assoc = rep.law("associativity")
    comp = cat.comp
    for (u, v), uv in comp.items():
        if cat.cod[v] != cat.dom[u]:
            continue
        for w in range(n):
            if cat.cod[w] != cat.dom[v]:
                continue
            vw = comp.get((v, w))
            left = comp.get((uv, w))
            right = comp.get((u, vw)) if vw is not None else None
            assoc.check(
                left is not None and left == right,
                triple=[names[u], names[v], names[w]],
            )
    return rep


def _validate_presheaf(P: Presheaf) -> Report:
    cat = P.cat
    rep = Report(f"validate presheaf {P.name or '?'}")
    names = cat.mor_names
    ident = rep.law("action(identity) = identity")
    for c, i in enumerate(cat.ident):
        for x, y in enumerate(P.act[i]):
            ident.check(x == y, object=cat.objects[c], element=render(P.carriers[c][x]))
    func = rep.law("functoriality")
    for (u, v), uv in sorted(cat.comp.items()):
        if cat.cod[v] != cat.dom[u]:
            continue
        d = cat.cod[u]
        for x in range(len(P.carriers[d])):
            lhs = P.act[uv][x]
            rhs = P.act[v][P.act[u][x]]
            func.check(
                lhs == rhs,
                pair=[names[u], names[v]],
                element=render(P.carriers[d][x]),
                composite=render(P.carriers[cat.dom[v]][lhs]),
                stepwise=render(P.carriers[cat.dom[v]][rhs]),
            )
    return rep


def _validate_map(f: PsMap) -> Report:
    S, T, cat = f.source, f.target, f.source.cat
    rep = Report(f"validate map {f.name or '?'}")
    nat = rep.law("naturality")
    for m in range(len(cat.mor_names)):
        c, d = cat.cod[m], cat.dom[m]
        for x in range(len(S.carriers[c])):
            lhs = f.comps[d][S.act[m][x]]
            rhs = T.act[m][f.comps[c][x]]
            nat.check(lhs == rhs, morphism=cat.mor_names[m], element=render(S.carriers[c][x]))
    return rep
