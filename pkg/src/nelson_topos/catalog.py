"""Standard base categories and small presheaves used by tests and the CLI."""

from __future__ import annotations

import itertools
from typing import Hashable, Mapping, Sequence

from .category import FinCategory, Presheaf, validate
from .errors import ShapeMismatch
from .topos import ToposCtx


def terminal_category() -> FinCategory:
    """One object, one morphism: presheaves are finite sets."""
    return FinCategory(["*"], [("id", "*", "*")], {}, {"*": "id"}, name="1")


def group_category(elements: Sequence[str], table: Sequence[Sequence[str]], name: str = "G") -> FinCategory:
    """One-object category of a group; ``table[i][j]`` is ``elements[i] * elements[j]``."""
    elements = list(elements)
    if len(table) != len(elements) or any(len(row) != len(elements) for row in table):
        raise ShapeMismatch("group table must be square")
    unit = [
        g
        for i, g in enumerate(elements)
        if all(table[i][j] == h and table[j][i] == h for j, h in enumerate(elements))
    ]
    if len(unit) != 1:
        raise ShapeMismatch("group table has no unique neutral element")
    comp = {(g, h): table[i][j] for i, g in enumerate(elements) for j, h in enumerate(elements)}
    return FinCategory(["*"], [(g, "*", "*") for g in elements], comp, {"*": unit[0]}, name=name)


def cyclic_group(n: int) -> FinCategory:
    names = ["e"] + [f"g{k}" if n > 2 else "g" for k in range(1, n)]
    table = [[names[(i + j) % n] for j in range(n)] for i in range(n)]
    return group_category(names, table, name=f"Z/{n}")


def arrow_category() -> FinCategory:
    """``0 -u-> 1``; a presheaf is a function ``X(1) -> X(0)``."""
    return FinCategory(
        ["0", "1"],
        [("id0", "0", "0"), ("id1", "1", "1"), ("u", "0", "1")],
        {},
        {"0": "id0", "1": "id1"},
        name="arrow",
    )


def groupoid_pair() -> FinCategory:
    """Two isomorphic objects ``a``, ``b`` with the iso ``f: a -> b`` and inverse ``g``."""
    return FinCategory(
        ["a", "b"],
        [("ida", "a", "a"), ("idb", "b", "b"), ("f", "a", "b"), ("g", "b", "a")],
        {("f", "g"): "idb", ("g", "f"): "ida"},
        {"a": "ida", "b": "idb"},
        name="groupoid2",
    )


def finite_set(ctx: ToposCtx, n: int | Sequence[Hashable], name: str = "") -> Presheaf:
    """A constant presheaf (every morphism acts as the identity)."""
    elems = [f"x{i}" for i in range(n)] if isinstance(n, int) else list(n)
    cat = ctx.base
    if len(cat.objects) != 1 and any(cat.dom[m] != cat.cod[m] for m in range(len(cat.mor_names))):
        # constant presheaf over a multi-object base: same set everywhere
        pass
    carriers = [elems] * len(cat.objects)
    act = [list(range(len(elems)))] * len(cat.mor_names)
    return Presheaf(cat, carriers, act, name or f"{len(elems)}")


def group_set(ctx: ToposCtx, elems: Sequence[Hashable], action: Mapping[str, Mapping], name: str = "") -> Presheaf:
    """Right G-set on a one-object base; ``action[g][x]`` is ``x . g`` (identity may be omitted)."""
    cat = ctx.base
    if len(cat.objects) != 1:
        raise ShapeMismatch("group sets need a one-object base")
    elems = list(elems)
    pos = {x: i for i, x in enumerate(elems)}
    act = []
    for m, g in enumerate(cat.mor_names):
        if m == cat.ident[0] and g not in action:
            act.append(list(range(len(elems))))
        else:
            act.append([pos[action[g][x]] for x in elems])
    P = Presheaf(cat, [elems], act, name or "X")
    if not validate(P).passed:
        raise ShapeMismatch("action table is not a group action")
    return P


def regular(ctx: ToposCtx, name: str = "G") -> Presheaf:
    """The regular right action of a group on itself (the representable)."""
    y = ctx.representable(0)
    return Presheaf(ctx.base, y.carriers, y.act, name)


def all_presheaves(ctx: ToposCtx, max_size: int) -> list[Presheaf]:
    """Every presheaf of total size ``<= max_size`` up to isomorphism, canonically ordered."""
    cat = ctx.base
    n_obj = len(cat.objects)
    free = [m for m in range(len(cat.mor_names)) if m not in cat.ident]
    seen: set = set()
    out: list[Presheaf] = []
    for total in range(max_size + 1):
        for sizes in _compositions(total, n_obj):
            spaces = [itertools.product(range(sizes[cat.dom[m]]), repeat=sizes[cat.cod[m]]) for m in free]
            for choice in itertools.product(*[list(s) for s in spaces]):
                table: dict[int, tuple[int, ...]] = dict(zip(free, choice))
                act = [table.get(m, tuple(range(sizes[cat.cod[m]]))) for m in range(len(cat.mor_names))]
                if not _functorial(cat, act):
                    continue
                key = _canonical(cat, sizes, act)
                if key in seen:
                    continue
                seen.add(key)
                carriers = [[f"{cat.objects[c]}{i}" if n_obj > 1 else f"x{i}" for i in range(sizes[c])] for c in range(n_obj)]
                name = "P" + "_".join(str(s) for s in sizes) + f"#{len(out)}"
                out.append(Presheaf(cat, carriers, act, name))
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def _functorial(cat: FinCategory, act) -> bool:
    for (u, v), uv in cat.comp.items():
        if cat.cod[v] != cat.dom[u]:
            continue
        au, av, auv = act[u], act[v], act[uv]
        if any(auv[x] != av[au[x]] for x in range(len(au))):
            return False
    return True


def _canonical(cat: FinCategory, sizes, act) -> tuple:
    best = None
    for perms in itertools.product(*[itertools.permutations(range(s)) for s in sizes]):
        inv = [None] * len(perms)
        for c, p in enumerate(perms):
            q = [0] * len(p)
            for i, j in enumerate(p):
                q[j] = i
            inv[c] = q
        # relabel: new index of old element i at stage c is perms[c][i]
        new = []
        for m, table in enumerate(act):
            d, c = cat.dom[m], cat.cod[m]
            new.append(tuple(perms[d][table[inv[c][x]]] for x in range(sizes[c])))
        key = (tuple(sizes), tuple(new))
        if best is None or key < best:
            best = key
    return best


BASES = {
    "terminal": terminal_category,
    "Z/2": lambda: cyclic_group(2),
    "Z/3": lambda: cyclic_group(3),
    "arrow": arrow_category,
    "groupoid2": groupoid_pair,
}
