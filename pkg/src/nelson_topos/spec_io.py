"""Loading topos specification files (JSON) into a workspace, and canonical dumps.

Layout::

    {
      "base": {"objects": [...], "morphisms": [{"name", "dom", "cod"}, ...],
               "compose": [["u", "v", "uv"], ...], "identities": {obj: mor}}
            | {"group": {"elements": [...], "table": [[...], ...]}}
            | {"catalog": "terminal" | "Z/2" | "Z/3" | "arrow" | "groupoid2"},
      "presheaves": {name: {"carrier": {obj: [...]}, "action": {mor: {elem: elem}}}
                         | {"set": n | [...]} | {"regular": true} | {"representable": obj}
                         | {"terminal": true} | {"omega": true} | {"product": [names]}
                         | {"coproduct": [names]} | {"power": name} | {"kfinite": name}
                         | {"partial": name}},
      "maps": {name: {"from": P, "to": Q, "components": {obj: {elem: elem}}}},
      "subobjects": {name: {"of": P, "elements": {obj: [...]}} | {"of": P, "all": true}},
      "ultrafilters": {name: {"on": X, "principal_at": {obj: elem}}
                           | {"on": X, "generated_by": [subobject names], "extend": bool}
                           | {"on": X, "enumerated": k}},
      "nelson": {"X": name, "ultrafilter": name, "object_family": [...], "path": "auto",
                 "require_ultra": true, "fixture": "corrupt-sigma",
                 "idealisation": [{"A": name, "B": name, "R": subobject name}]},
      "adequate": {"B": name, "A": [names]},
      "budget": n
    }

A morphism action that is omitted sends each element to the element with
the same label. ``"ultrafilter"`` (singular) declares a filter named ``U``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import catalog
from .category import FinCategory, Presheaf, PsMap, Subobject, render, validate
from .errors import ShapeMismatch, SpecError
from .report import canonical_json
from .topos import DEFAULT_BUDGET, ToposCtx
from .ultra import (
    InternalFilter,
    enumerate_internal_ultrafilters,
    extend_to_ultrafilter,
    generated_filter,
    k_finite_object,
    principal_ultrafilter,
)

TOP_KEYS = {"base", "presheaves", "maps", "subobjects", "ultrafilters", "ultrafilter", "nelson", "adequate", "budget", "name"}
NELSON_KEYS = {"X", "ultrafilter", "object_family", "path", "require_ultra", "fixture", "idealisation", "verify"}
ADEQUATE_KEYS = {"B", "A", "object_family"}
#: default family members (declared objects, their products and powers) are kept up to this size
FAMILY_SIZE_LIMIT = 3


@dataclass
class Workspace:
    ctx: ToposCtx
    name: str = ""
    presheaves: dict[str, Presheaf] = field(default_factory=dict)
    maps: dict[str, PsMap] = field(default_factory=dict)
    subobjects: dict[str, Subobject] = field(default_factory=dict)
    filters: dict[str, InternalFilter] = field(default_factory=dict)
    filter_kinds: dict[str, str] = field(default_factory=dict)
    nelson: dict[str, Any] | None = None
    adequate: dict[str, Any] | None = None
    raw: dict[str, Any] = field(default_factory=dict)

    def presheaf(self, name: str) -> Presheaf:
        try:
            return self.presheaves[name]
        except KeyError:
            raise SpecError(f"unknown presheaf {name!r}") from None

    def subobject(self, name: str) -> Subobject:
        try:
            return self.subobjects[name]
        except KeyError:
            raise SpecError(f"unknown subobject {name!r}") from None

    def filter(self, name: str) -> InternalFilter:
        try:
            return self.filters[name]
        except KeyError:
            raise SpecError(f"unknown ultrafilter {name!r}") from None

    def default_family(self) -> list[Presheaf]:
        """Declared objects plus their binary products and power objects, within the size limit."""
        ctx = self.ctx
        declared = [P for P in self.presheaves.values() if P.size <= FAMILY_SIZE_LIMIT]
        out: list[Presheaf] = [ctx.terminal()]
        for P in declared:
            if P not in out:
                out.append(P)
        for P in declared:
            for Q in declared:
                if P.size * Q.size <= FAMILY_SIZE_LIMIT:
                    R = ctx.product(P, Q).obj
                    if R not in out:
                        out.append(R)
            if 2**P.size <= 2 * FAMILY_SIZE_LIMIT:
                pw = ctx.power(P).obj
                if pw.size <= FAMILY_SIZE_LIMIT and pw not in out:
                    out.append(pw)
        return out

    def family(self, names: list[str] | None) -> list[Presheaf]:
        if names is None:
            return self.default_family()
        fam = [self.ctx.terminal()]
        for n in names:
            P = self.presheaf(n)
            if P not in fam:
                fam.append(P)
        return fam


# ------------------------------------------------------------------ loading


def _need(obj: Mapping, key: str, where: str) -> Any:
    if not isinstance(obj, Mapping) or key not in obj:
        raise SpecError(f"{where}: missing key {key!r}")
    return obj[key]


def _mapping(value: Any, where: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise SpecError(f"{where}: expected an object")
    return value


def _list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise SpecError(f"{where}: expected a list")
    return value


def read_spec(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise SpecError(f"cannot read {path}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: invalid JSON at line {err.lineno} column {err.colno}") from None
    if not isinstance(data, dict):
        raise SpecError(f"{path}: top level must be an object")
    return data


def load_spec(source: str | Path | Mapping[str, Any], budget: int | None = None) -> Workspace:
    """Build a workspace; malformed input raises :class:`SpecError`."""
    data = dict(source) if isinstance(source, Mapping) else read_spec(source)
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise SpecError(f"unknown top-level keys: {sorted(unknown)}")
    if budget is None:
        budget = data.get("budget", DEFAULT_BUDGET)
    if not isinstance(budget, int) or isinstance(budget, bool) or budget <= 0:
        raise SpecError("budget must be a positive integer")
    try:
        cat = _load_base(_need(data, "base", "spec"))
        ws = Workspace(ToposCtx(cat, budget), name=str(data.get("name", "")), raw=data)
        for name, body in _mapping(data.get("presheaves", {}), "presheaves").items():
            P = _load_presheaf(ws, name, body)
            ws.presheaves[name] = P
        for name, body in _mapping(data.get("maps", {}), "maps").items():
            ws.maps[name] = _load_map(ws, name, body)
        for name, body in _mapping(data.get("subobjects", {}), "subobjects").items():
            ws.subobjects[name] = _load_subobject(ws, name, body)
        filters = dict(_mapping(data.get("ultrafilters", {}), "ultrafilters"))
        if "ultrafilter" in data:
            filters.setdefault("U", data["ultrafilter"])
        for name, body in filters.items():
            ws.filters[name] = _load_filter(ws, name, body)
            ws.filter_kinds[name] = str(_mapping(body, f"ultrafilter {name}").get("kind", "ultrafilter"))
        if "nelson" in data:
            ws.nelson = _check_keys(_mapping(data["nelson"], "nelson"), NELSON_KEYS, "nelson")
            _need(ws.nelson, "X", "nelson")
            _need(ws.nelson, "ultrafilter", "nelson")
        if "adequate" in data:
            ws.adequate = _check_keys(_mapping(data["adequate"], "adequate"), ADEQUATE_KEYS, "adequate")
            _need(ws.adequate, "B", "adequate")
    except SpecError:
        raise
    except (ShapeMismatch, KeyError, TypeError, ValueError, IndexError) as err:
        raise SpecError(f"malformed spec: {err}") from None
    return ws


def _check_keys(obj: Mapping, allowed: set[str], where: str) -> dict:
    unknown = set(obj) - allowed
    if unknown:
        raise SpecError(f"{where}: unknown keys {sorted(unknown)}")
    return dict(obj)


def _load_base(body: Any) -> FinCategory:
    if isinstance(body, str):
        body = {"catalog": body}
    body = _mapping(body, "base")
    if "catalog" in body:
        try:
            return catalog.BASES[body["catalog"]]()
        except KeyError:
            raise SpecError(f"unknown catalog base {body['catalog']!r}; known: {sorted(catalog.BASES)}") from None
    if "group" in body:
        g = _mapping(body["group"], "base.group")
        return catalog.group_category(
            [str(e) for e in _list(_need(g, "elements", "base.group"), "elements")],
            [[str(x) for x in _list(row, "table row")] for row in _list(_need(g, "table", "base.group"), "table")],
            name=str(g.get("name", "G")),
        )
    objects = [str(o) for o in _list(_need(body, "objects", "base"), "base.objects")]
    morphisms = []
    for m in _list(_need(body, "morphisms", "base"), "base.morphisms"):
        m = _mapping(m, "morphism")
        morphisms.append((str(_need(m, "name", "morphism")), str(_need(m, "dom", "morphism")), str(_need(m, "cod", "morphism"))))
    compose = []
    for t in _list(body.get("compose", []), "base.compose"):
        t = _list(t, "composition entry")
        if len(t) != 3:
            raise SpecError("composition entries are [u, v, u.v]")
        compose.append([str(x) for x in t])
    identities = {str(k): str(v) for k, v in _mapping(_need(body, "identities", "base"), "identities").items()}
    return FinCategory(objects, morphisms, compose, identities, name=str(body.get("name", "C")))


def _obj_index(cat: FinCategory, name: str) -> int:
    try:
        return cat.obj_index[str(name)]
    except KeyError:
        raise SpecError(f"unknown base object {name!r}") from None


def _position(carrier, label: Any, where: str) -> int:
    key = str(label)
    for i, v in enumerate(carrier):
        if str(v) == key or render(v) == key:
            return i
    raise SpecError(f"{where}: no element {label!r}")


def _elem(P: Presheaf, c: int, label: Any) -> int:
    """Local index of the element labelled ``label`` at stage ``c``."""
    return _position(P.carriers[c], label, f"{P.name or '?'} at {P.cat.objects[c]}")


def _load_presheaf(ws: Workspace, name: str, body: Any) -> Presheaf:
    ctx = ws.ctx
    cat = ctx.base
    body = _mapping(body, f"presheaf {name}")
    if "carrier" in body:
        carrier = _mapping(body["carrier"], f"presheaf {name}.carrier")
        carriers = [[v for v in _list(carrier.get(o, []), f"carrier of {o}")] for o in cat.objects]
        for o in carrier:
            _obj_index(cat, o)
        action = _mapping(body.get("action", {}), f"presheaf {name}.action")
        for m in action:
            if m not in cat.mor_index:
                raise SpecError(f"presheaf {name}: unknown morphism {m!r}")
        act = []
        for m, mname in enumerate(cat.mor_names):
            d, c = cat.dom[m], cat.cod[m]
            table = _mapping(action.get(mname, {}), f"action of {mname}")
            act.append([_position(carriers[d], table.get(str(x), x), f"{name} at {cat.objects[d]}") for x in carriers[c]])
        return Presheaf(cat, carriers, act, name)
    if "set" in body:
        n = body["set"]
        return catalog.finite_set(ctx, n if isinstance(n, int) else [v for v in _list(n, "set")], name)
    if body.get("regular"):
        return catalog.regular(ctx, name)
    if "representable" in body:
        y = ctx.representable(_obj_index(cat, body["representable"]))
        return Presheaf(cat, y.carriers, y.act, name)
    if body.get("terminal"):
        return ctx.terminal()
    if body.get("omega"):
        return ctx.omega().obj
    if "product" in body:
        return ctx.product(*[ws.presheaf(n) for n in _list(body["product"], "product")]).obj
    if "coproduct" in body:
        P, _ = ctx.coproduct(*[ws.presheaf(n) for n in _list(body["coproduct"], "coproduct")])
        P.name = name
        return P
    if "power" in body:
        return ctx.power(ws.presheaf(body["power"])).obj
    if "kfinite" in body:
        return k_finite_object(ctx, ws.presheaf(body["kfinite"])).obj
    if "partial" in body:
        return ctx.representer(ws.presheaf(body["partial"])).obj
    raise SpecError(f"presheaf {name}: unrecognised form {sorted(body)}")


def _load_map(ws: Workspace, name: str, body: Any) -> PsMap:
    body = _mapping(body, f"map {name}")
    S, T = ws.presheaf(_need(body, "from", f"map {name}")), ws.presheaf(_need(body, "to", f"map {name}"))
    comps_in = _mapping(_need(body, "components", f"map {name}"), f"map {name}.components")
    cat = ws.ctx.base
    comps = []
    for c, o in enumerate(cat.objects):
        table = _mapping(comps_in.get(o, {}), f"map {name} at {o}")
        row = []
        for i, x in enumerate(S.carriers[c]):
            if str(x) not in table:
                raise SpecError(f"map {name}: no image for {x!r} at {o}")
            row.append(_elem(T, c, table[str(x)]))
        comps.append(tuple(row))
    return PsMap(S, T, tuple(comps), name)


def _load_subobject(ws: Workspace, name: str, body: Any) -> Subobject:
    body = _mapping(body, f"subobject {name}")
    P = ws.presheaf(_need(body, "of", f"subobject {name}"))
    if body.get("all"):
        return Subobject(P, P.full)
    elems = _mapping(body.get("elements", {}), f"subobject {name}.elements")
    cat = ws.ctx.base
    mask = 0
    for o, xs in elems.items():
        c = _obj_index(cat, o)
        for x in _list(xs, f"subobject {name} at {o}"):
            mask |= 1 << (P.offsets[c] + _elem(P, c, x))
    return Subobject(P, mask)


def _load_filter(ws: Workspace, name: str, body: Any) -> InternalFilter:
    body = _mapping(body, f"ultrafilter {name}")
    ctx = ws.ctx
    X = ws.presheaf(_need(body, "on", f"ultrafilter {name}"))
    if "principal_at" in body:
        at = _mapping(body["principal_at"], f"ultrafilter {name}.principal_at")
        cat = ctx.base
        comps = []
        for c, o in enumerate(cat.objects):
            if o not in at:
                raise SpecError(f"ultrafilter {name}: principal point needs a component at {o}")
            comps.append((_elem(X, c, at[o]),))
        x = PsMap(ctx.terminal(), X, tuple(comps), f"{name}-point")
        if not validate(x).passed:
            raise SpecError(f"ultrafilter {name}: the point is not a global element")
        return principal_ultrafilter(ctx, x, name)
    if "generated_by" in body:
        gens = [ws.subobject(n) for n in _list(body["generated_by"], "generated_by")]
        F = generated_filter(ctx, X, gens, name)
        return extend_to_ultrafilter(ctx, F) if body.get("extend") else F
    if "enumerated" in body:
        k = body["enumerated"]
        found = enumerate_internal_ultrafilters(ctx, X)
        if not isinstance(k, int) or not 0 <= k < len(found):
            raise SpecError(f"ultrafilter {name}: index {k!r} out of range ({len(found)} ultrafilters)")
        U = found[k]
        U.name = name
        return U
    raise SpecError(f"ultrafilter {name}: needs principal_at, generated_by or enumerated")


# ----------------------------------------------------------------- dumping


def dump_workspace(ws: Workspace) -> dict[str, Any]:
    """Canonical description of everything declared."""
    return {
        "base": ws.ctx.base.describe(),
        "presheaves": {k: v.describe() for k, v in sorted(ws.presheaves.items())},
        "maps": {k: v.describe() for k, v in sorted(ws.maps.items())},
        "subobjects": {k: {"of": v.ambient.name or "?", "parts": v.parts()} for k, v in sorted(ws.subobjects.items())},
        "ultrafilters": {k: v.describe() for k, v in sorted(ws.filters.items())},
    }


def dumps_workspace(ws: Workspace) -> str:
    return canonical_json(dump_workspace(ws))


__all__ = [
    "FAMILY_SIZE_LIMIT",
    "Workspace",
    "dump_workspace",
    "dumps_workspace",
    "load_spec",
    "read_spec",
]
