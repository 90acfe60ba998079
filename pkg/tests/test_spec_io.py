from __future__ import annotations

import json
from pathlib import Path

import pytest

from nelson_topos.category import validate
from nelson_topos.errors import SpecError
from nelson_topos.spec_io import dumps_workspace, load_spec

SPECS = Path(__file__).resolve().parent.parent / "specs"


@pytest.mark.parametrize("path", sorted(SPECS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_specs_load(path):
    ws = load_spec(path)
    assert ws.ctx.base.objects


def test_group_spec_builds_the_declared_action():
    ws = load_spec(SPECS / "z2_fixed_point.json")
    X = ws.presheaf("X")
    assert validate(X).passed
    g = ws.ctx.base.mor_index["g"]
    assert [X.label(X.restrict(g, e)) for e in range(3)] == ["o", "r", "l"]
    U = ws.filter("U")
    assert U.point is not None and X.label(U.point.flat[0]) == "o"


def test_derived_presheaves():
    spec = {
        "base": "Z/2",
        "presheaves": {
            "G": {"regular": True},
            "one": {"terminal": True},
            "Om": {"omega": True},
            "GG": {"product": ["G", "G"]},
            "PG": {"power": "G"},
            "Gt": {"partial": "G"},
            "KG": {"kfinite": "G"},
        },
    }
    ws = load_spec(spec)
    sizes = {k: v.size for k, v in ws.presheaves.items()}
    assert sizes == {"G": 2, "one": 1, "Om": 2, "GG": 4, "PG": 4, "Gt": 3, "KG": 4}


def test_maps_and_subobjects():
    spec = {
        "base": "terminal",
        "presheaves": {"A": {"set": ["a", "b"]}, "B": {"set": ["c"]}},
        "maps": {"f": {"from": "A", "to": "B", "components": {"*": {"a": "c", "b": "c"}}}},
        "subobjects": {"S": {"of": "A", "elements": {"*": ["b"]}}, "T": {"of": "A", "all": True}},
    }
    ws = load_spec(spec)
    assert ws.maps["f"].flat == (0, 0)
    assert ws.subobject("S").mask == 0b10 and ws.subobject("T").is_top


def test_filters_by_generators_and_enumeration():
    spec = {
        "base": "terminal",
        "presheaves": {"X": {"set": 3}},
        "subobjects": {"S": {"of": "X", "elements": {"*": ["x1", "x2"]}}},
        "ultrafilters": {
            "F": {"on": "X", "generated_by": ["S"], "kind": "filter"},
            "V": {"on": "X", "generated_by": ["S"], "extend": True},
            "W": {"on": "X", "enumerated": 2},
        },
    }
    ws = load_spec(spec)
    assert ws.filter("F").point is None
    assert ws.filter("V").point.flat == (1,)
    assert ws.filter("W").point.flat == (2,)
    assert ws.filter_kinds == {"F": "filter", "V": "ultrafilter", "W": "ultrafilter"}


@pytest.mark.parametrize(
    "spec, fragment",
    [
        ({"base": "terminal", "bogus": 1}, "unknown top-level"),
        ({}, "missing key 'base'"),
        ({"base": "nowhere"}, "unknown catalog base"),
        ({"base": "terminal", "budget": 0}, "budget"),
        ({"base": "terminal", "presheaves": {"A": {"shape": 1}}}, "unrecognised form"),
        ({"base": "terminal", "presheaves": {"A": {"product": ["B"]}}}, "unknown presheaf"),
        ({"base": "terminal", "presheaves": {"A": {"set": 1}}, "subobjects": {"S": {"of": "A", "elements": {"*": ["z"]}}}}, "no element"),
        ({"base": "terminal", "presheaves": {"A": {"set": 1}}, "ultrafilters": {"U": {"on": "A"}}}, "needs principal_at"),
        ({"base": "terminal", "presheaves": {"A": {"set": 1}}, "ultrafilters": {"U": {"on": "A", "enumerated": 3}}}, "out of range"),
        ({"base": "terminal", "nelson": {"X": "A"}}, "missing key 'ultrafilter'"),
        ({"base": "terminal", "nelson": {"X": "A", "ultrafilter": "U", "colour": 1}}, "unknown keys"),
        ({"base": "Z/2", "presheaves": {"A": {"carrier": {"*": [0, 1]}, "action": {"h": {}}}}}, "unknown morphism"),
        (
            {"base": "terminal", "presheaves": {"A": {"set": 1}}, "maps": {"f": {"from": "A", "to": "A", "components": {"*": {}}}}},
            "no image",
        ),
    ],
)
def test_malformed_specs_are_rejected(spec, fragment):
    with pytest.raises(SpecError) as info:
        load_spec(spec)
    assert fragment in str(info.value)


def test_unreadable_and_invalid_files(tmp_path):
    with pytest.raises(SpecError):
        load_spec(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"base": "terminal",\n  oops}')
    with pytest.raises(SpecError) as info:
        load_spec(bad)
    assert "line 2" in str(info.value)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(SpecError):
        load_spec(arr)


def test_dump_is_canonical_and_stable():
    a = dumps_workspace(load_spec(SPECS / "z2_fixed_point.json"))
    b = dumps_workspace(load_spec(SPECS / "z2_fixed_point.json"))
    assert a == b
    data = json.loads(a)
    assert list(data["presheaves"]) == sorted(data["presheaves"])


def test_budget_override():
    ws = load_spec(SPECS / "big_power.json", budget=100)
    assert ws.ctx.budget == 100
