from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from nelson_topos.cli import main

SPECS = Path(__file__).resolve().parent.parent / "specs"


def run(capsys, *args: str) -> tuple[int, str, str]:
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def spec(name: str) -> str:
    return str(SPECS / f"{name}.json")


def write(tmp_path: Path, data: dict) -> str:
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(data))
    return str(p)


# ---------------------------------------------------------------- validate


def test_validate_valid_group_spec(capsys):
    code, out, _ = run(capsys, "validate", "--spec", spec("z2_fixed_point"))
    assert code == 0 and "PASS" in out.upper()


def test_validate_broken_composition(capsys):
    code, out, _ = run(capsys, "validate", "--spec", spec("broken_category"), "--format", "structured")
    assert code == 1
    assert "composition typed" in out and "id0" in out


def test_validate_malformed_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "validate", "--spec", str(bad))
    assert code == 2 and "input error" in err


def test_validate_flags_a_non_ultra_filter(capsys, tmp_path):
    data = {
        "base": "terminal",
        "presheaves": {"X": {"set": 2}},
        "subobjects": {"T": {"of": "X", "all": True}},
        "ultrafilters": {"F": {"on": "X", "generated_by": ["T"]}},
    }
    code, out, _ = run(capsys, "validate", "--spec", write(tmp_path, data), "--format", "structured")
    assert code == 1 and "ultrafilter F/ultra" in out


# --------------------------------------------------------------- enumerate


def test_enumerate_three_points(capsys):
    code, out, _ = run(capsys, "enumerate", "--spec", spec("finset_three"), "--object", "X", "--format", "structured")
    assert code == 0 and json.loads(out)["info"]["count"] == 3


def test_enumerate_regular_and_plus_point(capsys):
    code, out, _ = run(capsys, "enumerate", "--spec", spec("z2_regular"), "--object", "G", "--format", "structured")
    assert code == 0 and json.loads(out)["info"]["count"] == 0
    code, out, _ = run(capsys, "enumerate", "--spec", spec("z2_regular"), "--object", "GplusPt", "--format", "structured")
    assert code == 0 and json.loads(out)["info"]["count"] == 1


def test_enumerate_over_budget(capsys):
    code, _, err = run(capsys, "enumerate", "--spec", spec("big_power"), "--object", "X", "--budget", "100")
    assert code == 3 and "budget" in err


def test_enumerate_unknown_object(capsys):
    code, _, err = run(capsys, "enumerate", "--spec", spec("finset_three"), "--object", "Y")
    assert code == 2 and "unknown presheaf" in err


def test_bad_budget_is_an_argument_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["enumerate", "--spec", spec("finset_three"), "--object", "X", "--budget", "0"])
    assert info.value.code == 2


# ------------------------------------------------------------------- check


def test_check_finset_principal_all(capsys):
    code, out, _ = run(capsys, "check", "--spec", spec("finset_principal"), "--suite", "all", "--format", "structured")
    assert code == 0
    laws = [law["law"] for law in json.loads(out)["laws"]]
    assert any(k.startswith("transfer/") for k in laws) and any(k.startswith("soundness/") for k in laws)


def test_check_negative_control(capsys):
    code, out, _ = run(capsys, "check", "--spec", spec("corrupt_sigma"), "--suite", "soundness", "--format", "structured")
    assert code == 1 and "sigma-lax-natural" in out


@pytest.mark.parametrize("name", ["adequate_b1", "adequate_b2"])
def test_check_adequate_idealisation(capsys, name):
    code, out, _ = run(capsys, "check", "--spec", spec(name), "--suite", "idealisation", "--format", "structured")
    assert code == 0
    info = json.loads(out)["info"]
    assert "idealisation over A2" in info


def test_check_z2_structure_with_family_override(capsys):
    code, out, _ = run(capsys, "check", "--spec", spec("z2_fixed_point"), "--suite", "transfer", "--family", "G,pt")
    assert code == 0


def test_check_without_structure(capsys):
    code, _, err = run(capsys, "check", "--spec", spec("finset_three"))
    assert code == 2 and "neither" in err


def test_check_non_ultra_structure(capsys, tmp_path):
    data = {
        "base": "terminal",
        "presheaves": {"X": {"set": 2}},
        "subobjects": {"T": {"of": "X", "all": True}},
        "ultrafilters": {"F": {"on": "X", "generated_by": ["T"]}},
        "nelson": {"X": "X", "ultrafilter": "F"},
    }
    code, _, err = run(capsys, "check", "--spec", write(tmp_path, data))
    assert code == 2 and "not an internal ultrafilter" in err


def test_check_reduced_power_reports_the_broken_clause(capsys, tmp_path):
    data = {
        "base": "terminal",
        "presheaves": {"X": {"set": 2}, "A": {"set": 2}},
        "subobjects": {"T": {"of": "X", "all": True}},
        "ultrafilters": {"F": {"on": "X", "generated_by": ["T"], "kind": "filter"}},
        "nelson": {"X": "X", "ultrafilter": "F", "object_family": ["A"], "require_ultra": False, "path": "explicit"},
    }
    code, out, _ = run(capsys, "check", "--spec", write(tmp_path, data), "--format", "structured")
    assert code == 1 and "definition/i/join" in out


# ------------------------------------------------------------- determinism


def test_structured_reports_are_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        target = tmp_path / f"r{k}.json"
        code = main(["check", "--spec", spec("z2_fixed_point"), "--suite", "all", "--format", "structured", "--output", str(target)])
        assert code == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    json.loads(outs[0])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nelson_topos.cli", "enumerate", "--spec", spec("finset_three"), "--object", "X"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout
