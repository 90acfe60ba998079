"""Command-line workbench: ``validate``, ``enumerate`` and ``check`` on a topos spec file.

Exit codes: 0 pass, 1 a check failed, 2 bad input, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .axioms import (
    IdealisationInstance,
    adequate_ultrapower,
    check_idealisation,
    check_standardisation,
    check_transfer,
    soundness_suite,
)
from .category import validate
from .errors import BudgetExceeded, FormulaError, NelsonInvariantError, NotUltra, ShapeMismatch, SpecError
from .nelson import CLASSIFY_LIMIT, NelsonStructure, build_nelson, corrupt_sigma
from .report import Report
from .spec_io import Workspace, dump_workspace, load_spec
from .ultra import classify_filter, enumerate_internal_ultrafilters

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
SUITES = ("transfer", "standardisation", "idealisation", "soundness", "all")


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n <= 0:
        raise argparse.ArgumentTypeError("budget must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="topos specification file (JSON)")
    common.add_argument("--budget", type=_positive, help="element budget for constructions")
    common.add_argument("--format", choices=("human", "structured"), default="human")
    common.add_argument("--output", help="write the report here instead of stdout")
    p = argparse.ArgumentParser(prog="nelson-topos", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check every declared item")
    en = sub.add_parser("enumerate", parents=[common], help="list internal ultrafilters on an object")
    en.add_argument("--object", required=True, help="presheaf name")
    ch = sub.add_parser("check", parents=[common], help="run axiom suites on the declared structure")
    ch.add_argument("--suite", choices=SUITES, default="all")
    ch.add_argument("--family", help="comma-separated object names overriding the test family")
    return p


# -------------------------------------------------------------------- commands


def cmd_validate(ws: Workspace) -> Report:
    rep = Report("validate")
    cat_rep = validate(ws.ctx.base)
    rep.merge(cat_rep, "base")
    if not cat_rep.passed:
        return rep
    for name, P in sorted(ws.presheaves.items()):
        rep.merge(validate(P), f"presheaf {name}")
    for name, f in sorted(ws.maps.items()):
        rep.merge(validate(f), f"map {name}")
    for name, S in sorted(ws.subobjects.items()):
        rep.check(f"subobject {name}/closed under restriction", S.is_subfunctor(), subobject=name)
    for name, U in sorted(ws.filters.items()):
        if U.is_filter is None and ws.ctx.power(U.X).obj.size <= CLASSIFY_LIMIT:
            classify_filter(ws.ctx, U)
        rep.info[f"ultrafilter {name}"] = U.describe()
        if U.is_filter is not None:
            rep.check(f"ultrafilter {name}/filter", bool(U.is_filter and U.is_proper), filter=name)
            if ws.filter_kinds.get(name, "ultrafilter") == "ultrafilter":
                rep.check(f"ultrafilter {name}/ultra", bool(U.is_ultra), filter=name)
    rep.info["declared"] = {k: sorted(v) for k, v in dump_workspace(ws).items() if isinstance(v, dict)}
    return rep


def cmd_enumerate(ws: Workspace, object_name: str) -> Report:
    X = ws.presheaf(object_name)
    found = enumerate_internal_ultrafilters(ws.ctx, X)
    rep = Report(f"internal ultrafilters on {object_name}")
    rep.info["count"] = len(found)
    rep.info["ultrafilters"] = [U.describe() for U in found]
    return rep


def _structure(ws: Workspace, family_names: list[str] | None) -> tuple[NelsonStructure, list]:
    if ws.nelson is None:
        raise SpecError("the spec file declares no nelson structure")
    cfg = ws.nelson
    X = ws.presheaf(cfg["X"])
    U = ws.filter(cfg["ultrafilter"])
    names = family_names if family_names is not None else cfg.get("object_family")
    fam = ws.family(names)
    fixture = cfg.get("fixture")
    if fixture not in (None, "corrupt-sigma"):
        raise SpecError(f"unknown fixture {fixture!r}")
    verify = bool(cfg.get("verify", True)) and fixture is None
    N = build_nelson(
        ws.ctx,
        X,
        U,
        fam,
        path=str(cfg.get("path", "auto")),
        require_ultra=bool(cfg.get("require_ultra", True)),
        verify=verify,
    )
    if fixture == "corrupt-sigma":
        N = corrupt_sigma(N)
    return N, fam


def cmd_check(ws: Workspace, suite: str, family_names: list[str] | None = None) -> Report:
    rep = Report(f"check {suite}")
    ctx = ws.ctx
    want = set(SUITES[:-1]) if suite == "all" else {suite}
    N = fam = None
    if ws.nelson is not None:
        N, fam = _structure(ws, family_names)
        rep.info["structure"] = N.describe()
    elif "idealisation" not in want or ws.adequate is None:
        raise SpecError("the spec file declares neither a nelson structure nor an adequate request")
    if N is not None:
        if "transfer" in want:
            for A in fam:
                for B in fam:
                    for f in ctx.maps(A, B):
                        for S in ctx.subobjects(A):
                            rep.merge(check_transfer(N, f, S), "transfer")
        if "standardisation" in want:
            for A in fam:
                rep.merge(check_standardisation(N, A), f"standardisation {A.name or '?'}")
        if "soundness" in want:
            rep.merge(soundness_suite(N, fam), "soundness")
        if "idealisation" in want:
            for entry in ws.nelson.get("idealisation", []):
                A, B = ws.presheaf(entry["A"]), ws.presheaf(entry["B"])
                inst = IdealisationInstance(A, B, ws.subobject(entry["R"]))
                rep.merge(check_idealisation(N, inst), f"idealisation {entry['R']}")
    if "idealisation" in want and ws.adequate is not None:
        cfg = ws.adequate
        B = ws.presheaf(cfg["B"])
        adq = adequate_ultrapower(ctx, B, ws.family(cfg.get("object_family", [cfg["B"]])))
        rep.info["adequate"] = adq.describe()
        for a_name in cfg.get("A", [cfg["B"]]):
            A = ws.presheaf(a_name)
            holds = {"hypothesis": 0, "conclusion": 0}
            for R in ctx.subobjects(ctx.product(A, B).obj):
                r = check_idealisation(adq.N, IdealisationInstance(A, B, R))
                holds["hypothesis"] += bool(r.info.pop("hypothesis"))
                holds["conclusion"] += bool(r.info.pop("conclusion"))
                rep.merge(r, f"idealisation over {a_name}")
            rep.info[f"idealisation over {a_name}"] = holds
    return rep


# ------------------------------------------------------------------------ main


def _emit(rep: Report, fmt: str, output: str | None) -> None:
    text = rep.to_json() if fmt == "structured" else rep.to_human()
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ws = load_spec(args.spec, budget=args.budget)
        if args.command == "validate":
            rep = cmd_validate(ws)
        elif args.command == "enumerate":
            rep = cmd_enumerate(ws, args.object)
        else:
            family = [s.strip() for s in args.family.split(",") if s.strip()] if args.family else None
            rep = cmd_check(ws, args.suite, family)
    except BudgetExceeded as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except NelsonInvariantError as err:
        rep = Report("check")
        rep.check(f"definition/{err.clause}", False, **err.witness)
        _emit(rep, args.format, args.output)
        return EXIT_FAIL
    except (SpecError, FormulaError, NotUltra, ShapeMismatch) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    _emit(rep, args.format, args.output)
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
