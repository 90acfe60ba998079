"""Check reports shared by every suite.

A report is an ordered collection of laws. Each law counts the instances
it was tested on and keeps the first failing witness. The structured form
(``to_dict``/``to_json``) is canonical; the human form is rendered from it.
"""

from __future__ import annotations

import json
from typing import Any


class Law:
    __slots__ = ("name", "instances", "failures", "witness")

    def __init__(self, name: str):
        self.name = name
        self.instances = 0
        self.failures = 0
        self.witness: dict[str, Any] | None = None

    def check(self, ok: bool, **witness: Any) -> bool:
        self.instances += 1
        if not ok:
            self.failures += 1
            if self.witness is None:
                self.witness = {k: _plain(v) for k, v in witness.items()}
        return ok

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "law": self.name,
            "passed": self.passed,
            "instances": self.instances,
            "failures": self.failures,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        return out


class Report:
    def __init__(self, title: str):
        self.title = title
        self.laws: dict[str, Law] = {}
        self.info: dict[str, Any] = {}

    def law(self, name: str) -> Law:
        if name not in self.laws:
            self.laws[name] = Law(name)
        return self.laws[name]

    def check(self, name: str, ok: bool, **witness: Any) -> bool:
        return self.law(name).check(ok, **witness)

    def merge(self, other: "Report", prefix: str | None = None) -> "Report":
        for law in other.laws.values():
            name = f"{prefix}/{law.name}" if prefix else law.name
            mine = self.law(name)
            mine.instances += law.instances
            mine.failures += law.failures
            if mine.witness is None and law.witness is not None:
                mine.witness = law.witness
        for k, v in other.info.items():
            self.info[f"{prefix}/{k}" if prefix else k] = v
        return self

    @property
    def passed(self) -> bool:
        return all(law.passed for law in self.laws.values())

    @property
    def violations(self) -> list[Law]:
        return [law for law in self.laws.values() if not law.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "passed": self.passed,
            "laws": [law.to_dict() for law in self.laws.values()],
            "info": {k: _plain(v) for k, v in self.info.items()},
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_human(self) -> str:
        return render_human(self.to_dict())

    def __repr__(self) -> str:
        return f"Report({self.title!r}, passed={self.passed}, laws={len(self.laws)})"


def _plain(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted((_plain(v) for v in value), key=repr)
    describe = getattr(value, "describe", None)
    if callable(describe):
        return _plain(describe())
    return repr(value)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def render_human(data: dict[str, Any], indent: str = "") -> str:
    status = "PASS" if data["passed"] else "FAIL"
    lines = [f"{indent}{data['title']}: {status}"]
    for law in data["laws"]:
        mark = "ok  " if law["passed"] else "FAIL"
        line = f"{indent}  [{mark}] {law['law']} ({law['instances']} instances"
        if law["failures"]:
            line += f", {law['failures']} failures"
        lines.append(line + ")")
        if "witness" in law:
            lines.append(f"{indent}         witness: {canonical_json(law['witness'])}")
    for key in sorted(data.get("info", {})):
        lines.append(f"{indent}  {key}: {canonical_json(data['info'][key])}")
    return "\n".join(lines)
