"""A small typed first-order language with a standardness atom.

Grammar (loosest binding first)::

    formula := quant | iff
    quant   := ("forall" | "exists") ["^st"] var ":" sort "." formula
    iff     := imp ("<=>" imp)*
    imp     := or ["=>" imp]              (right associative)
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | quant | atom | "(" formula ")"
    atom    := "true" | "false" | "st" "(" var ")" | var "=" var
             | var "in" var | name "(" var ("," var)* ")"

Unicode ``∀ ∃ ∧ ∨ ⇒ ⇔ ¬ ⊤ ⊥`` are accepted as synonyms. A quantifier body
extends as far to the right as possible. ``~p`` is ``p => false``; the
bounded forms ``forall^st x:A. p`` and ``exists^st x:A. p`` abbreviate
``forall x:A. st(x) => p`` and ``exists x:A. st(x) & p``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import FormulaError


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class Bottom:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class Atom:
    name: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        if self.name == "in":
            return f"{self.args[0]} in {self.args[1]}"
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class St:
    var: str

    def __str__(self) -> str:
        return f"st({self.var})"


@dataclass(frozen=True)
class Eq:
    left: str
    right: str

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class Quant:
    kind: str  # "forall" | "exists"
    var: str
    sort: str
    body: "Formula"

    def __str__(self) -> str:
        return f"({self.kind} {self.var}:{self.sort}. {self.body})"


Formula = Union[Top, Bottom, Atom, St, Eq, And, Or, Implies, Quant]


def Not(p: Formula) -> Formula:
    return Implies(p, Bottom())


def Iff(p: Formula, q: Formula) -> Formula:
    return And(Implies(p, q), Implies(q, p))


# ------------------------------------------------------------------ lexing

_SYNONYMS = {"∀": "forall", "∃": "exists", "∧": "&", "∨": "|", "⇒": "=>", "→": "=>", "⇔": "<=>", "↔": "<=>", "¬": "~", "⊤": "true", "⊥": "false", "∈": "in"}
_TOKEN = re.compile(r"\s*(?:(<=>|=>|\^st|[()&|~.:,=])|([A-Za-z_][A-Za-z0-9_']*)|(\S))")
_KEYWORDS = {"forall", "exists", "true", "false", "in", "st"}


@dataclass(frozen=True)
class Token:
    kind: str  # "sym" | "name" | "end"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        if text[pos] in _SYNONYMS:
            word = _SYNONYMS[text[pos]]
            out.append(Token("sym" if not word.isalpha() else "name", word, pos))
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.group(3) is not None:
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(1) if m.group(1) else m.start(2)
        out.append(Token("sym" if m.group(1) else "name", m.group(1) or m.group(2), start))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


# ----------------------------------------------------------------- parsing


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def take(self, text: str | None = None, kind: str | None = None) -> Token:
        t = self.tok
        if t.kind == "end" or (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else (kind or "token")
            got = "end of input" if t.kind == "end" else repr(t.text)
            raise FormulaError(f"expected {want}, found {got}", t.pos)
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "end"

    def var(self) -> str:
        t = self.take(kind="name")
        if t.text in _KEYWORDS:
            raise FormulaError(f"{t.text!r} cannot be a variable", t.pos)
        return t.text

    def formula(self) -> Formula:
        if self.at("forall") or self.at("exists"):
            return self.quant()
        return self.iff()

    def quant(self) -> Formula:
        kind = self.take(kind="name").text
        bounded = False
        if self.at("^st"):
            self.take("^st")
            bounded = True
        v = self.var()
        self.take(":")
        sort = self.take(kind="name").text
        self.take(".")
        body = self.formula()
        if bounded:
            body = Implies(St(v), body) if kind == "forall" else And(St(v), body)
        return Quant(kind, v, sort, body)

    def iff(self) -> Formula:
        left = self.imp()
        while self.at("<=>"):
            self.take("<=>")
            left = Iff(left, self.imp())
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.at("=>"):
            self.take("=>")
            return Implies(left, self.imp())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.at("|"):
            self.take("|")
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.at("&"):
            self.take("&")
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        if self.at("~"):
            self.take("~")
            return Not(self.unary())
        if self.at("forall") or self.at("exists"):
            return self.quant()
        if self.at("("):
            self.take("(")
            inner = self.formula()
            self.take(")")
            return inner
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        if t.kind != "name":
            got = "end of input" if t.kind == "end" else repr(t.text)
            raise FormulaError(f"expected a formula, found {got}", t.pos)
        if t.text == "true":
            self.take()
            return Top()
        if t.text == "false":
            self.take()
            return Bottom()
        if t.text == "st":
            self.take()
            self.take("(")
            v = self.var()
            self.take(")")
            return St(v)
        name = self.take(kind="name").text
        if self.at("("):
            self.take("(")
            args = [self.var()]
            while self.at(","):
                self.take(",")
                args.append(self.var())
            self.take(")")
            return Atom(name, tuple(args))
        if name in _KEYWORDS:
            raise FormulaError(f"{name!r} cannot be a variable", t.pos)
        if self.at("="):
            self.take("=")
            return Eq(name, self.var())
        if self.at("in"):
            self.take("in")
            return Atom("in", (name, self.var()))
        raise FormulaError("expected '(', '=' or 'in' after a name", self.tok.pos)


def parse(text: str) -> Formula:
    """Parse ``text``; errors carry the character offset."""
    p = _Parser(text)
    f = p.formula()
    if p.tok.kind != "end":
        raise FormulaError(f"unexpected {p.tok.text!r}", p.tok.pos)
    return f


# ----------------------------------------------------------------- sorting


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, (Top, Bottom)):
        return set()
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, St):
        return {f.var}
    if isinstance(f, Eq):
        return {f.left, f.right}
    if isinstance(f, Quant):
        return free_vars(f.body) - {f.var}
    return free_vars(f.left) | free_vars(f.right)


def check_sorts(
    f: Formula,
    context: Sequence[tuple[str, str]],
    sorts: set[str] | Mapping[str, object],
    signatures: Mapping[str, Sequence[str]],
) -> None:
    """Raise :class:`FormulaError` unless ``f`` is well sorted in ``context``."""
    env = dict(context)
    for _, s in context:
        if s not in sorts:
            raise FormulaError(f"unknown sort {s!r}")
    _check(f, env, sorts, signatures)


def _check(f, env, sorts, sigs) -> None:
    if isinstance(f, (Top, Bottom)):
        return
    if isinstance(f, St):
        _sort_of(f.var, env)
        return
    if isinstance(f, Eq):
        a, b = _sort_of(f.left, env), _sort_of(f.right, env)
        if a != b:
            raise FormulaError(f"'{f.left} = {f.right}' compares sorts {a} and {b}")
        return
    if isinstance(f, Atom):
        if f.name not in sigs:
            raise FormulaError(f"unknown predicate {f.name!r}")
        want = list(sigs[f.name])
        got = [_sort_of(v, env) for v in f.args]
        if want != got:
            raise FormulaError(f"{f.name} expects sorts {want}, got {got}")
        return
    if isinstance(f, Quant):
        if f.sort not in sorts:
            raise FormulaError(f"unknown sort {f.sort!r}")
        _check(f.body, {**env, f.var: f.sort}, sorts, sigs)
        return
    _check(f.left, env, sorts, sigs)
    _check(f.right, env, sorts, sigs)


def _sort_of(v: str, env: Mapping[str, str]) -> str:
    if v not in env:
        raise FormulaError(f"unbound variable {v!r}")
    return env[v]


__all__ = [
    "And",
    "Atom",
    "Bottom",
    "Eq",
    "Formula",
    "Iff",
    "Implies",
    "Not",
    "Or",
    "Quant",
    "St",
    "Top",
    "check_sorts",
    "free_vars",
    "parse",
    "tokenize",
]
