"""Reader for discourse problem files and axiom files.

A problem file is plain text split into bracketed sections::

    [signature]        j, m, p : e        var R : e -> t
    [source]           one term (may span lines)
    [target]           one term
    [parallel]         source: #a, #b     target: #c, #d     (or  #a ~ #c)
    [anaphors]         R @s               x @?
    [colours]          #his : pronoun
    [axioms]           one formula per line, or  include other.ax
    [expect]           readings = 2       {no-colours} solutions = 4

``%`` starts a comment. ``docs/format.md`` has the full description.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from .syntax import parse_term, parse_type
from .terms import Abs, App, Bound, Const, Free, Signature, Term, TermError, erase_colours, free_vars, type_of
from .types import T

SECTIONS = ("signature", "source", "target", "parallel", "anaphors", "colours", "axioms", "expect")
REQUIRED = ("signature", "source", "target", "parallel")
TAG_KINDS = ("primary", "pronoun", "full-np", "plain")
MODES = ("no-colours", "entail", "common-gen")


class ProblemError(Exception):
    def __init__(self, msg: str, path=None, line: Optional[int] = None):
        where = str(path) if path else "<problem>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {msg}")
        self.path = path
        self.line = line


class MissingSection(ProblemError):
    pass


class DanglingOccurrenceTag(ProblemError):
    pass


class ArityMismatch(ProblemError):
    pass


class ConflictingTags(ProblemError):
    pass


@dataclass(frozen=True)
class Expectation:
    kind: str  # readings | solutions | reading | binding | bindings | status | relation
    key: Optional[str]
    value: object
    modes: frozenset = frozenset()
    line: Optional[int] = None
    text: str = ""


Element = Union[str, Term]  # an occurrence tag or an explicit term


@dataclass
class DiscourseProblem:
    name: str
    signature: Signature
    source: Term
    target: Term
    parallels: list  # [(source element, target element)], elements are tags or terms
    anaphors: dict = field(default_factory=dict)  # name -> "s" | "p" | "?"
    colour_tags: list = field(default_factory=list)  # [(tag, kind)] in file order
    axioms: list = field(default_factory=list)
    expectations: list = field(default_factory=list)
    relation: str = "identity"
    path: Optional[Path] = None

    def element(self, side: str, el: Element) -> Term:
        """The term an element stands for: the tagged occurrence or the term itself."""
        if not isinstance(el, str):
            return el
        occ = tag_occurrences(self.source if side == "source" else self.target).get(el)
        if not occ:
            raise DanglingOccurrenceTag(f"no occurrence tagged #{el} in {side}", self.path)
        return occ[0][1]


# -- occurrences --------------------------------------------------------------


def tag_occurrences(t: Term) -> dict[str, list[tuple[tuple, Term]]]:
    """Map each tag to its ``(path, node)`` occurrences, in left-to-right order."""
    out: dict[str, list] = {}

    def go(t: Term, path: tuple):
        if isinstance(t, (Const, Free, Bound)):
            if t.tag is not None:
                out.setdefault(t.tag, []).append((path, t))
        elif isinstance(t, Abs):
            go(t.body, path + ("body",))
        elif isinstance(t, App):
            go(t.fn, path + ("fn",))
            go(t.arg, path + ("arg",))

    go(t, ())
    return out


def node_at(t: Term, path: tuple) -> Optional[Term]:
    for step in path:
        if step == "body" and isinstance(t, Abs):
            t = t.body
        elif step == "fn" and isinstance(t, App):
            t = t.fn
        elif step == "arg" and isinstance(t, App):
            t = t.arg
        else:
            return None
    return t


# -- reading ------------------------------------------------------------------

_HEADER = re.compile(r"^\[([a-z-]+)\]\s*$")


def _strip_comment(line: str) -> str:
    i = line.find("%")
    return line if i < 0 else line[:i]


def split_sections(text: str, path=None) -> dict[str, list[tuple[int, str]]]:
    sections: dict[str, list] = {}
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).rstrip()
        m = _HEADER.match(line.strip())
        if m:
            current = m.group(1)
            if current not in SECTIONS:
                raise ProblemError(f"unknown section [{current}]", path, no)
            if current in sections:
                raise ProblemError(f"duplicate section [{current}]", path, no)
            sections[current] = []
        elif line.strip():
            if current is None:
                raise ProblemError("text before the first section header", path, no)
            sections[current].append((no, line))
    return sections


def split_top(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _signature(lines, path) -> Signature:
    sig = Signature()
    for no, line in lines:
        decl = line.strip()
        is_var = decl.startswith("var ")
        if is_var:
            decl = decl[4:]
        if ":" not in decl:
            raise ProblemError(f"expected 'names : type', got {line.strip()!r}", path, no)
        names, ty_text = decl.split(":", 1)
        try:
            ty = parse_type(ty_text.strip())
            for name in split_top(names):
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name):
                    raise ProblemError(f"bad symbol name {name!r}", path, no)
                (sig.declare_var if is_var else sig.declare_const)(name, ty)
        except TermError as exc:
            raise ProblemError(str(exc), path, no) from exc
    return sig


def _term(lines, sig, path, what: str) -> Term:
    first = lines[0][0]
    text = "\n".join(line for _, line in lines)
    try:
        t = parse_term(text, sig, line_offset=first - 1)
    except TermError as exc:
        raise ProblemError(f"in [{what}]: {exc}", path, getattr(exc, "lineno", first)) from exc
    if type_of(t) != T:
        raise ProblemError(f"[{what}] must have type t, not {type_of(t)}", path, first)
    return t


def _element(text: str, sig, path, no) -> Element:
    if re.fullmatch(r"#[A-Za-z_][A-Za-z0-9_']*", text):
        return text[1:]
    try:
        return parse_term(text, sig, line_offset=no - 1)
    except TermError as exc:
        raise ProblemError(f"bad parallel element {text!r}: {exc}", path, no) from exc


def _parallel(lines, sig, path) -> list:
    pairs, lists = [], {}
    for no, line in lines:
        body = line.strip()
        m = re.match(r"^(source|target)\s*:(.*)$", body)
        if m:
            side = m.group(1)
            if side in lists:
                raise ProblemError(f"duplicate {side} list", path, no)
            lists[side] = [_element(x, sig, path, no) for x in split_top(m.group(2))]
        elif "~" in body and body.count("~") == 1 and not body.startswith("~"):
            left, right = body.split("~")
            pairs.append((_element(left.strip(), sig, path, no), _element(right.strip(), sig, path, no)))
        else:
            raise ProblemError(f"expected 'source: ...', 'target: ...' or 'a ~ b', got {body!r}", path, no)
    if lists:
        if pairs:
            raise ProblemError("mix of pair lines and source/target lists in [parallel]", path, lines[0][0])
        src, tgt = lists.get("source", []), lists.get("target", [])
        if len(src) != len(tgt):
            raise ArityMismatch(f"{len(src)} source vs {len(tgt)} target parallel elements", path, lines[0][0])
        pairs = list(zip(src, tgt))
    if not pairs:
        raise ArityMismatch("at least one parallel pair is required", path)
    return pairs


def _anaphors(lines, path) -> dict:
    out = {}
    for no, line in lines:
        m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_']*)\s*(@(p|s|\?))?\s*", line)
        if not m:
            raise ProblemError(f"expected 'NAME [@s|@p|@?]', got {line.strip()!r}", path, no)
        out[m.group(1)] = m.group(3) or "s"
    return out


def _colours(lines, path) -> list:
    out = []
    for no, line in lines:
        m = re.fullmatch(r"\s*#([A-Za-z_][A-Za-z0-9_']*)\s*:\s*([a-z-]+)\s*", line)
        if not m or m.group(2) not in TAG_KINDS:
            raise ProblemError(f"expected '#tag : {'|'.join(TAG_KINDS)}', got {line.strip()!r}", path, no)
        out.append((m.group(1), m.group(2)))
    return out


def load_axioms(path, sig: Signature) -> list[Term]:
    path = Path(path)
    return _axioms([(no, line) for no, line in enumerate(path.read_text().splitlines(), 1)], sig, path)


def _axioms(lines, sig, path) -> list:
    out = []
    for no, line in lines:
        body = _strip_comment(line).strip()
        if not body:
            continue
        if body.startswith("include "):
            base = Path(path).parent if path else Path(".")
            target = base / body[len("include "):].strip()
            if not target.exists():
                raise ProblemError(f"included axiom file {target} not found", path, no)
            out.extend(load_axioms(target, sig))
            continue
        try:
            ax = parse_term(body, sig, line_offset=no - 1)
        except TermError as exc:
            raise ProblemError(f"bad axiom: {exc}", path, no) from exc
        if type_of(ax) != T or free_vars(ax):
            raise ProblemError("axioms must be closed formulas of type t", path, no)
        out.append(ax)
    return out


_EXPECT = re.compile(r"^\s*(\{(?P<modes>[^}]*)\}\s*)?(?P<body>.*)$")


def _expectations(lines, sig, path) -> list:
    out = []
    for no, line in lines:
        m = _EXPECT.match(line)
        modes = frozenset(x.strip() for x in (m.group("modes") or "").split(",") if x.strip())
        bad = modes - set(MODES)
        if bad:
            raise ProblemError(f"unknown mode(s) {sorted(bad)}", path, no)
        body = m.group("body").strip()

        def term(text):
            try:
                return erase_colours(parse_term(text.strip(), sig, line_offset=no - 1))
            except TermError as exc:
                raise ProblemError(f"bad expected term: {exc}", path, no) from exc

        if mm := re.fullmatch(r"(readings|solutions)\s*=\s*(\d+)", body):
            exp = Expectation(mm.group(1), None, int(mm.group(2)))
        elif mm := re.fullmatch(r"status\s*=\s*(ok|no-solution|underdetermined)", body):
            exp = Expectation("status", None, mm.group(1))
        elif mm := re.fullmatch(r"relation\s*=\s*proved", body):
            exp = Expectation("relation", None, "proved")
        elif mm := re.fullmatch(r"reading\s+(sloppy|strict|mixed)\s*:(.*)", body):
            exp = Expectation("reading", mm.group(1), term(mm.group(2)))
        elif mm := re.fullmatch(r"binding\s+([A-Za-z_][A-Za-z0-9_']*)\s*:(.*)", body):
            exp = Expectation("binding", mm.group(1), term(mm.group(2)))
        elif mm := re.fullmatch(r"bindings\s+([A-Za-z_][A-Za-z0-9_']*)\s*:(.*)", body):
            exp = Expectation("bindings", mm.group(1), frozenset(term(x) for x in split_top(mm.group(2), ";")))
        else:
            raise ProblemError(f"unrecognised expectation {body!r}", path, no)
        out.append(replace(exp, modes=modes, line=no, text=line.strip()))
    return out


def parse_problem(text: str, path=None, name: Optional[str] = None) -> DiscourseProblem:
    sections = split_sections(text, path)
    for sec in REQUIRED:
        if sec not in sections or not sections[sec] and sec != "signature":
            raise MissingSection(f"missing section [{sec}]", path)
    sig = _signature(sections["signature"], path)
    source = _term(sections["source"], sig, path, "source")
    target = _term(sections["target"], sig, path, "target")
    parallels = _parallel(sections["parallel"], sig, path)
    anaphors = _anaphors(sections.get("anaphors", []), path)
    colour_tags = _colours(sections.get("colours", []), path)
    axioms = _axioms(sections.get("axioms", []), sig, path)
    expectations = _expectations(sections.get("expect", []), sig, path)
    problem = DiscourseProblem(
        name=name or (Path(path).stem if path else "problem"),
        signature=sig,
        source=source,
        target=target,
        parallels=parallels,
        anaphors=anaphors,
        colour_tags=colour_tags,
        axioms=axioms,
        expectations=expectations,
        path=Path(path) if path else None,
    )
    validate(problem)
    return problem


def load_problem(path) -> DiscourseProblem:
    path = Path(path)
    return parse_problem(path.read_text(), path)


def validate(p: DiscourseProblem) -> None:
    src_tags = tag_occurrences(p.source)
    tgt_tags = tag_occurrences(p.target)
    for sp, tp in p.parallels:
        for side, el, tags in (("source", sp, src_tags), ("target", tp, tgt_tags)):
            if isinstance(el, str) and el not in tags:
                raise DanglingOccurrenceTag(f"parallel element #{el} does not occur in [{side}]", p.path)
    kinds: dict[str, str] = {}
    for tag, kind in p.colour_tags:
        if tag not in src_tags and tag not in tgt_tags:
            raise DanglingOccurrenceTag(f"[colours] names #{tag}, which occurs nowhere", p.path)
        if kinds.setdefault(tag, kind) != kind:
            raise ConflictingTags(f"#{tag} tagged both {kinds[tag]} and {kind}", p.path)
    free = set(free_vars(p.source)) | set(free_vars(p.target))
    for name in p.anaphors:
        if name not in free:
            raise ProblemError(f"anaphor {name} does not occur free in source or target", p.path)
