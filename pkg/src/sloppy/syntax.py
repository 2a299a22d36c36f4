"""Concrete syntax for coloured terms and types.

Grammar, loosest binding first::

    term   := '\\' ID ':' type '.' term
            | ('forall' | 'exists' | 'exists1') ID ':' type '.' term
            | imp
    imp    := or (('=>' | '<=') imp)?
    or     := and ('|' and)*
    and    := unary ('&' unary)*
    unary  := '~' unary | eq
    eq     := app ('=' app)?
    app    := atom ('(' term (',' term)* ')')*
    atom   := ID colour? tag? | '(' term ')'
    colour := '@' ('p' | 's' | '?' ID)
    tag    := '#' ID
    type   := base ('->' type)?        base := 'e' | 't' | '(' type ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .terms import (
    Abs,
    App,
    Bound,
    Colour,
    Const,
    Free,
    Signature,
    Term,
    TermError,
    app,
    logical,
    normalize,
    shift,
    spine,
    symbols,
    type_of,
)
from .types import E, T, Arrow, SimpleType


class TermSyntaxError(SyntaxError, TermError):
    def __init__(self, msg: str, text: str, pos: int, line_offset: int = 0):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{msg} at line {line + line_offset}, column {col}")
        self.lineno = line + line_offset
        self.offset = col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>->|=>|<=|[\\λ.:,()&|~=@?\#])
    """,
    re.VERBOSE,
)

KEYWORDS = {"forall", "exists", "exists1"}

_INFIX = {"and": "&", "or": "|", "imp": "=>", "revimp": "<=", "eq": "="}
_PREC = {"imp": 1, "revimp": 1, "or": 2, "and": 3, "eq": 5}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(text: str, line_offset: int = 0) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos] == "%":  # comment to end of line
            nl = text.find("\n", pos)
            pos = len(text) if nl < 0 else nl
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise TermSyntaxError(f"unexpected character {text[pos]!r}", text, pos, line_offset)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, sig: Signature, line_offset: int = 0):
        self.text = text
        self.sig = sig
        self.line_offset = line_offset
        self.toks = tokenize(text, line_offset)
        self.i = 0

    # -- token helpers
    def peek(self) -> _Tok:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "eof"

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.take()

    def ident(self) -> _Tok:
        tok = self.peek()
        if tok.kind != "id":
            self.error("expected identifier")
        return self.take()

    def error(self, msg: str):
        tok = self.peek()
        found = tok.text or "end of input"
        raise TermSyntaxError(f"{msg}, found {found!r}", self.text, tok.pos, self.line_offset)

    def done(self):
        if self.peek().kind != "eof":
            self.error("trailing input")

    # -- types
    def type(self) -> SimpleType:
        if self.at("("):
            self.take()
            dom = self.type()
            self.expect(")")
        else:
            tok = self.ident()
            if tok.text not in ("e", "t"):
                self.i -= 1
                self.error("expected base type 'e' or 't'")
            dom = E if tok.text == "e" else T
        if self.at("->"):
            self.take()
            return Arrow(dom, self.type())
        return dom

    # -- terms
    def term(self, env: list[str]) -> Term:
        tok = self.peek()
        if tok.text in ("\\", "λ"):
            self.take()
            name, ty = self.binder()
            body = self.term([name] + env)
            return Abs(ty, body, name)
        if tok.kind == "id" and tok.text in KEYWORDS:
            self.take()
            name, ty = self.binder()
            if ty != E:
                self.error(f"quantifiers range over e, not {ty}")
            body = self.term([name] + env)
            if tok.text == "exists1":
                return unique_exists(body, name)
            return App(logical(tok.text), Abs(ty, body, name))
        return self.imp(env)

    def binder(self) -> tuple[str, SimpleType]:
        name = self.ident().text
        if name in KEYWORDS:
            self.i -= 1
            self.error("keyword used as variable")
        self.expect(":")
        ty = self.type()
        self.expect(".")
        return name, ty

    def imp(self, env):
        left = self.or_(env)
        if self.at("=>") or self.at("<="):
            op = "imp" if self.take().text == "=>" else "revimp"
            right = self.imp_or_binder(env)
            return app(logical(op), left, right)
        return left

    def imp_or_binder(self, env):
        # a binder may close an infix chain: ``a => forall x:e. b``
        if self.at("\\") or self.at("λ") or self.peek().text in KEYWORDS:
            return self.term(env)
        return self.imp(env)

    def _chain(self, env, op: str, name: str, sub):
        items = [sub(env)]
        while self.at(op):
            self.take()
            if self.at("\\") or self.at("λ") or self.peek().text in KEYWORDS:
                items.append(self.term(env))
                break
            items.append(sub(env))
        result = items[-1]
        for item in reversed(items[:-1]):
            result = app(logical(name), item, result)
        return result

    def or_(self, env):
        return self._chain(env, "|", "or", self.and_)

    def and_(self, env):
        return self._chain(env, "&", "and", self.unary)

    def unary(self, env):
        if self.at("~"):
            self.take()
            if self.peek().text in KEYWORDS:
                return App(logical("not"), self.term(env))
            return App(logical("not"), self.unary(env))
        return self.eq(env)

    def eq(self, env):
        left = self.application(env)
        if self.at("="):
            self.take()
            right = self.application(env)
            return app(logical("eq"), left, right)
        return left

    def application(self, env):
        head = self.atom(env)
        while self.at("("):
            self.take()
            args = [self.term(env)]
            while self.at(","):
                self.take()
                args.append(self.term(env))
            self.expect(")")
            head = app(head, *args)
        return head

    def atom(self, env):
        if self.at("("):
            self.take()
            t = self.term(env)
            self.expect(")")
            return t
        tok = self.ident()
        if tok.text in KEYWORDS:
            self.i -= 1
            self.error("unexpected keyword")
        colour = self.colour()
        tag = None
        if self.at("#"):
            self.take()
            tag = self.ident().text
        if tok.text in env:
            if colour is not None:
                self.error("bound variables carry no colour")
            return Bound(env.index(tok.text), tag)
        sym = self.sig.symbol(tok.text, colour)
        return type(sym)(sym.name, sym.type, sym.colour, tag)

    def colour(self) -> Optional[Colour]:
        if not self.at("@"):
            return None
        self.take()
        if self.at("?"):
            self.take()
            return Colour(self.ident().text, var=True)
        tok = self.ident()
        if tok.text not in ("p", "s"):
            self.i -= 1
            self.error("colour constants are 'p' and 's'")
        return Colour(tok.text)


def unique_exists(body: Term, name: str = "x") -> Term:
    """Russellian expansion of ``exists1 x. P(x) & Q(x)``.

    ``body`` lives under the ``x`` binder. Its first top-level conjunct is
    the restriction, the remainder the scope.
    """
    head, args = spine(body)
    if isinstance(head, Const) and head.name == "and" and len(args) == 2:
        restr, scope = args
    else:
        restr, scope = body, None
    other = "y" if name != "y" else "z"
    # restriction re-stated for the inner binder: x (index 0) becomes y
    restr_y = shift(restr, 1, cutoff=1)
    unique = App(
        logical("forall"),
        Abs(E, app(logical("imp"), restr_y, app(logical("eq"), Bound(0), Bound(1))), other),
    )
    rest = unique if scope is None else app(logical("and"), unique, scope)
    return App(logical("exists"), Abs(E, app(logical("and"), restr, rest), name))


def parse_type(text: str) -> SimpleType:
    p = _Parser(text, Signature())
    ty = p.type()
    p.done()
    return ty


def parse_term(text: str, sig: Signature, *, normal: bool = True, line_offset: int = 0) -> Term:
    """Parse, type-check and (by default) normalize a closed term."""
    p = _Parser(text, sig, line_offset)
    t = p.term([])
    p.done()
    type_of(t, sig)
    return normalize(t) if normal else t


# -- printing ---------------------------------------------------------------


def _fresh_name(hint: str, taken: set[str]) -> str:
    base = hint.rstrip("0123456789") or "x"
    if hint not in taken:
        return hint
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def _colour_suffix(c: Optional[Colour], show: bool) -> str:
    if not show or c is None:
        return ""
    return f"@{c}"


def print_term(t: Term, *, colours: bool = True, canonical: bool = False) -> str:
    """Render ``t`` in the surface syntax.

    With ``canonical`` set, binder names ignore the stored hints so that
    alpha-equivalent terms print identically.
    """
    taken = {s.name for s in symbols(t)}

    def binder_name(hint: str, env: list[str]) -> str:
        return _fresh_name("x" if canonical else hint, taken | set(env))

    def go(t: Term, env: list[str], prec: int) -> str:
        match t:
            case Bound(k):
                return env[k] if k < len(env) else f"#{k}"
            case Const(name, _, colour) | Free(name, _, colour):
                return name + _colour_suffix(colour, colours)
            case Abs(ty, body, hint):
                name = binder_name(hint, env)
                s = f"\\{name}:{ty}. {go(body, [name] + env, 0)}"
                return f"({s})" if prec > 0 else s
        head, args = spine(t)
        if isinstance(head, Const) and not (colours and head.colour is not None):
            if head.name in ("forall", "exists") and len(args) == 1 and isinstance(args[0], Abs):
                lam = args[0]
                name = binder_name(lam.name, env)
                s = f"{head.name} {name}:{lam.type}. {go(lam.body, [name] + env, 0)}"
                return f"({s})" if prec > 0 else s
            if head.name == "not" and len(args) == 1:
                s = "~" + go(args[0], env, 4)
                return f"({s})" if prec > 4 else s
            if head.name in _INFIX and len(args) == 2:
                level = _PREC[head.name]
                if head.name in ("imp", "revimp"):
                    lp, rp = level + 1, level
                elif head.name == "eq":
                    lp = rp = level + 1
                else:
                    lp, rp = level + 1, level
                s = f"{go(args[0], env, lp)} {_INFIX[head.name]} {go(args[1], env, rp)}"
                return f"({s})" if prec > level else s
        fn = go(head, env, 6)
        return f"{fn}({', '.join(go(a, env, 0) for a in args)})"

    return go(t, [], 0)


def print_type(ty: SimpleType) -> str:
    return str(ty)
