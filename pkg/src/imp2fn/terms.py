"""AST nodes shared by the imperative source language and the functional
target language, plus the canonical tokenized printer.

Terms are immutable; partial programs are ordinary terms containing Hole
leaves. Structural equality is the notion of "same term" everywhere
(shared-term matching, deduplication, trace keys).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

# Literal payloads a Const may carry. The empty list literal is the
# hashable sentinel () and is materialized as [] at eval time.
ConstValue = Union[int, bool, str, None, tuple]


@dataclass(frozen=True)
class Term:
    def children(self) -> tuple["Term", ...]:
        return ()

    def replace_children(self, kids: tuple["Term", ...]) -> "Term":
        assert not kids
        return self


@dataclass(frozen=True)
class Hole(Term):
    nt: str
    uid: int


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    value: ConstValue


@dataclass(frozen=True)
class App(Term):
    fn: str
    args: tuple[Term, ...]

    def children(self):
        return self.args

    def replace_children(self, kids):
        return App(self.fn, tuple(kids))


@dataclass(frozen=True)
class MethodCall(Term):
    recv: Term
    method: str
    args: tuple[Term, ...]

    def children(self):
        return (self.recv,) + self.args

    def replace_children(self, kids):
        return MethodCall(kids[0], self.method, tuple(kids[1:]))


@dataclass(frozen=True)
class Lambda(Term):
    # params are Var nodes (or V-holes while the binder is undecided)
    params: tuple[Term, ...]
    body: Term

    def children(self):
        return self.params + (self.body,)

    def replace_children(self, kids):
        return Lambda(tuple(kids[:-1]), kids[-1])


@dataclass(frozen=True)
class Seq(Term):
    stmts: tuple[Term, ...]

    def children(self):
        return self.stmts

    def replace_children(self, kids):
        return Seq(tuple(kids))


@dataclass(frozen=True)
class For(Term):
    var: Term
    iterable: Term
    body: Term

    def children(self):
        return (self.var, self.iterable, self.body)

    def replace_children(self, kids):
        return For(kids[0], kids[1], kids[2])


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    orelse: Term

    def children(self):
        return (self.cond, self.then, self.orelse)

    def replace_children(self, kids):
        return If(kids[0], kids[1], kids[2])


@dataclass(frozen=True)
class Assign(Term):
    var: Term
    rhs: Term

    def children(self):
        return (self.var, self.rhs)

    def replace_children(self, kids):
        return Assign(kids[0], kids[1])


@dataclass(frozen=True)
class Return(Term):
    value: Term

    def children(self):
        return (self.value,)

    def replace_children(self, kids):
        return Return(kids[0])


def subterms(t: Term) -> Iterator[Term]:
    """Preorder traversal including t itself."""
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def holes(t: Term) -> list[Hole]:
    """All holes in preorder (leftmost-outermost first)."""
    return [n for n in subterms(t) if isinstance(n, Hole)]


def is_complete(t: Term) -> bool:
    return not any(isinstance(n, Hole) for n in subterms(t))


# Binary operators printed infix; everything else prints as a call.
BINOPS = {"+", "-", "*", "/", "%", "==", "!=", "<", "<=", "in"}

STMT_KINDS = (Seq, For, If, Assign, Return)


def _const_tokens(v: ConstValue) -> list[str]:
    if v is None:
        return ["None"]
    if v is True:
        return ["true"]
    if v is False:
        return ["false"]
    if isinstance(v, int):
        return [str(v)]
    if isinstance(v, str):
        return ['"' + v + '"']
    if isinstance(v, tuple) and not v:
        return ["[", "]"]
    raise ValueError(f"unprintable constant: {v!r}")


def to_tokens(t: Term) -> list[str]:
    out: list[str] = []
    _emit(t, out, top=True)
    return out


def _emit(t: Term, out: list[str], top: bool = False) -> None:
    if isinstance(t, Hole):
        out.append("?" + t.nt)
    elif isinstance(t, Var):
        out.append(t.name)
    elif isinstance(t, Const):
        out.extend(_const_tokens(t.value))
    elif isinstance(t, App):
        if t.fn in BINOPS and len(t.args) == 2:
            out.append("(")
            _emit(t.args[0], out)
            out.append(t.fn)
            _emit(t.args[1], out)
            out.append(")")
        elif t.fn == "not" and len(t.args) == 1:
            out.append("(")
            out.append("not")
            _emit(t.args[0], out)
            out.append(")")
        else:
            out.append(t.fn)
            out.append("(")
            for i, a in enumerate(t.args):
                if i:
                    out.append(",")
                _emit(a, out)
            out.append(")")
    elif isinstance(t, MethodCall):
        _emit(t.recv, out)
        out.extend([".", t.method, "("])
        for i, a in enumerate(t.args):
            if i:
                out.append(",")
            _emit(a, out)
        out.append(")")
    elif isinstance(t, Lambda):
        out.append("\\")
        for i, p in enumerate(t.params):
            if i:
                out.append(",")
            _emit(p, out)
        out.append(".")
        _emit(t.body, out)
    elif isinstance(t, Seq):
        if top:
            for i, s in enumerate(_spliced(t)):
                if i:
                    out.append(";")
                _emit(s, out)
        else:
            _emit_block(t, out)
    elif isinstance(t, For):
        out.append("for")
        _emit(t.var, out)
        out.append("in")
        _emit(t.iterable, out)
        out.append(":")
        _emit_block(t.body, out)
    elif isinstance(t, If):
        out.append("if")
        _emit(t.cond, out)
        out.append(":")
        _emit_block(t.then, out)
        out.extend(["else", ":"])
        _emit_block(t.orelse, out)
    elif isinstance(t, Assign):
        _emit(t.var, out)
        out.append("=")
        _emit(t.rhs, out)
    elif isinstance(t, Return):
        out.append("return")
        _emit(t.value, out)
    else:
        raise ValueError(f"unknown term: {t!r}")


def _spliced(t: Term) -> list[Term]:
    """Statement list with nested sequences flattened (the canonical form)."""
    if isinstance(t, Seq):
        out: list[Term] = []
        for s in t.stmts:
            out.extend(_spliced(s))
        return out
    return [t]


def _emit_block(t: Term, out: list[str]) -> None:
    out.append("{")
    for i, s in enumerate(_spliced(t)):
        if i:
            out.append(";")
        _emit(s, out)
    out.append("}")


def pretty(t: Term) -> str:
    """Canonical single-space tokenized form; identical for shared terms
    across the two languages."""
    return " ".join(to_tokens(t))


class HoleIds:
    """Monotone hole-id source; one per synthesis session for determinism."""

    def __init__(self, start: int = 0):
        self._next = start

    def fresh(self) -> int:
        v = self._next
        self._next += 1
        return v


def number_holes(t: Term, ids: Optional[HoleIds] = None) -> Term:
    """Reassign all hole uids in preorder from a fresh counter."""
    ids = ids or HoleIds()

    def go(n: Term) -> Term:
        if isinstance(n, Hole):
            return Hole(n.nt, ids.fresh())
        kids = n.children()
        if not kids:
            return n
        return n.replace_children(tuple(go(k) for k in kids))

    return go(t)
