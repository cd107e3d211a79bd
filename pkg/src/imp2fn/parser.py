"""Concrete syntax for both languages (documented in docs/grammar.md).

Imperative programs are statement sequences separated by newlines or ';';
a block after ':' is either one statement or '{ ... }'. The functional
language is a single expression. Both parsers are the inverse of the
canonical printer on canonical forms.
"""

from __future__ import annotations

from .terms import (App, Assign, Const, For, If, Lambda, MethodCall, Return,
                    Seq, Term, Var)
from .values import BUILTINS, METHODS

KEYWORDS = {"for", "if", "else", "in", "not", "return", "true", "false",
            "True", "False", "None"}

TWO_CHAR = ("==", "!=", "<=")
ONE_CHAR = set("()[]{}.,;:\\+-*/%<=")

COMBINATORS = {"map", "filter", "flatmap", "find", "fold"}


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{msg} (line {line}, col {col})")
        self.line = line
        self.col = col


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind  # name | int | str | sym | newline | eof
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind},{self.text!r})"


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            toks.append(Token("newline", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_col = col
        if src[i:i + 2] in TWO_CHAR:
            toks.append(Token("sym", src[i:i + 2], line, start_col))
            i += 2
            col += 2
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("int", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Token("name", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            while j < n and src[j] != '"':
                if src[j] == "\n":
                    raise ParseError("unterminated string", line, start_col)
                j += 1
            if j >= n:
                raise ParseError("unterminated string", line, start_col)
            toks.append(Token("str", src[i + 1:j], line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if c in ONE_CHAR:
            toks.append(Token("sym", c, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0

    # token helpers

    def peek(self, skip_nl: bool = False) -> Token:
        p = self.pos
        if skip_nl:
            while self.toks[p].kind == "newline":
                p += 1
        return self.toks[p]

    def next(self, skip_nl: bool = False) -> Token:
        if skip_nl:
            while self.toks[self.pos].kind == "newline":
                self.pos += 1
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, text: str, skip_nl: bool = False) -> Token:
        t = self.next(skip_nl)
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def at(self, text: str, skip_nl: bool = False) -> bool:
        return self.peek(skip_nl).text == text

    def error(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # statements

    def program(self) -> Term:
        stmts = self.statements(stop_at="eof")
        if not stmts:
            self.error("empty program")
        self.next(skip_nl=True)  # eof
        return Seq(tuple(stmts))

    def statements(self, stop_at: str) -> list[Term]:
        stmts = []
        while True:
            t = self.peek(skip_nl=True)
            if t.kind == "eof" or t.text == stop_at:
                break
            stmts.append(self.statement())
            while self.peek().kind == "newline" or self.at(";"):
                self.next()
        return stmts

    def statement(self) -> Term:
        t = self.peek(skip_nl=True)
        if t.text == "for":
            self.next(skip_nl=True)
            var = self.var_name()
            self.expect("in")
            it = self.expression()
            self.expect(":")
            return For(var, it, self.block())
        if t.text == "if":
            self.next(skip_nl=True)
            cond = self.expression()
            self.expect(":")
            then = self.block()
            orelse: Term = Seq(())
            if self.at("else", skip_nl=True):
                self.next(skip_nl=True)
                self.expect(":")
                orelse = self.block()
            return If(cond, then, orelse)
        if t.text == "return":
            self.next(skip_nl=True)
            return Return(self.expression())
        e = self.expression(skip_leading_nl=True)
        if self.at("="):
            if not isinstance(e, Var):
                self.error("assignment target must be a variable")
            self.next()
            return Assign(e, self.expression())
        if isinstance(e, (MethodCall, App)):
            return e  # invocation / call statement
        self.error("expected a statement")

    def block(self) -> Term:
        if self.at("{", skip_nl=True):
            self.next(skip_nl=True)
            stmts = self.statements(stop_at="}")
            self.expect("}", skip_nl=True)
            return Seq(tuple(stmts))
        return Seq((self.statement(),))

    def var_name(self) -> Var:
        t = self.next(skip_nl=True)
        if t.kind != "name" or t.text in KEYWORDS:
            raise ParseError("expected a variable name", t.line, t.col)
        return Var(t.text)

    # expressions (precedence: comparison < additive < multiplicative
    # < unary < postfix < atom)

    def expression(self, skip_leading_nl: bool = False) -> Term:
        if skip_leading_nl:
            self.peek(skip_nl=True)
            while self.toks[self.pos].kind == "newline":
                self.pos += 1
        return self.comparison()

    def comparison(self) -> Term:
        left = self.additive()
        while self.peek().text in ("==", "!=", "<", "<=", "in"):
            op = self.next().text
            left = App(op, (left, self.additive()))
        return left

    def additive(self) -> Term:
        left = self.multiplicative()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            left = App(op, (left, self.multiplicative()))
        return left

    def multiplicative(self) -> Term:
        left = self.unary()
        while self.peek().text in ("*", "/", "%"):
            op = self.next().text
            left = App(op, (left, self.unary()))
        return left

    def unary(self) -> Term:
        if self.at("not"):
            self.next()
            return App("not", (self.unary(),))
        if self.at("-") and self.toks[self.pos + 1].kind == "int":
            self.next()
            return self.postfix(Const(-int(self.next().text)))
        return self.postfix(self.atom())

    def postfix(self, e: Term) -> Term:
        while self.at("."):
            self.next()
            m = self.next()
            if m.kind != "name":
                raise ParseError("expected a method name", m.line, m.col)
            self.expect("(")
            args = self.call_args()
            e = MethodCall(e, m.text, tuple(args))
        return e

    def call_args(self) -> list[Term]:
        args = []
        if not self.at(")", skip_nl=True):
            args.append(self.expression())
            while self.at(",", skip_nl=True):
                self.next(skip_nl=True)
                args.append(self.expression())
        self.expect(")", skip_nl=True)
        return args

    def atom(self) -> Term:
        t = self.next()
        if t.kind == "int":
            return Const(int(t.text))
        if t.kind == "str":
            return Const(t.text)
        if t.text in ("true", "True"):
            return Const(True)
        if t.text in ("false", "False"):
            return Const(False)
        if t.text == "None":
            return Const(None)
        if t.text == "[":
            self.expect("]")
            return Const(())
        if t.text == "(":
            e = self.expression()
            self.expect(")")
            return e
        if t.kind == "name":
            if self.at("("):
                self.next()
                args = self.call_args()
                return App(t.text, tuple(args))
            return Var(t.text)
        raise ParseError(f"unexpected token {t.text!r}", t.line, t.col)


class _FnParser(_Parser):
    """Functional-language expressions: combinators, lambdas, and the shared
    expression grammar."""

    def fn_program(self) -> Term:
        if self.peek(skip_nl=True).kind == "eof":
            self.error("empty program")
        e = self.fn_expr()
        t = self.next(skip_nl=True)
        if t.kind != "eof":
            raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
        return e

    def fn_expr(self) -> Term:
        t = self.peek(skip_nl=True)
        if t.kind == "name" and t.text in COMBINATORS:
            return self.combinator()
        return self.expression(skip_leading_nl=True)

    def combinator(self) -> Term:
        t = self.next(skip_nl=True)
        name = t.text
        self.expect("(")
        args: list[Term] = []
        if name in ("map", "filter", "flatmap"):
            args.append(self.fn_expr())
            self.expect(",", skip_nl=True)
            args.append(self.lam(1, body_fn=name != "filter"))
        elif name == "find":
            args.append(self.fn_expr())
            self.expect(",", skip_nl=True)
            args.append(self.expression(skip_leading_nl=True))
            self.expect(",", skip_nl=True)
            args.append(self.lam(1, body_fn=False))
        elif name == "fold":
            args.append(self.expression(skip_leading_nl=True))
            self.expect(",", skip_nl=True)
            args.append(self.fn_expr())
            self.expect(",", skip_nl=True)
            args.append(self.lam(2, body_fn=False))
        self.expect(")", skip_nl=True)
        return App(name, tuple(args))

    def lam(self, nparams: int, body_fn: bool) -> Lambda:
        t = self.peek(skip_nl=True)
        if t.text != "\\":
            raise ParseError(f"expected a lambda, found {t.text!r}", t.line, t.col)
        self.next(skip_nl=True)
        params = [self.var_name()]
        while self.at(",", skip_nl=True):
            self.next(skip_nl=True)
            params.append(self.var_name())
        if len(params) != nparams:
            t = self.peek()
            raise ParseError(f"lambda must bind {nparams} variable(s)", t.line, t.col)
        self.expect(".")
        body = self.fn_expr() if body_fn else self.expression(skip_leading_nl=True)
        return Lambda(tuple(params), body)


def _check_pure_expr(t: Term, where: str = "expression"):
    """Shared expressions may not contain combinators or lambdas."""
    for n in t.children():
        _check_pure_expr(n, where)
    if isinstance(t, App) and t.fn in COMBINATORS:
        raise ParseError(f"combinator not allowed in {where}", 0, 0)
    if isinstance(t, Lambda):
        raise ParseError(f"lambda not allowed in {where}", 0, 0)
    if isinstance(t, App) and t.fn not in BUILTINS:
        raise ParseError(f"unknown function {t.fn!r}", 0, 0)
    if isinstance(t, MethodCall) and t.method not in METHODS:
        raise ParseError(f"unknown method {t.method!r}", 0, 0)


def _validate_fn(t: Term):
    if isinstance(t, App) and t.fn in COMBINATORS:
        if t.fn in ("map", "flatmap"):
            _validate_fn(t.args[0])
            _validate_fn(t.args[1].body)
        elif t.fn == "filter":
            _validate_fn(t.args[0])
            _check_pure_expr(t.args[1].body, "a filter predicate")
        elif t.fn == "find":
            _validate_fn(t.args[0])
            _check_pure_expr(t.args[1], "a find default")
            _check_pure_expr(t.args[2].body, "a find predicate")
        elif t.fn == "fold":
            _check_pure_expr(t.args[0], "a fold seed")
            _validate_fn(t.args[1])
            _check_pure_expr(t.args[2].body, "a fold body")
    else:
        _check_pure_expr(t)


def _validate_imp(t: Term):
    if isinstance(t, (Seq, For, If, Assign, Return)):
        if isinstance(t, For):
            _check_pure_expr(t.iterable)
            _validate_imp(t.body)
        elif isinstance(t, If):
            _check_pure_expr(t.cond)
            _validate_imp(t.then)
            _validate_imp(t.orelse)
        elif isinstance(t, Seq):
            for s in t.stmts:
                _validate_imp(s)
        elif isinstance(t, Assign):
            _check_pure_expr(t.rhs)
        else:
            _check_pure_expr(t.value)
    elif isinstance(t, MethodCall):
        if t.method != "add" and t.method not in METHODS:
            raise ParseError(f"unknown method {t.method!r}", 0, 0)
        for a in t.args:
            _check_pure_expr(a)
        _check_pure_expr(t.recv)
    elif isinstance(t, App):
        _check_pure_expr(t)
    else:
        raise ParseError("expected a statement", 0, 0)


def parse_imp(text: str) -> Term:
    """Parse an imperative program. Unknown identifiers are fine (resolved at
    eval time); unknown functions/methods are not."""
    prog = _Parser(text).program()
    _validate_imp(prog)
    return prog


def parse_lstr(text: str) -> Term:
    """Parse a functional program, rejecting shapes outside the combinator
    grammar (e.g. a non-lambda where a lambda is required)."""
    prog = _FnParser(text).fn_program()
    _validate_fn(prog)
    return prog
