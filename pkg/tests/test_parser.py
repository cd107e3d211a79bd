import random

import pytest

from imp2fn.grammar import build_pair, pools_from_source, Pools, random_term
from imp2fn.parser import ParseError, parse_imp, parse_lstr
from imp2fn.terms import (App, Assign, Const, For, If, Lambda, MethodCall,
                          Return, Seq, Var, pretty)


def test_map_loop_shape():
    prog = parse_imp("r = []\nfor i in x:\n  r.add(i*5)\nreturn r")
    assert isinstance(prog, Seq)
    assign, loop, ret = prog.stmts
    assert assign == Assign(Var("r"), Const(()))
    assert isinstance(loop, For) and loop.var == Var("i")
    body = loop.body.stmts[0]
    assert isinstance(body, MethodCall) and body.method == "add"
    assert body.args[0] == App("*", (Var("i"), Const(5)))
    assert isinstance(ret, Return)


def test_empty_program_is_an_error():
    with pytest.raises(ParseError):
        parse_imp("")
    with pytest.raises(ParseError):
        parse_lstr("   \n  ")


def test_nested_prime_filter_loop():
    prog = parse_imp(
        "r = []\n"
        "for i1 in x1: { for i2 in x2: { if prime(i1*i2+1): { r.add(i1) } } }\n"
        "return r")
    outer = prog.stmts[1]
    assert isinstance(outer, For)
    inner = outer.body.stmts[0]
    assert isinstance(inner, For)
    guard = inner.body.stmts[0]
    assert isinstance(guard, If)
    assert guard.cond == App("prime", (App("+", (App("*", (Var("i1"), Var("i2"))), Const(1))),))


def test_single_statement_loop_body_without_braces():
    prog = parse_imp("for i in x: print(i)\nreturn x")
    assert isinstance(prog.stmts[0], For)
    assert isinstance(prog.stmts[1], Return)


def test_lstr_map_lambda():
    t = parse_lstr("map(x, \\i. i*5)")
    assert t == App("map", (Var("x"), Lambda((Var("i"),), App("*", (Var("i"), Const(5))))))


def test_lstr_fold_two_binders():
    t = parse_lstr("fold(0, x, \\a,i. a+i)")
    assert t.fn == "fold"
    assert t.args[0] == Const(0)
    lam = t.args[2]
    assert [p.name for p in lam.params] == ["a", "i"]


def test_lstr_rejects_non_lambda_argument():
    with pytest.raises(ParseError):
        parse_lstr("map(x, y)")
    with pytest.raises(ParseError):
        parse_lstr("map(x, \\a,b. a)")  # wrong lambda arity
    with pytest.raises(ParseError):
        parse_lstr("filter(x, \\i. map(x, \\j. j))")  # combinator in a predicate


def test_find_surface_order_is_list_default_lambda():
    t = parse_lstr("find(map(x, \\i. i+1), None, \\i. true)")
    assert t.fn == "find"
    assert t.args[0].fn == "map"
    assert t.args[1] == Const(None)


def test_unknown_function_rejected_but_unknown_variable_ok():
    parse_imp("return somevar")
    with pytest.raises(ParseError):
        parse_imp("return somefunc(1)")
    with pytest.raises(ParseError):
        parse_lstr("x.mystery()")


def test_negative_literals_and_strings_roundtrip():
    t = parse_lstr('fold(-3, x, \\a,i. a+i)')
    assert t.args[0] == Const(-3)
    t2 = parse_imp('return "Ab"')
    assert t2.stmts[0].value == Const("Ab")


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as e:
        parse_imp("r = \nreturn r")
    assert "line" in str(e.value)


def test_parse_print_roundtrip_on_random_corpus():
    # parse . print is the identity on canonical forms, both languages
    pools = Pools(("x", "y", "i", "s"), (0, 1, True, "a", None, ()),
                  ("+", "*", "==", "in", "not", "prime", "lower", "len", "range"),
                  ("getRoles", "getIDs", "getName"))
    pair = build_pair(pools)
    rng = random.Random(11)
    for k in range(1000):
        grammar, start, parse = (pair.source, "S", parse_imp) if k % 2 == 0 else \
            (pair.target, "A", parse_lstr)
        t = random_term(grammar, start, rng.randint(1, 5), rng)
        text = pretty(t)
        assert pretty(parse(text)) == text, text
