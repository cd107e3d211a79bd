import random

import pytest

from imp2fn.datagen import DataGenConfig, gen_pair
from imp2fn.grammar import pair_for_source, shared_terms_of
from imp2fn.inputs import infer_types, input_grid
from imp2fn.interp import (eval_collecting, eval_term, is_trace_compatible)
from imp2fn.parser import parse_imp, parse_lstr
from imp2fn.terms import pretty
from imp2fn.values import BudgetExhausted, UnboundVariable, TypeMismatch, ValueSet, values_equal


def test_loop_body_value_collection():
    # counting loop stepping by two: the body expression takes 1 then 3
    prog = parse_imp(
        "r = []\n"
        "for i in range(0, n): { if i % 2 == 0: { r.add(i + 1) } }\n"
        "return r")
    _, trace = eval_collecting(prog, {"n": 3}, ["( i + 1 )"])
    assert trace.get("( i + 1 )") == ValueSet([1, 3])


def test_map_single_element():
    t = parse_lstr("map(x, \\i. i*5)")
    assert eval_term(t, {"x": [2]}) == [10]


def test_fold_of_empty_list_is_the_seed():
    t = parse_lstr("fold(0, x, \\a,i. a+i)")
    assert eval_term(t, {"x": []}) == 0


def test_odd_filter_trace_differs():
    src = parse_imp("for i in odd(x): print(i*2)")
    tgt = parse_lstr("map(x, \\i. print(i*2))")
    sigma = {"x": [2]}
    _, t_src = eval_collecting(src, sigma, ["( i * 2 )"])
    _, t_tgt = eval_collecting(tgt, sigma, ["( i * 2 )"])
    assert len(t_src.get("( i * 2 )")) == 0  # loop body never runs
    assert t_tgt.get("( i * 2 )") == ValueSet([4])
    assert not is_trace_compatible(src, tgt, sigma, pair_for_source(src))


def test_constant_collection():
    prog = parse_imp("return 5")
    _, trace = eval_collecting(prog, {}, ["5"])
    assert trace.get("5") == ValueSet([5])


def test_unbound_variable_and_type_errors_are_distinct():
    with pytest.raises(UnboundVariable):
        eval_term(parse_imp("return missing + 1"), {})
    with pytest.raises(TypeMismatch):
        eval_term(parse_imp("return x + 1"), {"x": [1]})


def test_budget_exhaustion_is_its_own_error():
    prog = parse_imp("r = []\nfor i in range(0, n): { r.add(i) }\nreturn r")
    with pytest.raises(BudgetExhausted):
        eval_term(prog, {"n": 5000}, budget=100)


def test_trace_compatibility_is_reflexive():
    rng = random.Random(5)
    cfg = DataGenConfig()
    for idx in range(60):
        src, tgt = gen_pair(cfg, 99, idx)
        pair = pair_for_source(src)
        grid = input_grid(infer_types(src), cfg.bounds)
        sigma = grid[rng.randrange(len(grid))]
        for p in (src, tgt):
            assert is_trace_compatible(p, p, sigma, pair, relaxed=False), pretty(p)


def test_collecting_value_matches_plain_eval():
    # 1000 random (program, input) runs across both languages
    cfg = DataGenConfig()
    rng = random.Random(3)
    runs = 0
    idx = 0
    while runs < 1000:
        src, tgt = gen_pair(cfg, 17, idx)
        idx += 1
        pair = pair_for_source(src)
        index = shared_terms_of(src, pair)
        grid = input_grid(infer_types(src), cfg.bounds)
        for sigma in rng.sample(grid, min(4, len(grid))):
            for prog in (src, tgt):
                try:
                    direct = eval_term(prog, sigma)
                except Exception:
                    continue
                collected, _ = eval_collecting(prog, sigma, index)
                assert values_equal(direct, collected)
                runs += 1


def test_pooling_is_monotone_in_occurrences():
    # adding another syntactic occurrence of a watched term never shrinks
    # its value set
    base = parse_imp("r = []\nfor i in x: { r.add(i + 1) }\nreturn r")
    more = parse_imp(
        "r = []\nfor i in x: { r.add(i + 1) }\nif (3 + 1) == 4: { r.add(i + 1) } else: { }\nreturn r")
    sigma = {"x": [1, 5], "i": 0}
    _, t1 = eval_collecting(base, sigma, ["( i + 1 )"])
    _, t2 = eval_collecting(more, sigma, ["( i + 1 )"])
    assert t1.get("( i + 1 )") <= t2.get("( i + 1 )")


def test_lazy_pipeline_stops_at_first_match():
    # find over map: the mapped lambda must not run past the match
    tgt = parse_lstr("find(map(x, \\i. print(i*10)), 0, \\i. i == 10)")
    sigma = {"x": [1, 2, 3]}
    _, trace = eval_collecting(tgt, sigma, ["( i * 10 )"])
    assert trace.get("( i * 10 )") == ValueSet([10])
    assert eval_term(tgt, sigma) == 10


def test_assignment_snapshots_lists():
    # no aliasing: appending to r must not mutate x
    prog = parse_imp("r = x\nr.add(9)\nreturn x")
    assert eval_term(prog, {"x": [1]}) == [1]
