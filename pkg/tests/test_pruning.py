import random

import pytest

from imp2fn.grammar import pair_for_source, shared_terms_of
from imp2fn.interp import eval_term, is_trace_compatible
from imp2fn.parser import parse_imp, parse_lstr
from imp2fn.pruning import (PruneStats, feasible_on, is_feasible, judge_up,
                            judge_updown, make_context, root_env,
                            shared_candidate_values)
from imp2fn.symbolic import (CEq, CGt, SCand, SConc, SVar, sat_eq, TRUE)
from imp2fn.terms import App, Const, Hole, Lambda, Var, pretty
from imp2fn.values import EvalError, is_int, values_equal

from oracle import (enumerate_completions, random_instances, run_instance)

PRIME_SRC = """
r = []
for i1 in x1: { for i2 in x2: { if prime(i1*i2+1): { r.add(i1) } } }
return r
"""
PRIME_SIGMA = {"x1": [1, 2, 3, 4, 5], "x2": [11, 70, 61, 72, 61]}


def _prime_ctx(mode="bidir"):
    src = parse_imp(PRIME_SRC)
    return src, make_context(src, PRIME_SIGMA, pair_for_source(src), mode=mode)


def test_prime_source_output():
    src = parse_imp(PRIME_SRC)
    assert eval_term(src, PRIME_SIGMA) == [1, 1, 2, 3, 4]


def test_unshared_hole_judges_to_fresh_variable():
    _, ctx = _prime_ctx()
    res = judge_up(ctx, Hole("A", 0), root_env(ctx))
    assert len(res) == 1 and isinstance(list(res)[0], SVar)


def test_shared_hole_judges_to_trace_candidates():
    _, ctx = _prime_ctx()
    res = judge_up(ctx, Hole("E", 0), root_env(ctx))
    (psi,) = list(res)
    assert isinstance(psi, SCand)
    ints = [v for v in psi.cands if is_int(v)]
    assert len(ints) == 45 and all(v >= 1 for v in ints)


def test_variable_judges_to_its_input_value():
    src = parse_imp("r = []\nfor i in x: { r.add(i) }\nreturn r")
    ctx = make_context(src, {"x": [2]}, pair_for_source(src))
    res = judge_up(ctx, Var("x"), root_env(ctx))
    (psi,) = list(res)
    assert isinstance(psi, SConc) and values_equal(psi.value, [2])


def test_prime_candidate_is_pruned_in_both_modes():
    cand = App("map", (Hole("A", 0), Lambda(
        (Var("i1"),), App("*", (Hole("E", 1),
                                App("+", (Hole("E", 2), Hole("E", 3))))))))
    for mode in ("bidir", "forward"):
        src, ctx = _prime_ctx(mode)
        assert not feasible_on(ctx, cand)


def test_bidirectional_does_less_forward_work():
    cand = App("map", (Hole("A", 0), Lambda(
        (Var("i1"),), App("*", (Hole("E", 1),
                                App("+", (Hole("E", 2), Hole("E", 3))))))))
    counts = {}
    for mode in ("bidir", "forward"):
        _, ctx = _prime_ctx(mode)
        feasible_on(ctx, cand)
        counts[mode] = ctx.stats.forward_evals
    assert counts["bidir"] <= counts["forward"]
    assert counts["bidir"] < counts["forward"]  # strictly better here


def test_lone_hole_is_always_feasible():
    src, _ = _prime_ctx()
    pair = pair_for_source(src)
    assert is_feasible(src, Hole("A", 0), [PRIME_SIGMA], pair)


def test_fig3_shape_is_pruned():
    src = parse_imp(
        "roles = []\n"
        "for policy in policies: { for role in policy.getRoles(): "
        "{ if contains(role.getIDs(), uID): { roles.add(role.getName()) } } }\n"
        "return roles")
    r1, r2 = [[7, 8], "n1"], [[5, 6], "n2"]
    r3, r4 = [[1, 2], "n3"], [[3, 4], "n4"]
    sigma = {"policies": [["p1", [r1, r2]], ["p2", [r3, r4]]], "uID": 7}
    assert eval_term(src, sigma) == ["n1"]
    pair = pair_for_source(src)
    cand = App("map", (
        App("flatmap", (Hole("A", 0), Lambda((Var("policy"),), Hole("E", 1)))),
        Lambda((Var("role"),), Hole("E", 2))))
    for mode in ("bidir", "forward"):
        ctx = make_context(src, sigma, pair, mode=mode)
        assert not feasible_on(ctx, cand)


def test_judge_updown_with_true_spec_matches_judge_up():
    src, ctx = _prime_ctx()
    probes = [
        Hole("E", 0),
        App("+", (Hole("E", 1), Const(1))),
        Var("x1"),
    ]
    for e in probes:
        up = judge_up(ctx, e, root_env(ctx))
        both = judge_updown(ctx, e, root_env(ctx), TRUE)
        assert [repr(type(v)) for v in up] == [repr(type(v)) for v in both]


def test_plus_child_specification_example():
    # +(N1, N2) under y > 0 with the first argument judged 1 gives the
    # second argument the specification y > -1
    from imp2fn.symbolic import backward, sat_constraint
    spec = backward("+", 2, CGt(0), earlier=(SConc(1),))
    assert spec == CGt(-1)
    assert not sat_constraint(spec, SConc(-5))


def test_notrace_mode_treats_shared_holes_as_fresh():
    src, ctx = _prime_ctx("notrace")
    res = judge_up(ctx, Hole("E", 0), root_env(ctx))
    (psi,) = list(res)
    assert isinstance(psi, SVar)


def test_none_mode_never_prunes():
    src = parse_imp(PRIME_SRC)
    pair = pair_for_source(src)
    cand = App("map", (Hole("A", 0), Lambda(
        (Var("i1"),), App("*", (Hole("E", 1),
                                App("+", (Hole("E", 2), Hole("E", 3))))))))
    assert is_feasible(src, cand, [PRIME_SIGMA], pair, mode="none")


def test_source_eval_failure_skips_the_input():
    src = parse_imp("return x / n")
    pair = pair_for_source(src)
    # n = 0 fails; the candidate survives because nothing constrains it
    ok = is_feasible(src, Hole("A", 0), [{"x": 4, "n": 0}], pair)
    assert ok


def test_empty_shared_candidates_make_the_hole_infeasible():
    src = parse_imp("return x")
    pair = pair_for_source(src)
    ctx = make_context(src, {"x": 3}, pair)
    assert shared_candidate_values(ctx, "C") == []
    res = judge_up(ctx, Hole("C", 0), root_env(ctx))
    assert len(res) == 0


# ---- randomized soundness properties (the full-size runs live in the
# acceptance suite; these smaller ones keep the module self-checking)

def test_pruning_soundness_small_fuzz():
    violations = []
    uni_bi_mismatches = []
    for inst in random_instances(n=150, seed=20):
        report = run_instance(inst)
        if report.mismatch:
            uni_bi_mismatches.append(report)
        violations.extend(report.violations)
    assert not uni_bi_mismatches, uni_bi_mismatches[:3]
    assert not violations, violations[:3]


def test_inclusion_lemma_on_complete_candidates():
    # a trace-compatible complete candidate's judged set always covers its
    # actual value
    rng = random.Random(77)
    checked = 0
    for inst in random_instances(n=120, seed=21, complete_only=True):
        src, sigma, cand, pair = inst.source, inst.sigma, inst.candidate, inst.pair
        try:
            if not is_trace_compatible(src, cand, sigma, pair):
                continue
            actual = eval_term(cand, sigma)
        except EvalError:
            continue
        ctx = make_context(src, sigma, pair, mode="forward")
        res = judge_up(ctx, cand, root_env(ctx))
        if res.overflow:
            continue
        assert any(sat_eq(psi, actual, ctx.universe) is not None for psi in res), \
            (pretty(cand), sigma, actual)
        checked += 1
    assert checked >= 20
