import itertools
import random

import pytest

from imp2fn.symbolic import (CAnd, CEq, CFalse, CGt, CLenEq, CLenGeq, CLenLeq,
                             CContains, CImplies, CSubarr, CSubseq, SApp,
                             SCand, SConc, SList, SVar, SymGen, TRUE, Universe,
                             backward, forward, sat_constraint, sat_eq)
from imp2fn.values import EvalError, values_equal


def cand(gen, *values):
    return gen.cand(values)


def test_candvar_witness():
    gen = SymGen()
    v = cand(gen, 1, 2, 3)
    w = sat_eq(v, 2)
    assert w is not None and w[v.vid] == 2
    assert sat_eq(v, 9) is None


def test_freshvar_is_unconstrained():
    gen = SymGen()
    assert sat_eq(gen.var("int"), 42) is not None
    assert sat_eq(gen.var("bool"), 42) is None  # wrong type tag


def test_prime_example_product_cannot_be_one():
    # all candidate values are >= 1, so v1 * (v2 + v3) >= 2
    gen = SymGen()
    domain = list(range(1, 46))
    expr = SApp("*", (cand(gen, *domain),
                      SApp("+", (cand(gen, *domain), cand(gen, *domain)))))
    assert sat_eq(expr, 1) is None
    assert sat_eq(expr, 2) is not None  # 1 * (1 + 1)


def test_sat_eq_agrees_with_bruteforce_oracle():
    # enumerate every assignment of the candidate variables and compare
    rng = random.Random(1)
    ops = ["+", "-", "*"]
    for trial in range(300):
        gen = SymGen()
        n_vars = rng.randint(1, 3)
        domains = [[rng.randint(-4, 6) for _ in range(rng.randint(1, 8))]
                   for _ in range(n_vars)]
        vars_ = [cand(gen, *d) for d in domains]
        shape = rng.choice(["flat", "nested"])
        if shape == "flat" or n_vars == 1:
            expr = vars_[0]
            for v in vars_[1:]:
                expr = SApp(rng.choice(ops), (expr, v))
        else:
            inner = SApp(rng.choice(ops), (vars_[-2], vars_[-1]))
            expr = SApp(rng.choice(ops), (vars_[0], inner)) if n_vars == 3 else inner
        target = rng.randint(-10, 10)

        def brute():
            for combo in itertools.product(*[set(d) for d in domains]):
                env = {v.vid: c for v, c in zip(vars_, combo)}

                def ev(e):
                    if isinstance(e, SCand):
                        return env[e.vid]
                    from imp2fn.values import BUILTINS
                    return BUILTINS[e.fn](*[ev(a) for a in e.args])

                if ev(expr) == target:
                    return True
            return False

        got = sat_eq(expr, target) is not None
        assert got == brute(), (trial, expr, target)


def test_symlist_unifies_elementwise():
    gen = SymGen()
    a, b = gen.var("int"), gen.var("int")
    w = sat_eq(SList((a, b)), [1, 2])
    assert w is not None and w[a.vid] == 1 and w[b.vid] == 2
    assert sat_eq(SList((a, b)), [1, 2, 3]) is None


def test_guarded_slots_match_as_subsequence():
    gen = SymGen()
    g1, g2 = gen.var("bool"), gen.var("bool")
    sl = SList((SConc(1), SConc(2), SConc(3)), (None, g1, g2))
    assert sat_eq(sl, [1, 3]) is not None
    assert sat_eq(sl, [1, 2, 3]) is not None
    assert sat_eq(sl, [2, 3]) is None  # slot 0 is unconditional


def test_len_constraints():
    gen = SymGen()
    assert sat_constraint(CLenEq(3), SList((SConc(1), SConc(2), SConc(3))))
    assert not sat_constraint(CLenEq(3), SList((SConc(1), SConc(2))))
    assert sat_constraint(CLenEq(0), gen.var("list"))
    assert not sat_constraint(CLenEq(2), SConc(7))


def test_plus_inverse_shifts_inequalities():
    # specification y > 0 for a sum whose first argument is 1 becomes
    # y > -1 for the second argument; -5 does not satisfy it
    spec = backward("+", 2, CGt(0), earlier=(SConc(1),))
    assert spec == CGt(-1)
    assert not sat_constraint(spec, SConc(-5))
    assert sat_constraint(spec, SConc(0))


def test_constraint_forms_from_rows():
    out = [SConc(x) for x in (1, 2, 3)]
    row = backward("map", 1, CEq(SConc([1, 2, 3])))
    assert row == CLenEq(3)
    row = backward("filter", 1, CEq(SConc([1, 2])))
    assert isinstance(row, CAnd)
    assert any(isinstance(p, CLenGeq) and p.n == 2 for p in row.parts)
    assert any(isinstance(p, CSubseq) for p in row.parts)
    row = backward("flatmap", 2, CEq(SConc([1, 2, 3])))
    assert isinstance(row, CAnd)
    assert any(isinstance(p, CSubarr) for p in row.parts)
    assert any(isinstance(p, CLenLeq) and p.n == 3 for p in row.parts)
    assert backward("fold", 2, CEq(SConc(5)), earlier=(SConc(0),)) == TRUE
    assert backward("find", 1, CEq(SConc(5))) == TRUE


def test_forward_rows():
    gen = SymGen()
    a, b = SConc(10), SConc(20)
    res = forward("map", SList((SConc(1), SConc(2))), [a, b])
    assert isinstance(res, SList) and res.elems == (a, b)
    assert forward("fold", SConc(0), SList(()), []) == SConc(0)
    res = forward("flatmap", SList((SConc(1),)), [SConc([4, 5])])
    assert [e.value for e in res.elems] == [4, 5]
    res = forward("filter", SList((SConc(1), SConc(2))), [SConc(True), SConc(False)])
    assert [e.value for e in res.elems] == [1]
    assert forward("find", SConc(0), SList((SConc(3),)), [SConc(True)]) == SConc(3)
    assert forward("find", SConc(0), SList((SConc(3),)), [SConc(False)]) == SConc(0)


def _random_concrete_args(rng):
    xs = [rng.randint(-3, 5) for _ in range(rng.randint(0, 4))]
    return xs


def test_forward_soundness_on_concrete_instances():
    # for concrete arguments, the forward row folds to the concrete result
    from imp2fn.interp import eval_term
    from imp2fn.parser import parse_lstr
    rng = random.Random(7)
    for _ in range(500):
        xs = _random_concrete_args(rng)
        k = rng.choice((2, 3, 5))
        prog = {
            "map": f"map(x, \\i. i*{k})",
            "filter": f"filter(x, \\i. i < {k})",
            "flatmap": "flatmap(x, \\i. range(0, i))",
            "fold": f"fold({k}, x, \\a,i. a+i)",
            "find": f"find(x, {k}, \\i. i % 2 == 0)",
        }[rng.choice(("map", "filter", "flatmap", "fold", "find"))]
        t = parse_lstr(prog)
        concrete = eval_term(t, {"x": xs})
        name = t.fn
        elems = SList(tuple(SConc(v) for v in xs))
        if name in ("map", "flatmap", "filter"):
            lam = t.args[1]
            results = [SConc(eval_term(lam.body, {"i": v})) for v in xs]
            psi = forward(name, elems, results)
            assert sat_eq(psi, concrete) is not None
        elif name == "fold":
            acc = t.args[0].value
            steps = []
            for v in xs:
                acc = acc + v
                steps.append(SConc(acc))
            psi = forward("fold", SConc(t.args[0].value), elems, steps)
            assert sat_eq(psi, concrete) is not None
        else:
            marks = [SConc(v % 2 == 0) for v in xs]
            prefix_end = len(xs)
            for i, m in enumerate(marks):
                if m.value:
                    prefix_end = i + 1
                    break
            psi = forward("find", SConc(t.args[1].value),
                          SList(tuple(SConc(v) for v in xs[:prefix_end])),
                          marks[:prefix_end])
            assert sat_eq(psi, concrete) is not None


def test_backward_soundness_randomized():
    # whenever the forward result satisfies the output spec, each
    # per-argument backward row is satisfiable on the actual argument
    rng = random.Random(13)
    for _ in range(200):
        xs = _random_concrete_args(rng)
        elems = SList(tuple(SConc(v) for v in xs))
        # map
        mapped = [SConc(v + 1) for v in xs]
        out = [v + 1 for v in xs]
        phi = CEq(SConc(out))
        assert sat_constraint(backward("map", 1, phi), elems)
        for i, v in enumerate(xs):
            spec = backward("map", 2, phi, position=i)
            assert sat_constraint(spec, mapped[i])
        # filter
        marks = [SConc(v % 2 == 0) for v in xs]
        out_f = [v for v in xs if v % 2 == 0]
        phi = CEq(SConc(out_f))
        assert sat_constraint(backward("filter", 1, phi), elems)
        for v, m in zip(xs, marks):
            spec = backward("filter", 2, phi, element=SConc(v))
            assert sat_constraint(spec, m)
        # flatmap
        inner = [list(range(0, max(v, 0))) for v in xs]
        out_fm = [w for ws in inner for w in ws]
        phi = CEq(SConc(out_fm))
        assert sat_constraint(backward("flatmap", 1, phi), elems)
        for ws in inner:
            spec = backward("flatmap", 2, phi)
            assert sat_constraint(spec, SConc(ws))
        # fold
        acc = 0
        steps = []
        for v in xs:
            acc += v
            steps.append(acc)
        phi = CEq(SConc(acc))
        assert sat_constraint(backward("fold", 1, phi), SConc(0))
        assert sat_constraint(backward("fold", 2, phi, earlier=(SConc(0),)), elems)
        for i, step in enumerate(steps):
            spec = backward("fold", 3, phi, element=SConc(xs[i]),
                            is_final=i == len(xs) - 1)
            assert sat_constraint(spec, SConc(step))
        # find (short-circuit prefix only)
        default = 99
        found = next((v for v in xs if v > 2), default)
        phi = CEq(SConc(found))
        assert sat_constraint(backward("find", 1, phi), SConc(default))
        assert sat_constraint(backward("find", 2, phi, earlier=(SConc(default),)), elems)
        for v in xs:
            mark = v > 2
            spec = backward("find", 3, phi, element=SConc(v))
            assert sat_constraint(spec, SConc(mark))
            if mark:
                break


def test_find_membership_row():
    # a found value different from the default must come from the list
    gen = SymGen()
    phi = CEq(SConc(7))
    spec = backward("find", 2, phi, earlier=(SConc(0),))
    assert isinstance(spec, CImplies)
    assert sat_constraint(spec, SConc([5, 7]))
    assert not sat_constraint(spec, SConc([5, 6]))
    # output equal to the default: the list is unconstrained
    spec0 = backward("find", 2, CEq(SConc(0)), earlier=(SConc(0),))
    assert sat_constraint(spec0, SConc([5, 6]))


def test_multiplication_inverse_requires_divisibility():
    spec = backward("*", 2, CEq(SConc(7)), earlier=(SConc(2),))
    assert isinstance(spec, CFalse)
    spec = backward("*", 2, CEq(SConc(6)), earlier=(SConc(2),))
    assert isinstance(spec, CEq) and spec.rhs == SConc(3)
    assert backward("*", 1, CEq(SConc(6))) == TRUE


def test_contains_constraint():
    gen = SymGen()
    assert sat_constraint(CContains(SConc(2)), SList((SConc(1), SConc(2))))
    assert not sat_constraint(CContains(SConc(9)), SList((SConc(1), SConc(2))))
    assert sat_constraint(CContains(cand(gen, 3, 9)), SList((SConc(1), SConc(9))))
