"""Synthetic training pairs: a type-directed sampler over the functional
language and the compositional functional-to-imperative reverse
translator. Every emitted pair is differentially checked on the bounded
input grid before it is written, so the corpus is correct by construction.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from .inputs import InputBounds, infer_types, input_grid
from .interp import eval_term
from .parser import parse_imp, parse_lstr
from .terms import (App, Assign, Const, For, If, Lambda, MethodCall, Return,
                    Seq, Term, Var, pretty, subterms)
from .values import EvalError, TBool, TInt, TList, TStr, values_equal

log = logging.getLogger(__name__)

DEFAULT_COMBINATOR_WEIGHTS = {
    "map": 0.30, "filter": 0.22, "flatmap": 0.16, "find": 0.14, "fold": 0.18,
}


@dataclass
class DataGenConfig:
    max_depth: int = 3
    combinator_weights: dict = field(default_factory=lambda: dict(DEFAULT_COMBINATOR_WEIGHTS))
    # typed input variables the sampler may mention
    variables: dict = field(default_factory=lambda: {
        "x": TList(TInt), "y": TList(TInt), "z": TList(TStr), "z2": TList(TStr),
        "n": TInt,
    })
    record_variables: dict = field(default_factory=lambda: {
        "policies": TList("policy"), "uID": TInt,
    })
    record_probability: float = 0.25       # fraction of samples over record data
    string_pipeline_probability: float = 0.12  # filter/map/find chains over strings
    int_consts: tuple = (0, 1, 2, 3, 5)
    fuse_probability: float = 0.0  # loop fusion in the translated source
    bounds: InputBounds = field(default_factory=lambda: InputBounds(lists_per_type=8, max_grid=64))


class _Sampler:
    def __init__(self, cfg: DataGenConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng
        self.binder_n = 0

    def fresh_binder(self) -> str:
        self.binder_n += 1
        return f"i{self.binder_n}"

    def list_vars(self, elem_t=None) -> list[str]:
        out = []
        for name, t in self.cfg.variables.items():
            if isinstance(t, tuple) and t[0] == "list":
                if elem_t is None or t[1] == elem_t:
                    out.append(name)
        return out

    def sample_program(self, depth: int) -> Term:
        names = list(self.cfg.combinator_weights)
        weights = [self.cfg.combinator_weights[n] for n in names]
        top = self.rng.choices(names, weights)[0]
        return self.combinator(top, depth, {})

    def combinator(self, name: str, depth: int, scope: dict) -> Term:
        elem_t = TInt if not self.list_vars(TStr) or self.rng.random() < 0.75 else TStr
        src, src_elem = self.list_expr(elem_t, depth - 1, scope)
        binder = self.fresh_binder()
        inner = dict(scope)
        inner[binder] = src_elem
        if name == "map":
            if self.rng.random() < 0.12 and scope:
                # constant map over an enclosing binder (collect the outer
                # element once per inner hit)
                body: Term = Var(self.rng.choice(sorted(scope)))
            else:
                body = self.scalar_expr(src_elem, inner, must_use=binder)
            return App("map", (src, Lambda((Var(binder),), body)))
        if name == "filter":
            body = self.predicate(src_elem, inner, binder)
            return App("filter", (src, Lambda((Var(binder),), body)))
        if name == "flatmap":
            if depth >= 2 and self.rng.random() < 0.7:
                body = self.combinator(self.rng.choice(["map", "filter"]), depth - 1, inner)
            else:
                body, _ = self.list_expr(src_elem, 0, inner)
            return App("flatmap", (src, Lambda((Var(binder),), body)))
        if name == "find":
            default = Const(None) if self.rng.random() < 0.5 else self.leaf(src_elem, scope)
            if self.rng.random() < 0.12:
                body: Term = Const(True)  # head-of-pipeline idiom
            else:
                body = self.predicate(src_elem, inner, binder)
            return App("find", (src, default, Lambda((Var(binder),), body)))
        # fold
        acc = self.fresh_binder()
        inner[acc] = src_elem if src_elem == TInt else TInt
        init = Const(self.rng.choice((0, 0, 1))) if inner[acc] == TInt else Const(0)
        body = self.fold_body(acc, binder, src_elem, inner)
        return App("fold", (init, src, Lambda((Var(acc), Var(binder)), body)))

    def list_expr(self, elem_t, depth: int, scope: dict):
        """A list-typed expression and its element type."""
        in_scope = [n for n, t in scope.items()
                    if isinstance(t, tuple) and t[0] == "list" and t[1] == elem_t]
        choices = ["var"] * 3 + (["range"] * 2 if elem_t == TInt else []) + \
            (["nested"] if depth >= 1 else [])
        kind = self.rng.choice(choices)
        if kind == "nested":
            inner_name = self.rng.choice(["map", "filter"])
            return self.combinator(inner_name, depth, scope), elem_t
        if kind == "range" and elem_t == TInt:
            # real loops overwhelmingly count from zero up to a variable
            lo = Const(0) if self.rng.random() < 0.55 else self.leaf(TInt, scope)
            int_vars = [n for n, t in {**self.cfg.variables, **scope}.items() if t == TInt]
            hi = Var(self.rng.choice(int_vars)) if int_vars and self.rng.random() < 0.7 \
                else self.leaf(TInt, scope)
            return App("range", (lo, hi)), TInt
        pool = in_scope + self.list_vars(elem_t)
        if not pool:
            return App("range", (Const(0), Const(3))), TInt
        return Var(self.rng.choice(pool)), elem_t

    def leaf(self, t, scope: dict) -> Term:
        named = [n for n, st in scope.items() if st == t]
        named += [n for n, st in self.cfg.variables.items() if st == t]
        if t == TInt:
            if named and self.rng.random() < 0.5:
                return Var(self.rng.choice(named))
            return Const(self.rng.choice(self.cfg.int_consts))
        if t == TStr:
            if named:
                return Var(self.rng.choice(named))
            return Const("a")
        if named:
            return Var(self.rng.choice(named))
        return Const(0)

    def scalar_expr(self, t, scope: dict, must_use: Optional[str] = None) -> Term:
        v = Var(must_use) if must_use else self.leaf(t, scope)
        if t == TInt:
            op = self.rng.choice(("+", "-", "*", "*", "+", "%"))
            other = self.leaf(TInt, scope)
            if op == "%":
                other = Const(self.rng.choice((2, 3, 5)))
            e = App(op, (v, other))
            if self.rng.random() < 0.2:
                e = App(self.rng.choice(("+", "*")), (e, self.leaf(TInt, scope)))
            return e
        if t == TStr:
            return App("lower", (v,))
        return v

    def predicate(self, elem_t, scope: dict, binder: str) -> Term:
        v = Var(binder)
        if elem_t == TInt:
            kind = self.rng.choice(("cmp", "cmp", "mod", "prime", "prime2", "member"))
            if kind == "cmp":
                return App(self.rng.choice(("<", "<=", "==", "!=")),
                           (v, self.leaf(TInt, scope)))
            if kind == "mod":
                return App("==", (App("%", (v, Const(self.rng.choice((2, 3))))),
                                  Const(self.rng.choice((0, 1)))))
            if kind == "prime":
                return App("prime", (v,))
            if kind == "prime2":
                other = self.leaf(TInt, scope)
                return App("prime", (App("+", (App("*", (v, other)), Const(1))),))
            pool = self.list_vars(TInt)
            if pool:
                return App("in", (v, Var(self.rng.choice(pool))))
            return App("<", (v, Const(3)))
        pool = self.list_vars(TStr)
        if pool:
            return App("in", (v, Var(self.rng.choice(pool))))
        return App("==", (App("lower", (v,)), v))

    def fold_body(self, acc: str, binder: str, elem_t, scope: dict) -> Term:
        a, i = Var(acc), Var(binder)
        if elem_t == TInt:
            kind = self.rng.choice(("sum", "sum", "prod", "count", "mix"))
            if kind == "sum":
                return App("+", (a, i))
            if kind == "prod":
                return App("*", (a, i))
            if kind == "count":
                return App("+", (a, Const(1)))
            return App("+", (App("*", (a, Const(2))), i))
        return App("+", (a, Const(1)))

    # record-flavored pipelines (policies/roles), so copy statistics also
    # cover method-call shapes

    def sample_record_program(self, depth: int) -> Term:
        rng = self.rng
        expr: Term = Var("policies")
        elem = "policy"
        used = {"policies", "uID"}

        def binder(base: str) -> str:
            if base not in used:
                used.add(base)
                return base
            return self.fresh_binder()

        for _ in range(rng.randint(1, max(2, depth))):
            if elem == "policy":
                b = binder("policy")
                if rng.random() < 0.8:
                    expr = App("flatmap", (expr, Lambda(
                        (Var(b),), MethodCall(Var(b), "getRoles", ()))))
                    elem = "role"
                else:
                    pred = App("<=", (App("len", (MethodCall(Var(b), "getRoles", ()),)),
                                      Const(rng.choice((1, 2)))))
                    expr = App("filter", (expr, Lambda((Var(b),), pred)))
            elif elem == "role":
                b = binder("role")
                kind = rng.choice(("filter", "filter", "name", "ids", "find"))
                if kind == "filter":
                    pred = App("contains", (MethodCall(Var(b), "getIDs", ()), Var("uID")))
                    expr = App("filter", (expr, Lambda((Var(b),), pred)))
                elif kind == "name":
                    expr = App("map", (expr, Lambda(
                        (Var(b),), MethodCall(Var(b), "getName", ()))))
                    elem = TStr
                elif kind == "ids":
                    expr = App("flatmap", (expr, Lambda(
                        (Var(b),), MethodCall(Var(b), "getIDs", ()))))
                    elem = TInt
                else:
                    pred = App("contains", (MethodCall(Var(b), "getIDs", ()), Var("uID")))
                    return App("find", (expr, Const(None), Lambda((Var(b),), pred)))
            elif elem == TStr:
                b = binder("s")
                if rng.random() < 0.6:
                    expr = App("map", (expr, Lambda((Var(b),), App("lower", (Var(b),)))))
                else:
                    acc = binder("c")
                    return App("fold", (Const(0), expr,
                                        Lambda((Var(acc), Var(b)), App("+", (Var(acc), Const(1))))))
            else:  # int elements
                b = binder("i")
                kind = rng.choice(("prime", "sum", "scale"))
                if kind == "prime":
                    expr = App("filter", (expr, Lambda((Var(b),), App("prime", (Var(b),)))))
                elif kind == "sum":
                    acc = binder("a")
                    return App("fold", (Const(0), expr,
                                        Lambda((Var(acc), Var(b)), App("+", (Var(acc), Var(b))))))
                else:
                    expr = App("map", (expr, Lambda(
                        (Var(b),), App("*", (Var(b), Const(rng.choice((2, 3))))))))
        return expr

    def sample_string_pipeline(self, depth: int) -> Term:
        """filter-by-membership / lowercase / take-first chains, the shape
        of string-search loops."""
        rng = self.rng
        pools = [v for v, t in self.cfg.variables.items() if t == TList(TStr)]
        base = rng.choice(pools)
        b1 = self.fresh_binder()
        other = rng.choice([p for p in pools if p != base] or pools)
        expr: Term = App("filter", (Var(base), Lambda(
            (Var(b1),), App("in", (Var(b1), Var(other))))))
        if rng.random() < 0.8:
            b2 = self.fresh_binder()
            expr = App("map", (expr, Lambda((Var(b2),), App("lower", (Var(b2),)))))
        roll = rng.random()
        if roll < 0.55:
            b3 = self.fresh_binder()
            pred: Term = Const(True) if rng.random() < 0.6 else \
                App("in", (Var(b3), Var(other)))
            return App("find", (expr, Const(None), Lambda((Var(b3),), pred)))
        if roll < 0.8:
            return expr
        acc, b3 = self.fresh_binder(), self.fresh_binder()
        return App("fold", (Const(0), expr,
                            Lambda((Var(acc), Var(b3)), App("+", (Var(acc), Const(1))))))


def sample_functional(cfg: DataGenConfig, depth: int, rng: random.Random) -> Term:
    """Complete, type-correct functional program with combinator nesting at
    most `depth`."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    sampler = _Sampler(cfg, rng)
    roll = rng.random()
    if cfg.record_variables and roll < cfg.record_probability:
        return sampler.sample_record_program(depth)
    if roll < cfg.record_probability + cfg.string_pipeline_probability:
        return sampler.sample_string_pipeline(depth)
    if depth == 1 and rng.random() < 0.1:
        return sampler.scalar_expr(TInt, {})
    return sampler.sample_program(depth)


class _Names:
    def __init__(self):
        self.n_r = 0
        self.n_f = 0

    def result(self) -> str:
        name = f"r{self.n_r}" if self.n_r else "r"
        self.n_r += 1
        return name

    def flag(self) -> str:
        name = f"found{self.n_f}" if self.n_f else "found"
        self.n_f += 1
        return name


def rename_var(t: Term, old: str, new: str) -> Term:
    if isinstance(t, Var):
        return Var(new) if t.name == old else t
    kids = t.children()
    if not kids:
        return t
    return t.replace_children(tuple(rename_var(k, old, new) for k in kids))


def translate(e: Term, result_var: str, names: Optional[_Names] = None,
              fuse_rng: Optional[random.Random] = None,
              fuse_probability: float = 0.0) -> list[Term]:
    """Compositional reverse translation of a functional expression into
    imperative statements leaving the result in `result_var`."""
    names = names or _Names()

    def fuse_guard(list_arg: Term, binder: str):
        """Optionally merge a filter feeding a combinator into its loop."""
        if fuse_rng is None or fuse_probability <= 0.0:
            return list_arg, None
        if isinstance(list_arg, App) and list_arg.fn == "filter" and \
                fuse_rng.random() < fuse_probability:
            inner_binder = list_arg.args[1].params[0].name
            pred = rename_var(list_arg.args[1].body, inner_binder, binder)
            return list_arg.args[0], pred
        return list_arg, None

    def go(e: Term, r: str) -> list[Term]:
        if isinstance(e, App) and e.fn in ("map", "filter", "flatmap"):
            lam: Lambda = e.args[1]
            binder = lam.params[0].name
            src, guard = fuse_guard(e.args[0], binder)
            r1 = names.result()
            stmts = go(src, r1)
            if e.fn == "filter":
                inner: Term = If(lam.body,
                                 Seq((MethodCall(Var(r), "add", (Var(binder),)),)),
                                 Seq(()))
                if guard is not None:
                    inner = If(guard, Seq((inner,)), Seq(()))
                return [Assign(Var(r), Const(()))] + stmts + \
                    [For(Var(binder), Var(r1), Seq((inner,)))]
            if e.fn == "map":
                r2 = names.result()
                body = go(lam.body, r2) + [MethodCall(Var(r), "add", (Var(r2),))]
                if guard is not None:
                    body = [If(guard, Seq(tuple(body)), Seq(()))]
                return [Assign(Var(r), Const(()))] + stmts + \
                    [For(Var(binder), Var(r1), Seq(tuple(body)))]
            # flatmap: splice every element of the inner result
            r2 = names.result()
            j = f"j{names.n_r}"
            body = go(lam.body, r2) + \
                [For(Var(j), Var(r2), Seq((MethodCall(Var(r), "add", (Var(j),)),)))]
            if guard is not None:
                body = [If(guard, Seq(tuple(body)), Seq(()))]
            return [Assign(Var(r), Const(()))] + stmts + \
                [For(Var(binder), Var(r1), Seq(tuple(body)))]
        if isinstance(e, App) and e.fn == "find":
            lam: Lambda = e.args[2]
            binder = lam.params[0].name
            src, guard = fuse_guard(e.args[0], binder)
            r1 = names.result()
            stmts = go(src, r1)
            flag = names.flag()
            hit = Seq((Assign(Var(r), Var(binder)), Assign(Var(flag), Const(True))))
            check: Term = If(lam.body, hit, Seq(()))
            if guard is not None:
                check = If(guard, Seq((check,)), Seq(()))
            loop = For(Var(binder), Var(r1),
                       Seq((If(App("==", (Var(flag), Const(False))),
                               Seq((check,)), Seq(())),)))
            return stmts + [Assign(Var(flag), Const(False)),
                            Assign(Var(r), e.args[1]), loop]
        if isinstance(e, App) and e.fn == "fold":
            lam: Lambda = e.args[2]
            acc, binder = lam.params[0].name, lam.params[1].name
            src, guard = fuse_guard(e.args[1], binder)
            r1 = names.result()
            stmts = go(src, r1)
            step: Term = Assign(Var(acc), lam.body)
            if guard is not None:
                step = If(guard, Seq((step,)), Seq(()))
            return stmts + [Assign(Var(acc), e.args[0]),
                            For(Var(binder), Var(r1), Seq((step,))),
                            Assign(Var(r), Var(acc))]
        # plain expression
        return [Assign(Var(r), e)]

    return go(e, result_var)


def to_imperative(e: Term, fuse_rng: Optional[random.Random] = None,
                  fuse_probability: float = 0.0) -> Term:
    names = _Names()
    top = names.result()  # reserves "r" for the overall result
    stmts = translate(e, top, names, fuse_rng, fuse_probability)
    return Seq(tuple(stmts + [Return(Var(top))]))


def roundtrip_ok(source: Term, target: Term, bounds: InputBounds,
                 budget: int = 50_000) -> bool:
    """Differential agreement on the bounded input grid; empty-input grids
    or always-failing sources reject the pair."""
    try:
        types = infer_types(source)
    except Exception:
        return False
    grid = input_grid(types, bounds)
    if not grid:
        return False
    agreed = 0
    for sigma in grid:
        try:
            a = eval_term(source, sigma, budget)
        except EvalError:
            continue
        try:
            b = eval_term(target, sigma, budget)
        except EvalError:
            return False
        if not values_equal(a, b):
            return False
        agreed += 1
    return agreed > 0


def gen_pair(cfg: DataGenConfig, seed: int, idx: int):
    """One checked (source, target) pair; resamples deterministically until
    the round trip passes."""
    for attempt in range(50):
        rng = random.Random(seed * 1_000_003 + idx * 1009 + attempt)
        target = sample_functional(cfg, cfg.max_depth, rng)
        source = to_imperative(target, rng, cfg.fuse_probability)
        if roundtrip_ok(source, target, cfg.bounds):
            return source, target
    raise RuntimeError(f"no valid sample for record {idx}")


def gen_dataset(n: int, cfg: DataGenConfig, seed: int, out_path: str) -> int:
    """n newline-delimited JSON records {"source":…, "target":…}; every
    record passed the differential round-trip check."""
    if n <= 0:
        raise ValueError("n must be positive")
    written = 0
    with open(out_path, "w") as f:
        for idx in range(n):
            source, target = gen_pair(cfg, seed, idx)
            f.write(json.dumps({"source": pretty(source), "target": pretty(target)}) + "\n")
            written += 1
    return written


def load_dataset(path: str) -> list[tuple[Term, Term]]:
    pairs = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            pairs.append((parse_imp(rec["source"]), parse_lstr(rec["target"])))
    return pairs
