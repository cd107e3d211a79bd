"""Typed input generation for differential checking: a small unification-
based type inferencer over the source program and deterministic value
pools per type.

The grid is the cartesian product of the per-variable pools, deterministic
under fixed bounds; an over-large product is thinned by a fixed stride so
the result is still reproducible."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

from .terms import (App, Assign, Const, For, If, Lambda, MethodCall, Return,
                    Seq, Term, Var, subterms)
from .values import (BUILTINS, METHODS, RECORD_FIELDS, TBool, TInt, TList,
                     TNone, TStr, TV)


class TypeError_(Exception):
    pass


class _Unifier:
    def __init__(self):
        self.subst: dict[str, object] = {}
        self._fresh = 0

    def fresh(self):
        self._fresh += 1
        return TV(f"t{self._fresh}")

    def find(self, t):
        while isinstance(t, tuple) and t[0] == "tv" and t[1] in self.subst:
            t = self.subst[t[1]]
        return t

    def unify(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if isinstance(a, tuple) and a[0] == "tv":
            self.subst[a[1]] = b
            return
        if isinstance(b, tuple) and b[0] == "tv":
            self.subst[b[1]] = a
            return
        if isinstance(a, tuple) and isinstance(b, tuple) and a[0] == b[0] == "list":
            self.unify(a[1], b[1])
            return
        raise TypeError_(f"cannot unify {a} with {b}")

    def resolve(self, t):
        t = self.find(t)
        if isinstance(t, tuple) and t[0] == "list":
            return TList(self.resolve(t[1]))
        return t


def _instantiate(sig_params, sig_ret, u: _Unifier):
    mapping = {}

    def inst(t):
        if isinstance(t, tuple) and t[0] == "tv":
            if t[1] not in mapping:
                mapping[t[1]] = u.fresh()
            return mapping[t[1]]
        if isinstance(t, tuple) and t[0] == "list":
            return TList(inst(t[1]))
        return t

    return [inst(p) for p in sig_params], inst(sig_ret)


def infer_types(program: Term) -> dict[str, object]:
    """Types of the program's free (input) variables; unconstrained
    variables default to list-of-int when iterated and int otherwise."""
    u = _Unifier()
    env: dict[str, object] = {}

    def tv(name):
        if name not in env:
            env[name] = u.fresh()
        return env[name]

    def expr(e) -> object:
        if isinstance(e, Var):
            return tv(e.name)
        if isinstance(e, Const):
            v = e.value
            if v is None:
                return TNone
            if isinstance(v, bool):
                return TBool
            if isinstance(v, int):
                return TInt
            if isinstance(v, str):
                return TStr
            return TList(u.fresh())
        if isinstance(e, App):
            if e.fn in ("map", "filter", "flatmap", "find", "fold"):
                return _combinator_type(e)
            b = BUILTINS[e.fn]
            params, ret = _instantiate(b.params, b.ret, u)
            for p, a in zip(params, e.args):
                u.unify(p, expr(a))
            return ret
        if isinstance(e, MethodCall):
            m = METHODS[e.method]
            params, ret = _instantiate(m.params, m.ret, u)
            u.unify(params[0], expr(e.recv))
            for p, a in zip(params[1:], e.args):
                u.unify(p, expr(a))
            return ret
        if isinstance(e, Lambda):
            raise TypeError_("lambda outside a combinator")
        raise TypeError_(f"not an expression: {e!r}")

    def _combinator_type(e: App):
        lam: Lambda = e.args[-1]
        if e.fn in ("map", "flatmap"):
            elem = u.fresh()
            u.unify(expr(e.args[0]), TList(elem))
            env_saved = env.get(lam.params[0].name)
            env[lam.params[0].name] = elem
            body = expr(lam.body)
            _restore(env, lam.params[0].name, env_saved)
            return TList(body) if e.fn == "map" else body
        if e.fn == "filter":
            elem = u.fresh()
            u.unify(expr(e.args[0]), TList(elem))
            saved = env.get(lam.params[0].name)
            env[lam.params[0].name] = elem
            u.unify(expr(lam.body), TBool)
            _restore(env, lam.params[0].name, saved)
            return TList(elem)
        if e.fn == "find":
            elem = u.fresh()
            u.unify(expr(e.args[0]), TList(elem))
            dflt = expr(e.args[1])
            saved = env.get(lam.params[0].name)
            env[lam.params[0].name] = elem
            u.unify(expr(lam.body), TBool)
            _restore(env, lam.params[0].name, saved)
            if dflt != TNone:
                u.unify(elem, dflt)
            return elem
        # fold
        acc = expr(e.args[0])
        elem = u.fresh()
        u.unify(expr(e.args[1]), TList(elem))
        s1, s2 = env.get(lam.params[0].name), env.get(lam.params[1].name)
        env[lam.params[0].name] = acc
        env[lam.params[1].name] = elem
        u.unify(expr(lam.body), acc)
        _restore(env, lam.params[1].name, s2)
        _restore(env, lam.params[0].name, s1)
        return acc

    def stmt(s):
        if isinstance(s, Seq):
            for x in s.stmts:
                stmt(x)
        elif isinstance(s, Assign):
            u.unify(tv(s.var.name), expr(s.rhs))
        elif isinstance(s, Return):
            expr(s.value)
        elif isinstance(s, For):
            u.unify(expr(s.iterable), TList(tv(s.var.name)))
            stmt(s.body)
        elif isinstance(s, If):
            u.unify(expr(s.cond), TBool)
            stmt(s.then)
            stmt(s.orelse)
        elif isinstance(s, MethodCall) and s.method == "add":
            u.unify(tv(s.recv.name), TList(expr(s.args[0])))
        elif isinstance(s, (MethodCall, App)):
            expr(s)

    if isinstance(s := program, (Seq, For, If, Assign, Return)):
        stmt(s)
    else:
        expr(program)
    out = {}
    for name in free_variables(program):
        t = u.resolve(env.get(name, TInt))
        out[name] = _concretize_type(t)
    return out


def _restore(env, name, saved):
    if saved is None:
        env.pop(name, None)
    else:
        env[name] = saved


def _concretize_type(t):
    if isinstance(t, tuple) and t[0] == "tv":
        return TInt
    if isinstance(t, tuple) and t[0] == "list":
        return TList(_concretize_type(t[1]))
    return t


def free_variables(program: Term) -> list[str]:
    """Variables read before being bound by an assignment or a binder, in
    first-use order."""
    bound: set[str] = set()
    order: list[str] = []
    seen: set[str] = set()

    def note(name):
        if name not in bound and name not in seen:
            seen.add(name)
            order.append(name)

    def walk(t, local_bound):
        if isinstance(t, Var):
            if t.name not in local_bound:
                note(t.name)
        elif isinstance(t, Assign):
            walk(t.rhs, local_bound)
            local_bound.add(t.var.name)
        elif isinstance(t, For):
            walk(t.iterable, local_bound)
            inner = set(local_bound)
            inner.add(t.var.name)
            walk(t.body, inner)
        elif isinstance(t, Lambda):
            inner = set(local_bound) | {p.name for p in t.params if isinstance(p, Var)}
            walk(t.body, inner)
        elif isinstance(t, Seq):
            for s in t.stmts:
                walk(s, local_bound)
        elif isinstance(t, MethodCall) and t.method == "add":
            for a in t.args:
                walk(a, local_bound)
        else:
            for k in t.children():
                walk(k, local_bound)

    walk(program, set())
    return order


@dataclass
class InputBounds:
    list_len: int = 3
    int_hi: int = 5
    int_lo: int = -5
    lists_per_type: int = 24
    max_grid: int = 4096
    extra_ints: tuple = ()

    def int_pool(self) -> list[int]:
        pool = [v for v in range(-2, 6) if self.int_lo <= v <= self.int_hi]
        for v in self.extra_ints:
            if self.int_lo <= v <= self.int_hi and v not in pool:
                pool.append(v)
        return pool


_STR_POOL = ["", "a", "b", "Ab", "cd"]


def value_pool(t, bounds: InputBounds) -> list:
    """Deterministic candidate values of one type."""
    if t == TInt:
        return list(bounds.int_pool())
    if t == TBool:
        return [False, True]
    if t == TStr:
        return list(_STR_POOL)
    if t == TNone:
        return [None]
    if isinstance(t, str) and t in RECORD_FIELDS:
        return _record_pool(t, bounds)
    if isinstance(t, tuple) and t[0] == "list":
        return _list_pool(t[1], bounds)
    raise TypeError_(f"no pool for type {t}")


def _list_pool(elem_t, bounds: InputBounds) -> list:
    elems = value_pool(elem_t, bounds)
    if not elems:
        return [[]]
    pool: list = [[]]
    # systematic patterns: singletons, adjacent pairs, reversed pairs,
    # duplicate pairs, then rolling windows of length 3+
    for e in elems:
        pool.append([e])
    for i in range(len(elems) - 1):
        pool.append([elems[i], elems[i + 1]])
    for i in range(len(elems) - 1):
        pool.append([elems[i + 1], elems[i]])
    for e in elems:
        pool.append([e, e])
    for width in range(3, bounds.list_len + 1):
        for i in range(len(elems)):
            window = [elems[(i + j) % len(elems)] for j in range(width)]
            pool.append(window)
    seen, out = set(), []
    from .values import vkey
    for v in pool:
        if len(v) > bounds.list_len:
            continue
        k = vkey(v)
        if k not in seen:
            seen.add(k)
            out.append(v)
        if len(out) >= bounds.lists_per_type:
            break
    return out


def _record_pool(name: str, bounds: InputBounds) -> list:
    shrunk = InputBounds(list_len=2, int_hi=bounds.int_hi, int_lo=bounds.int_lo,
                         lists_per_type=5, extra_ints=bounds.extra_ints)
    fields = RECORD_FIELDS[name]
    pools = [value_pool(ft, shrunk) for ft in fields]
    # diagonal enumeration so every field varies within the capped pool
    out = []
    for k in range(8):
        out.append([pools[i][(k + i) % len(pools[i])] for i in range(len(pools))])
    seen, dedup = set(), []
    from .values import vkey
    for v in out:
        key = vkey(v)
        if key not in seen:
            seen.add(key)
            dedup.append(v)
    return dedup


def input_grid(var_types: dict[str, object], bounds: InputBounds) -> list[dict]:
    """All typed assignments within bounds (thinned deterministically when
    the product exceeds max_grid)."""
    names = list(var_types)
    pools = [value_pool(var_types[n], bounds) for n in names]
    total = 1
    for p in pools:
        total *= len(p)
    stride = max(1, -(-total // bounds.max_grid))
    grid = []
    for i, combo in enumerate(product(*pools)):
        if i % stride:
            continue
        grid.append({n: v for n, v in zip(names, combo)})
    return grid
