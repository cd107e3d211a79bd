"""Concrete evaluation for both languages plus the collecting semantics:
an instrumented run that records every value each watched expression takes.

Programs are pure except list.add inside imperative loops; assignment
deep-copies list values so no aliasing is observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .grammar import (CognateGrammarPair, DEFAULT_CONSTANTS, SharedTermIndex,
                      shared_terms_of)
from .terms import (App, Assign, Const, For, Hole, If, Lambda, MethodCall,
                    Return, Seq, Term, Var, pretty, subterms)
from .values import (BUILTINS, BudgetExhausted, EvalError, METHODS,
                     TypeMismatch, UnboundVariable, Value, ValueSet,
                     values_equal)

DEFAULT_BUDGET = 100_000


@dataclass
class TraceStore:
    """Collecting-semantics result: canonical print of a shared term -> the
    set of values all its occurrences took during one run."""

    sets: dict[str, ValueSet] = field(default_factory=dict)

    def record(self, key: str, v: Value) -> None:
        self.sets.setdefault(key, ValueSet()).add(v)

    def get(self, key: str) -> ValueSet:
        return self.sets.get(key, ValueSet())

    def to_json(self) -> list[dict]:
        return [{"term": k, "values": list(self.sets[k])} for k in sorted(self.sets)]


def _deepcopy_value(v: Value) -> Value:
    if isinstance(v, list):
        return [_deepcopy_value(x) for x in v]
    return v


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n

    def tick(self):
        self.left -= 1
        if self.left < 0:
            raise BudgetExhausted("step budget exhausted")


class _Evaluator:
    def __init__(self, budget: int, watched_prints: Optional[set[str]] = None,
                 trace: Optional[TraceStore] = None):
        self.budget = _Budget(budget)
        self.watched = watched_prints or set()
        self.trace = trace
        self._marks: dict[int, str] = {}

    def mark(self, program: Term) -> None:
        """Precompute which node objects match a watched print so the hot
        loop never re-prints subterms."""
        if not self.watched:
            return
        for n in subterms(program):
            if isinstance(n, (Var, Const, App, MethodCall)):
                p = pretty(n)
                if p in self.watched:
                    self._marks[id(n)] = p

    def run_program(self, program: Term, env: dict) -> Value:
        self.mark(program)
        if isinstance(program, (Seq, For, If, Assign, Return)):
            try:
                self.exec_stmt(program, env)
            except _ReturnSignal as r:
                return r.value
            return None
        return self.eval(program, env)

    # statements

    def exec_stmt(self, s: Term, env: dict) -> None:
        self.budget.tick()
        if isinstance(s, Seq):
            for st in s.stmts:
                self.exec_stmt(st, env)
        elif isinstance(s, Assign):
            env[s.var.name] = _deepcopy_value(self.eval(s.rhs, env))
        elif isinstance(s, Return):
            raise _ReturnSignal(self.eval(s.value, env))
        elif isinstance(s, For):
            xs = self.eval(s.iterable, env)
            if not isinstance(xs, list):
                raise TypeMismatch(f"cannot iterate over {xs!r}")
            for x in list(xs):
                env[s.var.name] = x
                self.exec_stmt(s.body, env)
        elif isinstance(s, If):
            c = self.eval(s.cond, env)
            if not isinstance(c, bool):
                raise TypeMismatch(f"condition must be bool, got {c!r}")
            self.exec_stmt(s.then if c else s.orelse, env)
        elif isinstance(s, MethodCall):
            if s.method == "add":
                if not isinstance(s.recv, Var):
                    raise TypeMismatch("add receiver must be a variable")
                target = env.get(s.recv.name)
                if not isinstance(target, list):
                    raise TypeMismatch(f"add receiver must hold a list, got {target!r}")
                target.append(_deepcopy_value(self.eval(s.args[0], env)))
            else:
                self.eval(s, env)
        elif isinstance(s, App):
            self.eval(s, env)
        elif isinstance(s, Hole):
            raise EvalError("cannot execute a partial program")
        else:
            raise TypeMismatch(f"not a statement: {s!r}")

    # expressions

    def eval(self, e: Term, env: dict) -> Value:
        self.budget.tick()
        v = self._eval(e, env)
        if self.trace is not None:
            key = self._marks.get(id(e))
            if key is not None:
                self.trace.record(key, v)
        return v

    def _eval(self, e: Term, env: dict) -> Value:
        if isinstance(e, Var):
            if e.name not in env:
                raise UnboundVariable(f"unbound variable {e.name!r}")
            return env[e.name]
        if isinstance(e, Const):
            return [] if e.value == () and isinstance(e.value, tuple) else e.value
        if isinstance(e, App):
            if e.fn in COMBINATORS_EVAL:
                return COMBINATORS_EVAL[e.fn](self, e, env)
            if e.fn not in BUILTINS:
                raise TypeMismatch(f"unknown function {e.fn!r}")
            args = [self.eval(a, env) for a in e.args]
            b = BUILTINS[e.fn]
            if len(args) != b.arity:
                raise TypeMismatch(f"{e.fn} expects {b.arity} arguments")
            return b(*args)
        if isinstance(e, MethodCall):
            if e.method not in METHODS:
                raise TypeMismatch(f"unknown method {e.method!r}")
            recv = self.eval(e.recv, env)
            args = [self.eval(a, env) for a in e.args]
            return METHODS[e.method](recv, *args)
        if isinstance(e, Hole):
            raise EvalError("cannot evaluate a partial program")
        raise TypeMismatch(f"not an expression: {e!r}")

    def eval_lambda(self, lam: Lambda, env: dict, args: list[Value]) -> Value:
        inner = dict(env)
        for p, a in zip(lam.params, args):
            inner[p.name] = a
        return self.eval(lam.body, inner)


def _iter_eval(ev, e, env):
    """Pull-based evaluation of a list-producing expression: combinator
    pipelines stream their elements (Java-Stream style), so a downstream
    find never forces lambdas beyond its first match."""
    if isinstance(e, App) and e.fn == "map":
        for x in _iter_eval(ev, e.args[0], env):
            ev.budget.tick()
            yield ev.eval_lambda(e.args[1], env, [x])
        return
    if isinstance(e, App) and e.fn == "filter":
        for x in _iter_eval(ev, e.args[0], env):
            ev.budget.tick()
            keep = ev.eval_lambda(e.args[1], env, [x])
            if not isinstance(keep, bool):
                raise TypeMismatch(f"filter predicate must return bool, got {keep!r}")
            if keep:
                yield x
        return
    if isinstance(e, App) and e.fn == "flatmap":
        for x in _iter_eval(ev, e.args[0], env):
            ev.budget.tick()
            inner = ev.eval_lambda(e.args[1], env, [x])
            if not isinstance(inner, list):
                raise TypeMismatch(f"flatmap body must return a list, got {inner!r}")
            yield from inner
        return
    v = ev.eval(e, env)
    if not isinstance(v, list):
        raise TypeMismatch(f"expected a list, got {v!r}")
    yield from v


def _ev_map(ev, e, env):
    return list(_iter_eval(ev, e, env))


_ev_filter = _ev_map
_ev_flatmap = _ev_map


def _ev_find(ev, e, env):
    # Short-circuits at the first match: upstream lambdas past that point
    # never run, matching the imperative found-flag/early-return encodings.
    for x in _iter_eval(ev, e.args[0], env):
        keep = ev.eval_lambda(e.args[2], env, [x])
        if not isinstance(keep, bool):
            raise TypeMismatch(f"find predicate must return bool, got {keep!r}")
        if keep:
            return x
    return ev.eval(e.args[1], env)


def _ev_fold(ev, e, env):
    acc = ev.eval(e.args[0], env)
    for x in _iter_eval(ev, e.args[1], env):
        acc = ev.eval_lambda(e.args[2], env, [acc, x])
    return acc


COMBINATORS_EVAL = {
    "map": _ev_map,
    "filter": _ev_filter,
    "flatmap": _ev_flatmap,
    "find": _ev_find,
    "fold": _ev_fold,
}


def _fresh_env(sigma: dict) -> dict:
    return {k: _deepcopy_value(v) for k, v in sigma.items()}


def eval_term(p: Term, sigma: dict, budget: int = DEFAULT_BUDGET) -> Value:
    """Deterministic evaluation of a complete program on one input."""
    return _Evaluator(budget).run_program(p, _fresh_env(sigma))


WatchedArg = Union[SharedTermIndex, Iterable[Term], Iterable[str]]


def _watched_prints(watched: WatchedArg) -> set[str]:
    if isinstance(watched, SharedTermIndex):
        return {pretty(t) for t in watched.all_terms()}
    out = set()
    for w in watched:
        out.add(w if isinstance(w, str) else pretty(w))
    return out


def eval_collecting(p: Term, sigma: dict, watched: WatchedArg,
                    budget: int = DEFAULT_BUDGET) -> tuple[Value, TraceStore]:
    trace = TraceStore()
    ev = _Evaluator(budget, _watched_prints(watched), trace)
    value = ev.run_program(p, _fresh_env(sigma))
    return value, trace


def _occurrence_prints(p: Term) -> set[str]:
    return {pretty(n) for n in subterms(p) if not isinstance(n, Hole)}


RELAXED_EXEMPT = {pretty(c) for c in DEFAULT_CONSTANTS}


def is_trace_compatible(p_s: Term, p_t: Term, sigma: dict,
                        pair: CognateGrammarPair, relaxed: bool = False,
                        budget: int = DEFAULT_BUDGET) -> bool:
    """Both defining conditions at one input: every shared term of the
    target occurs in the source, and its target-run value set is a subset
    of its source-run value set. With relaxed=True the default constants
    (true/false/0/None) are exempt from both."""
    tgt_terms = shared_terms_of(p_t, pair).all_terms()
    checked = []
    src_prints = _occurrence_prints(p_s)
    for t in tgt_terms:
        k = pretty(t)
        if relaxed and k in RELAXED_EXEMPT:
            continue
        if k not in src_prints:
            return False
        checked.append(k)
    if not checked:
        return True
    _, trace_t = eval_collecting(p_t, sigma, checked, budget)
    _, trace_s = eval_collecting(p_s, sigma, checked, budget)
    return all(trace_t.get(k) <= trace_s.get(k) for k in checked)
