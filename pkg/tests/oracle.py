"""Independent oracles for the pruning soundness fuzz: random partial
candidates over real sources, and exhaustive enumeration of their bounded
completions checked directly against trace compatibility and output
equality. Nothing here consults the symbolic judge."""

import itertools
import random
from dataclasses import dataclass, field

from imp2fn.datagen import DataGenConfig, gen_pair
from imp2fn.grammar import pair_for_source, shared_terms_of
from imp2fn.guidance import copy_candidates, slot_children
from imp2fn.inputs import free_variables, infer_types, input_grid
from imp2fn.interp import eval_term, is_trace_compatible
from imp2fn.parser import parse_lstr
from imp2fn.pruning import PruneStats, feasible_on, make_context
from imp2fn.terms import (App, Const, Hole, Lambda, Term, Var, holes,
                          is_complete, pretty)
from imp2fn.values import EvalError, values_equal

MAX_COMPLETIONS = 200_000
COMPLETION_DEPTH = 3


class OracleBudget(Exception):
    pass


@dataclass
class Instance:
    source: Term
    sigma: dict
    candidate: Term
    pair: object
    index: object
    relaxed: bool = False


@dataclass
class Report:
    instance: Instance
    feasible: dict = field(default_factory=dict)  # mode -> bool
    forward_evals: dict = field(default_factory=dict)
    mismatch: bool = False
    violations: list = field(default_factory=list)
    completions_checked: int = 0


def _binder_pool(index, inputs, scope):
    return [v.name for v in index.candidates("V")
            if v.name not in inputs and v.name not in scope]


def _scoped_exprs(index, inputs, scope):
    ok = set(inputs) | set(scope)
    out = []
    for t in index.candidates("E"):
        names = {n.name for n in _vars(t)}
        if names <= ok:
            out.append(t)
    return out


def _vars(t):
    from imp2fn.terms import subterms
    return [n for n in subterms(t) if isinstance(n, Var)]


def gen_candidate(rng, index, inputs, depth=3):
    """Random complete target program built from the source's copyable
    terms; may be (and usually is) semantically wrong."""

    def a_term(d, scope):
        es = _scoped_exprs(index, inputs, scope)
        if d <= 1 or rng.random() < 0.25 or not es:
            return rng.choice(es) if es else Const(0)
        fn = rng.choice(("map", "filter", "flatmap", "find", "fold"))
        pool = _binder_pool(index, inputs, scope)
        if not pool:
            return rng.choice(es)
        lst = a_term(d - 1, scope) if rng.random() < 0.5 else rng.choice(es)
        if fn in ("map", "flatmap"):
            b = rng.choice(pool)
            body = a_term(d - 1, scope + [b])
            return App(fn, (lst, Lambda((Var(b),), body)))
        if fn == "filter":
            b = rng.choice(pool)
            inner = _scoped_exprs(index, inputs, scope + [b])
            if not inner:
                return rng.choice(es)
            return App(fn, (lst, Lambda((Var(b),), rng.choice(inner))))
        if fn == "find":
            b = rng.choice(pool)
            inner = _scoped_exprs(index, inputs, scope + [b])
            if not inner:
                return rng.choice(es)
            return App(fn, (lst, rng.choice(es), Lambda((Var(b),), rng.choice(inner))))
        if len(pool) < 2:
            return rng.choice(es)
        b1, b2 = rng.sample(pool, 2)
        inner = _scoped_exprs(index, inputs, scope + [b1, b2])
        if not inner:
            return rng.choice(es)
        return App(fn, (rng.choice(es), lst, Lambda((Var(b1), Var(b2)), rng.choice(inner))))

    return a_term(depth, [])


def punchable_slots(term):
    """(path-key, nt) for every grammar slot of a complete target term."""
    slots = []

    def walk(node, key):
        if isinstance(node, App) and node.fn in ("map", "filter", "flatmap", "find", "fold"):
            for slot, nt, child in slot_children(node):
                child_key = key + (slot,)
                slots.append((child_key, nt))
                walk(child, child_key)

    walk(term, ())
    return slots


def punch(term, keys_to_nt, counter):
    """Replace the chosen slots with holes (fresh uids from counter)."""

    def walk(node, key):
        if isinstance(node, App) and node.fn in ("map", "filter", "flatmap", "find", "fold"):
            rebuilt = {}
            for slot, nt, child in slot_children(node):
                child_key = key + (slot,)
                if child_key in keys_to_nt:
                    counter[0] += 1
                    rebuilt[slot] = Hole(keys_to_nt[child_key], counter[0])
                else:
                    rebuilt[slot] = walk(child, child_key)
            return _rebuild(node, rebuilt)
        return node

    return walk(term, ())


def _rebuild(node, by_slot):
    lam = node.args[-1]
    if node.fn in ("map", "filter", "flatmap"):
        return App(node.fn, (by_slot[0], Lambda((by_slot[1],), by_slot[2])))
    if node.fn == "find":
        return App(node.fn, (by_slot[0], by_slot[1], Lambda((by_slot[2],), by_slot[3])))
    return App(node.fn, (by_slot[0], by_slot[1],
                         Lambda((by_slot[2], by_slot[3]), by_slot[4])))


def hole_scopes(term):
    """uid -> (combinator depth, enclosing binder names) for every hole."""
    out = {}

    def walk(node, depth, scope):
        if isinstance(node, Hole):
            out[node.uid] = (depth, tuple(scope))
            return
        if isinstance(node, App) and node.fn in ("map", "filter", "flatmap", "find", "fold"):
            lam = node.args[-1]
            binders = [p.name for p in lam.params if isinstance(p, Var)]
            for slot, nt, child in slot_children(node):
                inner = scope + binders if child is lam.body or child in lam.params \
                    else scope
                walk(child, depth + 1, inner)
            return
        for child in node.children():
            walk(child, depth, scope)

    walk(term, 0, [])
    return out


def _all_a_terms(index, inputs, scope, depth):
    """Every complete target term of combinator depth <= depth whose free
    variables are in scope; the completion universe for an A hole."""
    es = _scoped_exprs(index, inputs, scope)
    out = list(es)
    if depth <= 1:
        return out
    inner_lists = _all_a_terms(index, inputs, scope, depth - 1)
    pool = _binder_pool(index, inputs, scope)
    for lst in inner_lists:
        for b in pool:
            body_scope = scope + [b]
            inner_es = _scoped_exprs(index, inputs, body_scope)
            for body in _all_a_terms(index, inputs, body_scope, depth - 1):
                out.append(App("map", (lst, Lambda((Var(b),), body))))
                out.append(App("flatmap", (lst, Lambda((Var(b),), body))))
            for pred in inner_es:
                out.append(App("filter", (lst, Lambda((Var(b),), pred))))
            for dflt in es:
                for pred in inner_es:
                    out.append(App("find", (lst, dflt, Lambda((Var(b),), pred))))
        for b1 in pool:
            for b2 in pool:
                if b1 == b2:
                    continue
                body_scope = scope + [b1, b2]
                for init in es:
                    for body in _scoped_exprs(index, inputs, body_scope):
                        out.append(App("fold", (init, lst,
                                                Lambda((Var(b1), Var(b2)), body))))
    return out


def enumerate_completions(candidate, index, inputs, relaxed=False):
    """All completions of the candidate to total combinator depth <= 3,
    using only target-legal fillings (copyable terms, non-shadowing
    binders)."""
    hs = holes(candidate)
    scopes = hole_scopes(candidate)
    per_hole = []
    for h in hs:
        depth, scope = scopes[h.uid]
        if h.nt == "A":
            options = _all_a_terms(index, inputs, list(scope),
                                   max(1, COMPLETION_DEPTH - depth))
        elif h.nt == "V":
            options = [Var(n) for n in _binder_pool(index, inputs, list(scope))]
        else:
            ok = set(inputs) | set(scope)
            options = [t for t in copy_candidates(index, h.nt, relaxed)
                       if {n.name for n in _vars(t)} <= ok]
        per_hole.append(options)
    total = 1
    for opts in per_hole:
        total *= max(1, len(opts))
        if total > MAX_COMPLETIONS:
            raise OracleBudget(f"{total} completions for {pretty(candidate)}")
    for fills in itertools.product(*per_hole):
        t = candidate
        for h, repl in zip(hs, fills):
            t = _fill_uid(t, h.uid, repl)
        yield t


def _fill_uid(term, uid, repl):
    if isinstance(term, Hole):
        return repl if term.uid == uid else term
    kids = term.children()
    if not kids:
        return term
    return term.replace_children(tuple(_fill_uid(k, uid, repl) for k in kids))


def random_instances(n, seed, complete_only=False):
    """Deterministic stream of (source, input, candidate) fuzz instances."""
    cfg = DataGenConfig()
    rng = random.Random(seed)
    produced = 0
    idx = 0
    while produced < n:
        idx += 1
        src, _tgt = gen_pair(cfg, seed * 7 + 1, idx)
        pair = pair_for_source(src)
        index = shared_terms_of(src, pair)
        inputs = set(free_variables(src))
        grid = input_grid(infer_types(src), cfg.bounds)
        sigma = grid[rng.randrange(len(grid))]
        try:
            eval_term(src, sigma)
        except EvalError:
            continue
        cand = gen_candidate(rng, index, inputs)
        if not complete_only:
            slots = punchable_slots(cand)
            if not slots:
                continue
            a_slots = [s for s in slots if s[1] == "A"]
            other = [s for s in slots if s[1] != "A"]
            picks = []
            if a_slots and rng.random() < 0.30:
                picks = [a_slots[rng.randrange(len(a_slots))]]
            elif other:
                k = min(len(other), rng.choice((1, 1, 2)))
                picks = rng.sample(other, k)
            if not picks:
                continue
            cand = punch(cand, dict(picks), [100])
        produced += 1
        yield Instance(src, sigma, cand, pair, index)


def run_instance(inst: Instance) -> Report:
    """Feasibility under both rule sets plus the exhaustive ground truth
    for pruned instances."""
    report = Report(inst)
    for mode in ("forward", "bidir"):
        stats = PruneStats()
        try:
            ctx = make_context(inst.source, inst.sigma, inst.pair, mode=mode,
                               relaxed=inst.relaxed, stats=stats)
        except EvalError:
            report.feasible[mode] = True
            report.forward_evals[mode] = 0
            continue
        report.feasible[mode] = feasible_on(ctx, inst.candidate)
        report.forward_evals[mode] = stats.forward_evals
    report.mismatch = (report.feasible["forward"] != report.feasible["bidir"]) or \
        (report.forward_evals["bidir"] > report.forward_evals["forward"])
    if report.feasible["bidir"] and report.feasible["forward"]:
        return report
    # pruned: no completion may be trace-compatible and output-equal
    try:
        expected = eval_term(inst.source, inst.sigma)
    except EvalError:
        return report
    inputs = set(free_variables(inst.source))
    for completion in enumerate_completions(inst.candidate, inst.index, inputs,
                                            inst.relaxed):
        report.completions_checked += 1
        try:
            got = eval_term(completion, inst.sigma)
        except EvalError:
            continue
        if not values_equal(got, expected):
            continue
        if is_trace_compatible(inst.source, completion, inst.sigma, inst.pair,
                               inst.relaxed):
            report.violations.append(
                (pretty(inst.candidate), pretty(completion), inst.sigma))
    return report
