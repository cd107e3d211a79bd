"""Trace-compatibility pruning: concolic evaluation of partial target
programs against one source execution.

Two judgment styles over the same rule set: the unidirectional judge
propagates symbolic values bottom-up only; the bidirectional judge
additionally threads an output specification downward through the
per-combinator backward rows, dropping values that cannot satisfy it.
Both prune exactly the same candidates; the bidirectional one does less
forward work.

The judge core streams results lazily so the feasibility driver can stop
at the first output-satisfiable value; judge_up/judge_updown collect the
stream for callers that want the whole (bounded) set.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .grammar import (CognateGrammarPair, DEFAULT_CONSTANTS, SharedTermIndex,
                      shared_terms_of)
from .interp import DEFAULT_BUDGET, TraceStore, eval_collecting
from .symbolic import (CEq, CFalse, CLenEq, Constraint, SApp, SCand, SConc,
                       SList, SVar, Sym, SymGen, TRUE, Universe, backward,
                       forward, sat_constraint, sat_eq)
from .terms import (App, Const, Hole, Lambda, MethodCall, Term, Var, pretty,
                    subterms)
from .values import BUILTINS, EvalError, METHODS, Value, is_list, vkey

log = logging.getLogger(__name__)

CAND_LIST_CAP = 32     # candidate lists fed to a combinator before giving up
FLEX_LEN_BOUND = 8     # materialized lengths for an unconstrained list hole
EXACT_LEN_CAP = 12     # largest exhaustively-enumerated input length
RESULT_CAP = 4096      # backstop on symbolic results per node
GUARD_COMBO_CAP = 32   # presence assignments enumerated for guarded lists
ACC_CHAIN_CAP = 24     # symbolic accumulator states tracked through fold
JUDGE_BUDGET = 4096    # structural estimate above which judging is skipped

MODES = ("bidir", "forward", "notrace", "none")


@dataclass
class PruneStats:
    candidates_checked: int = 0
    pruned: int = 0
    forward_evals: int = 0
    sat_calls: int = 0

    def as_dict(self) -> dict:
        return {"candidates_checked": self.candidates_checked, "pruned": self.pruned,
                "forward_evals": self.forward_evals, "sat_calls": self.sat_calls}


@dataclass
class PruneContext:
    source: Term
    sigma: dict
    out_value: Value
    trace: TraceStore
    index: SharedTermIndex
    mode: str = "bidir"
    relaxed: bool = False
    universe: Universe = None  # type: ignore[assignment]
    stats: PruneStats = field(default_factory=PruneStats)
    flex_bound: int = FLEX_LEN_BOUND
    _cand_cache: dict = field(default_factory=dict)

    @property
    def bidirectional(self) -> bool:
        return self.mode in ("bidir", "notrace")


def make_context(source: Term, sigma: dict, pair: CognateGrammarPair,
                 mode: str = "bidir", relaxed: bool = False,
                 budget: int = DEFAULT_BUDGET,
                 stats: Optional[PruneStats] = None) -> PruneContext:
    """Precomputes the source trace for one input; raises EvalError if the
    source itself fails on it."""
    index = shared_terms_of(source, pair)
    out, trace = eval_collecting(source, sigma, index, budget)
    seed_values = [out] + list(sigma.values())
    for vs in trace.sets.values():
        seed_values.extend(vs)
    for n in subterms(source):
        if isinstance(n, Const) and n.value != ():
            seed_values.append(n.value)
    universe = Universe.from_values(seed_values)
    # lengths beyond every observed list (and the output) cannot matter
    longest = max([len(v) for v in seed_values if is_list(v)] + [2])
    flex = min(FLEX_LEN_BOUND, longest + 1)
    return PruneContext(source, sigma, out, trace, index, mode, relaxed,
                        universe, stats or PruneStats(), flex)


_DEFAULT_VALUES = tuple(c.value if c.value != () else [] for c in DEFAULT_CONSTANTS)


def shared_candidate_values(ctx: PruneContext, nt: str) -> list[Value]:
    """Union of the trace sets of every source term derivable from nt, in
    deterministic index order; relaxed mode appends the default constants."""
    if nt in ctx._cand_cache:
        return ctx._cand_cache[nt]
    seen, out = set(), []
    for w in ctx.index.candidates(nt):
        for v in ctx.trace.get(pretty(w)):
            k = vkey(v)
            if k not in seen:
                seen.add(k)
                out.append(v)
    if ctx.relaxed and nt in ("E", "C"):
        for v in _DEFAULT_VALUES:
            k = vkey(v)
            if k not in seen:
                seen.add(k)
                out.append(v)
    ctx._cand_cache[nt] = out
    return out


class Results:
    """Collected judgment outcome; overflow means the judgment became
    conservative and the candidate must be treated as feasible."""

    def __init__(self, values=(), overflow: bool = False):
        self.values = list(values)
        self.overflow = overflow

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def _free_vars(t: Term, cache: dict) -> frozenset:
    key = id(t)
    got = cache.get(key)
    if got is None:
        names = set()
        for n in subterms(t):
            if isinstance(n, Var):
                names.add(n.name)
        got = cache[key] = frozenset(names)
    return got


class _Judge:
    def __init__(self, ctx: PruneContext, gen: SymGen, bidirectional: bool):
        self.ctx = ctx
        self.gen = gen
        self.bi = bidirectional
        self.overflow = False
        self._fv_cache: dict = {}
        self._body_cache: dict = {}

    # every judge path yields at most RESULT_CAP values per node

    def _cap(self, it: Iterator[Sym]) -> Iterator[Sym]:
        n = 0
        for v in it:
            if n >= RESULT_CAP:
                self.overflow = True
                return
            n += 1
            yield v

    def _sat(self, phi: Optional[Constraint], psi: Sym) -> bool:
        if not self.bi or phi is None or isinstance(phi, TRUE.__class__):
            return True
        self.ctx.stats.sat_calls += 1
        return sat_constraint(phi, psi, self.ctx.universe)

    def judge(self, e: Term, senv: dict, phi: Optional[Constraint],
              pinned: Optional[int] = None) -> Iterator[Sym]:
        if self.bi and isinstance(phi, CFalse):
            return iter(())  # unsatisfiable specification: nothing survives
        return self._cap(self._judge(e, senv, phi, pinned))

    def collect(self, e: Term, senv: dict, phi: Optional[Constraint]) -> list[Sym]:
        return list(self.judge(e, senv, phi))

    def _judge(self, e: Term, senv: dict, phi, pinned=None) -> Iterator[Sym]:
        if isinstance(e, Hole):
            yield from self._judge_hole(e, phi)
        elif isinstance(e, Var):
            # an unbound variable fails every completion at eval time
            if e.name in senv and self._sat(phi, senv[e.name]):
                yield senv[e.name]
        elif isinstance(e, Const):
            v = [] if e.value == () and isinstance(e.value, tuple) else e.value
            psi = SConc(v)
            if self._sat(phi, psi):
                yield psi
        elif isinstance(e, App) and e.fn in COMBINATOR_JUDGES:
            yield from COMBINATOR_JUDGES[e.fn](self, e, senv, phi, pinned)
        elif isinstance(e, App):
            yield from self._first_order(e.fn, list(e.args), senv, phi)
        elif isinstance(e, MethodCall):
            yield from self._first_order(e.method, [e.recv] + list(e.args), senv, phi)
        # statements never appear in target candidates

    def _judge_hole(self, h: Hole, phi) -> Iterator[Sym]:
        shared = h.nt in ("E", "V", "C")
        if not shared or self.ctx.mode == "notrace":
            psi = self.gen.var("any")
            if self._sat(phi, psi):
                yield psi
            return
        values = shared_candidate_values(self.ctx, h.nt)
        if not values:
            return  # no completion value exists on this input
        psi = SCand(self.gen.fresh_id(), tuple(values))  # pre-deduplicated
        if self._sat(phi, psi):
            yield psi

    def _first_order(self, fn: str, args: list[Term], senv: dict, phi) -> Iterator[Sym]:
        if fn not in BUILTINS and fn not in METHODS:
            return

        def rec(i: int, prefix: list[Sym]) -> Iterator[Sym]:
            if i == len(args):
                self.ctx.stats.forward_evals += 1
                psi = _apply_first_order(fn, prefix)
                if psi is not None and self._sat(phi, psi):
                    yield psi
                return
            spec = backward(fn, i + 1, phi, earlier=tuple(prefix)) \
                if self.bi and phi is not None else None
            for psi in self.judge(args[i], senv, spec):
                yield from rec(i + 1, prefix + [psi])

        yield from rec(0, [])

    # ---- combinator plumbing

    def _materialize(self, syms: Iterator[Sym], phi_list,
                     pinned: Optional[int] = None,
                     exact_upto: Optional[int] = None) -> tuple[list[SList], bool]:
        """Fixed-shape list views of a judged list argument. Flexible values
        expand over bounded lengths; a pinned length (length-preserving
        spine from a concrete output) is enumerated explicitly, and
        exact_upto asks for every length up to a bound (flatmap under a
        known output: longer inputs only add empty blocks). Otherwise the
        second component reports that longer lists remain unexplored."""
        variants: list[SList] = []
        beyond = False
        for psi in syms:
            produced: list[SList] = []
            if isinstance(psi, SConc):
                if is_list(psi.value):
                    produced.append(SList(tuple(SConc(x) for x in psi.value)))
            elif isinstance(psi, SList):
                produced.append(psi)
            elif isinstance(psi, SCand):
                lists = [c for c in psi.cands if is_list(c)]
                if len(lists) > CAND_LIST_CAP:
                    beyond = True
                    continue
                produced.extend(SList(tuple(SConc(x) for x in c)) for c in lists)
            else:  # SVar / SApp: a list of unknown length
                if exact_upto is not None and exact_upto <= EXACT_LEN_CAP:
                    ks = list(range(max(exact_upto, self.ctx.flex_bound) + 1))
                else:
                    ks = list(range(self.ctx.flex_bound + 1))
                    if pinned is not None and pinned > self.ctx.flex_bound:
                        ks.append(pinned)
                    if pinned is None:
                        beyond = True
                for k in ks:
                    produced.append(SList(tuple(self.gen.var("any") for _ in range(k))))
            for v in produced:
                if self.bi and phi_list is not None:
                    self.ctx.stats.sat_calls += 1
                    if not sat_constraint(phi_list, v, self.ctx.universe):
                        continue
                variants.append(v)
        return variants, beyond

    def _unguard(self, xs: SList) -> tuple[list[SList], bool]:
        """Concrete-presence variants of a guarded list (bounded)."""
        if xs.unguarded():
            return [xs], False
        open_slots = [i for i, g in enumerate(xs.guards)
                      if g is not None and not isinstance(g, SConc)]
        if 2 ** len(open_slots) > GUARD_COMBO_CAP:
            return [], True
        keep_base = {}
        for i, g in enumerate(xs.guards):
            if g is None:
                keep_base[i] = True
            elif isinstance(g, SConc):
                keep_base[i] = g.value is True
        out = []
        for mask in range(2 ** len(open_slots)):
            keep = dict(keep_base)
            for bit, slot in enumerate(open_slots):
                keep[slot] = bool(mask & (1 << bit))
            out.append(SList(tuple(e for i, e in enumerate(xs.elems) if keep[i])))
        return out, False

    def _binders(self, param: Term) -> list[str]:
        if isinstance(param, Var):
            return [param.name]
        # undecided binder: any non-shadowing source variable could be chosen
        return [v.name for v in self.ctx.index.candidates("V")
                if v.name not in self.ctx.sigma]

    def _body(self, body: Term, senv: dict, bindings: dict, spec) -> list[Sym]:
        """Judge a lambda body under bindings; results for bodies that do
        not mention the changing binders are computed once and refreshed
        (independent variable ids per use). Work counters are replayed on
        cache hits so the per-rule work accounting is memoization-blind."""
        fv = _free_vars(body, self._fv_cache)
        merged = dict(senv)
        merged.update(bindings)
        key = (id(body), repr(spec),
               tuple(sorted((n, repr(merged[n])) for n in fv if n in merged)))
        hit = self._body_cache.get(key)
        if hit is None:
            f0, s0 = self.ctx.stats.forward_evals, self.ctx.stats.sat_calls
            vals = self.collect(body, merged, spec)
            hit = (vals, self.ctx.stats.forward_evals - f0,
                   self.ctx.stats.sat_calls - s0)
            self._body_cache[key] = hit
        else:
            self.ctx.stats.forward_evals += hit[1]
            self.ctx.stats.sat_calls += hit[2]
        return [self.gen.refresh(v) for v in hit[0]]

    def _escape(self, phi) -> Iterator[Sym]:
        """Local conservative result standing for every outcome the bounded
        expansion did not enumerate."""
        psi = self.gen.var("any")
        if self._sat(phi, psi):
            yield psi


def _concrete_list_out(phi) -> Optional[list]:
    if isinstance(phi, CEq) and isinstance(phi.rhs, SConc) and is_list(phi.rhs.value):
        return phi.rhs.value
    return None


def _apply_first_order(fn: str, args: list[Sym]) -> Optional[Sym]:
    reg = BUILTINS.get(fn) or METHODS.get(fn)
    if reg is None:
        return None
    concrete = []
    for a in args:
        if isinstance(a, SConc):
            concrete.append(a.value)
        else:
            concrete = None
            break
    if concrete is not None:
        try:
            return SConc(reg(*concrete))
        except EvalError:
            return None
    return SApp(fn, tuple(args))


def _lazy_product(slots: list[list]):
    total = 1
    for s in slots:
        total *= max(1, len(s))
    if total > RESULT_CAP:
        return None  # caller yields a conservative escape instead
    return itertools.product(*slots)


def judgment_bounded(ctx: PruneContext, e: Term) -> bool:
    """Mode-independent estimate of the unidirectional result-stream size.
    Candidates beyond the budget are treated as feasible without judging in
    either mode, which keeps the two judgments' verdicts aligned: any
    in-budget candidate is judged exhaustively by both."""
    HUGE = JUDGE_BUDGET + 1

    def n_binders(param: Term) -> int:
        if isinstance(param, Var):
            return 1
        return max(1, sum(1 for v in ctx.index.candidates("V")
                          if v.name not in ctx.sigma))

    def list_values(t: Term) -> int:
        """How many distinct list shapes this list-position term can take."""
        if isinstance(t, Hole):
            if t.nt in ("E", "V", "C") and ctx.mode != "notrace":
                return max(1, sum(1 for v in shared_candidate_values(ctx, t.nt)
                                  if is_list(v)))
            return ctx.flex_bound + 2
        if isinstance(t, App) and t.fn in COMBINATOR_JUDGES:
            return results(t)
        return 1

    kmax = min(max(ctx.flex_bound, 3), 6)

    def results(t: Term) -> int:
        if isinstance(t, (Hole, Var, Const)):
            return 1
        if isinstance(t, MethodCall):
            out = 1
            for a in (t.recv,) + t.args:
                out = min(HUGE, out * results(a))
            return out
        if isinstance(t, App) and t.fn not in COMBINATOR_JUDGES:
            out = 1
            for a in t.args:
                out = min(HUGE, out * results(a))
            return out
        if isinstance(t, App):
            lam = t.args[-1]
            if t.fn in ("map", "filter"):
                v = list_values(t.args[0])
                b = results(lam.body)
                # per length-k variant the element combos are b^k; the sum
                # over lengths is dominated by the largest term
                combos = (b ** kmax * 5) // 4 if b > 1 else 1
                return min(HUGE, (v + combos) * n_binders(lam.params[0]))
            if t.fn == "flatmap":
                v = list_values(t.args[0])
                blocks = results(lam.body) if isinstance(lam.body, App) \
                    and lam.body.fn in COMBINATOR_JUDGES else list_values(lam.body)
                per = (max(1, blocks) ** kmax * 5) // 4
                return min(HUGE, (v + per) * n_binders(lam.params[0]))
            if t.fn == "find":
                v = list_values(t.args[0])
                d = results(t.args[1])
                return min(HUGE, d * (v + kmax + 2) * n_binders(lam.params[0]))
            # fold
            v = list_values(t.args[1])
            d = results(t.args[0])
            nb = n_binders(lam.params[0]) * n_binders(lam.params[1])
            return min(HUGE, d * (v + ACC_CHAIN_CAP) * nb)
        return 1

    return results(e) <= JUDGE_BUDGET


def _judge_map(j: _Judge, e: App, senv: dict, phi, pinned=None) -> Iterator[Sym]:
    spec_list = backward(e.fn, 1, phi) if j.bi and phi is not None else None
    lam: Lambda = e.args[1]
    flat = e.fn == "flatmap"
    escape = False
    if not flat:
        pin = spec_list.n if j.bi and isinstance(spec_list, CLenEq) else pinned
        variants, beyond = j._materialize(
            j.judge(e.args[0], senv, spec_list, pinned=pin), spec_list, pinned=pin)
    else:
        # a known output length bounds the useful input length: beyond it
        # every extra element must contribute an empty block
        out = _concrete_list_out(phi)
        n = len(out) if out is not None else pinned
        variants, beyond = j._materialize(
            j.judge(e.args[0], senv, spec_list), spec_list, exact_upto=n)
    escape |= beyond
    for xs in variants:
        for binder in j._binders(lam.params[0]):
            per_elem: list[list[Sym]] = []
            dead = False
            for pos, elem in enumerate(xs.elems):
                spec = backward(e.fn, 2, phi,
                                position=pos if xs.unguarded() else None) \
                    if j.bi and phi is not None else None
                vals = j._body(lam.body, senv, {binder: elem}, spec)
                if not vals:
                    dead = True
                    break
                per_elem.append(vals)
            if dead:
                continue
            combos = _lazy_product(per_elem)
            if combos is None:
                escape = True
                continue
            for combo in combos:
                j.ctx.stats.forward_evals += 1
                try:
                    if flat:
                        yield from _flat_results(j, xs, list(combo), phi)
                    else:
                        psi = forward("map", xs, list(combo))
                        if j._sat(phi, psi):
                            yield psi
                except EvalError:
                    continue
    if escape:
        yield from j._escape(phi)


def _flat_results(j: _Judge, xs: SList, parts: list[Sym], phi) -> Iterator[Sym]:
    part_variants: list[list[SList]] = []
    for part in parts:
        mats, beyond = j._materialize(iter([part]), None)
        if beyond:
            yield from j._escape(phi)
            return
        flattened = []
        for m in mats:
            um, gave_up = j._unguard(m)
            if gave_up:
                yield from j._escape(phi)
                return
            flattened.extend(um)
        if not flattened:
            return  # a non-list part: no completion evaluates
        part_variants.append(flattened)
    combos = _lazy_product(part_variants)
    if combos is None:
        yield from j._escape(phi)
        return
    for final in combos:
        psi = forward("flatmap", xs, list(final))
        if j._sat(phi, psi):
            yield psi


def _judge_filter(j: _Judge, e: App, senv: dict, phi, pinned=None) -> Iterator[Sym]:
    spec_list = backward("filter", 1, phi) if j.bi and phi is not None else None
    lam: Lambda = e.args[1]
    escape = False
    variants, beyond = j._materialize(j.judge(e.args[0], senv, spec_list), spec_list)
    escape |= beyond
    for xs0 in variants:
        unguarded, gave_up = j._unguard(xs0)
        escape |= gave_up
        for xs in unguarded:
            for binder in j._binders(lam.params[0]):
                per_elem: list[list[Sym]] = []
                dead = False
                for elem in xs.elems:
                    spec = backward("filter", 2, phi, element=elem) \
                        if j.bi and phi is not None else None
                    vals = j._body(lam.body, senv, {binder: elem}, spec)
                    if not vals:
                        dead = True
                        break
                    per_elem.append(vals)
                if dead:
                    continue
                combos = _lazy_product(per_elem)
                if combos is None:
                    escape = True
                    continue
                for combo in combos:
                    j.ctx.stats.forward_evals += 1
                    try:
                        psi = forward("filter", xs, list(combo))
                    except EvalError:
                        continue
                    if j._sat(phi, psi):
                        yield psi
    if escape:
        yield from j._escape(phi)


def _judge_find(j: _Judge, e: App, senv: dict, phi, pinned=None) -> Iterator[Sym]:
    # semantic order: the default's value parameterizes the list's row
    lam: Lambda = e.args[2]
    spec_default = backward("find", 1, phi) if j.bi and phi is not None else None
    escape = False
    for psi0 in j.collect(e.args[1], senv, spec_default):
        spec_list = backward("find", 2, phi, earlier=(psi0,)) \
            if j.bi and phi is not None else None
        variants, beyond = j._materialize(j.judge(e.args[0], senv, spec_list), spec_list)
        escape |= beyond
        for xs0 in variants:
            unguarded, gave_up = j._unguard(xs0)
            escape |= gave_up
            for xs in unguarded:
                for binder in j._binders(lam.params[0]):
                    j.ctx.stats.forward_evals += 1
                    for psi in _scan_find(j, xs, lam.body, binder, senv, psi0, phi):
                        if j._sat(phi, psi):
                            yield psi
    if escape:
        yield from j._escape(phi)


def _scan_find(j: _Judge, xs: SList, body: Term, binder: str, senv: dict,
               default: Sym, phi) -> Iterator[Sym]:
    """Left-to-right scan mirroring find's short-circuit evaluation. The
    per-element backward row is pushed only while every mark so far is
    concrete; the first symbolic mark makes every later element (and the
    default) a possible result."""
    for pos, elem in enumerate(xs.elems):
        spec = backward("find", 3, phi, element=elem) \
            if j.bi and phi is not None else None
        marks = j._body(body, senv, {binder: elem}, spec)
        has_true = any(isinstance(m, SConc) and m.value is True for m in marks)
        has_false = any(isinstance(m, SConc) and m.value is False for m in marks)
        if any(not isinstance(m, SConc) for m in marks):
            # symbolic mark: every later element and the default stay live
            for later in xs.elems[pos:]:
                yield later
            yield default
            return
        if has_true:
            yield elem
        if not has_false:
            # no branch skips this element (first definite match, or every
            # mark is dead): scanning stops here
            return
    yield default


def _judge_fold(j: _Judge, e: App, senv: dict, phi, pinned=None) -> Iterator[Sym]:
    lam: Lambda = e.args[2]
    spec_init = backward("fold", 1, phi) if j.bi and phi is not None else None
    inits = j.collect(e.args[0], senv, spec_init)
    if not inits:
        return
    spec_list = backward("fold", 2, phi) if j.bi and phi is not None else None
    body_fv = _free_vars(lam.body, j._fv_cache)
    escape = False
    variants, beyond = j._materialize(j.judge(e.args[1], senv, spec_list), spec_list)
    escape |= beyond
    for xs0 in variants:
        unguarded, gave_up = j._unguard(xs0)
        escape |= gave_up
        for xs in unguarded:
            if not xs.elems:
                for acc in inits:
                    if j._sat(phi, acc):
                        yield acc
                continue
            for acc_name in j._binders(lam.params[0]):
                for elem_name in j._binders(lam.params[1]):
                    if elem_name == acc_name:
                        continue
                    if acc_name not in body_fv:
                        # the accumulator is ignored: only the final step
                        # can reach the result
                        last = xs.elems[-1]
                        spec = backward("fold", 3, phi, element=last, is_final=True) \
                            if j.bi and phi is not None else None
                        j.ctx.stats.forward_evals += 1
                        for v in j._body(lam.body, senv, {elem_name: last}, spec):
                            if j._sat(phi, v):
                                yield v
                        continue
                    accs = list(inits)
                    hit_cap = False
                    for pos, elem in enumerate(xs.elems):
                        final = pos == len(xs.elems) - 1
                        spec = backward("fold", 3, phi, element=elem, is_final=final) \
                            if j.bi and phi is not None else None
                        nxt: list[Sym] = []
                        for acc in accs:
                            j.ctx.stats.forward_evals += 1
                            nxt.extend(j._body(lam.body, senv,
                                               {acc_name: acc, elem_name: elem}, spec))
                            if len(nxt) > ACC_CHAIN_CAP:
                                hit_cap = True
                                break
                        if hit_cap:
                            break
                        accs = _dedup_syms(nxt)
                        if not accs:
                            break
                    if hit_cap:
                        escape = True  # accumulator blow-up
                        continue
                    for acc in accs:
                        if j._sat(phi, acc):
                            yield acc
    if escape:
        yield from j._escape(phi)


def _dedup_syms(syms: list[Sym]) -> list[Sym]:
    out, seen = [], set()
    for s in syms:
        key = repr(s)
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


COMBINATOR_JUDGES = {
    "map": _judge_map,
    "flatmap": _judge_map,
    "filter": _judge_filter,
    "find": _judge_find,
    "fold": _judge_fold,
}


def judge_up(ctx: PruneContext, e: Term, senv: dict) -> Results:
    """Unidirectional judgment: the symbolic values e can take under the
    trace-compatibility assumption."""
    j = _Judge(ctx, SymGen(), bidirectional=False)
    vals = j.collect(e, senv, None)
    return Results(vals, j.overflow)


def judge_updown(ctx: PruneContext, e: Term, senv: dict, phi: Constraint) -> Results:
    """Bidirectional judgment: as judge_up, with the output specification
    pushed through the backward rows at every function node."""
    j = _Judge(ctx, SymGen(), bidirectional=True)
    vals = j.collect(e, senv, phi)
    return Results(vals, j.overflow)


def root_env(ctx: PruneContext) -> dict:
    return {name: SConc(v) for name, v in ctx.sigma.items()}


def feasible_on(ctx: PruneContext, candidate: Term) -> bool:
    """One-input feasibility: can some completion of the candidate produce
    the source's output under trace compatibility? Streams the judgment and
    stops at the first output-satisfiable value."""
    if ctx.mode == "none":
        return True
    if not judgment_bounded(ctx, candidate):
        return True  # enumeration too large; both modes answer alike
    senv = root_env(ctx)
    j = _Judge(ctx, SymGen(), bidirectional=ctx.bidirectional)
    phi = CEq(SConc(ctx.out_value)) if ctx.bidirectional else None
    pinned = len(ctx.out_value) if is_list(ctx.out_value) else None
    for psi in j.judge(candidate, senv, phi, pinned=pinned):
        ctx.stats.sat_calls += 1
        if sat_eq(psi, ctx.out_value, ctx.universe) is not None:
            return True
    return j.overflow


def is_feasible(source: Term, candidate: Term, examples: list[dict],
                pair: CognateGrammarPair, mode: str = "bidir",
                relaxed: bool = False, budget: int = DEFAULT_BUDGET,
                stats: Optional[PruneStats] = None) -> bool:
    """IsFeasible over a counterexample set: false as soon as one input
    rules every completion out."""
    stats = stats if stats is not None else PruneStats()
    stats.candidates_checked += 1
    if mode == "none":
        return True
    for sigma in examples:
        try:
            ctx = make_context(source, sigma, pair, mode, relaxed, budget, stats)
        except EvalError:
            log.warning("source failed on %r; skipping this input", sigma)
            continue
        if not feasible_on(ctx, candidate):
            stats.pruned += 1
            return False
    return True
