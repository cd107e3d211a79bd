"""The top-level CEGIS loop: a guidance-ordered worklist over partial
target programs, trace-compatibility pruning of partial candidates, and a
bounded exhaustive differential checker in place of a solver-backed
verifier.

Runs are deterministic under a fixed seed/config: the same source yields
the same candidate order, the same result, and the same work counters. A
modeled clock (counted work units at a fixed rate) stands in for wall time
wherever reproducibility matters; wall-clock time is only a safety net.
"""

from __future__ import annotations

import heapq
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

from .grammar import (TARGET_PRODUCTIONS, pair_for_source, expand, fill,
                      choose_nonterminal, shared_terms_of)
from .guidance import (COMBINATOR_PID, DecisionPoint, GuidanceSource,
                       StatModel, copy_candidates, slot_children)
from .inputs import InputBounds, free_variables, infer_types, input_grid
from .interp import DEFAULT_BUDGET, _Evaluator, _fresh_env
from .pruning import PruneStats, feasible_on, make_context
from .symbolic import solver_ticks
from .terms import (App, Hole, HoleIds, Lambda, Term, Var, holes, is_complete,
                    pretty)
from .values import EvalError, Value, values_equal

log = logging.getLogger(__name__)

WORK_PER_SECOND = 400_000  # modeled clock rate: deterministic units per second
EVAL_UNIT_SHIFT = 1        # interpreter steps per unit
DEQUEUE_UNITS = 20


@dataclass
class SynthConfig:
    max_candidates: int = 500_000
    timeout_s: float = 60.0
    prune_mode: str = "bidir"  # bidir | forward | notrace | none
    guidance: str = "stat"     # stat | uniform | external
    relaxed: bool = False
    seed: int = 0
    n_seed_inputs: int = 2
    eval_budget: int = DEFAULT_BUDGET
    list_len: int = 3
    int_lo: int = -5
    int_hi: int = 5
    lists_per_type: int = 24
    max_grid: int = 4096
    wall_factor: float = 4.0  # wall-clock abort at wall_factor * timeout_s

    def bounds(self, source: Term) -> InputBounds:
        from .terms import Const, subterms
        extra = tuple(n.value for n in subterms(source)
                      if isinstance(n, Const) and isinstance(n.value, int)
                      and not isinstance(n.value, bool))
        return InputBounds(self.list_len, self.int_hi, self.int_lo,
                           self.lists_per_type, self.max_grid, extra)

    @property
    def work_budget(self) -> int:
        return int(self.timeout_s * WORK_PER_SECOND)


@dataclass
class TranspileStats:
    dequeued: int = 0
    enqueued: int = 0
    pruned: int = 0
    verified: int = 0
    counterexamples: int = 0
    work_units: int = 0
    wall_seconds: float = 0.0
    prune: PruneStats = field(default_factory=PruneStats)

    @property
    def modeled_seconds(self) -> float:
        return self.work_units / WORK_PER_SECOND

    def as_dict(self) -> dict:
        d = {"dequeued": self.dequeued, "enqueued": self.enqueued,
             "pruned": self.pruned, "verified": self.verified,
             "counterexamples": self.counterexamples,
             "work_units": self.work_units,
             "modeled_seconds": round(self.modeled_seconds, 6),
             "wall_seconds": round(self.wall_seconds, 3)}
        d.update(self.prune.as_dict())
        return d


@dataclass
class TranspileResult:
    found: bool
    program: Optional[Term]
    reason: str
    stats: TranspileStats
    examples: list = field(default_factory=list)

    @property
    def text(self) -> Optional[str]:
        return pretty(self.program) if self.program is not None else None


class _Meter:
    def __init__(self, budget: int):
        self.units = 0
        self.budget = budget

    def charge(self, n: int):
        self.units += n

    @property
    def exhausted(self) -> bool:
        return self.units > self.budget


def eval_with_cost(p: Term, sigma: dict, budget: int = DEFAULT_BUDGET):
    ev = _Evaluator(budget)
    value = ev.run_program(p, _fresh_env(sigma))
    return value, budget - ev.budget.left


def _input_size(sigma: dict) -> int:
    def sz(v):
        if isinstance(v, list):
            return 1 + sum(sz(x) for x in v)
        return 1

    return sum(sz(v) for v in sigma.values())


def seed_counterexamples(source: Term, cfg: SynthConfig,
                         grid: Optional[list[dict]] = None) -> list[dict]:
    """Deterministic diverse inputs on which the source runs successfully;
    pruning needs at least one input to bite."""
    if grid is None:
        grid = input_grid(infer_types(source), cfg.bounds(source))
    ranked = sorted(range(len(grid)), key=lambda i: (-_input_size(grid[i]), i))
    picked: list[dict] = []
    outputs: list[Value] = []
    for i in ranked:
        sigma = grid[i]
        try:
            out, _ = eval_with_cost(source, sigma, cfg.eval_budget)
        except EvalError:
            continue
        if any(values_equal(out, prev) for prev in outputs) and \
                len(picked) + 1 < cfg.n_seed_inputs and len(grid) > len(picked) + 1:
            continue
        picked.append(sigma)
        outputs.append(out)
        if len(picked) >= cfg.n_seed_inputs:
            break
    if not picked:
        for i in ranked:
            try:
                eval_with_cost(source, grid[i], cfg.eval_budget)
                picked.append(grid[i])
                break
            except EvalError:
                continue
    return picked


def is_equivalent(p_s: Term, p_t: Term, examples: list[dict], cfg: SynthConfig,
                  grid: Optional[list[dict]] = None,
                  source_outputs: Optional[list] = None,
                  meter: Optional[_Meter] = None):
    """(equal?, counterexample): replays the counterexample set first, then
    sweeps the bounded input grid. A target failure counts as disagreement."""
    for sigma in examples:
        verdict = _differ(p_s, p_t, sigma, cfg, meter)
        if verdict:
            return False, sigma
    if grid is None:
        grid = input_grid(infer_types(p_s), cfg.bounds(p_s))
    for i, sigma in enumerate(grid):
        try:
            if source_outputs is not None:
                expected = source_outputs[i]
                if expected is _SOURCE_FAILED:
                    continue
                try:
                    got, cost = eval_with_cost(p_t, sigma, cfg.eval_budget)
                    if meter:
                        meter.charge(cost >> EVAL_UNIT_SHIFT)
                except EvalError:
                    return False, sigma
                if not values_equal(expected, got):
                    return False, sigma
            else:
                if _differ(p_s, p_t, sigma, cfg, meter):
                    return False, sigma
        except EvalError:
            continue
    return True, None


_SOURCE_FAILED = object()


def _differ(p_s: Term, p_t: Term, sigma: dict, cfg: SynthConfig,
            meter: Optional[_Meter]) -> bool:
    try:
        expected, c1 = eval_with_cost(p_s, sigma, cfg.eval_budget)
    except EvalError:
        return False  # cannot constrain against an undefined source output
    try:
        got, c2 = eval_with_cost(p_t, sigma, cfg.eval_budget)
    except EvalError:
        if meter:
            meter.charge(c1 >> EVAL_UNIT_SHIFT)
        return True
    if meter:
        meter.charge((c1 + c2) >> EVAL_UNIT_SHIFT)
    return not values_equal(expected, got)


def _hole_path(term: Term, uid: int):
    def walk(node, path):
        if isinstance(node, Hole):
            return path if node.uid == uid else None
        if isinstance(node, App) and node.fn in COMBINATOR_PID:
            pid = COMBINATOR_PID[node.fn]
            for slot, _nt, child in slot_children(node):
                r = walk(child, path + ((pid, slot),))
                if r is not None:
                    return r
            return None
        for child in node.children():
            r = walk(child, path)
            if r is not None:
                return r
        return None

    return walk(term, ()) or ()


def _forbidden_binders(term: Term, uid: int, inputs: set[str]) -> set[str]:
    """Names a binder hole may not take: source inputs, enclosing binders,
    and its sibling binder in the same lambda."""

    def walk(node, enclosing):
        if isinstance(node, Lambda):
            names = {p.name for p in node.params if isinstance(p, Var)}
            for p in node.params:
                if isinstance(p, Hole) and p.uid == uid:
                    return enclosing | names
            return walk(node.body, enclosing | names)
        for child in node.children():
            r = walk(child, enclosing)
            if r is not None:
                return r
        return None

    found = walk(term, set())
    return inputs | (found if found is not None else set())


@dataclass
class _Entry:
    score: float
    term: Term
    n_holes: int


def transpile(source: Term, cfg: SynthConfig,
              model: Optional[StatModel] = None,
              guidance_source: Optional[GuidanceSource] = None) -> TranspileResult:
    """Enumerative CEGIS over the target grammar, best-first by guidance
    score, pruning partial candidates against the counterexample traces."""
    t0 = time.monotonic()
    wall_limit = cfg.timeout_s * cfg.wall_factor
    stats = TranspileStats()
    meter = _Meter(cfg.work_budget)
    pair = pair_for_source(source)
    index = shared_terms_of(source, pair)
    inputs = set(free_variables(source))

    guide = guidance_source or GuidanceSource(model or StatModel())
    var_types = infer_types(source)
    grid = input_grid(var_types, cfg.bounds(source))
    source_outputs = []
    for sigma in grid:
        try:
            out, cost = eval_with_cost(source, sigma, cfg.eval_budget)
            meter.charge(cost >> EVAL_UNIT_SHIFT)
            source_outputs.append(out)
        except EvalError:
            source_outputs.append(_SOURCE_FAILED)

    examples = seed_counterexamples(source, cfg, grid)
    contexts = []

    def add_context(sigma):
        try:
            ctx = make_context(source, sigma, pair, cfg.prune_mode, cfg.relaxed,
                               cfg.eval_budget, stats.prune)
            contexts.append(ctx)
        except EvalError:
            log.warning("source failed on %r; input skipped for pruning", sigma)

    if cfg.prune_mode != "none":
        for sigma in examples:
            add_context(sigma)

    ids = HoleIds()
    heap: list = []
    seq = 0
    start = Hole("A", ids.fresh())
    heapq.heappush(heap, (0.0, 1, 0, _Entry(0.0, start, 1)))
    seen: set[str] = set()

    def push(entry_score: float, term: Term):
        nonlocal seq
        key = pretty(term)
        if key in seen:
            return  # re-derivation of an already-dequeued program
        seq += 1
        stats.enqueued += 1
        hs = len(holes(term))
        heapq.heappush(heap, (-entry_score, hs, seq, _Entry(entry_score, term, hs)))

    def finish(found, program, reason):
        stats.wall_seconds = time.monotonic() - t0
        stats.work_units = meter.units
        return TranspileResult(found, program, reason, stats, examples)

    while heap:
        if meter.exhausted:
            return finish(False, None, "work budget exhausted")
        if time.monotonic() - t0 > wall_limit:
            return finish(False, None, "wall-clock limit")
        if stats.dequeued >= cfg.max_candidates:
            return finish(False, None, "candidate limit")
        _, _, _, entry = heapq.heappop(heap)
        key = pretty(entry.term)
        if key in seen:
            continue
        seen.add(key)
        stats.dequeued += 1
        meter.charge(DEQUEUE_UNITS)

        if entry.n_holes == 0:
            stats.verified += 1
            equal, cex = is_equivalent(source, entry.term, examples, cfg,
                                       grid, source_outputs, meter)
            if equal:
                return finish(True, entry.term, "verified on the input grid")
            if cex is not None and not any(values_equal_dict(cex, e) for e in examples):
                examples.append(cex)
                stats.counterexamples += 1
                if cfg.prune_mode != "none":
                    add_context(cex)
            continue

        if cfg.prune_mode != "none":
            stats.prune.candidates_checked += 1
            fwd0, sat0, ticks0 = (stats.prune.forward_evals, stats.prune.sat_calls,
                                  solver_ticks())
            ok = all(feasible_on(ctx, entry.term) for ctx in contexts)
            meter.charge(4 + (stats.prune.forward_evals - fwd0)
                         + 2 * (stats.prune.sat_calls - sat0)
                         + (solver_ticks() - ticks0))
            if not ok:
                stats.pruned += 1
                stats.prune.pruned += 1
                continue

        uid = choose_nonterminal(entry.term)
        hole = next(h for h in holes(entry.term) if h.uid == uid)
        dp = DecisionPoint(_hole_path(entry.term, uid), hole.nt, source)

        if hole.nt == "A":
            cands = [("prod", p.pid) for p in TARGET_PRODUCTIONS]
            logps = guide.score(dp, "A", cands)
            for (kind, pid), lp in zip(cands, logps):
                prod = next(p for p in TARGET_PRODUCTIONS if p.pid == pid)
                push(entry.score + lp, expand(entry.term, uid, prod, ids))
        else:
            terms = copy_candidates(index, hole.nt, cfg.relaxed)
            if hole.nt == "V":
                forbidden = _forbidden_binders(entry.term, uid, inputs)
                terms = [t for t in terms if t.name not in forbidden]
            if not terms:
                continue  # dead end
            cands = [("copy", pretty(t)) for t in terms]
            logps = guide.score(dp, hole.nt, cands, terms)
            for t, lp in zip(terms, logps):
                push(entry.score + lp, fill(entry.term, uid, t))

    return finish(False, None, "worklist exhausted")


def values_equal_dict(a: dict, b: dict) -> bool:
    return a.keys() == b.keys() and all(values_equal(a[k], b[k]) for k in a)
