"""Grammars for the two languages as a cognate pair: the expression-level
nonterminals E, V, C are shared (same productions, same derivable terms),
while the statement level (imperative) and combinator level (functional)
are private to each side.

Productions carry both a CFG view (symbol strings, used by the bounded
cognate check) and an AST template (used by expansion and enumeration).
Target production ids 0..5 are stable and part of the scorer protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .terms import (App, Assign, Const, ConstValue, For, Hole, HoleIds, If,
                    Lambda, MethodCall, Return, Seq, Term, Var, holes,
                    is_complete, pretty, subterms)
from .values import BUILTINS, METHODS


@dataclass(frozen=True)
class Production:
    pid: int
    lhs: str
    rhs: tuple[str, ...]
    template: Callable[[HoleIds], Term]
    slots: tuple[str, ...]  # nonterminal of each template hole, preorder

    def __repr__(self):
        return f"<{self.pid}: {self.lhs} -> {' '.join(self.rhs)}>"


@dataclass(frozen=True)
class Grammar:
    nonterminals: frozenset[str]
    terminals: frozenset[str]
    productions: tuple[Production, ...]
    start: str

    def __post_init__(self):
        assert self.start in self.nonterminals
        for p in self.productions:
            assert p.lhs in self.nonterminals, p
            for s in p.rhs:
                assert s in self.nonterminals or s in self.terminals, (p, s)

    def with_lhs(self, nt: str) -> list[Production]:
        return [p for p in self.productions if p.lhs == nt]


@dataclass(frozen=True)
class Pools:
    variables: tuple[str, ...]
    constants: tuple[ConstValue, ...]
    functions: tuple[str, ...]
    methods: tuple[str, ...]


def pools_from_source(source: Term) -> Pools:
    vs, cs = [], []
    seen_v, seen_c = set(), set()
    for n in subterms(source):
        if isinstance(n, Var) and n.name not in seen_v:
            seen_v.add(n.name)
            vs.append(n.name)
        elif isinstance(n, Const) and n.value not in seen_c:
            seen_c.add(n.value)
            cs.append(n.value)
    return Pools(tuple(vs), tuple(cs), tuple(BUILTINS), tuple(METHODS))


# Target-side combinator productions (stable ids, protocol-visible).

def _t_map(ids):
    return App("map", (Hole("A", ids.fresh()),
                       Lambda((Hole("V", ids.fresh()),), Hole("A", ids.fresh()))))


def _t_filter(ids):
    return App("filter", (Hole("A", ids.fresh()),
                          Lambda((Hole("V", ids.fresh()),), Hole("E", ids.fresh()))))


def _t_flatmap(ids):
    return App("flatmap", (Hole("A", ids.fresh()),
                           Lambda((Hole("V", ids.fresh()),), Hole("A", ids.fresh()))))


def _t_find(ids):
    return App("find", (Hole("A", ids.fresh()), Hole("E", ids.fresh()),
                        Lambda((Hole("V", ids.fresh()),), Hole("E", ids.fresh()))))


def _t_fold(ids):
    return App("fold", (Hole("E", ids.fresh()), Hole("A", ids.fresh()),
                        Lambda((Hole("V", ids.fresh()), Hole("V", ids.fresh())),
                               Hole("E", ids.fresh()))))


def _t_expr(ids):
    return Hole("E", ids.fresh())


TARGET_PRODUCTIONS = (
    Production(0, "A", ("map", "(", "A", ",", "\\", "V", ".", "A", ")"), _t_map, ("A", "V", "A")),
    Production(1, "A", ("filter", "(", "A", ",", "\\", "V", ".", "E", ")"), _t_filter, ("A", "V", "E")),
    Production(2, "A", ("flatmap", "(", "A", ",", "\\", "V", ".", "A", ")"), _t_flatmap, ("A", "V", "A")),
    Production(3, "A", ("find", "(", "A", ",", "E", ",", "\\", "V", ".", "E", ")"), _t_find, ("A", "E", "V", "E")),
    Production(4, "A", ("fold", "(", "E", ",", "A", ",", "\\", "V", ",", "V", ".", "E", ")"), _t_fold, ("E", "A", "V", "V", "E")),
    Production(5, "A", ("E",), _t_expr, ("E",)),
)

SHARED_NONTERMINALS = frozenset({"E", "V", "C"})
ROOT_CONTEXT = (-1, 0)  # decision context for the start hole


def _shared_productions(pools: Pools, start_pid: int = 100) -> tuple[Production, ...]:
    prods: list[Production] = []
    pid = start_pid

    def add(lhs, rhs, template, slots):
        nonlocal pid
        prods.append(Production(pid, lhs, tuple(rhs), template, tuple(slots)))
        pid += 1

    for fname in pools.functions:
        b = BUILTINS[fname]
        rhs = [fname, "("]
        for i in range(b.arity):
            if i:
                rhs.append(",")
            rhs.append("E")
        rhs.append(")")
        add("E", rhs, (lambda f=fname, k=b.arity: lambda ids: App(
            f, tuple(Hole("E", ids.fresh()) for _ in range(k))))(), ["E"] * b.arity)
    for mname in pools.methods:
        m = METHODS[mname]
        nargs = m.arity - 1  # receiver comes first
        rhs = ["E", ".", mname, "("]
        for i in range(nargs):
            if i:
                rhs.append(",")
            rhs.append("E")
        rhs.append(")")
        add("E", rhs, (lambda mn=mname, k=nargs: lambda ids: MethodCall(
            Hole("E", ids.fresh()), mn, tuple(Hole("E", ids.fresh()) for _ in range(k))))(),
            ["E"] * (1 + nargs))
    add("E", ["V"], lambda ids: Hole("V", ids.fresh()), ["V"])
    add("E", ["C"], lambda ids: Hole("C", ids.fresh()), ["C"])
    for v in pools.variables:
        add("V", [v], (lambda name=v: lambda ids: Var(name))(), [])
    for c in pools.constants:
        toks = pretty(Const(c)).split(" ")
        add("C", toks, (lambda cv=c: lambda ids: Const(cv))(), [])
    return tuple(prods)


def _imp_productions(start_pid: int = 500) -> tuple[Production, ...]:
    pid = [start_pid]

    def mk(lhs, rhs, template, slots):
        p = Production(pid[0], lhs, tuple(rhs), template, tuple(slots))
        pid[0] += 1
        return p

    return (
        mk("S", ("V", "=", "E"), lambda ids: Assign(Hole("V", ids.fresh()), Hole("E", ids.fresh())), ("V", "E")),
        mk("S", ("I",), lambda ids: Hole("I", ids.fresh()), ("I",)),
        mk("S", ("S", ";", "S"), lambda ids: Seq((Hole("S", ids.fresh()), Hole("S", ids.fresh()))), ("S", "S")),
        mk("S", ("return", "E"), lambda ids: Return(Hole("E", ids.fresh())), ("E",)),
        mk("S", ("for", "V", "in", "E", ":", "{", "S", "}"),
           lambda ids: For(Hole("V", ids.fresh()), Hole("E", ids.fresh()), Hole("S", ids.fresh())), ("V", "E", "S")),
        mk("S", ("if", "E", ":", "{", "S", "}", "else", ":", "{", "S", "}"),
           lambda ids: If(Hole("E", ids.fresh()), Hole("S", ids.fresh()), Hole("S", ids.fresh())), ("E", "S", "S")),
        mk("I", ("V", ".", "add", "(", "E", ")"),
           lambda ids: MethodCall(Hole("V", ids.fresh()), "add", (Hole("E", ids.fresh()),)), ("V", "E")),
    )


@dataclass(frozen=True)
class CognateGrammarPair:
    source: Grammar
    target: Grammar
    shared: frozenset[str]
    pools: Pools

    def __post_init__(self):
        assert self.shared <= (self.source.nonterminals & self.target.nonterminals)


def _terminals_of(prods: Iterable[Production], nts: frozenset[str]) -> frozenset[str]:
    return frozenset(s for p in prods for s in p.rhs if s not in nts)


def build_pair(pools: Pools) -> CognateGrammarPair:
    shared = _shared_productions(pools)
    imp = _imp_productions()
    src_nts = frozenset({"S", "I"}) | SHARED_NONTERMINALS
    tgt_nts = frozenset({"A"}) | SHARED_NONTERMINALS
    source = Grammar(src_nts, _terminals_of(imp + shared, src_nts), imp + shared, "S")
    target = Grammar(tgt_nts, _terminals_of(TARGET_PRODUCTIONS + shared, tgt_nts),
                     TARGET_PRODUCTIONS + shared, "A")
    return CognateGrammarPair(source, target, SHARED_NONTERMINALS, pools)


def pair_for_source(source: Term) -> CognateGrammarPair:
    return build_pair(pools_from_source(source))


# Derivability is structural: the shared nonterminals derive exactly the
# pure expression layer in both grammars (constants are unrestricted, as
# C covers all of Z and B).

def derivable_from(nt: str, t: Term) -> bool:
    if isinstance(t, Hole):
        return False
    if nt == "V":
        return isinstance(t, Var)
    if nt == "C":
        return isinstance(t, Const)
    if nt == "E":
        return is_pure_expr(t)
    if nt == "A":
        return is_target_term(t)
    raise ValueError(f"no derivability rule for {nt}")


def is_pure_expr(t: Term) -> bool:
    if isinstance(t, (Var, Const)):
        return True
    if isinstance(t, App):
        return t.fn in BUILTINS and len(t.args) == BUILTINS[t.fn].arity and \
            all(is_pure_expr(a) for a in t.args)
    if isinstance(t, MethodCall):
        return t.method in METHODS and is_pure_expr(t.recv) and \
            all(is_pure_expr(a) for a in t.args)
    return False


COMBINATOR_SHAPES = {"map": 1, "filter": 1, "flatmap": 1, "find": 1, "fold": 2}


def is_target_term(t: Term) -> bool:
    if isinstance(t, App) and t.fn in COMBINATOR_SHAPES:
        from .parser import _validate_fn, ParseError
        try:
            _validate_fn(t)
            return True
        except ParseError:
            return False
    return is_pure_expr(t)


@dataclass
class SharedTermIndex:
    """Per shared nonterminal, the source subterms derivable from it,
    deduplicated by canonical print in first-occurrence preorder order."""

    terms: dict[str, list[Term]] = field(default_factory=dict)

    def candidates(self, nt: str) -> list[Term]:
        return self.terms.get(nt, [])

    def all_terms(self) -> list[Term]:
        seen, out = set(), []
        for ts in self.terms.values():
            for t in ts:
                k = pretty(t)
                if k not in seen:
                    seen.add(k)
                    out.append(t)
        return out


def assigned_variables(source: Term) -> set[str]:
    """Assignment targets (result accumulators etc.); loop binders are not
    assignments."""
    return {n.var.name for n in subterms(source) if isinstance(n, Assign)}


def shared_terms_of(source: Term, pair: CognateGrammarPair) -> SharedTermIndex:
    """Every subterm of the source (at any nesting depth) derivable from a
    shared nonterminal; feeds both pruning (trace lookup) and the copy
    candidate lists.

    Terms mentioning source-local assigned variables are excluded: no valid
    target can contain them (they are unbound there), so they are neither
    copyable nor a source of completion values."""
    locals_ = assigned_variables(source)
    index = SharedTermIndex({nt: [] for nt in sorted(pair.shared)})
    seen = {nt: set() for nt in pair.shared}
    for sub in subterms(source):
        if any(isinstance(n, Var) and n.name in locals_ for n in subterms(sub)):
            continue
        for nt in sorted(pair.shared):
            if derivable_from(nt, sub):
                k = pretty(sub)
                if k not in seen[nt]:
                    seen[nt].add(k)
                    index.terms[nt].append(sub)
    return index


# Relaxed trace compatibility lets the target use these even when absent
# from the source.
DEFAULT_CONSTANTS = (Const(True), Const(False), Const(0), Const(None))


def expand(p: Term, hole_uid: int, production: Production, ids: HoleIds) -> Term:
    """Replace the hole with the production's template (fresh hole ids)."""
    target = _find_hole(p, hole_uid)
    if production.lhs != target.nt:
        raise ValueError(f"production {production!r} does not expand {target.nt}")
    return _replace_hole(p, hole_uid, production.template(ids))


def fill(p: Term, hole_uid: int, term: Term) -> Term:
    """Copy-substitution: put a complete shared term into a shared hole."""
    target = _find_hole(p, hole_uid)
    if not derivable_from(target.nt, term):
        raise ValueError(f"{pretty(term)} is not derivable from {target.nt}")
    return _replace_hole(p, hole_uid, term)


def _find_hole(p: Term, uid: int) -> Hole:
    for h in holes(p):
        if h.uid == uid:
            return h
    raise ValueError(f"no hole with id {uid}")


def _replace_hole(p: Term, uid: int, replacement: Term) -> Term:
    if isinstance(p, Hole):
        return replacement if p.uid == uid else p
    kids = p.children()
    if not kids:
        return p
    return p.replace_children(tuple(_replace_hole(k, uid, replacement) for k in kids))


def choose_nonterminal(p: Term) -> int:
    """Leftmost-outermost hole (preorder first); deterministic."""
    hs = holes(p)
    if not hs:
        raise ValueError("term is complete")
    return hs[0].uid


def enumerate_terms(grammar: Grammar, nt: str, depth: int) -> list[Term]:
    """All complete terms derivable from nt in at most `depth` production
    applications. Exponential; meant for bounded checks on small pools."""
    memo: dict[tuple[str, int], list[Term]] = {}

    def go(sym: str, d: int) -> list[Term]:
        if d <= 0:
            return []
        key = (sym, d)
        if key in memo:
            return memo[key]
        out, seen = [], set()
        for prod in grammar.with_lhs(sym):
            ids = HoleIds()
            template = prod.template(ids)
            for t in _fill_all(template, d - 1, go):
                k = pretty(t)
                if k not in seen:
                    seen.add(k)
                    out.append(t)
        memo[key] = out
        return out

    def _fill_all(t: Term, d: int, go) -> list[Term]:
        hs = holes(t)
        if not hs:
            return [t]
        h = hs[0]
        return [r for cand in go(h.nt, d) for r in _fill_all(_replace_hole(t, h.uid, cand), d, go)]

    return go(nt, depth)


_HEIGHTS: dict[int, dict] = {}


def _min_heights(grammar: Grammar) -> dict:
    """Fewest production applications needed to derive a complete term."""
    key = id(grammar)
    if key in _HEIGHTS:
        return _HEIGHTS[key]
    inf = float("inf")
    h = {nt: inf for nt in grammar.nonterminals}
    changed = True
    while changed:
        changed = False
        for p in grammar.productions:
            cost = 1 + max([h[s] for s in p.slots], default=0)
            if cost < h[p.lhs]:
                h[p.lhs] = cost
                changed = True
    _HEIGHTS[key] = h
    return h


def random_term(grammar: Grammar, nt: str, depth: int, rng) -> Term:
    """Random complete term for round-trip tests; when the budget runs out
    only quickest-to-terminate productions stay eligible."""
    heights = _min_heights(grammar)
    prods = [p for p in grammar.with_lhs(nt)
             if all(heights[s] < float("inf") for s in p.slots)]
    if depth <= 1:
        best = min(1 + max([heights[s] for s in p.slots], default=0) for p in prods)
        prods = [p for p in prods
                 if 1 + max([heights[s] for s in p.slots], default=0) == best]
    prod = rng.choice(prods)
    ids = HoleIds()
    t = prod.template(ids)
    while True:
        hs = holes(t)
        if not hs:
            return t
        h = hs[0]
        t = _replace_hole(t, h.uid, random_term(grammar, h.nt, depth - 1, rng))
