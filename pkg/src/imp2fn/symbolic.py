"""Symbolic values, the per-combinator forward/backward semantics, and a
bounded satisfiability procedure for the closed constraint language the
pruning judgments emit.

The solver's contract is one-directional: UNSAT answers are trusted (they
prune), SAT answers may be conservative. Whenever enumeration limits are
hit the solver errs toward SAT, so pruning never rejects a completion that
is feasible within the modeled universe.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .values import (BUILTINS, EvalError, Value, ValueSet, is_bool, is_int,
                     is_list, values_equal, vkey)

log = logging.getLogger(__name__)

LIST_LEN_BOUND = 16  # checker-side bound for flexible list lengths
ENUM_LIMIT = 50_000  # assignment enumeration cap before giving up as SAT


class Sym:
    pass


@dataclass(frozen=True)
class SConc(Sym):
    value: Value

    def __repr__(self):
        return f"«{self.value!r}»"


@dataclass(frozen=True)
class SVar(Sym):
    vid: int
    tag: str = "any"  # any | int | bool | str | list

    def __repr__(self):
        return f"ν{self.vid}:{self.tag}"


@dataclass(frozen=True, eq=False)
class SCand(Sym):
    """Deterministic shared-nonterminal variable: ranges over the finite
    set of values the source's shared terms took on this input."""

    vid: int
    cands: tuple

    def __repr__(self):
        return f"κ{self.vid}{{{len(self.cands)}}}"


@dataclass(frozen=True, eq=False)
class SList(Sym):
    """Fixed-length symbolic list; a slot with a guard is present iff the
    guard evaluates to true (filter's conditional slots)."""

    elems: tuple
    guards: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.guards is None:
            object.__setattr__(self, "guards", (None,) * len(self.elems))
        assert len(self.guards) == len(self.elems)

    def unguarded(self) -> bool:
        return all(g is None for g in self.guards)

    def __repr__(self):
        parts = [f"{e!r}" if g is None else f"{g!r}?{e!r}"
                 for e, g in zip(self.elems, self.guards)]
        return "⟦" + ", ".join(parts) + "⟧"


@dataclass(frozen=True, eq=False)
class SApp(Sym):
    """Uninterpreted residual of a builtin that could not fold."""

    fn: str
    args: tuple

    def __repr__(self):
        return f"{self.fn}({', '.join(map(repr, self.args))})"


class SymGen:
    """Per-session fresh-variable source (callers own it; no global state)."""

    def __init__(self):
        self._next = 0

    def fresh_id(self) -> int:
        self._next += 1
        return self._next

    def var(self, tag: str = "any") -> SVar:
        return SVar(self.fresh_id(), tag)

    def cand(self, values) -> SCand:
        seen, out = set(), []
        for v in values:
            k = vkey(v)
            if k not in seen:
                seen.add(k)
                out.append(v)
        return SCand(self.fresh_id(), tuple(out))

    def refresh(self, s: Sym, mapping: Optional[dict] = None) -> Sym:
        """Structural copy with fresh variable ids: an independent draw of
        the same symbolic shape."""
        mapping = {} if mapping is None else mapping
        if isinstance(s, SVar):
            if s.vid not in mapping:
                mapping[s.vid] = self.fresh_id()
            return SVar(mapping[s.vid], s.tag)
        if isinstance(s, SCand):
            if s.vid not in mapping:
                mapping[s.vid] = self.fresh_id()
            return SCand(mapping[s.vid], s.cands)
        if isinstance(s, SList):
            return SList(tuple(self.refresh(e, mapping) for e in s.elems),
                         tuple(None if g is None else self.refresh(g, mapping)
                               for g in s.guards))
        if isinstance(s, SApp):
            return SApp(s.fn, tuple(self.refresh(a, mapping) for a in s.args))
        return s


def sym_of(v: Value) -> Sym:
    return SConc(v)


def tag_matches(tag: str, v: Value) -> bool:
    if tag == "any":
        return True
    return {"int": is_int, "bool": is_bool, "str": lambda x: isinstance(x, str),
            "list": is_list}[tag](v)


# ---------------------------------------------------------------- constraints

class Constraint:
    pass


@dataclass(frozen=True)
class CTrue(Constraint):
    pass


@dataclass(frozen=True)
class CFalse(Constraint):
    pass


@dataclass(frozen=True, eq=False)
class CEq(Constraint):
    rhs: Sym


@dataclass(frozen=True)
class CGt(Constraint):
    lo: int


@dataclass(frozen=True)
class CLenEq(Constraint):
    n: int


@dataclass(frozen=True)
class CLenLeq(Constraint):
    n: int


@dataclass(frozen=True)
class CLenGeq(Constraint):
    n: int


@dataclass(frozen=True, eq=False)
class CSubseq(Constraint):
    """The given elements must embed as a subsequence of y."""

    small: tuple


@dataclass(frozen=True, eq=False)
class CSubarr(Constraint):
    """y must be a contiguous subarray of the given elements."""

    big: tuple


@dataclass(frozen=True, eq=False)
class CContains(Constraint):
    elem: Sym


@dataclass(frozen=True, eq=False)
class CAnd(Constraint):
    parts: tuple


@dataclass(frozen=True, eq=False)
class CImplies(Constraint):
    """Antecedent atoms are ('eq'|'ne', Sym, Sym); all must hold for the
    consequent to bind."""

    antecedent: tuple
    consequent: Constraint


TRUE = CTrue()
FALSE = CFalse()


# ------------------------------------------------------------------- solving

class Universe:
    """Witness pools for fresh variables, drawn from the instance: trace
    values, input values, constants, and the expected output, plus the
    standard fringe {-1, 0, 1}."""

    def __init__(self, ints=(), strs=(), lists=(), bools=(True, False)):
        self.ints = list(dict.fromkeys(list(ints) + [-1, 0, 1]))
        self.strs = list(dict.fromkeys(list(strs) + [""]))
        self.lists = [list(x) for x in lists] + [[]]
        self.bools = list(bools)

    @classmethod
    def from_values(cls, values) -> "Universe":
        ints, strs, lists = [], [], []

        def visit(v):
            if is_int(v):
                ints.append(v)
            elif isinstance(v, str):
                strs.append(v)
            elif is_list(v):
                lists.append(v)
                for x in v:
                    visit(x)

        for v in values:
            visit(v)
        return cls(ints, strs, lists)

    def pool(self, tag: str):
        if tag == "int":
            return list(self.ints)
        if tag == "bool":
            return list(self.bools)
        if tag == "str":
            return list(self.strs)
        if tag == "list":
            return [list(x) for x in self.lists]
        return list(self.ints) + list(self.bools) + list(self.strs) + \
            [list(x) for x in self.lists] + [None]


class _GiveUp(Exception):
    """Enumeration limit reached; the caller must answer SAT."""


UNKNOWN = object()  # concretize() result for still-symbolic values (None is a value)


class _TickTotal:
    """Process-wide deterministic count of solver work, the basis of the
    modeled clock (single search loop per process; bench parallelism uses
    separate processes)."""

    total = 0


def solver_ticks() -> int:
    return _TickTotal.total


class _Solver:
    def __init__(self, universe: Optional[Universe]):
        self.universe = universe or Universe()
        self.steps = 0

    def tick(self):
        self.steps += 1
        _TickTotal.total += 1
        if self.steps > ENUM_LIMIT:
            raise _GiveUp()

    def resolve(self, s: Sym, env: dict) -> Sym:
        while isinstance(s, (SVar, SCand)) and s.vid in env:
            bound = env[s.vid]
            s = bound if isinstance(bound, Sym) else SConc(bound)
        return s

    def concretize(self, s: Sym, env: dict):
        """Ground value of s under env, or UNKNOWN if still symbolic."""
        s = self.resolve(s, env)
        if isinstance(s, SConc):
            return s.value
        if isinstance(s, SList):
            out = []
            for e, g in zip(s.elems, s.guards):
                if g is not None:
                    gv = self.concretize(g, env)
                    if gv is UNKNOWN:
                        return UNKNOWN
                    if gv is False:
                        continue
                    if gv is not True:
                        return UNKNOWN
                ev = self.concretize(e, env)
                if ev is UNKNOWN:
                    return UNKNOWN
                out.append(ev)
            return out
        if isinstance(s, SApp):
            args = []
            for a in s.args:
                av = self.concretize(a, env)
                if av is UNKNOWN:
                    return UNKNOWN
                args.append(av)
            reg = _registry(s.fn)
            if reg is None:
                return UNKNOWN
            try:
                return reg(*args)
            except EvalError:
                return UNKNOWN
        return UNKNOWN

    # goals are ("eq", a, b) | ("ne", a, b) with Sym operands

    def solve(self, goals: list, env: dict) -> Optional[dict]:
        self.tick()
        if not goals:
            return env
        kind, a, b = goals[0]
        rest = goals[1:]
        if kind == "eq":
            return self.unify(a, b, rest, env)
        return self.disunify(a, b, rest, env)

    def unify(self, a: Sym, b: Sym, rest: list, env: dict) -> Optional[dict]:
        self.tick()
        a, b = self.resolve(a, env), self.resolve(b, env)
        if isinstance(b, (SVar, SCand)) and not isinstance(a, (SVar, SCand)):
            a, b = b, a
        if isinstance(a, SVar):
            bv = self.concretize(b, env)
            if bv is not UNKNOWN:
                if not tag_matches(a.tag, bv):
                    return None
                return self.solve(rest, {**env, a.vid: bv})
            if isinstance(b, (SVar, SCand)):
                return self._enum_var(b, lambda e: self.unify(a, b, rest, e), env)
            # symbolic structure against a fresh variable: decompose lists,
            # otherwise conservatively satisfiable
            if isinstance(b, SList):
                return self.solve(rest, {**env, a.vid: b})
            raise _GiveUp()
        if isinstance(a, SCand):
            bv = self.concretize(b, env)
            if bv is not UNKNOWN:
                if any(values_equal(bv, c) for c in a.cands):
                    return self.solve(rest, {**env, a.vid: bv})
                return None
            return self._enum_var(a, lambda e: self.unify(a, b, rest, e), env)
        av, bv = self.concretize(a, env), self.concretize(b, env)
        if av is not UNKNOWN and bv is not UNKNOWN:
            return self.solve(rest, env) if values_equal(av, bv) else None
        if isinstance(a, SList) or isinstance(b, SList):
            if not isinstance(a, SList):
                a, b = b, a
                bv = av
            if bv is not UNKNOWN:
                if not is_list(bv):
                    return None
                return self._match_list(a, bv, rest, env)
            if isinstance(b, SList):
                return self._match_slists(a, b, rest, env)
            raise _GiveUp()
        if isinstance(a, SApp) or isinstance(b, SApp):
            if not isinstance(a, SApp):
                a, b = b, a
                bv = av
            if bv is not UNKNOWN:
                return self._invert_app(a, bv, rest, env)
            raise _GiveUp()
        return None

    def disunify(self, a: Sym, b: Sym, rest: list, env: dict) -> Optional[dict]:
        self.tick()
        av, bv = self.concretize(a, env), self.concretize(b, env)
        if av is not UNKNOWN and bv is not UNKNOWN:
            return self.solve(rest, env) if not values_equal(av, bv) else None
        # leave the disequality unbound: over-approximates toward SAT
        return self.solve(rest, env)

    def _enum_var(self, v: Union[SVar, SCand], k, env: dict) -> Optional[dict]:
        domain = v.cands if isinstance(v, SCand) else self.universe.pool(v.tag)
        for val in domain:
            self.tick()
            r = k({**env, v.vid: val})
            if r is not None:
                return r
        return None

    def _match_list(self, sl: SList, target: list, rest: list, env: dict) -> Optional[dict]:
        """Slot-by-slot subsequence match of a guarded symbolic list against
        a concrete list."""

        def go(slot: int, pos: int, env: dict) -> Optional[dict]:
            self.tick()
            if slot == len(sl.elems):
                return self.solve(rest, env) if pos == len(target) else None
            elem, guard = sl.elems[slot], sl.guards[slot]
            if guard is None:
                if pos >= len(target):
                    return None
                return self._with_goal(elem, target[pos],
                                       lambda e: go(slot + 1, pos + 1, e), env)
            if pos < len(target):
                r = self._with_goal(guard, True, lambda e: self._with_goal(
                    elem, target[pos], lambda e2: go(slot + 1, pos + 1, e2), e), env)
                if r is not None:
                    return r
            return self._with_goal(guard, False, lambda e: go(slot + 1, pos, e), env)

        return go(0, 0, env)

    def _with_goal(self, s: Sym, v: Value, k, env: dict) -> Optional[dict]:
        narrowed = self.unify(s, SConc(v), [], env)
        if narrowed is None:
            return None
        return k(narrowed)

    def _match_slists(self, a: SList, b: SList, rest: list, env: dict) -> Optional[dict]:
        if not a.unguarded() or not b.unguarded():
            raise _GiveUp()
        if len(a.elems) != len(b.elems):
            return None
        goals = [("eq", x, y) for x, y in zip(a.elems, b.elems)]
        return self.solve(goals + rest, env)

    def _invert_app(self, app: SApp, out: Value, rest: list, env: dict) -> Optional[dict]:
        args = [self.resolve(x, env) for x in app.args]
        ground = [self.concretize(x, env) for x in args]
        reg = _registry(app.fn)
        if reg is None:
            return None
        if not _args_typable(reg, ground):
            return None
        if all(g is not UNKNOWN for g in ground):
            try:
                got = reg(*ground)
            except EvalError:
                return None
            return self.solve(rest, env) if values_equal(got, out) else None
        if app.fn in ("+", "-", "*") and len(args) == 2 and is_int(out):
            for i_known, i_unknown in ((0, 1), (1, 0)):
                g = ground[i_known]
                if g is UNKNOWN or not is_int(g):
                    continue
                want = _int_inverse(app.fn, out, g, i_unknown)
                if want is _NO_INT:
                    return None
                return self.unify(args[i_unknown], SConc(want), rest, env)
        # enumerate one undetermined leaf at a time; each binding may let the
        # inverse shortcut fire on the next recursion
        leaf = self._leaf_var(args, env)
        if leaf is None:
            raise _GiveUp()
        return self._enum_var(leaf, lambda e: self._invert_app(app, out, rest, e), env)

    def _leaf_var(self, syms, env: dict) -> Optional[Union[SVar, SCand]]:
        """First enumerable variable in a symbolic forest, SCand preferred."""
        fallback = None
        stack = list(reversed(list(syms)))
        while stack:
            s = self.resolve(stack.pop(), env)
            if isinstance(s, SCand):
                return s
            if isinstance(s, SVar) and fallback is None and s.tag != "list":
                fallback = s
            elif isinstance(s, SApp):
                stack.extend(reversed(s.args))
            elif isinstance(s, SList):
                stack.extend(reversed([g for g in s.guards if g is not None]))
                stack.extend(reversed(s.elems))
        return fallback


_NO_INT = object()


def _registry(fn: str):
    from .values import METHODS
    return BUILTINS.get(fn) or METHODS.get(fn)


def _args_typable(reg, ground) -> bool:
    """Reject ground arguments that can never fit the builtin's signature."""
    from .values import RECORD_FIELDS, is_str
    for g, ptype in zip(ground, reg.params):
        if g is UNKNOWN or g is None:
            continue
        if ptype == "int" and not is_int(g):
            return False
        if ptype == "bool" and not is_bool(g):
            return False
        if ptype == "str" and not is_str(g):
            return False
        if (isinstance(ptype, tuple) and ptype[0] == "list") and not is_list(g):
            return False
        if isinstance(ptype, str) and ptype in RECORD_FIELDS and not is_list(g):
            return False
    return True


def _int_inverse(fn: str, out: int, known: int, unknown_pos: int):
    if fn == "+":
        return out - known
    if fn == "-":
        # known - x = out  |  x - known = out
        return known - out if unknown_pos == 1 else out + known
    if fn == "*":
        if known == 0:
            return 0 if out == 0 else _NO_INT  # 0 * anything = 0; pick 0
        if out % known != 0:
            return _NO_INT
        return out // known
    return _NO_INT


def sat_eq(psi: Sym, v: Value, universe: Optional[Universe] = None) -> Optional[dict]:
    """Witness assignment for ψ = v, or None if unsatisfiable within the
    bounded universe. Enumeration overflow answers SAT with a bare witness."""
    solver = _Solver(universe)
    try:
        return solver.solve([("eq", psi, SConc(v))], {})
    except _GiveUp:
        return {}


def sym_equal_sat(a: Sym, b: Sym, universe: Optional[Universe] = None) -> Optional[dict]:
    solver = _Solver(universe)
    try:
        return solver.solve([("eq", a, b)], {})
    except _GiveUp:
        return {}


def _slist_len_range(s: SList) -> tuple[int, int]:
    fixed = sum(1 for g in s.guards if g is None)
    must = sum(1 for g in s.guards if isinstance(g, SConc) and g.value is True)
    cant = sum(1 for g in s.guards if isinstance(g, SConc) and g.value is False)
    lo = fixed + must
    hi = len(s.elems) - cant
    return lo, hi


def sat_constraint(phi: Constraint, psi: Sym, universe: Optional[Universe] = None) -> bool:
    """SAT(φ[y := ψ]) under the same variable semantics as sat_eq."""
    try:
        return _sat_constraint(phi, psi, _Solver(universe))
    except _GiveUp:
        return True


def _sat_constraint(phi: Constraint, psi: Sym, solver: _Solver) -> bool:
    if isinstance(phi, CTrue):
        return True
    if isinstance(phi, CFalse):
        return False
    if isinstance(phi, CAnd):
        # parts are checked independently; joint satisfiability is only
        # over-approximated, which keeps the UNSAT direction trustworthy
        return all(_sat_constraint(p, psi, solver) for p in phi.parts)
    if isinstance(phi, CEq):
        return solver.solve([("eq", psi, phi.rhs)], {}) is not None
    if isinstance(phi, CGt):
        s = solver.resolve(psi, {})
        v = solver.concretize(s, {})
        if v is not UNKNOWN:
            return is_int(v) and v > phi.lo
        if isinstance(s, SCand):
            return any(is_int(c) and c > phi.lo for c in s.cands)
        return True
    if isinstance(phi, (CLenEq, CLenLeq, CLenGeq)):
        s = solver.resolve(psi, {})
        v = solver.concretize(s, {})
        if v is not UNKNOWN:
            if not is_list(v):
                return False
            return _len_ok(phi, len(v), len(v))
        if isinstance(s, SList):
            lo, hi = _slist_len_range(s)
            return _len_ok(phi, lo, hi)
        if isinstance(s, SCand):
            return any(is_list(c) and _len_ok(phi, len(c), len(c)) for c in s.cands)
        if isinstance(s, SVar):
            return s.tag in ("any", "list") and _len_ok(phi, 0, LIST_LEN_BOUND)
        return True
    if isinstance(phi, CSubseq):
        return _sat_subseq(phi.small, psi, solver)
    if isinstance(phi, CSubarr):
        return _sat_subarr(phi.big, psi, solver)
    if isinstance(phi, CContains):
        return _sat_contains(phi.elem, psi, solver)
    if isinstance(phi, CImplies):
        if _sat_atoms_and(phi.antecedent, phi.consequent, psi, solver):
            return True
        return _sat_atoms_negated(phi.antecedent, solver)
    raise ValueError(f"unknown constraint {phi!r}")


def _len_ok(phi, lo: int, hi: int) -> bool:
    if isinstance(phi, CLenEq):
        return lo <= phi.n <= hi
    if isinstance(phi, CLenLeq):
        return lo <= phi.n
    return hi >= phi.n


def _elements(psi: Sym, solver: _Solver):
    """(elems, guards) view of a list-shaped ψ, or None if shapeless."""
    s = solver.resolve(psi, {})
    v = solver.concretize(s, {})
    if v is not UNKNOWN:
        if not is_list(v):
            return None
        return [SConc(x) for x in v], [None] * len(v)
    if isinstance(s, SList):
        return list(s.elems), list(s.guards)
    return None


def _sat_subseq(small, psi: Sym, solver: _Solver) -> bool:
    view = _elements(psi, solver)
    if view is None:
        return True  # shapeless ψ can be anything
    elems, guards = view

    def go(i: int, j: int, env: dict) -> bool:
        solver.tick()
        if i == len(small):
            return True
        if j == len(elems):
            return False
        r = solver.solve([("eq", small[i], elems[j])], env)
        if r is not None and go(i + 1, j + 1, r):
            return True
        return go(i, j + 1, env)

    return go(0, 0, {})


def _sat_subarr(big, psi: Sym, solver: _Solver) -> bool:
    view = _elements(psi, solver)
    if view is None:
        return True
    elems, guards = view
    k = len(elems)
    if k == 0:
        return True
    for start in range(0, len(big) - k + 1):
        goals = [("eq", e, big[start + i]) for i, e in enumerate(elems)]
        if solver.solve(goals, {}) is not None:
            return True
    return False


def _sat_contains(elem: Sym, psi: Sym, solver: _Solver) -> bool:
    view = _elements(psi, solver)
    if view is None:
        return True
    elems, guards = view
    for e, g in zip(elems, guards):
        if isinstance(g, SConc) and g.value is False:
            continue
        if solver.solve([("eq", elem, e)], {}) is not None:
            return True
    return False


def _sat_atoms_and(atoms, consequent: Constraint, psi: Sym, solver: _Solver) -> bool:
    env: Optional[dict] = {}
    for kind, a, b in atoms:
        env = solver.solve([(kind, a, b)], env)
        if env is None:
            return False
    # consequent checked under a fresh solver: bindings rarely overlap and
    # the SAT direction stays conservative
    return _sat_constraint(consequent, psi, solver)


def _sat_atoms_negated(atoms, solver: _Solver) -> bool:
    for kind, a, b in atoms:
        neg = "ne" if kind == "eq" else "eq"
        if solver.solve([(neg, a, b)], {}) is not None:
            return True
    return False


# ------------------------------------------------------- forward semantics

def forward(fn: str, *args):
    """Per-combinator symbolic result; argument shapes follow the semantic
    signatures (find/fold take their seed first)."""
    if fn == "map":
        elems, results = args
        guards = elems.guards if isinstance(elems, SList) else (None,) * len(results)
        return SList(tuple(results), tuple(guards))
    if fn == "flatmap":
        elems, inner = args
        out = []
        for part in inner:
            if isinstance(part, SConc):
                if not is_list(part.value):
                    raise EvalError("flatmap body must produce lists")
                out.extend(SConc(x) for x in part.value)
            elif isinstance(part, SList):
                if not part.unguarded():
                    raise EvalError("guarded inner list must be enumerated first")
                out.extend(part.elems)
            else:
                raise EvalError("flatmap body must produce list-shaped values")
        return SList(tuple(out))
    if fn == "filter":
        elems, preds = args
        kept_e, kept_g = [], []
        for e, p in zip(_slist_elems(elems), preds):
            if isinstance(p, SConc):
                if p.value is True:
                    kept_e.append(e)
                    kept_g.append(None)
                elif p.value is not False:
                    raise EvalError("filter predicate must be boolean")
            else:
                kept_e.append(e)
                kept_g.append(p)
        return SList(tuple(kept_e), tuple(kept_g))
    if fn == "find":
        default, elems, preds = args
        for e, p in zip(_slist_elems(elems), preds):
            if not isinstance(p, SConc):
                raise EvalError("symbolic find marks must be branched by the caller")
            if p.value is True:
                return e
        return default
    if fn == "fold":
        init, elems, steps = args
        if not _slist_elems(elems):
            return init
        return steps[-1]
    raise ValueError(f"no forward row for {fn}")


def _slist_elems(s) -> tuple:
    if isinstance(s, SList):
        return s.elems
    if isinstance(s, SConc) and is_list(s.value):
        return tuple(SConc(x) for x in s.value)
    raise EvalError(f"not list-shaped: {s!r}")


# ------------------------------------------------------ backward semantics

def _concrete_out(phi: Constraint) -> Optional[Value]:
    if isinstance(phi, CEq) and isinstance(phi.rhs, SConc):
        return phi.rhs.value
    return None


def backward(fn: str, i: int, phi: Constraint, earlier: Sequence[Sym] = (),
             element: Optional[Sym] = None, position: Optional[int] = None,
             is_final: bool = False) -> Constraint:
    """Specification for the i-th semantic argument of fn given the output
    specification. Rows without usable information return True; unknown
    rows return True and log."""
    out = _concrete_out(phi)
    if fn == "map":
        if i == 1:
            return CLenEq(len(out)) if out is not None and is_list(out) else \
                (FALSE if out is not None else TRUE)
        if i == 2:
            # spec for the element-result aligned with the output position
            if out is not None and is_list(out) and position is not None \
                    and position < len(out):
                return CEq(SConc(out[position]))
            return TRUE
    if fn == "flatmap":
        if i == 1:
            return TRUE
        if i == 2:
            if out is not None:
                if not is_list(out):
                    return FALSE
                return CAnd((CSubarr(tuple(SConc(x) for x in out)), CLenLeq(len(out))))
            return TRUE
    if fn == "filter":
        if i == 1:
            if out is not None:
                if not is_list(out):
                    return FALSE
                return CAnd((CLenGeq(len(out)), CSubseq(tuple(SConc(x) for x in out))))
            return TRUE
        if i == 2:
            if out is not None and is_list(out) and element is not None:
                atoms = tuple(("ne", element, SConc(x)) for x in out)
                return CImplies(atoms, CEq(SConc(False)))
            return TRUE
    if fn == "find":
        if i == 1:  # default value
            return TRUE
        if i == 2:  # input list, given the default's symbolic value
            if isinstance(phi, CEq) and earlier:
                return CImplies((("ne", phi.rhs, earlier[0]),), CContains(phi.rhs))
            return TRUE
        if i == 3:  # per-element predicate result
            if isinstance(phi, CEq) and element is not None:
                return CImplies((("ne", phi.rhs, element),), CEq(SConc(False)))
            return TRUE
    if fn == "fold":
        if i in (1, 2):
            return TRUE
        if i == 3:
            return phi if is_final and isinstance(phi, (CEq, CGt)) else TRUE
    if fn in BUILTINS or fn in _method_names():
        # only +, -, * carry registered inverses; everything else weakens
        return _backward_builtin(fn, i, phi, earlier)
    log.warning("no backward row for (%s, %d); weakening to true", fn, i)
    return TRUE


def _method_names():
    from .values import METHODS
    return METHODS


def _backward_builtin(fn: str, i: int, phi: Constraint, earlier: Sequence[Sym]) -> Constraint:
    if fn not in ("+", "-", "*") or i != 2 or not earlier:
        return TRUE
    first = earlier[0]
    if not isinstance(first, SConc) or not is_int(first.value):
        return TRUE
    a = first.value
    if isinstance(phi, CEq) and isinstance(phi.rhs, SConc) and is_int(phi.rhs.value):
        out = phi.rhs.value
        if fn == "+":
            return CEq(SConc(out - a))
        if fn == "-":
            return CEq(SConc(a - out))
        if fn == "*":
            if a == 0:
                return TRUE if out == 0 else FALSE
            return CEq(SConc(out // a)) if out % a == 0 else FALSE
    if isinstance(phi, CGt):
        if fn == "+":
            return CGt(phi.lo - a)
    return TRUE
