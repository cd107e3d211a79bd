"""Runtime values, type-strict deep equality, and the registry of pure
first-order builtins and methods both languages share.

Values are plain Python data: int, bool, str, list, None. Equality is
type-strict (1 != True) because trace sets and differential checks must
not conflate bools with ints.
"""

from __future__ import annotations

from typing import Any, Callable

Value = Any  # int | bool | str | list | None


class EvalError(Exception):
    pass


class UnboundVariable(EvalError):
    pass


class TypeMismatch(EvalError):
    pass


class BudgetExhausted(EvalError):
    """Step budget ran out; distinct from other failures because it signals
    possible nontermination rather than a definite error."""


def is_int(v: Value) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def is_bool(v: Value) -> bool:
    return isinstance(v, bool)


def is_str(v: Value) -> bool:
    return isinstance(v, str)


def is_list(v: Value) -> bool:
    return isinstance(v, list)


def type_tag(v: Value) -> str:
    if v is None:
        return "none"
    if is_bool(v):
        return "bool"
    if is_int(v):
        return "int"
    if is_str(v):
        return "str"
    if is_list(v):
        return "list"
    raise TypeMismatch(f"not a value: {v!r}")


def values_equal(a: Value, b: Value) -> bool:
    ta, tb = type_tag(a), type_tag(b)
    if ta != tb:
        return False
    if ta == "list":
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


def vkey(v: Value):
    """Hashable canonical key preserving type distinctions."""
    t = type_tag(v)
    if t == "list":
        return ("l", tuple(vkey(x) for x in v))
    if t == "none":
        return ("n",)
    return (t[0], v)


class ValueSet:
    """Set of Values keyed by vkey (lists are unhashable natively)."""

    def __init__(self, items=()):
        self._d = {}
        for v in items:
            self.add(v)

    def add(self, v: Value) -> None:
        self._d[vkey(v)] = v

    def __contains__(self, v: Value) -> bool:
        return vkey(v) in self._d

    def __iter__(self):
        return iter(self._d.values())

    def __len__(self):
        return len(self._d)

    def __le__(self, other: "ValueSet") -> bool:
        return all(k in other._d for k in self._d)

    def __eq__(self, other):
        return isinstance(other, ValueSet) and self._d.keys() == other._d.keys()

    def union(self, other: "ValueSet") -> "ValueSet":
        s = ValueSet(self)
        for v in other:
            s.add(v)
        return s

    def __repr__(self):
        return "{" + ", ".join(repr(v) for v in self) + "}"


def _want_int(v):
    if not is_int(v):
        raise TypeMismatch(f"expected int, got {v!r}")
    return v


def _want_list(v):
    if not is_list(v):
        raise TypeMismatch(f"expected list, got {v!r}")
    return v


def _want(pred, v, what):
    if not pred(v):
        raise TypeMismatch(f"expected {what}, got {v!r}")
    return v


def _div(a, b):
    if b == 0:
        raise TypeMismatch("division by zero")
    return _want_int(a) // _want_int(b)


def _mod(a, b):
    if b == 0:
        raise TypeMismatch("modulo by zero")
    return _want_int(a) % _want_int(b)


def _prime(n):
    _want_int(n)
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _range(a, b):
    _want_int(a), _want_int(b)
    if b - a > 10_000:
        raise TypeMismatch("range too large")
    return list(range(a, b))


def _member(v, l):
    return any(values_equal(v, x) for x in _want_list(l))


# Mini type language for the sampler and the input generator:
# "int" | "bool" | "str" | "none" | ("list", T) | ("tv", name) | nominal str
TInt, TBool, TStr, TNone = "int", "bool", "str", "none"


def TList(t):
    return ("list", t)


def TV(name):
    return ("tv", name)


class Builtin:
    def __init__(self, name: str, params, ret, impl: Callable, invertible: bool = False):
        self.name = name
        self.params = params
        self.ret = ret
        self.impl = impl
        self.arity = len(params)
        self.invertible = invertible

    def __call__(self, *args: Value) -> Value:
        return self.impl(*args)


BUILTINS: dict[str, Builtin] = {}


def _reg(name, params, ret, impl, invertible=False):
    BUILTINS[name] = Builtin(name, params, ret, impl, invertible)


_reg("+", [TInt, TInt], TInt, lambda a, b: _want_int(a) + _want_int(b), invertible=True)
_reg("-", [TInt, TInt], TInt, lambda a, b: _want_int(a) - _want_int(b), invertible=True)
_reg("*", [TInt, TInt], TInt, lambda a, b: _want_int(a) * _want_int(b), invertible=True)
_reg("/", [TInt, TInt], TInt, _div)
_reg("%", [TInt, TInt], TInt, _mod)
_reg("==", [TV("a"), TV("a")], TBool, values_equal)
_reg("!=", [TV("a"), TV("a")], TBool, lambda a, b: not values_equal(a, b))
_reg("<", [TInt, TInt], TBool, lambda a, b: _want_int(a) < _want_int(b))
_reg("<=", [TInt, TInt], TBool, lambda a, b: _want_int(a) <= _want_int(b))
_reg("in", [TV("a"), TList(TV("a"))], TBool, _member)
_reg("not", [TBool], TBool, lambda a: not _want(is_bool, a, "bool"))
_reg("prime", [TInt], TBool, _prime)
_reg("lower", [TStr], TStr, lambda s: _want(is_str, s, "str").lower())
_reg("contains", [TList(TV("a")), TV("a")], TBool, lambda l, v: _member(v, l))
_reg("range", [TInt, TInt], TList(TInt), _range)
_reg("len", [TList(TV("a"))], TInt, lambda l: len(_want_list(l)))
# print is modeled as identity so the functional language stays pure; its
# argument still lands in the collecting trace like any watched term.
_reg("print", [TV("a")], TV("a"), lambda v: v)
_reg("odd", [TList(TInt)], TList(TInt), lambda l: [x for x in _want_list(l) if _want_int(x) % 2 == 1])


def _field(v, i, what):
    _want_list(v)
    if len(v) <= i:
        raise TypeMismatch(f"malformed {what}: {v!r}")
    return v[i]


# Pure methods over nominal record values, used by the benchmark analogs.
# role  := [ids: list[int], name: str]
# policy:= [label: str, roles: list[role]]
METHODS: dict[str, Builtin] = {
    "getRoles": Builtin("getRoles", ["policy"], TList("role"), lambda p: _field(p, 1, "policy")),
    "getIDs": Builtin("getIDs", ["role"], TList(TInt), lambda r: _field(r, 0, "role")),
    "getName": Builtin("getName", ["role"], TStr, lambda r: _field(r, 1, "role")),
}

# Recipe of a nominal record: field types in order (runtime repr is a list).
RECORD_FIELDS: dict[str, list] = {
    "role": [TList(TInt), TStr],
    "policy": [TStr, TList("role")],
}
