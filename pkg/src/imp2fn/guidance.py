"""Expansion guidance: a count-based statistical model (production table
plus a copy table over source-term shapes), the derivation extractor it is
trained with, and a client for an external scorer speaking the line-
delimited JSON protocol.

Scores condition on the last (production, child-slot) step of the AST path
to the hole; the full path travels in the protocol so richer scorers can
use it.
"""

from __future__ import annotations

import json
import logging
import math
import select
import shlex
import socket
import subprocess
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .grammar import (DEFAULT_CONSTANTS, ROOT_CONTEXT, SharedTermIndex,
                      TARGET_PRODUCTIONS, pair_for_source, shared_terms_of)
from .terms import App, Const, Hole, Lambda, MethodCall, Term, Var, pretty

log = logging.getLogger(__name__)

COMBINATOR_PID = {"map": 0, "filter": 1, "flatmap": 2, "find": 3, "fold": 4}
EXPR_PID = 5
PROD_BY_ID = {p.pid: p for p in TARGET_PRODUCTIONS}

# AST-position slots per combinator: (slot, nonterminal, accessor)
_SLOTS = {
    "map": (("A", 0), ("V", 1), ("A", 2)),
    "filter": (("A", 0), ("V", 1), ("E", 2)),
    "flatmap": (("A", 0), ("V", 1), ("A", 2)),
    "find": (("A", 0), ("E", 1), ("V", 2), ("E", 3)),
    "fold": (("E", 0), ("A", 1), ("V", 2), ("V", 3), ("E", 4)),
}


def slot_children(node: App) -> list[tuple[int, str, Term]]:
    """(slot index, nonterminal, subterm) triples in production-slot order."""
    lam: Lambda = node.args[-1]
    if node.fn in ("map", "filter", "flatmap"):
        return [(0, "A", node.args[0]), (1, "V", lam.params[0]),
                (2, "A" if node.fn != "filter" else "E", lam.body)]
    if node.fn == "find":
        return [(0, "A", node.args[0]), (1, "E", node.args[1]),
                (2, "V", lam.params[0]), (3, "E", lam.body)]
    if node.fn == "fold":
        return [(0, "E", node.args[0]), (1, "A", node.args[1]),
                (2, "V", lam.params[0]), (3, "V", lam.params[1]), (4, "E", lam.body)]
    raise ValueError(node.fn)


def shape_key(t: Term) -> str:
    """Canonical print with variable names collapsed to their nonterminal
    class, so copy statistics generalize across identifiers."""

    def go(n: Term) -> Term:
        if isinstance(n, Var):
            return Var("V")
        kids = n.children()
        if not kids:
            return n
        return n.replace_children(tuple(go(k) for k in kids))

    return pretty(go(t))


@dataclass(frozen=True)
class DecisionPoint:
    path: tuple[tuple[int, int], ...]  # (production-id, slot) pairs, root first
    hole_nt: str
    source: Term

    @property
    def context(self) -> tuple[int, int]:
        return self.path[-1] if self.path else ROOT_CONTEXT


@dataclass
class GuidanceScore:
    candidates: list  # ("prod", pid) | ("copy", canonical print)
    logps: list[float]

    def __post_init__(self):
        if self.logps:
            total = sum(math.exp(lp) for lp in self.logps)
            assert abs(total - 1.0) < 1e-6, total


Decision = tuple  # ("prod", pid) | ("copy", shape key)


@dataclass
class StatModel:
    alpha: float = 1.0
    prod_counts: dict = field(default_factory=dict)  # (ctx, nt) -> {pid: n}
    copy_counts: dict = field(default_factory=dict)  # (ctx, nt) -> {shape: n}

    def bump_prod(self, ctx, nt, pid):
        self.prod_counts.setdefault((ctx, nt), {})
        self.prod_counts[(ctx, nt)][pid] = self.prod_counts[(ctx, nt)].get(pid, 0) + 1

    def bump_copy(self, ctx, nt, shape):
        self.copy_counts.setdefault((ctx, nt), {})
        self.copy_counts[(ctx, nt)][shape] = self.copy_counts[(ctx, nt)].get(shape, 0) + 1

    # scoring over an explicit candidate list (the synthesizer filters
    # candidates first, e.g. to rule out shadowed binders)

    def production_logps(self, ctx, nt, pids: Sequence[int]) -> list[float]:
        counts = self.prod_counts.get((ctx, nt), {})
        weights = [counts.get(pid, 0) + self.alpha for pid in pids]
        total = sum(weights)
        return [math.log(w / total) for w in weights]

    def copy_logps(self, ctx, nt, terms: Sequence[Term]) -> list[float]:
        counts = self.copy_counts.get((ctx, nt), {})
        weights = [counts.get(shape_key(t), 0) + self.alpha for t in terms]
        total = sum(weights)
        return [math.log(w / total) for w in weights]

    def to_json(self) -> dict:
        def enc(table):
            return {f"{ctx[0]}:{ctx[1]}:{nt}": dict(v)
                    for (ctx, nt), v in sorted(table.items(), key=lambda kv: repr(kv[0]))}

        return {"format": "statmodel-v1", "alpha": self.alpha,
                "prod_counts": enc(self.prod_counts), "copy_counts": enc(self.copy_counts)}

    @classmethod
    def from_json(cls, data: dict) -> "StatModel":
        if data.get("format") != "statmodel-v1":
            raise ValueError(f"unsupported model format: {data.get('format')!r}")

        def dec(table, int_keys):
            out = {}
            for key, v in table.items():
                pid, ix, nt = key.split(":")
                ctx = (int(pid), int(ix))
                out[(ctx, nt)] = {(int(k) if int_keys else k): n for k, n in v.items()}
            return out

        return cls(alpha=float(data.get("alpha", 1.0)),
                   prod_counts=dec(data.get("prod_counts", {}), True),
                   copy_counts=dec(data.get("copy_counts", {}), False))

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path: str) -> "StatModel":
        with open(path) as f:
            return cls.from_json(json.load(f))


def copy_candidates(index: SharedTermIndex, nt: str, relaxed: bool) -> list[Term]:
    cands = list(index.candidates(nt))
    if relaxed and nt in ("E", "C"):
        have = {pretty(t) for t in cands}
        cands.extend(c for c in DEFAULT_CONSTANTS if pretty(c) not in have)
    return cands


def score_expansions(model: StatModel, dp: DecisionPoint, index: SharedTermIndex,
                     relaxed: bool = False) -> GuidanceScore:
    """Distribution over the applicable expansions of one hole: grammar
    productions for an unshared hole, copyable source terms for a shared
    one. Empty candidates mean the hole is a dead end."""
    ctx = dp.context
    if dp.hole_nt == "A":
        pids = [p.pid for p in TARGET_PRODUCTIONS]
        return GuidanceScore([("prod", pid) for pid in pids],
                             model.production_logps(ctx, "A", pids))
    cands = copy_candidates(index, dp.hole_nt, relaxed)
    if not cands:
        return GuidanceScore([], [])
    return GuidanceScore([("copy", pretty(t)) for t in cands],
                         model.copy_logps(ctx, dp.hole_nt, cands))


# ----------------------------------------------------- derivation extraction

class NotDerivable(Exception):
    pass


def extract_decisions(target: Term, index: Optional[SharedTermIndex] = None,
                      relaxed: bool = False):
    """The decision sequence that derives a complete target program:
    (path, nt, decision, chosen term) tuples in expansion order. Raises
    NotDerivable when a shared subterm is missing from the candidates."""
    out = []
    allowed = None
    if index is not None:
        allowed = {nt: {pretty(t) for t in copy_candidates(index, nt, relaxed)}
                   for nt in ("E", "V", "C")}

    def copy_at(path, nt, node):
        if isinstance(node, Hole):
            return
        if allowed is not None and pretty(node) not in allowed[nt]:
            raise NotDerivable(f"{pretty(node)} not among the {nt} candidates")
        out.append((path, nt, ("copy", shape_key(node)), node))

    def walk(node, path):
        if isinstance(node, Hole):
            return
        if isinstance(node, App) and node.fn in COMBINATOR_PID:
            pid = COMBINATOR_PID[node.fn]
            out.append((path, "A", ("prod", pid), node))
            for slot, nt, child in slot_children(node):
                if nt == "A":
                    walk(child, path + ((pid, slot),))
                else:
                    copy_at(path + ((pid, slot),), nt, child)
        else:
            out.append((path, "A", ("prod", EXPR_PID), node))
            copy_at(path, "E", node)

    walk(target, ())
    return out


def train(pairs, alpha: float = 1.0) -> StatModel:
    """Count-based fit over (source, target) pairs; targets whose shared
    terms are missing from their source are skipped with a warning."""
    model = StatModel(alpha=alpha)
    skipped = 0
    for src, tgt in pairs:
        index = shared_terms_of(src, pair_for_source(src))
        try:
            decisions = extract_decisions(tgt, index)
        except NotDerivable as e:
            skipped += 1
            log.warning("skipping pair (%s): %s", pretty(tgt), e)
            continue
        for path, nt, decision, _node in decisions:
            ctx = path[-1] if path else ROOT_CONTEXT
            if decision[0] == "prod":
                model.bump_prod(ctx, nt, decision[1])
            else:
                model.bump_copy(ctx, nt, decision[1])
    if skipped:
        log.warning("train: skipped %d/%d pairs", skipped, len(pairs))
    return model


def score_program(model: StatModel, p: Term, source: Term,
                  index: Optional[SharedTermIndex] = None,
                  relaxed: bool = False) -> float:
    """Sum of the log-probabilities of every decision already made in p
    (the worklist priority); holes contribute nothing."""
    if index is None:
        index = shared_terms_of(source, pair_for_source(source))
    total = 0.0
    for path, nt, decision, node in extract_decisions(p, None):
        ctx = path[-1] if path else ROOT_CONTEXT
        if decision[0] == "prod":
            pids = [pr.pid for pr in TARGET_PRODUCTIONS]
            total += model.production_logps(ctx, nt, pids)[pids.index(decision[1])]
        else:
            cands = copy_candidates(index, nt, relaxed)
            prints = [pretty(t) for t in cands]
            if pretty(node) not in prints:
                return float("-inf")
            total += model.copy_logps(ctx, nt, cands)[prints.index(pretty(node))]
    return total


# ------------------------------------------------------------ external scorer

class ScorerError(Exception):
    pass


class ExternalScorer:
    """Line-delimited JSON client over a child process's stdio or a TCP
    socket; failures and timeouts make the caller fall back to the
    statistical model."""

    def __init__(self, cmd: Optional[str] = None, address: Optional[str] = None,
                 timeout: float = 0.2):
        self.timeout = timeout
        self._id = 0
        self._proc = None
        self._sock_file = None
        if address:
            host, port = address.rsplit(":", 1)
            s = socket.create_connection((host, int(port)), timeout=5.0)
            s.settimeout(timeout)
            self._sock = s
            self._sock_file = s.makefile("rwb")
        elif cmd:
            self._proc = subprocess.Popen(
                shlex.split(cmd), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=False)
        else:
            raise ValueError("need a command or an address")

    def close(self):
        if self._proc:
            self._proc.terminate()
            self._proc.wait(timeout=5)
        if self._sock_file:
            self._sock_file.close()
            self._sock.close()

    def score(self, dp: DecisionPoint, candidates: list) -> list[float]:
        self._id += 1
        request = {
            "id": self._id,
            "source": pretty(dp.source),
            "path": [list(step) for step in dp.path],
            "hole_nt": dp.hole_nt,
            "candidates": [{"kind": k, "id": v} if k == "prod" else {"kind": k, "term": v}
                           for k, v in candidates],
        }
        line = (json.dumps(request) + "\n").encode()
        try:
            reply = self._roundtrip(line)
        except (OSError, ValueError, socket.timeout) as e:
            raise ScorerError(str(e))
        if reply.get("id") != self._id:
            raise ScorerError(f"response id {reply.get('id')} != {self._id}")
        logprobs = reply.get("logprobs")
        if not isinstance(logprobs, list) or len(logprobs) != len(candidates):
            raise ScorerError("misaligned logprobs")
        return [float(x) for x in logprobs]

    def _roundtrip(self, line: bytes) -> dict:
        if self._sock_file is not None:
            self._sock_file.write(line)
            self._sock_file.flush()
            raw = self._sock_file.readline()
            if not raw:
                raise ScorerError("scorer closed the connection")
            return json.loads(raw)
        assert self._proc is not None
        if self._proc.poll() is not None:
            raise ScorerError("scorer process exited")
        self._proc.stdin.write(line)
        self._proc.stdin.flush()
        fd = self._proc.stdout.fileno()
        ready, _, _ = select.select([fd], [], [], self.timeout)
        if not ready:
            raise ScorerError("scorer timed out")
        raw = self._proc.stdout.readline()
        if not raw:
            raise ScorerError("scorer closed stdout")
        return json.loads(raw)


class GuidanceSource:
    """What the synthesizer consults: the statistical model, optionally
    shadowed by an external scorer with automatic fallback."""

    def __init__(self, model: StatModel, external: Optional[ExternalScorer] = None):
        self.model = model
        self.external = external
        self.fallbacks = 0

    def score(self, dp: DecisionPoint, nt: str, candidates: list,
              cand_terms: Optional[list[Term]] = None) -> list[float]:
        if self.external is not None:
            try:
                raw = self.external.score(dp, candidates)
                return _normalize(raw)
            except ScorerError as e:
                self.fallbacks += 1
                log.warning("external scorer failed (%s); falling back", e)
        ctx = dp.context
        if candidates and candidates[0][0] == "prod":
            return self.model.production_logps(ctx, nt, [c[1] for c in candidates])
        return self.model.copy_logps(ctx, nt, cand_terms or [])


def _normalize(logps: list[float]) -> list[float]:
    if not logps:
        return logps
    m = max(logps)
    total = sum(math.exp(lp - m) for lp in logps)
    logz = m + math.log(total)
    return [lp - logz for lp in logps]
