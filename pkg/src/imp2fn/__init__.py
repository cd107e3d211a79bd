"""imp2fn: transpiles a small imperative language into functional
combinator pipelines (map/filter/flatmap/find/fold) by guided enumerative
search with trace-compatibility pruning."""

from .grammar import CognateGrammarPair, SharedTermIndex, pair_for_source, shared_terms_of
from .interp import TraceStore, eval_collecting, eval_term, is_trace_compatible
from .parser import ParseError, parse_imp, parse_lstr
from .synth import SynthConfig, TranspileResult, transpile
from .terms import Term, pretty

__all__ = [
    "CognateGrammarPair", "ParseError", "SharedTermIndex", "SynthConfig",
    "Term", "TranspileResult", "TraceStore", "eval_collecting", "eval_term",
    "is_trace_compatible", "pair_for_source", "parse_imp", "parse_lstr",
    "pretty", "shared_terms_of", "transpile",
]
