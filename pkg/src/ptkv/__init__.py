"""Exact-arithmetic toolkit for a probabilistic logic of knowing values."""

from .canonical import brute_force_sat, decide_sat, verify_truth_lemma
from .lp import LinearSystem, Row, feasible_mixed, fm_oracle
from .model import ProbModel, extension, satisfies, validate
from .syntax import Atom, Eq, Imp, K, Kv, Not, finite_closure, parse, to_text
from .typespace import enumerate_types, iterate_elimination

__all__ = [
    "Atom", "Eq", "Imp", "K", "Kv", "Not", "LinearSystem", "ProbModel", "Row",
    "brute_force_sat", "decide_sat", "enumerate_types", "extension",
    "feasible_mixed", "finite_closure", "fm_oracle", "iterate_elimination",
    "parse", "satisfies", "to_text", "validate", "verify_truth_lemma",
]
__version__ = "0.1.0"
