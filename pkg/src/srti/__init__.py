"""Stable roommates with ties and incomplete lists: solvers, parameters, gadgets."""

from .core_model import (
    INFINITY,
    BlockingPair,
    Instance,
    InstanceError,
    Matching,
    MatchingError,
    ParseError,
    blocking_pairs,
    break_ties,
    build_graph,
    is_perfect,
    is_stable,
    parse_instance,
    parse_matching,
    serialize_instance,
    serialize_matching,
)
from .oracle import SolveMode, brute_solve, enumerate_matchings

__all__ = [
    "INFINITY", "BlockingPair", "Instance", "InstanceError", "Matching", "MatchingError",
    "ParseError", "SolveMode", "blocking_pairs", "break_ties", "brute_solve", "build_graph",
    "enumerate_matchings", "is_perfect", "is_stable", "parse_instance", "parse_matching",
    "serialize_instance", "serialize_matching",
]
