"""Bigraphical reactive systems for spatially scoped coordination."""
from .bigraph import (
    Bigraph,
    Control,
    Edge,
    Interface,
    Name,
    Node,
    Root,
    Site,
    close_name,
    compose,
    juxtapose,
    merge_under,
    renumber,
    validate,
)
from .iso import iso_eq
from .matching import Occurrence, count_occurrences, find_occurrences
from .oracle import oracle_occurrences
from .rewriting import BrsSpec, ReactionRule, Trace, apply, check_predicate, run, step

__version__ = "0.1.0"

__all__ = [
    "Bigraph", "BrsSpec", "Control", "Edge", "Interface", "Name", "Node", "Occurrence",
    "ReactionRule", "Root", "Site", "Trace", "apply", "check_predicate", "close_name",
    "compose", "count_occurrences", "find_occurrences", "iso_eq", "juxtapose",
    "merge_under", "oracle_occurrences", "renumber", "run", "step", "validate",
]
