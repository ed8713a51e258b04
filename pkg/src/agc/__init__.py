"""LTL assume-guarantee contracts for robotic missions."""

from agc.contracts import (
    Contract,
    compose,
    compose_all,
    is_compatible,
    is_consistent,
    is_equivalent,
    is_well_formed,
    merge,
    quotient,
    refines,
    saturate,
    separate,
)
from agc.ltl import Formula, LassoTrace, evaluate_on_lasso, parse, to_str
from agc.sat import find_model, is_satisfiable, is_valid
from agc.world import WorldModel

__all__ = [
    "Contract",
    "Formula",
    "LassoTrace",
    "WorldModel",
    "compose",
    "compose_all",
    "evaluate_on_lasso",
    "find_model",
    "is_compatible",
    "is_consistent",
    "is_equivalent",
    "is_satisfiable",
    "is_valid",
    "is_well_formed",
    "merge",
    "parse",
    "quotient",
    "refines",
    "saturate",
    "separate",
    "to_str",
]
