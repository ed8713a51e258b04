"""Assume-guarantee contracts over LTL and their algebra."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Iterable

from agc.ltl import TRUE, Formula, Implies, LassoTrace, Not, atoms, simplify, to_str
from agc.sat import counterexample, is_satisfiable
from agc.world import WorldModel, adj, mtx, refinement_context


class VariableAlignmentWarning(UserWarning):
    """Operands mention different atoms; missing ones are left unconstrained."""


class UnsaturatedContractError(ValueError):
    pass


class PrecheckError(ValueError):
    """A formula is unsatisfiable together with its mutex/adjacency context."""

    def __init__(self, role: str, formula: Formula):
        super().__init__(f"{role} is inconsistent with the world context: {to_str(formula)}")
        self.role = role
        self.formula = formula


@dataclass(frozen=True)
class Contract:
    assumptions: Formula
    guarantees: Formula
    saturated: bool = False

    @classmethod
    def of(cls, assumptions: Formula, guarantees: Formula) -> Contract:
        """Build and saturate in one step."""
        return saturate(cls(assumptions, guarantees))

    @property
    def atoms(self) -> frozenset[str]:
        return atoms(self.assumptions) | atoms(self.guarantees)

    def display(self) -> tuple[str, str]:
        return to_str(simplify(self.assumptions)), to_str(simplify(self.guarantees))

    def __str__(self) -> str:
        a, g = self.display()
        return f"({a}, {g})"


def saturate(c: Contract) -> Contract:
    if c.saturated:
        return c
    return Contract(c.assumptions, simplify(c.guarantees | Not(c.assumptions)), True)


def _require(*cs: Contract) -> None:
    for c in cs:
        if not c.saturated:
            raise UnsaturatedContractError(f"contract {c} is not saturated")


def _align(c1: Contract, c2: Contract) -> None:
    if c1.atoms != c2.atoms:
        extra = sorted(c1.atoms ^ c2.atoms)
        warnings.warn(
            f"contracts differ on atoms {', '.join(extra)}; treating them as unconstrained",
            VariableAlignmentWarning,
            stacklevel=3,
        )


# -- well-formedness ----------------------------------------------------------


def _with_context(f: Formula, world: WorldModel | None) -> Formula:
    if world is None:
        return f
    scope = atoms(f)
    return f & mtx(world, scope) & adj(world, scope)


def is_compatible(c: Contract, world: WorldModel | None = None) -> bool:
    _require(c)
    return is_satisfiable(_with_context(c.assumptions, world))


def is_consistent(c: Contract, world: WorldModel | None = None) -> bool:
    _require(c)
    return is_satisfiable(_with_context(c.guarantees, world))


def is_well_formed(c: Contract, world: WorldModel | None = None) -> bool:
    return is_compatible(c, world) and is_consistent(c, world)


# -- refinement ---------------------------------------------------------------


@dataclass(frozen=True)
class RefinementResult:
    holds: bool
    failed: str | None = None  # "assumptions" or "guarantees"
    counterexample: LassoTrace | None = None

    def __bool__(self) -> bool:
        return self.holds


def _implication(ante: Formula, cons: Formula, world: WorldModel | None) -> LassoTrace | None:
    f = Implies(ante, cons)
    if world is not None:
        f = Implies(refinement_context(world, atoms(f)), f)
    return counterexample(f)


def check_refinement(c1: Contract, c2: Contract, world: WorldModel | None = None) -> RefinementResult:
    """Decide whether ``c1`` refines ``c2``, keeping the failing side and a witness.

    With a world model, each of the four formulas is first checked for
    satisfiability under its mutex and adjacency context; a failure there
    raises :class:`PrecheckError` rather than returning a negative result.
    """
    _require(c1, c2)
    if world is not None:
        for role, f in (
            ("refined assumptions", c2.assumptions),
            ("refining assumptions", c1.assumptions),
            ("refining guarantees", c1.guarantees),
            ("refined guarantees", c2.guarantees),
        ):
            if not is_satisfiable(_with_context(f, world)):
                raise PrecheckError(role, f)
    cex = _implication(c2.assumptions, c1.assumptions, world)
    if cex is not None:
        return RefinementResult(False, "assumptions", cex)
    cex = _implication(c1.guarantees, c2.guarantees, world)
    if cex is not None:
        return RefinementResult(False, "guarantees", cex)
    return RefinementResult(True)


def refines(c1: Contract, c2: Contract, world: WorldModel | None = None) -> bool:
    return check_refinement(c1, c2, world).holds


def is_equivalent(c1: Contract, c2: Contract, world: WorldModel | None = None) -> bool:
    return refines(c1, c2, world) and refines(c2, c1, world)


# -- algebra ------------------------------------------------------------------
# Every result below is saturated by construction: its guarantee already
# contains the negation of its assumption as a disjunct (up to equivalence).


def compose(c1: Contract, c2: Contract) -> Contract:
    _require(c1, c2)
    _align(c1, c2)
    g = c1.guarantees & c2.guarantees
    return Contract((c1.assumptions & c2.assumptions) | Not(g), g, True)


def compose_all(contracts: Iterable[Contract]) -> Contract:
    """Left fold of :func:`compose`; the empty composition is (true, true)."""
    contracts = list(contracts)
    if not contracts:
        return Contract(TRUE, TRUE, True)
    return reduce(compose, contracts[1:], contracts[0])


def quotient(c_prime: Contract, c1: Contract) -> Contract:
    _require(c_prime, c1)
    _align(c_prime, c1)
    a = c_prime.assumptions & c1.guarantees
    return Contract(a, (c_prime.guarantees & c1.assumptions) | Not(a), True)


def merge(c1: Contract, c2: Contract) -> Contract:
    _require(c1, c2)
    _align(c1, c2)
    a = c1.assumptions & c2.assumptions
    return Contract(a, (c1.guarantees & c2.guarantees) | Not(a), True)


def separate(c_prime: Contract, c1: Contract) -> Contract:
    _require(c_prime, c1)
    _align(c_prime, c1)
    g = c_prime.guarantees & c1.assumptions
    return Contract((c_prime.assumptions & c1.guarantees) | Not(g), g, True)
