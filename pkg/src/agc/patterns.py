"""Robotic mission patterns expanded into LTL."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from agc.ltl import (
    Atom,
    Eventually,
    Formula,
    Globally,
    Implies,
    Next,
    Not,
    Until,
    conj,
)

# name -> (min arity, max arity or None)
ARITY = {
    "InfOften": (1, 1),
    "Patrolling": (1, None),
    "Visit": (1, None),
    "OrderedPatrolling": (1, None),
    "StrictOrderedPatrolling": (1, None),
    "InstantaneousReaction": (2, 2),
    "DelayedReaction": (2, 2),
}


@dataclass(frozen=True)
class PatternInstance:
    name: str
    args: tuple[str, ...]

    def __post_init__(self):
        if self.name not in ARITY:
            raise KeyError(f"unknown pattern {self.name!r}")
        lo, hi = ARITY[self.name]
        n = len(self.args)
        if n < lo or (hi is not None and n > hi):
            want = str(lo) if lo == hi else f"at least {lo}"
            raise ValueError(f"{self.name} takes {want} argument(s), got {n}")


def _order_clauses(locs: Sequence[str]) -> list[Formula]:
    # (!a2 U a1), G(a_{i+1} -> X(!a_{i+1} U a_i)) for each step, and the
    # closing G(a1 -> X(!a1 U an)).
    a = [Atom(x) for x in locs]
    if len(a) < 2:
        return []
    out: list[Formula] = [Until(Not(a[1]), a[0])]
    for prev, cur in zip(a, a[1:]):
        out.append(Globally(Implies(cur, Next(Until(Not(cur), prev)))))
    out.append(Globally(Implies(a[0], Next(Until(Not(a[0]), a[-1])))))
    return out


def _visit_in_sequence(locs: Sequence[str]) -> Formula:
    # a1 & F(a2 & F(... an))
    f: Formula = Atom(locs[-1])
    for x in reversed(locs[:-1]):
        f = Atom(x) & Eventually(f)
    return f


def expand(p: PatternInstance | str, args: Sequence[str] | None = None) -> Formula:
    """LTL formula of a pattern instance.

    Accepts either a :class:`PatternInstance` or ``(name, args)``.
    ``StrictOrderedPatrolling`` yields only the ordering clauses, without the
    recurrence conjunct of ``OrderedPatrolling``.
    """
    if not isinstance(p, PatternInstance):
        p = PatternInstance(p, tuple(args or ()))
    locs = list(p.args)
    if p.name == "InfOften":
        return Globally(Eventually(Atom(locs[0])))
    if p.name == "Patrolling":
        return conj(Globally(Eventually(Atom(x))) for x in locs)
    if p.name == "Visit":
        return conj(Eventually(Atom(x)) for x in locs)
    if p.name == "OrderedPatrolling":
        return conj([Globally(Eventually(_visit_in_sequence(locs))), *_order_clauses(locs)])
    if p.name == "StrictOrderedPatrolling":
        return conj(_order_clauses(locs))
    s, g = Atom(locs[0]), Atom(locs[1])
    if p.name == "InstantaneousReaction":
        return Globally(Implies(s, g))
    return Globally(Implies(s, Next(g)))


def resolve(name: str, args: Sequence[str]) -> Formula:
    """Pattern resolver hook for :class:`agc.ltl.Parser`."""
    return expand(PatternInstance(name, tuple(args)))
