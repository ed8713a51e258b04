"""Typed world model and the context formulas generated from it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from agc.ltl import Atom, Formula, Globally, Implies, Next, Not, atoms, conj, disj

KINDS = ("location", "sensor", "action", "unknown")


@dataclass(frozen=True)
class WorldType:
    id: str
    kind: str
    ap: str


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    items: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.rule}: {self.message}"


@dataclass
class WorldModel:
    """Types with mutual exclusion, adjacency, extension and covering.

    Mutex and adjacency pairs are unordered (stored as frozensets of type
    ids); ``extension`` holds ``(subtype, supertype)`` pairs.  Treat an
    instance as read-only once it has been validated.
    """

    types: dict[str, WorldType] = field(default_factory=dict)
    mutex: set[frozenset[str]] = field(default_factory=set)
    adjacency: set[frozenset[str]] = field(default_factory=set)
    extension: set[tuple[str, str]] = field(default_factory=set)
    coverings: dict[str, frozenset[str]] = field(default_factory=dict)

    # -- construction --------------------------------------------------------

    def declare(self, type_id: str, kind: str = "location", ap: str | None = None) -> WorldType:
        if kind not in KINDS:
            raise ValueError(f"unknown type kind {kind!r}")
        if type_id in self.types:
            raise ValueError(f"duplicate type {type_id!r}")
        t = WorldType(type_id, kind, ap or type_id.lower())
        self.types[type_id] = t
        return t

    def add_mutex(self, a: str, b: str) -> None:
        self.mutex.add(frozenset((a, b)))

    def add_adjacent(self, a: str, b: str) -> None:
        self.adjacency.add(frozenset((a, b)))

    def add_extension(self, sub: str, sup: str) -> None:
        self.extension.add((sub, sup))

    def add_covering(self, sup: str, members: Iterable[str]) -> None:
        self.coverings[sup] = frozenset(members)

    def register_atoms(self, aps: Iterable[str]) -> list[str]:
        """Declare relation-less ``unknown`` types for unseen atoms."""
        known = {t.ap for t in self.types.values()}
        added = []
        for ap in sorted(set(aps) - known):
            self.types[ap] = WorldType(ap, "unknown", ap)
            added.append(ap)
        return added

    # -- lookup --------------------------------------------------------------

    def resolve(self, name: str) -> str:
        """Type id for ``name``, given either as a type id or as its AP."""
        if name in self.types:
            return name
        for t in self.types.values():
            if t.ap == name:
                return t.id
        raise KeyError(f"unknown type {name!r}")

    def type_of(self, ap: str) -> WorldType:
        for t in self.types.values():
            if t.ap == ap:
                return t
        return WorldType(ap, "unknown", ap)

    def ap(self, type_id: str) -> str:
        return self.types[type_id].ap if type_id in self.types else type_id

    @property
    def aps(self) -> frozenset[str]:
        return frozenset(t.ap for t in self.types.values())

    def neighbors(self, type_id: str) -> set[str]:
        return {x for pair in self.adjacency if type_id in pair for x in pair if x != type_id}

    def supertypes(self, type_id: str) -> set[str]:
        """Strict supertypes under the transitive closure of extension."""
        seen: set[str] = set()
        frontier = [type_id]
        while frontier:
            cur = frontier.pop()
            for sub, sup in self.extension:
                if sub == cur and sup not in seen:
                    seen.add(sup)
                    frontier.append(sup)
        return seen

    # -- checks --------------------------------------------------------------

    def validate(self) -> list[Violation]:
        out: list[Violation] = []
        declared = set(self.types)

        def undeclared(rule, ids):
            missing = sorted(set(ids) - declared)
            if missing:
                out.append(Violation(rule, f"undeclared types {', '.join(missing)}", tuple(missing)))

        for pair in sorted(self.mutex, key=sorted):
            undeclared("mutex", pair)
            if len(pair) == 1:
                (t,) = pair
                out.append(Violation("mutex", f"type {t} is mutually exclusive with itself", (t,)))
        for pair in sorted(self.adjacency, key=sorted):
            undeclared("adjacency", pair)
        for sub, sup in sorted(self.extension):
            undeclared("extension", (sub, sup))
        for cycle in _cycles(self.extension):
            out.append(Violation("extension", "extension cycle " + " <= ".join(cycle), tuple(cycle)))
        for sup, members in sorted(self.coverings.items()):
            undeclared("covering", {sup, *members})
            for m in sorted(members):
                if sup not in self.supertypes(m):
                    out.append(
                        Violation("covering", f"{m} covers {sup} but is not a subtype of it", (sup, m))
                    )
        by_ap: dict[str, list[str]] = {}
        for t in self.types.values():
            by_ap.setdefault(t.ap, []).append(t.id)
        for ap, ids in sorted(by_ap.items()):
            if len(ids) > 1:
                out.append(Violation("types", f"types {', '.join(sorted(ids))} share AP {ap}", tuple(ids)))
        return out


def _cycles(edges: set[tuple[str, str]]) -> list[list[str]]:
    graph: dict[str, list[str]] = {}
    for a, b in sorted(edges):
        graph.setdefault(a, []).append(b)
    color: dict[str, int] = {}
    found: list[list[str]] = []

    def visit(node, path):
        color[node] = 1
        path.append(node)
        for nxt in graph.get(node, []):
            if color.get(nxt) == 1:
                found.append(path[path.index(nxt):] + [nxt])
            elif nxt not in color:
                visit(nxt, path)
        path.pop()
        color[node] = 2

    for node in sorted(graph):
        if node not in color:
            visit(node, [])
    return found


# ---------------------------------------------------------------------------
# context generators


def mtx(w: WorldModel, aps: Iterable[str]) -> Formula:
    """G(pi -> !pj) & G(pj -> !pi) for every mutually exclusive pair in ``aps``."""
    scope = sorted(set(aps))
    clauses = []
    for i, p in enumerate(scope):
        for q in scope[i + 1:]:
            if frozenset((w.type_of(p).id, w.type_of(q).id)) in w.mutex:
                clauses.append(Globally(Implies(Atom(p), Not(Atom(q)))))
                clauses.append(Globally(Implies(Atom(q), Not(Atom(p)))))
    return conj(clauses)


def adj(w: WorldModel, aps: Iterable[str], pairwise: bool = False) -> Formula:
    """Adjacency constraints for the locations in ``aps``.

    By default each location ``p`` with neighbours gets a single clause
    ``G(p -> X(p | n1 | ... | nk))`` listing every neighbour, in scope or not.
    ``pairwise`` emits one ``G(p -> X(p | q))`` clause per ordered adjacent pair
    inside ``aps`` instead.
    """
    scope = sorted(set(aps))
    clauses = []
    if pairwise:
        for i, p in enumerate(scope):
            for q in scope[i + 1:]:
                if frozenset((w.type_of(p).id, w.type_of(q).id)) in w.adjacency:
                    clauses.append(Globally(Implies(Atom(p), Next(Atom(p) | Atom(q)))))
                    clauses.append(Globally(Implies(Atom(q), Next(Atom(q) | Atom(p)))))
        return conj(clauses)
    for p in scope:
        near = sorted(w.ap(n) for n in w.neighbors(w.type_of(p).id))
        if near:
            clauses.append(Globally(Implies(Atom(p), Next(disj(Atom(x) for x in [p, *near])))))
    return conj(clauses)


def _ext_clauses(w: WorldModel) -> list[Formula]:
    return [Globally(Implies(Atom(w.ap(a)), Atom(w.ap(b)))) for a, b in sorted(w.extension)]


def _cov_clauses(w: WorldModel) -> list[Formula]:
    return [
        Globally(Implies(Atom(w.ap(sup)), disj(Atom(w.ap(m)) for m in sorted(members))))
        for sup, members in sorted(w.coverings.items())
    ]


def ext(w: WorldModel) -> Formula:
    return conj(_ext_clauses(w))


def cov(w: WorldModel) -> Formula:
    return conj(_cov_clauses(w))


def refinement_context(w: WorldModel, aps: Iterable[str]) -> Formula:
    """EXT & COV restricted to the clauses connected to ``aps``.

    Clauses sharing no atom (transitively) with ``aps`` are satisfiable on
    their own by the all-false word, so dropping them does not change the
    validity of ``EXT & COV -> phi`` for any ``phi`` over ``aps``.
    """
    clauses = _ext_clauses(w) + _cov_clauses(w)

    reach = set(aps)
    picked = [False] * len(clauses)
    changed = True
    while changed:
        changed = False
        for i, c in enumerate(clauses):
            if not picked[i] and atoms(c) & reach:
                picked[i] = True
                reach |= atoms(c)
                changed = True
    return conj(c for c, keep in zip(clauses, picked) if keep)


def similar(w: WorldModel, a: WorldType | str, b: WorldType | str) -> bool:
    """True iff ``a`` equals ``b`` or ``a`` is a (transitive) subtype of ``b``."""
    a_id = a.id if isinstance(a, WorldType) else a
    b_id = b.id if isinstance(b, WorldType) else b
    return a_id == b_id or b_id in w.supertypes(a_id)
