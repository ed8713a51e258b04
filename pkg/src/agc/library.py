"""Component libraries, candidate selection and Mealy-machine implementations."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations, product
from pathlib import Path
from typing import Iterable, Sequence

from agc.contracts import Contract, compose_all, is_well_formed, refines
from agc.ltl import LassoTrace
from agc.world import WorldModel, similar

DEFAULT_SUBSET_CAP = 4


# ---------------------------------------------------------------------------
# Mealy machines


class MealyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MealyMachine:
    """Deterministic, input-complete Mealy machine.

    ``transitions`` maps ``(state, frozenset of true inputs)`` to
    ``(next state, frozenset of true outputs)``.
    """

    states: tuple[str, ...]
    initial: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    transitions: dict[tuple[str, frozenset[str]], tuple[str, frozenset[str]]]

    def __post_init__(self):
        if self.initial not in self.states:
            raise MealyError(f"initial state {self.initial!r} is not declared")
        for state in self.states:
            for letter in _letters(self.inputs):
                if (state, letter) not in self.transitions:
                    shown = ",".join(f"{a}={int(a in letter)}" for a in self.inputs) or "-"
                    raise MealyError(f"missing transition from {state} on {shown}")

    def step(self, state: str, letter: frozenset[str]) -> tuple[str, frozenset[str]]:
        key = (state, frozenset(letter) & frozenset(self.inputs))
        if key not in self.transitions:
            raise MealyError(f"no transition from {state} on {sorted(letter)}")
        return self.transitions[key]


def _letters(aps: Sequence[str]) -> list[frozenset[str]]:
    return [frozenset(a for a, v in zip(aps, bits) if v) for bits in product((0, 1), repeat=len(aps))]


def _assignment(text: str, allowed: Sequence[str], where: str) -> tuple[frozenset[str], set[str]]:
    if text == "-":
        return frozenset(), set()
    true, seen = set(), set()
    for part in text.split(","):
        name, sep, value = part.partition("=")
        if not sep or value not in ("0", "1") or name not in allowed:
            raise MealyError(f"{where}: bad assignment {part!r}")
        seen.add(name)
        if value == "1":
            true.add(name)
    return frozenset(true), seen


def parse_mealy(text: str) -> MealyMachine:
    header: dict[str, list[str]] = {}
    rows: list[tuple[int, list[str]]] = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise MealyError(f"line {n}: expected 'key: value'")
        key = key.strip()
        if key == "trans":
            rows.append((n, rest.split()))
        elif key in ("states", "initial", "inputs", "outputs"):
            header[key] = rest.split()
        else:
            raise MealyError(f"line {n}: unknown key {key!r}")
    for key in ("states", "initial"):
        if not header.get(key):
            raise MealyError(f"missing {key!r} line")
    states = tuple(header["states"])
    inputs = tuple(header.get("inputs", []))
    outputs = tuple(header.get("outputs", []))
    transitions = {}
    for n, parts in rows:
        if len(parts) != 5 or parts[2] != "->":
            raise MealyError(f"line {n}: expected 'trans: <state> <inputs> -> <state> <outputs>'")
        src, ins, _, dst, outs = parts
        for s in (src, dst):
            if s not in states:
                raise MealyError(f"line {n}: unknown state {s!r}")
        letter, seen = _assignment(ins, inputs, f"line {n}")
        if ins != "-" and seen != set(inputs):
            raise MealyError(f"line {n}: input assignment must mention every input")
        out, _ = _assignment(outs, outputs, f"line {n}")
        if (src, letter) in transitions:
            raise MealyError(f"line {n}: nondeterministic transition from {src}")
        transitions[(src, letter)] = (dst, out)
    return MealyMachine(states, header["initial"][0], inputs, outputs, transitions)


def load_mealy(path: str | Path) -> MealyMachine:
    return parse_mealy(Path(path).read_text(encoding="utf-8"))


def simulate(m: MealyMachine, inputs: LassoTrace) -> LassoTrace:
    """Run ``m`` on an input lasso; returns the combined input/output lasso."""
    seen: dict[tuple[str, int], int] = {}
    word: list[frozenset[str]] = []
    state, pos = m.initial, 0
    while (state, pos) not in seen:
        seen[(state, pos)] = len(word)
        letter = inputs.prefix[pos] if pos < len(inputs.prefix) else inputs.loop[pos - len(inputs.prefix)]
        state, out = m.step(state, letter)
        word.append(frozenset(letter) | out)
        pos = inputs.successor(pos)
    start = seen[(state, pos)]
    return LassoTrace(tuple(word[:start]), tuple(word[start:]), inputs.aps | frozenset(m.outputs))


# ---------------------------------------------------------------------------
# libraries


@dataclass(frozen=True)
class Component:
    name: str
    contract: Contract
    impl_ref: str | None = None
    machine: MealyMachine | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ComponentLibrary:
    name: str
    components: tuple[Component, ...]

    def __post_init__(self):
        names = [c.name for c in self.components]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ValueError(f"library {self.name}: duplicate components {', '.join(dup)}")

    def __getitem__(self, name: str) -> Component:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class CandidateComposition:
    selection: tuple[Component, ...]
    composed: Contract
    similarity: float
    refinement_score: float

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.selection)


class NoCandidateError(ValueError):
    pass


def _types(c: Contract, w: WorldModel) -> set[str]:
    return {w.type_of(ap).id for ap in c.atoms}


def similarity_score(c: Contract, components: Iterable[Component], w: WorldModel) -> float:
    spec = _types(c, w)
    if not spec:
        raise ValueError("contract mentions no types")
    lib: set[str] = set()
    for comp in components:
        lib |= _types(comp.contract, w)
    hit = sum(1 for t in spec if any(similar(w, x, t) for x in lib))
    return 100.0 * hit / len(spec)


def refinement_score(target: Contract, pool: Sequence[Contract]) -> float:
    if not pool:
        raise ValueError("empty pool")
    return 100.0 * sum(1 for p in pool if refines(target, p)) / len(pool)


def best_candidate_composition(
    c: Contract,
    lib: ComponentLibrary,
    w: WorldModel,
    prefer_least_refined: bool = False,
    subset_cap: int = DEFAULT_SUBSET_CAP,
    seed: int | None = None,
) -> CandidateComposition:
    """Pick the library selection whose composition best approximates ``c``.

    Selections are ranked by similarity (higher first), then size (smaller
    first); only well-formed compositions survive.  Remaining ties go to the
    refinement score against the library's own contracts, then to sorted
    component names, or to a seeded random choice when ``seed`` is given.
    """
    if not len(lib):
        raise NoCandidateError(f"library {lib.name} is empty")
    groups: dict[tuple[float, int], list[tuple[Component, ...]]] = {}
    for k in range(1, min(subset_cap, len(lib)) + 1):
        for subset in combinations(lib.components, k):
            groups.setdefault((-similarity_score(c, subset, w), k), []).append(subset)
    pool = [comp.contract for comp in lib]
    for key in sorted(groups):
        survivors = []
        for subset in groups[key]:
            composed = compose_all(comp.contract for comp in subset)
            if is_well_formed(composed, w):
                survivors.append((subset, composed))
        if not survivors:
            continue
        scored = [(refinement_score(composed, pool), subset, composed) for subset, composed in survivors]
        pick = min if prefer_least_refined else max
        target = pick(s for s, _, _ in scored)
        tied = sorted(
            ((sorted(x.name for x in subset), subset, composed) for s, subset, composed in scored if s == target),
            key=lambda t: t[0],
        )
        _, subset, composed = random.Random(seed).choice(tied) if seed is not None else tied[0]
        return CandidateComposition(subset, composed, -key[0], target)
    raise NoCandidateError(f"no well-formed composition in library {lib.name}")
