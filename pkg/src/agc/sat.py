"""LTL satisfiability and validity via generalized Buchi automata.

Formulas are simplified and put in negation normal form, then translated by an
on-the-fly tableau (one acceptance set per Until subformula).  Emptiness is
decided on the strongly connected components of the reachable graph; a
non-empty automaton yields a lasso witness that is re-checked against the
original formula.

Top-level conjuncts of the form ``G beta`` with ``beta`` propositional are not
expanded by the tableau; they are kept as an invariant that every transition
label must satisfy.  World-context constraints are all of this shape.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from agc.ltl import (
    FALSE,
    TRUE,
    And,
    Atom,
    Const,
    Eventually,
    Formula,
    Globally,
    Iff,
    Implies,
    LassoTrace,
    Next,
    Not,
    Or,
    Release,
    Until,
    atoms,
    conj,
    evaluate_on_lasso,
    is_propositional,
    nnf,
    simplify,
)

DEFAULT_AP_CAP = 12

_config = {"ap_cap": DEFAULT_AP_CAP}


class APCapExceeded(ValueError):
    pass


def set_ap_cap(cap: int) -> None:
    """Change the default AP cap used by every check in this process."""
    if cap < 1:
        raise ValueError("AP cap must be positive")
    _config["ap_cap"] = cap


def get_ap_cap() -> int:
    return _config["ap_cap"]


def _check_cap(f: Formula, ap_cap: int | None) -> int:
    cap = get_ap_cap() if ap_cap is None else ap_cap
    n = len(atoms(f))
    if n > cap:
        raise APCapExceeded(f"formula has {n} atomic propositions, cap is {cap}")
    return cap


@dataclass(frozen=True)
class Label:
    """Conjunction of literals constraining one letter."""

    pos: frozenset[str]
    neg: frozenset[str]

    def __str__(self) -> str:
        lits = sorted(self.pos) + [f"!{a}" for a in sorted(self.neg)]
        return " & ".join(lits) if lits else "true"


# ---------------------------------------------------------------------------
# invariant constraint (propositional, checked on every label)


class _Invariant:
    def __init__(self, formula: Formula):
        self.formula = formula
        self.aps = sorted(atoms(formula))
        n = len(self.aps)
        idx = np.arange(2**n, dtype=np.int64)
        cols = {ap: ((idx >> j) & 1).astype(bool) for j, ap in enumerate(self.aps)}
        ok = _eval_prop(formula, cols, 2**n)
        self.models = np.stack([cols[ap] for ap in self.aps], axis=1)[ok] if n else np.zeros((int(ok.any()), 0), bool)
        self.column = {ap: j for j, ap in enumerate(self.aps)}
        self._cache: dict[Label, dict[str, bool] | None] = {}

    def model(self, label: Label) -> dict[str, bool] | None:
        if label in self._cache:
            return self._cache[label]
        rows = np.ones(len(self.models), dtype=bool)
        for ap in label.pos:
            if ap in self.column:
                rows &= self.models[:, self.column[ap]]
        for ap in label.neg:
            if ap in self.column:
                rows &= ~self.models[:, self.column[ap]]
        hit = np.flatnonzero(rows)
        result = None
        if hit.size:
            row = self.models[hit[0]]
            result = {ap: bool(row[j]) for j, ap in enumerate(self.aps)}
        self._cache[label] = result
        return result


def _eval_prop(f: Formula, cols: dict[str, np.ndarray], width: int) -> np.ndarray:
    if isinstance(f, Const):
        return np.full(width, f.value)
    if isinstance(f, Atom):
        return cols[f.name]
    if isinstance(f, Not):
        return ~_eval_prop(f.operand, cols, width)
    a = _eval_prop(f.left, cols, width)
    b = _eval_prop(f.right, cols, width)
    if isinstance(f, And):
        return a & b
    if isinstance(f, Or):
        return a | b
    if isinstance(f, Implies):
        return ~a | b
    if isinstance(f, Iff):
        return a == b
    raise TypeError(f"not propositional: {f!r}")


def _split_invariant(f: Formula) -> tuple[Formula, Formula]:
    """Separate top-level ``false R beta`` conjuncts (beta propositional)."""
    stack, rest, inv = [f], [], []
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.extend([g.right, g.left])
        elif isinstance(g, Release) and g.left == FALSE and is_propositional(g.right):
            inv.append(g.right)
        else:
            rest.append(g)
    return conj(rest), conj(inv)


# ---------------------------------------------------------------------------
# tableau


def is_nnf(f: Formula) -> bool:
    if isinstance(f, (Const, Atom)):
        return True
    if isinstance(f, Not):
        return isinstance(f.operand, Atom)
    if isinstance(f, Next):
        return is_nnf(f.operand)
    if isinstance(f, (And, Or, Until, Release)):
        return is_nnf(f.left) and is_nnf(f.right)
    return False


class _Table:
    """Hash-consed subformulas; each entry is (kind, a, b)."""

    def __init__(self):
        self.ids: dict[Formula, int] = {}
        self.entries: list[tuple] = []

    def intern(self, f: Formula) -> int:
        found = self.ids.get(f)
        if found is not None:
            return found
        if isinstance(f, Const):
            entry = ("T",) if f.value else ("F",)
        elif isinstance(f, Atom):
            entry = ("lit", f.name, True)
        elif isinstance(f, Not):
            entry = ("lit", f.operand.name, False)
        elif isinstance(f, Next):
            entry = ("X", self.intern(f.operand))
        else:
            kind = {And: "and", Or: "or", Until: "U", Release: "R"}[type(f)]
            entry = (kind, self.intern(f.left), self.intern(f.right))
        fid = len(self.entries)
        self.entries.append(entry)
        self.ids[f] = fid
        return fid


@dataclass(frozen=True)
class _Cover:
    pos: frozenset[str]
    neg: frozenset[str]
    nxt: frozenset[int]
    postponed: frozenset[int]


def _expand(table: _Table, obligations: frozenset[int]) -> list[_Cover]:
    entries = table.entries
    results: set[_Cover] = set()
    stack = [(list(obligations), frozenset(), frozenset(), frozenset(), frozenset(), frozenset())]
    while stack:
        todo, done, pos, neg, nxt, post = stack.pop()
        alive = True
        while todo:
            fid = todo.pop()
            if fid in done:
                continue
            done = done | {fid}
            entry = entries[fid]
            kind = entry[0]
            if kind == "T":
                continue
            if kind == "F":
                alive = False
                break
            if kind == "lit":
                _, name, polarity = entry
                if (name in neg) if polarity else (name in pos):
                    alive = False
                    break
                if polarity:
                    pos = pos | {name}
                else:
                    neg = neg | {name}
            elif kind == "and":
                todo.extend((entry[1], entry[2]))
            elif kind == "X":
                nxt = nxt | {entry[1]}
            elif kind == "or":
                a, b = entry[1], entry[2]
                if a in done or b in done:
                    continue
                stack.append((todo + [b], done, pos, neg, nxt, post))
                todo.append(a)
            elif kind == "U":
                a, b = entry[1], entry[2]
                if b in done:
                    continue
                # postponed: a now, the until again next step
                stack.append((todo + [a], done, pos, neg, nxt | {fid}, post | {fid}))
                todo.append(b)
            elif kind == "R":
                a, b = entry[1], entry[2]
                stack.append((todo + [b], done, pos, neg, nxt | {fid}, post))
                todo.extend((b, a))
        if alive:
            results.add(_Cover(pos, neg, nxt, post))
    return sorted(results, key=lambda c: (sorted(c.pos), sorted(c.neg), sorted(c.nxt), sorted(c.postponed)))


@dataclass
class GeneralizedBuchiAutomaton:
    """Automaton with state-based generalized Buchi acceptance.

    State 0 is a synthetic initial state.  Every edge into a state carries
    that state's label; ``invariant`` must additionally hold on every letter.
    """

    aps: frozenset[str]
    states: list[int]
    initial: frozenset[int]
    transitions: dict[int, list[tuple[Label, int]]]
    acceptance: list[frozenset[int]]
    invariant: Formula = TRUE
    labels: dict[int, Label] = field(default_factory=dict)
    _inv: _Invariant | None = field(default=None, repr=False)

    def successors(self, state: int) -> list[int]:
        return [dst for _, dst in self.transitions.get(state, [])]

    def letter(self, state: int) -> dict[str, bool]:
        label = self.labels[state]
        assignment = dict.fromkeys(self.aps, False)
        assignment.update(self._inv.model(label) if self._inv else {})
        for ap in label.pos:
            assignment[ap] = True
        for ap in label.neg:
            assignment[ap] = False
        return {ap: assignment[ap] for ap in self.aps}

    def dump(self) -> str:
        lines = [f"aps: {' '.join(sorted(self.aps))}", f"states: {len(self.states)}"]
        lines.append(f"initial: {' '.join(map(str, sorted(self.initial)))}")
        if self.invariant != TRUE:
            lines.append(f"invariant: {self.invariant}")
        for src in self.states:
            for label, dst in self.transitions.get(src, []):
                lines.append(f"edge: {src} -> {dst} [{label}]")
        for i, acc in enumerate(self.acceptance):
            lines.append(f"acc{i}: {' '.join(map(str, sorted(acc)))}")
        return "\n".join(lines)

    # -- emptiness -----------------------------------------------------------

    def accepting_scc(self) -> list[int] | None:
        for comp in _tarjan(self.states, self.successors):
            members = set(comp)
            if len(comp) == 1:
                s = comp[0]
                if s not in self.successors(s):
                    continue
            if all(members & acc for acc in self.acceptance):
                return comp
        return None

    def is_empty(self) -> bool:
        return self.accepting_scc() is None

    def accepting_run(self) -> tuple[list[int], list[int]] | None:
        """(prefix, loop) of states, both excluding the synthetic initial state."""
        comp = self.accepting_scc()
        if comp is None:
            return None
        members = set(comp)
        to_entry = _bfs_path(0, members.__contains__, self.successors, None)
        entry = to_entry[-1]
        loop: list[int] = []
        cur = entry
        for acc in self.acceptance:
            if acc & (set(loop) | {entry}):
                continue
            step = _bfs_path(cur, lambda s, a=acc: s in a, self.successors, members, strict=True)
            loop.extend(step)
            cur = loop[-1]
        back = _bfs_path(cur, lambda s: s == entry, self.successors, members, strict=True)
        loop.extend(back)
        # loop ends with entry again; rotate so it starts at entry
        loop = [entry] + loop[:-1]
        return to_entry[:-1], loop


def _bfs_path(start, is_target, successors, within, strict=False):
    """Shortest path from ``start`` (exclusive) to a target (inclusive).

    With ``strict`` the path has at least one edge even if start is a target.
    """
    if not strict and is_target(start):
        return [start]
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in successors(s):
            if within is not None and t not in within:
                continue
            if is_target(t):
                path = [t]
                while s != start:
                    path.append(s)
                    s = parent[s]
                path.reverse()
                return path
            if t not in parent:
                parent[t] = s
                queue.append(t)
    raise AssertionError("target unreachable inside component")


def _tarjan(states, successors):
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = itertools.count()
    for root in states:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def to_buchi(f: Formula, ap_cap: int | None = None, aps=None) -> GeneralizedBuchiAutomaton:
    """Translate an NNF formula into a generalized Buchi automaton."""
    if not is_nnf(f):
        raise ValueError("to_buchi expects a formula in negation normal form")
    _check_cap(f, ap_cap)
    body, inv_formula = _split_invariant(f)
    inv = _Invariant(inv_formula) if inv_formula != TRUE else None

    table = _Table()
    root = table.intern(body)
    keys: dict[_Cover, int] = {}
    labels: dict[int, Label] = {}
    transitions: dict[int, list[tuple[Label, int]]] = {0: []}
    postponed: dict[int, frozenset[int]] = {}
    cover_of: dict[int, _Cover] = {}
    expansions: dict[frozenset[int], list[_Cover]] = {}
    queue: deque[int] = deque()

    def node_for(cover: _Cover) -> int | None:
        label = Label(cover.pos, cover.neg)
        if inv is not None and inv.model(label) is None:
            return None
        if cover in keys:
            return keys[cover]
        sid = len(keys) + 1
        keys[cover] = sid
        labels[sid] = label
        postponed[sid] = cover.postponed
        cover_of[sid] = cover
        transitions[sid] = []
        queue.append(sid)
        return sid

    def expand(obligations: frozenset[int]) -> list[_Cover]:
        if obligations not in expansions:
            expansions[obligations] = _expand(table, obligations)
        return expansions[obligations]

    for cover in expand(frozenset({root})):
        sid = node_for(cover)
        if sid is not None:
            transitions[0].append((labels[sid], sid))
    while queue:
        sid = queue.popleft()
        for cover in expand(cover_of[sid].nxt):
            dst = node_for(cover)
            if dst is not None:
                transitions[sid].append((labels[dst], dst))

    untils = [fid for fid, e in enumerate(table.entries) if e[0] == "U"]
    states = [0] + sorted(labels)
    acceptance = [frozenset(s for s in labels if u not in postponed[s]) for u in untils]
    declared = frozenset(aps) if aps is not None else atoms(f)
    return GeneralizedBuchiAutomaton(
        aps=declared,
        states=states,
        initial=frozenset({0}),
        transitions=transitions,
        acceptance=acceptance,
        invariant=inv_formula,
        labels=labels,
        _inv=inv,
    )


# ---------------------------------------------------------------------------
# public checks


def prepare(f: Formula) -> Formula:
    return nnf(simplify(f))


@lru_cache(maxsize=4096)
def _find_model(f: Formula, ap_cap: int) -> LassoTrace | None:
    g = prepare(f)
    if g == FALSE:
        return None
    aut = to_buchi(g, ap_cap, aps=atoms(f))
    run = aut.accepting_run()
    if run is None:
        return None
    prefix, loop = run
    trace = LassoTrace.of(
        [aut.letter(s) for s in prefix], [aut.letter(s) for s in loop], aps=atoms(f)
    )
    if not evaluate_on_lasso(f, trace, 0):
        raise AssertionError(f"tableau witness does not satisfy {f}")
    return trace


def find_model(f: Formula, ap_cap: int | None = None) -> LassoTrace | None:
    """A lasso satisfying ``f``, or None when ``f`` is unsatisfiable."""
    cap = _check_cap(f, ap_cap)
    return _find_model(f, cap)


def is_satisfiable(f: Formula, ap_cap: int | None = None) -> bool:
    return find_model(f, ap_cap) is not None


def is_valid(f: Formula, ap_cap: int | None = None) -> bool:
    return find_model(Not(f), ap_cap) is None


def counterexample(f: Formula, ap_cap: int | None = None) -> LassoTrace | None:
    """A lasso violating ``f``, or None when ``f`` is valid."""
    return find_model(Not(f), ap_cap)


def formulas_equivalent(f: Formula, g: Formula, ap_cap: int | None = None) -> bool:
    return is_valid(Iff(f, g), ap_cap)


# ---------------------------------------------------------------------------
# brute-force oracle

ORACLE_MAX_APS = 4
ORACLE_MAX_BOUND = 8
_CHUNK = 1 << 16


def lasso_oracle(f: Formula, bound: int) -> LassoTrace | None:
    """Search every lasso with ``len(prefix) + len(loop) <= bound``.

    One-sided: ``None`` only means no witness exists within the bound.
    Lassos are tried by total length, then loop length, then word order.
    """
    props = sorted(atoms(f))
    if len(props) > ORACLE_MAX_APS or not 1 <= bound <= ORACLE_MAX_BOUND:
        raise ValueError(
            f"oracle limits exceeded: {len(props)} APs (max {ORACLE_MAX_APS}), "
            f"bound {bound} (max {ORACLE_MAX_BOUND})"
        )
    n = len(props)
    for length in range(1, bound + 1):
        bits = n * length
        total = 1 << bits
        for loop_len in range(1, length + 1):
            k = length - loop_len
            succ = np.array([i + 1 for i in range(length - 1)] + [k])
            for start in range(0, total, _CHUNK):
                idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
                cols = {
                    ap: np.stack([((idx >> (pos * n + j)) & 1).astype(bool) for pos in range(length)], axis=1)
                    for j, ap in enumerate(props)
                }
                values = _VectorEvaluator(cols, len(idx), length, succ).values(f)
                hit = np.flatnonzero(values[:, 0])
                if hit.size:
                    row = int(hit[0])
                    states = [{ap: bool(cols[ap][row, pos]) for ap in props} for pos in range(length)]
                    return LassoTrace.of(states[:k], states[k:], aps=props)
    return None


class _VectorEvaluator:
    def __init__(self, cols, width, length, succ):
        self.cols = cols
        self.shape = (width, length)
        self.succ = succ
        self.memo: dict[Formula, np.ndarray] = {}

    def values(self, f: Formula) -> np.ndarray:
        if f not in self.memo:
            self.memo[f] = self._compute(f)
        return self.memo[f]

    def _compute(self, f: Formula) -> np.ndarray:
        if isinstance(f, Const):
            return np.full(self.shape, f.value)
        if isinstance(f, Atom):
            return self.cols[f.name]
        if isinstance(f, Not):
            return ~self.values(f.operand)
        if isinstance(f, Next):
            return self.values(f.operand)[:, self.succ]
        if isinstance(f, Eventually):
            return self._fix(np.ones(self.shape, bool), self.values(f.operand), True)
        if isinstance(f, Globally):
            return self._fix(np.zeros(self.shape, bool), self.values(f.operand), False)
        a, b = self.values(f.left), self.values(f.right)
        if isinstance(f, And):
            return a & b
        if isinstance(f, Or):
            return a | b
        if isinstance(f, Implies):
            return ~a | b
        if isinstance(f, Iff):
            return a == b
        if isinstance(f, Until):
            return self._fix(a, b, True)
        if isinstance(f, Release):
            return self._fix(a, b, False)
        raise TypeError(f"not a formula: {f!r}")

    def _fix(self, a, b, least):
        cur = np.full(self.shape, not least)
        while True:
            nxt = cur[:, self.succ]
            new = (b | (a & nxt)) if least else (b & (a | nxt))
            if np.array_equal(new, cur):
                return cur
            cur = new
