"""LTL formulas: syntax tree, parser, printer, rewriting and lasso evaluation."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Mapping, Sequence

RESERVED = frozenset({"U", "R", "X", "F", "G", "true", "false"})


class Formula:
    """Base class of every LTL node.

    Nodes are immutable; equality is structural and only meant for caching.
    """

    __slots__ = ()

    def __and__(self, other: Formula) -> Formula:
        return And(self, other)

    def __or__(self, other: Formula) -> Formula:
        return Or(self, other)

    def __invert__(self) -> Formula:
        return Not(self)

    def __rshift__(self, other: Formula) -> Formula:
        return Implies(self, other)

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Const(Formula):
    value: bool

    def __repr__(self) -> str:
        return "TRUE" if self.value else "FALSE"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    name: str

    def __repr__(self) -> str:
        return f"Atom({self.name!r})"


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


@dataclass(frozen=True)
class Globally(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


UNARY = (Not, Next, Eventually, Globally)
BINARY = (And, Or, Implies, Iff, Until, Release)
TEMPORAL = (Next, Eventually, Globally, Until, Release)


def conj(formulas: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``true``."""
    items = list(formulas)
    if not items:
        return TRUE
    return reduce(And, items)


def disj(formulas: Iterable[Formula]) -> Formula:
    items = list(formulas)
    if not items:
        return FALSE
    return reduce(Or, items)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, UNARY):
        return (f.operand,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    return ()


def atoms(f: Formula) -> frozenset[str]:
    """Atomic propositions occurring syntactically in ``f``."""
    found: set[str] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            found.add(node.name)
        else:
            stack.extend(children(node))
    return frozenset(found)


def is_propositional(f: Formula) -> bool:
    if isinstance(f, TEMPORAL):
        return False
    return all(is_propositional(c) for c in children(f))


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in children(f))


def temporal_depth(f: Formula) -> int:
    """Number of temporal operators in ``f`` (counted, not nested)."""
    own = 1 if isinstance(f, TEMPORAL) else 0
    return own + sum(temporal_depth(c) for c in children(f))


# ---------------------------------------------------------------------------
# printing

_UNARY_SYMBOL = {Not: "!", Next: "X ", Eventually: "F ", Globally: "G "}
_BINARY_SYMBOL = {And: "&", Or: "|", Implies: "->", Iff: "<->", Until: "U", Release: "R"}


def to_str(f: Formula) -> str:
    """Render ``f`` with every compound operand parenthesized."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, UNARY):
        return _UNARY_SYMBOL[type(f)] + _wrap(f.operand)
    if isinstance(f, BINARY):
        return f"{_wrap(f.left)} {_BINARY_SYMBOL[type(f)]} {_wrap(f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula) -> str:
    text = to_str(f)
    if isinstance(f, (Atom, Const)):
        return text
    return f"({text})"


# ---------------------------------------------------------------------------
# parsing


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class FreshAtomWarning(UserWarning):
    """An atom not declared in the supplied AP set was parsed."""


@dataclass(frozen=True)
class Token:
    kind: str  # ident, const, name, op, uop, bop, eof
    text: str
    offset: int


_TOKEN_RE = re.compile(r"\s*(?:(<->|->|[!&|(),])|([A-Za-z_][A-Za-z0-9_]*))")
_OPERATOR_LETTERS = set("XFGUR")

PatternResolver = Callable[[str, Sequence[str]], Formula]


def _position(text: str, offset: int, base_line: int = 1, base_column: int = 1) -> tuple[int, int]:
    before = text[:offset]
    line = before.count("\n")
    if line == 0:
        return base_line, base_column + offset
    return base_line + line, offset - before.rfind("\n")


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip() == "":
                break
            start = pos + len(rest) - len(rest.lstrip())
            line, col = _position(text, start)
            raise ParseError(f"unexpected character {text[start]!r}", line, col)
        symbol, word = m.group(1), m.group(2)
        start = m.start(1) if symbol else m.start(2)
        pos = m.end()
        if symbol:
            tokens.append(Token("op", symbol, start))
        elif word in ("true", "false"):
            tokens.append(Token("const", word, start))
        elif word[0].islower():
            tokens.append(Token("ident", word, start))
        elif set(word) <= _OPERATOR_LETTERS:
            # "GF" is shorthand for "G F"
            for i, ch in enumerate(word):
                kind = "bop" if ch in "UR" else "uop"
                tokens.append(Token(kind, ch, start + i))
        else:
            tokens.append(Token("name", word, start))
    tokens.append(Token("eof", "", len(text)))
    return tokens


class Parser:
    """Recursive-descent parser for the concrete LTL grammar.

    ``resolver`` expands pattern calls such as ``Patrolling(l1, l2)``; without
    one, pattern calls are rejected.  Atoms missing from ``known_aps`` are
    collected in ``fresh`` in order of first occurrence.
    """

    def __init__(
        self,
        text: str,
        known_aps: Iterable[str] | None = None,
        resolver: PatternResolver | None = None,
        line: int = 1,
        column: int = 1,
    ):
        self.text = text
        self.known = None if known_aps is None else frozenset(known_aps)
        self.resolver = resolver
        self.base = (line, column)
        self.fresh: list[str] = []
        try:
            self.tokens = tokenize(text)
        except ParseError as exc:
            raise self._error_at(exc.message, self._offset_of(exc.line, exc.column)) from None
        self.i = 0

    def _offset_of(self, line: int, column: int) -> int:
        lines = self.text.split("\n")
        return sum(len(x) + 1 for x in lines[: line - 1]) + column - 1

    def _error_at(self, message: str, offset: int) -> ParseError:
        line, col = _position(self.text, offset, *self.base)
        return ParseError(message, line, col)

    def error(self, message: str, token: Token | None = None) -> ParseError:
        token = token or self.peek()
        return self._error_at(message, token.offset)

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.peek().text == text and self.peek().kind in ("op", "uop", "bop"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            found = tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().text!r}")
        return f

    def iff(self) -> Formula:
        left = self.impl()
        while self.accept("<->"):
            left = Iff(left, self.impl())
        return left

    def impl(self) -> Formula:
        left = self.or_()
        if self.accept("->"):
            return Implies(left, self.impl())
        return left

    def or_(self) -> Formula:
        left = self.and_()
        while self.accept("|"):
            left = Or(left, self.and_())
        return left

    def and_(self) -> Formula:
        left = self.until()
        while self.accept("&"):
            left = And(left, self.until())
        return left

    def until(self) -> Formula:
        left = self.unary()
        tok = self.peek()
        if tok.kind == "bop":
            self.advance()
            right = self.until()
            return Until(left, right) if tok.text == "U" else Release(left, right)
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "!":
            self.advance()
            return Not(self.unary())
        if tok.kind == "uop":
            self.advance()
            ctor = {"X": Next, "F": Eventually, "G": Globally}[tok.text]
            return ctor(self.unary())
        if tok.kind == "bop":
            raise self.error(f"reserved word {tok.text!r} cannot be used as an atom")
        if tok.kind == "const":
            self.advance()
            return TRUE if tok.text == "true" else FALSE
        if tok.kind == "ident":
            self.advance()
            if self.known is not None and tok.text not in self.known and tok.text not in self.fresh:
                self.fresh.append(tok.text)
            return Atom(tok.text)
        if tok.kind == "name":
            return self.call()
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            f = self.iff()
            self.expect(")")
            return f
        if tok.kind == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")

    def call(self) -> Formula:
        name_tok = self.advance()
        if self.peek().text != "(":
            raise self.error(f"unknown identifier {name_tok.text!r}", name_tok)
        if self.resolver is None:
            raise self.error(f"pattern call {name_tok.text!r} not allowed here", name_tok)
        self.advance()
        args: list[str] = []
        if self.peek().text != ")":
            while True:
                tok = self.advance()
                if tok.kind != "ident":
                    raise self.error("pattern arguments must be atomic propositions", tok)
                if self.known is not None and tok.text not in self.known and tok.text not in self.fresh:
                    self.fresh.append(tok.text)
                args.append(tok.text)
                if not self.accept(","):
                    break
        self.expect(")")
        try:
            return self.resolver(name_tok.text, args)
        except (KeyError, ValueError) as exc:
            msg = exc.args[0] if exc.args else str(exc)
            raise self.error(str(msg), name_tok) from None


def parse(
    text: str,
    known_aps: Iterable[str] | None = None,
    resolver: PatternResolver | None = None,
) -> Formula:
    """Parse ``text``; warns with :class:`FreshAtomWarning` on undeclared atoms."""
    parser = Parser(text, known_aps, resolver)
    f = parser.parse()
    if parser.fresh:
        warnings.warn(
            f"undeclared atoms: {', '.join(parser.fresh)}", FreshAtomWarning, stacklevel=2
        )
    return f


# ---------------------------------------------------------------------------
# rewriting


def simplify(f: Formula) -> Formula:
    """Constant folding, double negation, idempotence and absorption, to fixpoint."""
    while True:
        g = _simplify_pass(f)
        if g == f:
            return g
        f = g


def _simplify_pass(f: Formula) -> Formula:
    if isinstance(f, (Atom, Const)):
        return f
    if isinstance(f, UNARY):
        x = _simplify_pass(f.operand)
        if isinstance(f, Not):
            if isinstance(x, Const):
                return Const(not x.value)
            if isinstance(x, Not):
                return x.operand
            return Not(x)
        if isinstance(x, Const):
            return x  # X/F/G of a constant
        return type(f)(x)

    a, b = _simplify_pass(f.left), _simplify_pass(f.right)
    if isinstance(f, And):
        if a == FALSE or b == FALSE:
            return FALSE
        if a == TRUE:
            return b
        if b == TRUE or a == b:
            return a
        if isinstance(b, Or) and a in (b.left, b.right):
            return a
        if isinstance(a, Or) and b in (a.left, a.right):
            return b
        return And(a, b)
    if isinstance(f, Or):
        if a == TRUE or b == TRUE:
            return TRUE
        if a == FALSE:
            return b
        if b == FALSE or a == b:
            return a
        if isinstance(b, And) and a in (b.left, b.right):
            return a
        if isinstance(a, And) and b in (a.left, a.right):
            return b
        return Or(a, b)
    if isinstance(f, Implies):
        if a == TRUE:
            return b
        if a == FALSE or b == TRUE:
            return TRUE
        if b == FALSE:
            return Not(a)
        return Implies(a, b)
    if isinstance(f, Iff):
        if a == TRUE:
            return b
        if b == TRUE:
            return a
        if a == FALSE:
            return Not(b)
        if b == FALSE:
            return Not(a)
        return Iff(a, b)
    if isinstance(f, Until):
        if isinstance(b, Const):
            return b
        if a == FALSE:
            return b
        return Until(a, b)
    if isinstance(f, Release):
        if isinstance(b, Const):
            return b
        if a == TRUE:
            return b
        return Release(a, b)
    raise TypeError(f"not a formula: {f!r}")


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form over true/false, literals, &, |, X, U and R."""
    if isinstance(f, Const):
        return Const(f.value != negate)
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.operand, not negate)
    if isinstance(f, And):
        ctor = Or if negate else And
        return ctor(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Or):
        ctor = And if negate else Or
        return ctor(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Implies):
        if negate:
            return And(nnf(f.left), nnf(f.right, True))
        return Or(nnf(f.left, True), nnf(f.right))
    if isinstance(f, Iff):
        a, na = nnf(f.left), nnf(f.left, True)
        b, nb = nnf(f.right), nnf(f.right, True)
        if negate:
            return Or(And(a, nb), And(na, b))
        return Or(And(a, b), And(na, nb))
    if isinstance(f, Next):
        return Next(nnf(f.operand, negate))
    if isinstance(f, Until):
        ctor = Release if negate else Until
        return ctor(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Release):
        ctor = Until if negate else Release
        return ctor(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Eventually):
        if negate:
            return Release(FALSE, nnf(f.operand, True))
        return Until(TRUE, nnf(f.operand))
    if isinstance(f, Globally):
        if negate:
            return Until(TRUE, nnf(f.operand, True))
        return Release(FALSE, nnf(f.operand))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# lasso traces


class UndeclaredAtomError(KeyError):
    pass


@dataclass(frozen=True)
class LassoTrace:
    """The infinite word ``prefix . loop^omega``.

    States are stored as the frozenset of propositions that hold; every
    proposition in ``aps`` but not in a state is false there.
    """

    prefix: tuple[frozenset[str], ...]
    loop: tuple[frozenset[str], ...]
    aps: frozenset[str]

    def __post_init__(self):
        if not self.loop:
            raise ValueError("lasso loop must be non-empty")
        for state in self.prefix + self.loop:
            extra = state - self.aps
            if extra:
                raise ValueError(f"state mentions undeclared atoms {sorted(extra)}")

    @classmethod
    def of(
        cls,
        prefix: Sequence[Mapping[str, bool]],
        loop: Sequence[Mapping[str, bool]],
        aps: Iterable[str] | None = None,
    ) -> LassoTrace:
        states = list(prefix) + list(loop)
        declared = frozenset(aps) if aps is not None else frozenset(k for s in states for k in s)
        for s in states:
            if set(s) != declared:
                raise ValueError(f"state {dict(s)} does not assign exactly {sorted(declared)}")

        def pack(s):
            return frozenset(k for k, v in s.items() if v)

        return cls(tuple(map(pack, prefix)), tuple(map(pack, loop)), declared)

    def __len__(self) -> int:
        return len(self.prefix) + len(self.loop)

    def normalize(self, position: int) -> int:
        if position < len(self):
            return position
        k = len(self.prefix)
        return k + (position - k) % len(self.loop)

    def successor(self, position: int) -> int:
        return self.normalize(position + 1)

    def holds(self, ap: str, position: int) -> bool:
        return ap in (self.prefix + self.loop)[self.normalize(position)]

    def state(self, position: int) -> dict[str, bool]:
        true_set = (self.prefix + self.loop)[self.normalize(position)]
        return {ap: ap in true_set for ap in sorted(self.aps)}

    def to_dicts(self) -> dict[str, list[dict[str, bool]]]:
        n = len(self.prefix)
        return {
            "prefix": [self.state(i) for i in range(n)],
            "loop": [self.state(n + i) for i in range(len(self.loop))],
        }


class _LassoEvaluator:
    def __init__(self, trace: LassoTrace):
        self.trace = trace
        self.n = len(trace)
        self.succ = [trace.successor(i) for i in range(self.n)]
        self.memo: dict[Formula, tuple[bool, ...]] = {}

    def values(self, f: Formula) -> tuple[bool, ...]:
        cached = self.memo.get(f)
        if cached is not None:
            return cached
        result = tuple(self._compute(f))
        self.memo[f] = result
        return result

    def _compute(self, f: Formula) -> list[bool]:
        n, succ = self.n, self.succ
        if isinstance(f, Const):
            return [f.value] * n
        if isinstance(f, Atom):
            if f.name not in self.trace.aps:
                raise UndeclaredAtomError(f.name)
            return [self.trace.holds(f.name, i) for i in range(n)]
        if isinstance(f, Not):
            return [not v for v in self.values(f.operand)]
        if isinstance(f, Next):
            x = self.values(f.operand)
            return [x[succ[i]] for i in range(n)]
        if isinstance(f, Eventually):
            return self._fixpoint([True] * n, self.values(f.operand), least=True)
        if isinstance(f, Globally):
            return self._fixpoint([False] * n, self.values(f.operand), least=False)
        a, b = self.values(f.left), self.values(f.right)
        if isinstance(f, And):
            return [x and y for x, y in zip(a, b)]
        if isinstance(f, Or):
            return [x or y for x, y in zip(a, b)]
        if isinstance(f, Implies):
            return [(not x) or y for x, y in zip(a, b)]
        if isinstance(f, Iff):
            return [x == y for x, y in zip(a, b)]
        if isinstance(f, Until):
            return self._fixpoint(a, b, least=True)
        if isinstance(f, Release):
            return self._fixpoint(a, b, least=False)
        raise TypeError(f"not a formula: {f!r}")

    def _fixpoint(self, a, b, least: bool) -> list[bool]:
        # least:  X = b | (a & X')   (until)
        # greatest: X = b & (a | X') (release)
        n, succ = self.n, self.succ
        cur = [not least] * n
        while True:
            if least:
                new = [b[i] or (a[i] and cur[succ[i]]) for i in range(n)]
            else:
                new = [b[i] and (a[i] or cur[succ[i]]) for i in range(n)]
            if new == cur:
                return cur
            cur = new


def evaluate_on_lasso(f: Formula, trace: LassoTrace, position: int = 0) -> bool:
    """Exact truth value of ``f`` at ``position`` of the lasso word."""
    missing = atoms(f) - trace.aps
    if missing:
        raise UndeclaredAtomError(f"atoms not declared by the trace: {sorted(missing)}")
    return _LassoEvaluator(trace).values(f)[trace.normalize(position)]
