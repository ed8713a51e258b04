"""Loader for mission files: a world block, contracts and component libraries.

Example::

    world {
      type location LF
      type location L1 extends LF
      mutex L1 L2
      adjacent L1 L2
      covers LF = L1, L3
    }
    contract C1 { assumes: true; guarantees: OrderedPatrolling(lf, lb); }
    library Delta {
      component L1 { guarantees: Patrolling(l5); }
    }

``#`` and ``//`` start comments.  Formulas run up to the next ``;`` and may
use pattern calls.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from agc.contracts import Contract, is_well_formed
from agc.library import Component, ComponentLibrary, MealyError, load_mealy
from agc.ltl import TRUE, Formula, FreshAtomWarning, ParseError, Parser
from agc.patterns import resolve as resolve_pattern
from agc.world import WorldModel


class MissionError(ValueError):
    def __init__(self, message: str, path: str = "<mission>", line: int | None = None, column: int | None = None):
        where = path if line is None else f"{path}:{line}:{column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


@dataclass
class MissionFile:
    world: WorldModel
    contracts: dict[str, Contract] = field(default_factory=dict)
    libraries: dict[str, ComponentLibrary] = field(default_factory=dict)
    fresh_atoms: list[str] = field(default_factory=list)
    path: str = "<mission>"

    def contract(self, name: str) -> Contract:
        """Look up a contract, or a component as ``Library.Component`` or by unique name."""
        if name in self.contracts:
            return self.contracts[name]
        lib_name, dot, comp_name = name.partition(".")
        if dot and lib_name in self.libraries:
            try:
                return self.libraries[lib_name][comp_name].contract
            except KeyError:
                pass
        hits = [c.contract for lib in self.libraries.values() for c in lib if c.name == name]
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise KeyError(f"component name {name!r} is ambiguous; qualify it as Library.{name}")
        raise KeyError(f"unknown contract {name!r}")

    def library(self, name: str) -> ComponentLibrary:
        if name not in self.libraries:
            raise KeyError(f"unknown library {name!r}")
        return self.libraries[name]


_COMMENT_RE = re.compile(r"(#|//)[^\n]*")
_TOKEN_RE = re.compile(r'\s*(?:([A-Za-z_][A-Za-z0-9_]*)|("[^"\n]*")|([{}:;=,]))')


class _Reader:
    def __init__(self, text: str, path: str, base_dir: Path | None):
        # blank out comments but keep offsets stable
        self.text = _COMMENT_RE.sub(lambda m: " " * len(m.group(0)), text)
        self.path = path
        self.base_dir = base_dir
        self.pos = 0
        self.world = WorldModel()
        self.world_seen = False
        self.contracts: dict[str, Contract] = {}
        self.libraries: dict[str, ComponentLibrary] = {}
        self.fresh: list[str] = []

    # -- lexing --------------------------------------------------------------

    def where(self, offset: int) -> tuple[int, int]:
        before = self.text[:offset]
        return before.count("\n") + 1, offset - (before.rfind("\n") + 1) + 1

    def error(self, message: str, offset: int | None = None) -> MissionError:
        line, col = self.where(self.pos if offset is None else offset)
        return MissionError(message, self.path, line, col)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def next(self) -> tuple[str, str, int]:
        self.skip_ws()
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None:
            if self.pos >= len(self.text):
                raise self.error("unexpected end of file")
            raise self.error(f"unexpected character {self.text[self.pos]!r}")
        self.pos = m.end()
        if m.group(1):
            return "word", m.group(1), m.start(1)
        if m.group(2):
            return "string", m.group(2)[1:-1], m.start(2)
        return "sym", m.group(3), m.start(3)

    def peek(self) -> str:
        saved = self.pos
        try:
            return self.next()[1]
        except MissionError:
            return ""
        finally:
            self.pos = saved

    def expect(self, text: str) -> int:
        kind, tok, off = self.next()
        if tok != text or kind == "string":
            raise self.error(f"expected {text!r}, found {tok!r}", off)
        return off

    def ident(self, what: str = "identifier") -> tuple[str, int]:
        kind, tok, off = self.next()
        if kind != "word":
            raise self.error(f"expected {what}, found {tok!r}", off)
        return tok, off

    def formula(self) -> Formula:
        self.skip_ws()
        start = self.pos
        end = self.text.find(";", start)
        if end < 0:
            raise self.error("formula is not terminated by ';'")
        line, col = self.where(start)
        parser = Parser(self.text[start:end], self.world.aps, resolve_pattern, line, col)
        try:
            f = parser.parse()
        except ParseError as exc:
            raise MissionError(exc.message, self.path, exc.line, exc.column) from None
        self.fresh.extend(a for a in parser.fresh if a not in self.fresh)
        self.pos = end + 1
        return f

    # -- grammar -------------------------------------------------------------

    def file(self) -> None:
        while not self.at_end():
            kind, tok, off = self.next()
            if tok == "world" and kind == "word":
                if self.world_seen:
                    raise self.error("duplicate world block", off)
                if self.contracts or self.libraries:
                    raise self.error("world block must come first", off)
                self.world_seen = True
                self.world_block()
            elif tok == "contract" and kind == "word":
                self.contract_block()
            elif tok == "library" and kind == "word":
                self.library_block()
            else:
                raise self.error(f"expected 'world', 'contract' or 'library', found {tok!r}", off)

    def type_ref(self) -> str:
        name, _ = self.ident("type name")
        try:
            return self.world.resolve(name)
        except KeyError:
            return name

    def world_block(self) -> None:
        self.expect("{")
        pending_ext: list[tuple[str, str]] = []
        while self.peek() != "}":
            kw, off = self.ident("declaration")
            if kw == "type":
                kind, koff = self.ident("type kind")
                if kind not in ("location", "sensor", "action"):
                    raise self.error(f"unknown type kind {kind!r}", koff)
                name, noff = self.ident("type name")
                if not name[0].isupper():
                    raise self.error(f"type names are capitalised: {name!r}", noff)
                try:
                    self.world.declare(name, kind)
                except ValueError as exc:
                    raise self.error(str(exc), noff) from None
                if self.peek() == "extends":
                    self.next()
                    sup, _ = self.ident("type name")
                    pending_ext.append((name, sup))
            elif kw == "mutex":
                self.world.add_mutex(self.type_ref(), self.type_ref())
            elif kw == "adjacent":
                self.world.add_adjacent(self.type_ref(), self.type_ref())
            elif kw == "covers":
                sup = self.type_ref()
                self.expect("=")
                members = [self.type_ref()]
                while self.peek() == ",":
                    self.next()
                    members.append(self.type_ref())
                self.world.add_covering(sup, members)
            else:
                raise self.error(f"unknown declaration {kw!r}", off)
        self.expect("}")
        for sub, sup in pending_ext:
            try:
                sup = self.world.resolve(sup)
            except KeyError:
                pass
            self.world.add_extension(sub, sup)
        problems = self.world.validate()
        if problems:
            raise MissionError("invalid world: " + "; ".join(map(str, problems)), self.path)

    def clauses(self, allow_impl: bool) -> tuple[Formula, Formula, str | None, int]:
        start = self.expect("{")
        assumes: Formula | None = None
        guarantees: Formula | None = None
        impl: str | None = None
        while self.peek() != "}":
            kw, off = self.ident("'assumes', 'guarantees' or 'impl'")
            self.expect(":")
            if kw == "assumes" and assumes is None and guarantees is None:
                assumes = self.formula()
            elif kw == "guarantees" and guarantees is None:
                guarantees = self.formula()
            elif kw == "impl" and allow_impl and impl is None:
                kind, impl, soff = self.next()
                if kind != "string":
                    raise self.error("impl expects a quoted path", soff)
                self.expect(";")
            else:
                raise self.error(f"unexpected {kw!r} clause", off)
        self.expect("}")
        if guarantees is None:
            raise self.error("missing 'guarantees' clause", start)
        return assumes if assumes is not None else TRUE, guarantees, impl, start

    def contract_block(self) -> None:
        name, off = self.ident("contract name")
        if name in self.contracts:
            raise self.error(f"duplicate contract {name!r}", off)
        a, g, _, _ = self.clauses(allow_impl=False)
        self.contracts[name] = Contract.of(a, g)

    def library_block(self) -> None:
        name, off = self.ident("library name")
        if name in self.libraries:
            raise self.error(f"duplicate library {name!r}", off)
        self.expect("{")
        comps: list[Component] = []
        while self.peek() != "}":
            kw, koff = self.ident("'component'")
            if kw != "component":
                raise self.error(f"expected 'component', found {kw!r}", koff)
            cname, coff = self.ident("component name")
            if any(c.name == cname for c in comps):
                raise self.error(f"duplicate component {cname!r} in library {name}", coff)
            a, g, impl, _ = self.clauses(allow_impl=True)
            machine = None
            if impl is not None:
                path = Path(impl) if self.base_dir is None else self.base_dir / impl
                try:
                    machine = load_mealy(path)
                except (OSError, MealyError) as exc:
                    raise self.error(f"component {cname}: cannot load {impl}: {exc}", coff) from None
            comps.append(Component(cname, Contract.of(a, g), impl, machine))
        self.expect("}")
        self.libraries[name] = ComponentLibrary(name, tuple(comps))


def loads(text: str, path: str = "<mission>", base_dir: Path | None = None) -> MissionFile:
    reader = _Reader(text, path, base_dir)
    reader.file()
    if reader.fresh:
        reader.world.register_atoms(reader.fresh)
        warnings.warn(
            f"{path}: undeclared atoms registered as untyped: {', '.join(reader.fresh)}",
            FreshAtomWarning,
            stacklevel=2,
        )
    for lib in reader.libraries.values():
        for comp in lib:
            if not is_well_formed(comp.contract, reader.world):
                raise MissionError(f"component {lib.name}.{comp.name} is not well-formed", path)
    return MissionFile(reader.world, reader.contracts, reader.libraries, list(reader.fresh), path)


def load(path: str | Path) -> MissionFile:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise MissionError(f"cannot read file: {exc.strerror or exc}", str(p)) from None
    return loads(text, str(p), p.parent)


def bundled(name: str) -> Path:
    """Path of a mission file shipped with the package (``store``, ``greeter``...)."""
    root = resources.files("agc") / "missions"
    p = Path(str(root / (name if name.endswith(".mission") else f"{name}.mission")))
    if not p.exists():
        raise FileNotFoundError(f"no bundled mission {name!r}")
    return p
