"""Refinement analysis with quotient-based search and separation-based repair."""

from __future__ import annotations

import enum
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from agc.contracts import (
    Contract,
    PrecheckError,
    compose,
    is_consistent,
    merge,
    quotient,
    refines,
    separate,
)
from agc.library import (
    CandidateComposition,
    ComponentLibrary,
    NoCandidateError,
    best_candidate_composition,
)
from agc.ltl import Formula, Implies, atoms, to_str
from agc.sat import is_satisfiable
from agc.world import WorldModel, adj, mtx

REPAIR_THRESHOLD = 80.0


class Status(enum.Enum):
    COMPLETE = "Complete"
    FAILED = "Failed"
    SEARCH = "SearchResult"
    REPAIR = "RepairResult"


class Route(enum.Enum):
    COMPLETE = "complete"
    FAILED = "failed"
    SEARCH = "search"
    REPAIR = "repair"


class EngineError(RuntimeError):
    """A result failed re-verification; this indicates a bug, not a verdict."""


@dataclass(frozen=True)
class AnalysisOutcome:
    status: Status
    candidate: CandidateComposition | None = None
    refinement: Contract | None = None
    quotient: Contract | None = None
    found: CandidateComposition | None = None
    found_in: str | None = None
    separation: Contract | None = None
    similarity: float | None = None
    reason: str = ""


def route(
    refined: bool,
    similarity: float,
    force_repair: bool = False,
    force_search: bool = False,
    has_extra_libs: bool = False,
) -> Route:
    """Decision table of the analysis, independent of any formula work."""
    if force_repair and force_search:
        raise ValueError("repair and search cannot both be forced")
    if refined:
        return Route.COMPLETE
    if similarity == 0:
        return Route.FAILED
    if force_repair:
        return Route.REPAIR
    if force_search and has_extra_libs:
        return Route.SEARCH
    if similarity >= REPAIR_THRESHOLD:
        return Route.REPAIR
    if has_extra_libs:
        return Route.SEARCH
    return Route.FAILED


def refinement_analysis(
    c: Contract,
    lib: ComponentLibrary,
    candidate: CandidateComposition,
    extra_libs: Sequence[ComponentLibrary] = (),
    force_repair: bool = False,
    force_search: bool = False,
    w: WorldModel | None = None,
    subset_cap: int | None = None,
) -> AnalysisOutcome:
    if force_repair and force_search:
        raise ValueError("repair and search cannot both be forced")
    if any(comp not in lib.components for comp in candidate.selection):
        raise ValueError(f"candidate {candidate.names} is not drawn from library {lib.name}")
    try:
        refined = refines(candidate.composed, c, w)
    except PrecheckError as exc:
        return AnalysisOutcome(Status.FAILED, candidate, similarity=candidate.similarity, reason=str(exc))
    decision = route(refined, candidate.similarity, force_repair, force_search, bool(extra_libs))
    if decision is Route.COMPLETE:
        return AnalysisOutcome(Status.COMPLETE, candidate, candidate.composed, similarity=candidate.similarity)
    if decision is Route.REPAIR:
        return repair_procedure(candidate, c, w)
    if decision is Route.SEARCH:
        return search_procedure(candidate, c, extra_libs, w, subset_cap)
    reason = "no library type is similar" if candidate.similarity == 0 else "no repair or search applies"
    return AnalysisOutcome(Status.FAILED, candidate, similarity=candidate.similarity, reason=reason)


def search_procedure(
    candidate: CandidateComposition,
    c: Contract,
    extra_libs: Sequence[ComponentLibrary],
    w: WorldModel | None = None,
    subset_cap: int | None = None,
) -> AnalysisOutcome:
    q = quotient(c, candidate.composed)
    if not is_consistent(q, w):
        return AnalysisOutcome(
            Status.FAILED, candidate, quotient=q, similarity=candidate.similarity, reason="quotient is inconsistent"
        )
    world = w if w is not None else WorldModel()
    kwargs = {} if subset_cap is None else {"subset_cap": subset_cap}
    for extra in extra_libs:
        try:
            found = best_candidate_composition(q, extra, world, **kwargs)
            if not refines(found.composed, q, w):
                continue
        except (NoCandidateError, PrecheckError, ValueError):
            continue
        final = compose(found.composed, candidate.composed)
        if not refines(final, c, w):
            raise EngineError(f"composition with {found.names} does not refine the target contract")
        return AnalysisOutcome(Status.SEARCH, candidate, final, q, found, extra.name, similarity=candidate.similarity)
    return AnalysisOutcome(Status.SEARCH, candidate, None, q, similarity=candidate.similarity,
                           reason="no library refines the quotient")


def repair_procedure(
    candidate: CandidateComposition, c: Contract, w: WorldModel | None = None
) -> AnalysisOutcome:
    if refines(candidate.composed, c, w):
        raise ValueError("candidate already refines the target contract; nothing to repair")
    s = separate(candidate.composed, c)
    repaired = merge(s, c)
    if not refines(candidate.composed, repaired, w):
        raise EngineError("repaired contract is not refined by the candidate")
    return AnalysisOutcome(
        Status.REPAIR, candidate, repaired, separation=s, similarity=candidate.similarity
    )


# ---------------------------------------------------------------------------
# external realizability check


class Verdict(enum.Enum):
    REALIZABLE = "Realizable"
    UNREALIZABLE = "Unrealizable"
    TOOL_ERROR = "ToolError"


@dataclass(frozen=True)
class ExternalSynthConfig:
    command: str  # must contain "{input}"
    timeout: float = 60.0


@dataclass(frozen=True)
class RealizabilityResult:
    verdict: Verdict
    formula: Formula
    output: str = ""


_VERDICT_RE = re.compile(r"\b(UNREALIZABLE|REALIZABLE)\b")


def realizability_formula(c: Contract, w: WorldModel | None = None) -> Formula:
    a, g = c.assumptions, c.guarantees
    if w is not None:
        a = a & mtx(w, atoms(a)) & adj(w, atoms(a))
        g = g & mtx(w, atoms(g)) & adj(w, atoms(g))
    return Implies(a, g)


def check_realizability(
    c: Contract,
    w: WorldModel | None,
    adapter: ExternalSynthConfig | None,
    inputs: Sequence[str] = (),
    outputs: Sequence[str] | None = None,
) -> RealizabilityResult:
    f = realizability_formula(c, w)
    if adapter is None:
        return RealizabilityResult(Verdict.TOOL_ERROR, f, "no adapter")
    if "{input}" not in adapter.command:
        return RealizabilityResult(Verdict.TOOL_ERROR, f, "adapter command lacks {input}")
    if not is_satisfiable(f):
        return RealizabilityResult(Verdict.UNREALIZABLE, f, "formula is unsatisfiable")
    if outputs is None:
        outputs = sorted(atoms(f) - set(inputs))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "spec.txt"
        path.write_text(
            f"INPUTS: {' '.join(inputs)}\nOUTPUTS: {' '.join(outputs)}\nFORMULA: {to_str(f)}\n",
            encoding="utf-8",
        )
        cmd = adapter.command.replace("{input}", shlex.quote(str(path)))
        try:
            proc = subprocess.run(cmd, shell=True, capture_output=True, text=True, timeout=adapter.timeout)
        except subprocess.TimeoutExpired as exc:
            return RealizabilityResult(Verdict.TOOL_ERROR, f, f"timeout after {exc.timeout} s")
    out = proc.stdout + proc.stderr
    m = _VERDICT_RE.search(proc.stdout)
    if m is None:
        return RealizabilityResult(Verdict.TOOL_ERROR, f, out or f"exit status {proc.returncode}")
    verdict = Verdict.REALIZABLE if m.group(1) == "REALIZABLE" else Verdict.UNREALIZABLE
    return RealizabilityResult(verdict, f, out)
