"""Command-line frontend: ``agc <command> ... -m MISSION``.

Exit codes: 0 affirmative result, 1 negative verdict, 2 usage or load
error, 3 external tool error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path
from typing import Any

from agc import sat
from agc.contracts import (
    Contract,
    PrecheckError,
    VariableAlignmentWarning,
    check_refinement,
    compose,
    is_compatible,
    is_consistent,
    merge,
    quotient,
    separate,
)
from agc.engine import (
    ExternalSynthConfig,
    Status,
    Verdict,
    check_realizability,
    refinement_analysis,
)
from agc.library import (
    DEFAULT_SUBSET_CAP,
    NoCandidateError,
    best_candidate_composition,
    refinement_score,
    similarity_score,
)
from agc.ltl import FreshAtomWarning, ParseError, Parser, simplify, to_str
from agc.mission import MissionError, MissionFile, bundled, load
from agc.patterns import resolve as resolve_pattern

OK, NEGATIVE, USAGE, TOOL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _env(name: str, default: Any = None) -> Any:
    return os.environ.get(f"AGC_{name}", default)


def _formula(f) -> str:
    return to_str(simplify(f))


def _contract_json(c: Contract) -> dict[str, str]:
    return {"assumptions": _formula(c.assumptions), "guarantees": _formula(c.guarantees)}


def _pct(x: float) -> str:
    return f"{x:g}%"


class Report:
    def __init__(self, command: str):
        self.data: dict[str, Any] = {"command": command, "status": None, "contracts": {}, "scores": {}}
        self.lines: list[str] = []

    def status(self, status: str) -> None:
        self.data["status"] = status

    def contract(self, label: str, c: Contract) -> None:
        self.data["contracts"][label] = _contract_json(c)
        a, g = _contract_json(c).values()
        self.lines += [f"{label}:", f"  assumptions: {a}", f"  guarantees:  {g}"]

    def score(self, label: str, value: float) -> None:
        self.data["scores"][label] = value
        self.lines.append(f"{label}: {_pct(value)}")

    def field(self, key: str, value: Any, text: str | None = None) -> None:
        self.data[key] = value
        if isinstance(value, bool):
            shown = "yes" if value else "no"
        elif isinstance(value, (list, tuple)):
            shown = ", ".join(map(str, value)) or "-"
        else:
            shown = str(value)
        self.lines.append(f"{text or key}: {shown}")

    def note(self, message: str) -> None:
        self.data.setdefault("notes", []).append(message)
        self.lines.append(message)

    def emit(self, as_json: bool) -> None:
        if as_json:
            print(json.dumps(self.data, indent=2, sort_keys=True))
        else:
            print("\n".join([f"status: {self.data['status']}", *self.lines]))


# ---------------------------------------------------------------------------
# commands


def _mission(args) -> MissionFile:
    name = args.mission or _env("MISSION")
    if not name:
        raise UsageError("no mission file given (use -m/--mission or AGC_MISSION)")
    path = Path(name)
    if not path.exists():
        try:
            path = bundled(name)
        except FileNotFoundError:
            raise UsageError(f"mission file {name!r} not found") from None
    return load(path)


def _lookup(m: MissionFile, name: str) -> Contract:
    try:
        return m.contract(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _library(m: MissionFile, name: str):
    try:
        return m.library(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def cmd_check(args, r: Report) -> int:
    m = _mission(args)
    c = _lookup(m, args.contract)
    r.contract(args.contract, c)
    compat, consist = is_compatible(c, m.world), is_consistent(c, m.world)
    r.field("compatible", compat)
    r.field("consistent", consist)
    r.field("well_formed", compat and consist, "well-formed")
    r.status("WellFormed" if compat and consist else "IllFormed")
    return OK if compat and consist else NEGATIVE


def cmd_refines(args, r: Report) -> int:
    m = _mission(args)
    c1, c2 = _lookup(m, args.c1), _lookup(m, args.c2)
    try:
        res = check_refinement(c1, c2, m.world)
    except PrecheckError as exc:
        r.status("PrecheckFailed")
        r.note(str(exc))
        return NEGATIVE
    r.field("refines", res.holds, f"{args.c1} refines {args.c2}")
    if not res.holds:
        r.field("failed", res.failed, "failing side")
        r.data["counterexample"] = {
            k: [sorted(a for a, v in s.items() if v) for s in states]
            for k, states in res.counterexample.to_dicts().items()
        }
        r.lines.append(f"counterexample: {_lasso_text(res.counterexample)}")
    r.status("Refines" if res.holds else "NotRefines")
    return OK if res.holds else NEGATIVE


def _lasso_text(trace) -> str:
    def fmt(states):
        return " ".join("{" + ",".join(sorted(s)) + "}" for s in states)

    return f"{fmt(trace.prefix)} ({fmt(trace.loop)})^w".strip()


_BINARY = {"compose": compose, "quotient": quotient, "merge": merge, "separate": separate}


def cmd_binary(args, r: Report) -> int:
    m = _mission(args)
    c1, c2 = _lookup(m, args.c1), _lookup(m, args.c2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", VariableAlignmentWarning)
        result = _BINARY[args.command](c1, c2)
    r.contract("result", result)
    r.status("Computed")
    return OK


def _candidate(args, m: MissionFile, c: Contract, lib):
    return best_candidate_composition(
        c,
        lib,
        m.world,
        prefer_least_refined=args.prefer_least_refined,
        subset_cap=args.subset_cap,
        seed=args.seed,
    )


def _report_candidate(r: Report, cand) -> None:
    r.field("selection", list(cand.names), "candidate")
    r.score("similarity", cand.similarity)
    r.score("refinement_score", cand.refinement_score)
    r.contract("candidate", cand.composed)


def cmd_candidate(args, r: Report) -> int:
    m = _mission(args)
    c, lib = _lookup(m, args.contract), _library(m, args.library)
    try:
        cand = _candidate(args, m, c, lib)
    except NoCandidateError as exc:
        r.status("NoCandidate")
        r.note(str(exc))
        return NEGATIVE
    r.status("Candidate")
    _report_candidate(r, cand)
    return OK


def cmd_analyze(args, r: Report) -> int:
    m = _mission(args)
    c, lib = _lookup(m, args.contract), _library(m, args.library)
    extra = [_library(m, n) for n in args.extra_lib]
    try:
        cand = _candidate(args, m, c, lib)
    except NoCandidateError as exc:
        r.status(Status.FAILED.value)
        r.note(str(exc))
        return NEGATIVE
    out = refinement_analysis(
        c, lib, cand, extra, args.repair, args.search, m.world, subset_cap=args.subset_cap
    )
    r.status(out.status.value)
    _report_candidate(r, cand)
    if out.reason:
        r.field("reason", out.reason)
    if out.status is Status.SEARCH:
        r.contract("quotient", out.quotient)
        if out.found is not None:
            r.field("found", list(out.found.names), f"found in {out.found_in}")
            r.data["found_in"] = out.found_in
            r.contract("found", out.found.composed)
    if out.status is Status.REPAIR:
        r.contract("separation", out.separation)
    if out.refinement is not None:
        label = {Status.COMPLETE: "refinement", Status.SEARCH: "final", Status.REPAIR: "repaired"}[out.status]
        r.contract(label, out.refinement)
    if out.status is Status.REPAIR:
        r.field("candidate_refines_repaired", True, "candidate refines repaired")
        return OK
    if out.status is Status.FAILED or out.refinement is None:
        return NEGATIVE
    r.field("refines_spec", True, f"refines {args.contract}")
    return OK


def cmd_expand(args, r: Report) -> int:
    parser = Parser(args.pattern, resolver=resolve_pattern)
    try:
        f = parser.parse()
    except ParseError as exc:
        raise UsageError(str(exc)) from None
    r.field("formula", to_str(f))
    r.status("Expanded")
    return OK


def cmd_score(args, r: Report) -> int:
    m = _mission(args)
    c, lib = _lookup(m, args.contract), _library(m, args.library)
    r.score("similarity", similarity_score(c, lib.components, m.world))
    r.score("refinement_score", refinement_score(c, [comp.contract for comp in lib]))
    for comp in lib:
        r.score(f"similarity[{comp.name}]", similarity_score(c, [comp], m.world))
    r.status("Scored")
    return OK


def cmd_realizable(args, r: Report) -> int:
    m = _mission(args)
    c = _lookup(m, args.contract)
    cmd = args.adapter_cmd or _env("ADAPTER_CMD")
    adapter = None if not cmd else ExternalSynthConfig(cmd, args.timeout)
    inputs = [x for x in (args.inputs or "").split(",") if x]
    outputs = None if args.outputs is None else [x for x in args.outputs.split(",") if x]
    res = check_realizability(c, m.world, adapter, inputs, outputs)
    r.field("formula", to_str(res.formula))
    r.field("verdict", res.verdict.value)
    if res.output:
        r.field("tool_output", res.output.strip(), "tool output")
    r.status(res.verdict.value)
    return {Verdict.REALIZABLE: OK, Verdict.UNREALIZABLE: NEGATIVE, Verdict.TOOL_ERROR: TOOL}[res.verdict]


# ---------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("-m", "--mission", help="mission file, or the name of a bundled mission")
    p.add_argument("--json", action="store_true", default=bool(_env("JSON")), help="machine-readable report")
    p.add_argument("--ap-cap", type=int, default=int(_env("AP_CAP", sat.DEFAULT_AP_CAP)))
    p.add_argument("--subset-cap", type=int, default=int(_env("SUBSET_CAP", DEFAULT_SUBSET_CAP)))
    seed = _env("SEED")
    p.add_argument("--seed", type=int, default=None if seed is None else int(seed),
                   help="random tie-break among equally ranked candidates")
    p.add_argument("--adapter-cmd", default=None, help="synthesizer command containing {input}")
    p.add_argument("--timeout", type=float, default=float(_env("TIMEOUT", 60)))
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    top = argparse.ArgumentParser(prog="agc", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="compatibility, consistency, well-formedness")
    p.add_argument("contract")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("refines", parents=[common], help="does C1 refine C2")
    p.add_argument("c1")
    p.add_argument("c2")
    p.set_defaults(func=cmd_refines)

    for name in _BINARY:
        p = sub.add_parser(name, parents=[common], help=f"{name} two contracts")
        p.add_argument("c1")
        p.add_argument("c2")
        p.set_defaults(func=cmd_binary)

    for name, func in (("candidate", cmd_candidate), ("analyze", cmd_analyze)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("contract")
        p.add_argument("library")
        p.add_argument("--prefer-least-refined", action="store_true")
        if name == "analyze":
            p.add_argument("--extra-lib", action="append", default=[], metavar="NAME")
            force = p.add_mutually_exclusive_group()
            force.add_argument("--repair", action="store_true")
            force.add_argument("--search", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("expand", parents=[common], help="expand a pattern call")
    p.add_argument("pattern")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("score", parents=[common], help="similarity and refinement scores")
    p.add_argument("contract")
    p.add_argument("library")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("realizable", parents=[common], help="realizability via an external synthesizer")
    p.add_argument("contract")
    p.add_argument("--inputs", default=None, help="comma-separated input atoms")
    p.add_argument("--outputs", default=None, help="comma-separated output atoms")
    p.set_defaults(func=cmd_realizable)
    return top


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    report = Report(args.command)
    try:
        sat.set_ap_cap(args.ap_cap)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("ignore", VariableAlignmentWarning)
            warnings.simplefilter("always", FreshAtomWarning)
            code = args.func(args, report)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except (UsageError, MissionError, sat.APCapExceeded, ValueError) as exc:
        print(f"agc: error: {exc}", file=sys.stderr)
        return USAGE
    finally:
        sat.set_ap_cap(sat.DEFAULT_AP_CAP)
    report.emit(args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
