import itertools
import sys

import pytest

from agc.contracts import Contract, is_equivalent, refines
from agc.engine import (
    REPAIR_THRESHOLD,
    ExternalSynthConfig,
    Route,
    Status,
    Verdict,
    check_realizability,
    refinement_analysis,
    repair_procedure,
    route,
    search_procedure,
)
from agc.library import CandidateComposition, Component, ComponentLibrary, best_candidate_composition
from agc.ltl import parse
from agc.mission import bundled, load
from agc.patterns import resolve

pytestmark = pytest.mark.filterwarnings("ignore::agc.contracts.VariableAlignmentWarning")


def C(a, g):
    return Contract.of(parse(a, resolver=resolve), parse(g, resolver=resolve))


@pytest.fixture(scope="module")
def route_mission():
    return load(bundled("store_route"))


@pytest.fixture(scope="module")
def greeter():
    return load(bundled("greeter"))


def _candidate(m, spec, lib):
    return best_candidate_composition(m.contract(spec), m.library(lib), m.world)


class TestRoute:
    @pytest.mark.parametrize(
        "refined, sim, force_repair, force_search, extra, expected",
        [
            (True, 0, False, False, False, Route.COMPLETE),
            (True, 50, True, False, True, Route.COMPLETE),
            (False, 0, True, False, True, Route.FAILED),
            (False, 0, False, True, True, Route.FAILED),
            (False, 50, True, False, False, Route.REPAIR),
            (False, 100, False, True, True, Route.SEARCH),
            (False, 100, False, True, False, Route.REPAIR),
            (False, 80, False, False, True, Route.REPAIR),
            (False, 79.9, False, False, True, Route.SEARCH),
            (False, 50, False, False, False, Route.FAILED),
            (False, 50, False, True, False, Route.FAILED),
        ],
    )
    def test_table(self, refined, sim, force_repair, force_search, extra, expected):
        assert route(refined, sim, force_repair, force_search, extra) is expected

    def test_threshold(self):
        assert REPAIR_THRESHOLD == 80

    def test_conflicting_flags(self):
        with pytest.raises(ValueError):
            route(False, 50, True, True, True)

    def test_every_outcome_reachable(self):
        seen = {
            route(r, s, fr, fs, e)
            for r, s, (fr, fs), e in itertools.product(
                [True, False], [0, 50, 80, 100], [(False, False), (True, False), (False, True)], [False, True]
            )
        }
        assert seen == set(Route)


class TestAnalysis:
    def test_complete(self, route_mission):
        m = route_mission
        lib = ComponentLibrary("Direct", (Component("P", C("true", "OrderedPatrolling(lf, lb)")),))
        cand = best_candidate_composition(m.contract("C1"), lib, m.world)
        out = refinement_analysis(m.contract("C1"), lib, cand, w=m.world)
        assert out.status is Status.COMPLETE
        assert out.refinement == cand.composed

    def test_search_finds_missing_part(self, route_mission):
        m = route_mission
        c1, delta, extra = m.contract("C1"), m.library("Delta"), m.library("DeltaPrime")
        cand = _candidate(m, "C1", "Delta")
        out = refinement_analysis(c1, delta, cand, [extra], force_search=True, w=m.world)
        assert out.status is Status.SEARCH
        assert out.found.names == ("Lprime",) and out.found_in == "DeltaPrime"
        assert refines(out.refinement, c1, m.world)
        q = C("G F l5 & G F l3", "OrderedPatrolling(lf, lb) | !(G F l5 & G F l3)")
        assert is_equivalent(out.quotient, q)

    def test_search_without_extra_library_match(self, route_mission):
        m = route_mission
        c1 = m.contract("C1")
        cand = _candidate(m, "C1", "Delta")
        useless = ComponentLibrary("Useless", (Component("V", C("true", "F l1")),))
        out = search_procedure(cand, c1, [useless], m.world)
        assert out.status is Status.SEARCH and out.refinement is None and out.quotient is not None

    def test_search_accepts_the_quotient_itself(self, route_mission):
        m = route_mission
        c1 = m.contract("C1")
        cand = _candidate(m, "C1", "Delta")
        q = search_procedure(cand, c1, [], m.world).quotient
        out = search_procedure(cand, c1, [ComponentLibrary("Q", (Component("Q", q),))], m.world)
        assert out.refinement is not None and refines(out.refinement, c1, m.world)

    def test_default_route_without_flags(self, route_mission):
        # similarity 100 sends an unrefined candidate to repair
        m = route_mission
        cand = _candidate(m, "C1", "Delta")
        out = refinement_analysis(m.contract("C1"), m.library("Delta"), cand, [m.library("DeltaPrime")], w=m.world)
        assert out.status is Status.REPAIR
        assert refines(cand.composed, out.refinement, m.world)

    def test_repair(self, greeter):
        c2, lib = greeter.contract("C2"), greeter.library("Lib")
        cand = best_candidate_composition(c2, lib, greeter.world)
        out = refinement_analysis(c2, lib, cand, force_repair=True, w=greeter.world)
        assert out.status is Status.REPAIR
        expected = C("G F s & (G (s -> g) | !(G F s & G (s -> X g)))", "G F s -> G (s -> X g)")
        assert is_equivalent(out.refinement, expected)
        assert refines(cand.composed, out.refinement)

    def test_repair_precondition(self, route_mission):
        m = route_mission
        spec = C("true", "G F l5")
        lib = ComponentLibrary("One", (Component("P", spec),))
        cand = best_candidate_composition(spec, lib, m.world)
        with pytest.raises(ValueError, match="nothing to repair"):
            repair_procedure(cand, spec, m.world)

    def test_failed_when_nothing_applies(self, greeter):
        c2, lib = greeter.contract("C2"), greeter.library("Lib")
        cand = best_candidate_composition(c2, lib, greeter.world)
        weak = CandidateComposition(cand.selection, cand.composed, 50.0, cand.refinement_score)
        assert refinement_analysis(c2, lib, weak, w=greeter.world).status is Status.FAILED

    def test_candidate_must_come_from_library(self, greeter, route_mission):
        cand = _candidate(route_mission, "C1", "Delta")
        with pytest.raises(ValueError):
            refinement_analysis(greeter.contract("C2"), greeter.library("Lib"), cand)

    def test_conflicting_flags(self, greeter):
        c2, lib = greeter.contract("C2"), greeter.library("Lib")
        cand = best_candidate_composition(c2, lib, greeter.world)
        with pytest.raises(ValueError):
            refinement_analysis(c2, lib, cand, [lib], force_repair=True, force_search=True)

    def test_inconsistent_quotient_fails(self, route_mission):
        m = route_mission
        # the target asks for two mutually exclusive locations at once
        spec = C("true", "l1 & l2")
        comp = Component("P", C("true", "true"))
        cand = CandidateComposition((comp,), comp.contract, 50.0, 0.0)
        out = search_procedure(cand, spec, [m.library("DeltaPrime")], m.world)
        assert out.status is Status.FAILED and "inconsistent" in out.reason


def _script(tmp_path, body):
    path = tmp_path / "synth.py"
    path.write_text(body)
    return f"{sys.executable} {path} {{input}}"


class TestRealizability:
    def test_no_adapter(self, greeter):
        r = check_realizability(greeter.contract("C2"), greeter.world, None)
        assert r.verdict is Verdict.TOOL_ERROR

    def test_unsat_is_unrealizable_without_tool(self):
        r = check_realizability(C("true", "false"), None, ExternalSynthConfig("false {input}"))
        assert r.verdict is Verdict.UNREALIZABLE

    def test_tool_verdicts(self, tmp_path, greeter):
        c = greeter.contract("C2")
        ok = _script(tmp_path, "import sys\nt = open(sys.argv[1]).read()\nassert 'INPUTS: s' in t\nprint('REALIZABLE')\n")
        assert check_realizability(c, greeter.world, ExternalSynthConfig(ok), inputs=["s"]).verdict is Verdict.REALIZABLE
        no = _script(tmp_path, "print('result: UNREALIZABLE')\n")
        assert check_realizability(c, greeter.world, ExternalSynthConfig(no)).verdict is Verdict.UNREALIZABLE

    def test_tool_failures(self, tmp_path, greeter):
        c = greeter.contract("C2")
        garbage = _script(tmp_path, "print('segfault')\n")
        assert check_realizability(c, None, ExternalSynthConfig(garbage)).verdict is Verdict.TOOL_ERROR
        slow = _script(tmp_path, "import time\ntime.sleep(5)\n")
        r = check_realizability(c, None, ExternalSynthConfig(slow, timeout=0.5))
        assert r.verdict is Verdict.TOOL_ERROR and "timeout" in r.output
        assert check_realizability(c, None, ExternalSynthConfig("echo REALIZABLE")).verdict is Verdict.TOOL_ERROR
