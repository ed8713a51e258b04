import pytest

from agc.contracts import Contract, compose_all, is_equivalent, refines
from agc.library import (
    CandidateComposition,
    Component,
    ComponentLibrary,
    MealyError,
    NoCandidateError,
    best_candidate_composition,
    parse_mealy,
    refinement_score,
    similarity_score,
    simulate,
)
from agc.ltl import TRUE, LassoTrace, evaluate_on_lasso, parse
from agc.mission import bundled, load
from agc.patterns import resolve
from agc.sat import formulas_equivalent


def C(a, g):
    return Contract.of(parse(a, resolver=resolve), parse(g, resolver=resolve))


@pytest.fixture(scope="module")
def mission():
    return load(bundled("store"))


@pytest.fixture(scope="module")
def delta(mission):
    return mission.library("Delta")


class TestScores:
    def test_full_similarity(self, mission, delta):
        c1 = mission.contract("C1")
        assert similarity_score(c1, [delta["L1"], delta["L2"]], mission.world) == 100
        assert similarity_score(c1, [], mission.world) == 0
        assert similarity_score(c1, [delta["L2"]], mission.world) == 50

    def test_monotone(self, mission, delta):
        c1 = mission.contract("C1")
        comps = list(delta)
        for i in range(len(comps)):
            assert similarity_score(c1, comps[: i + 1], mission.world) >= similarity_score(c1, comps[:i], mission.world)

    def test_no_types(self, mission):
        with pytest.raises(ValueError):
            similarity_score(Contract(TRUE, TRUE, True), [], mission.world)

    def test_refinement_score(self, delta):
        pool = [c.contract for c in delta]
        target = compose_all([delta["L1"].contract, delta["L2"].contract])
        assert refinement_score(target, pool) == 75
        p = delta["L3"].contract
        assert refinement_score(p, [p]) == 100
        assert refinement_score(C("true", "true"), [delta["L1"].contract]) == 0
        with pytest.raises(ValueError):
            refinement_score(p, [])

    def test_tie_broken_by_refinement_score(self, delta):
        pool = [c.contract for c in delta]
        l1l2 = compose_all([delta["L1"].contract, delta["L2"].contract])
        l4l2 = compose_all([delta["L4"].contract, delta["L2"].contract])
        assert refinement_score(l1l2, pool) > refinement_score(l4l2, pool)


class TestCandidate:
    def test_store_selection(self, mission, delta):
        cand = best_candidate_composition(mission.contract("C1"), delta, mission.world)
        assert isinstance(cand, CandidateComposition)
        assert cand.names == ("L1", "L2")
        assert cand.similarity == 100
        assert formulas_equivalent(cand.composed.guarantees, parse("G F l5 & G F l3"))

    def test_deterministic(self, mission, delta):
        runs = {best_candidate_composition(mission.contract("C1"), delta, mission.world).names for _ in range(3)}
        assert len(runs) == 1

    def test_least_refined(self, mission, delta):
        cand = best_candidate_composition(mission.contract("C1"), delta, mission.world, prefer_least_refined=True)
        assert cand.similarity == 100 and len(cand.names) == 2
        assert cand.refinement_score <= 75

    def test_seeded_random_mode(self, mission, delta):
        a = best_candidate_composition(mission.contract("C1"), delta, mission.world, seed=3)
        b = best_candidate_composition(mission.contract("C1"), delta, mission.world, seed=3)
        assert a.names == b.names
        assert a.refinement_score == 75

    def test_singleton_that_refines(self, mission):
        spec = C("true", "G F l5")
        lib = ComponentLibrary("One", (Component("P", C("true", "G F l5")),))
        cand = best_candidate_composition(spec, lib, mission.world)
        assert cand.names == ("P",) and refines(cand.composed, spec)

    def test_ill_formed_compositions_skipped(self, mission):
        spec = C("true", "G F l1 & G F l2")
        lib = ComponentLibrary(
            "Clash",
            (Component("Both", C("true", "G (l1 & l2)")), Component("One", C("true", "G F l1"))),
        )
        cand = best_candidate_composition(spec, lib, mission.world)
        assert cand.names == ("One",)

    def test_errors(self, mission):
        with pytest.raises(NoCandidateError):
            best_candidate_composition(C("true", "G F l1"), ComponentLibrary("Empty", ()), mission.world)
        bad = ComponentLibrary("Bad", (Component("X", C("true", "l1 & l2")),))
        with pytest.raises(NoCandidateError):
            best_candidate_composition(C("true", "G F l1"), bad, mission.world)

    def test_duplicate_names(self):
        c = C("true", "a")
        with pytest.raises(ValueError):
            ComponentLibrary("Dup", (Component("X", c), Component("X", c)))


DELAY = """
states: idle seen
initial: idle
inputs: s
outputs: g
trans: idle s=0 -> idle g=0
trans: idle s=1 -> seen g=0
trans: seen s=0 -> idle g=1
trans: seen s=1 -> seen g=1
"""

COPY = """
states: q
initial: q
inputs: s
outputs: g
trans: q s=0 -> q -
trans: q s=1 -> q g=1
"""


class TestMealy:
    def test_copy_machine(self):
        m = parse_mealy(COPY)
        out = simulate(m, LassoTrace.of([], [{"s": True}]))
        assert out.loop == (frozenset({"s", "g"}),)

    def test_constant_output(self):
        m = parse_mealy("states: q\ninitial: q\ninputs: s\noutputs: g\ntrans: q s=0 -> q g=1\ntrans: q s=1 -> q g=1\n")
        out = simulate(m, LassoTrace.of([{"s": False}, {"s": True}], [{"s": True}, {"s": False}]))
        assert all(out.holds("g", i) for i in range(8))

    def test_delay_machine(self):
        m = parse_mealy(DELAY)
        out = simulate(m, LassoTrace.of([{"s": True}], [{"s": False}]))
        assert [out.holds("g", i) for i in range(5)] == [False, True, False, False, False]

    def test_delay_satisfies_component_contract(self):
        m = parse_mealy(DELAY)
        spec = parse("G (s -> X g)")
        inputs = [
            LassoTrace.of(p, l)
            for p in ([], [{"s": True}], [{"s": False}, {"s": True}])
            for l in ([{"s": True}], [{"s": False}], [{"s": True}, {"s": False}], [{"s": False}, {"s": False}, {"s": True}])
        ]
        for t in inputs:
            assert evaluate_on_lasso(spec, simulate(m, t))

    def test_loop_closes_on_repeated_state(self):
        m = parse_mealy(DELAY)
        out = simulate(m, LassoTrace.of([], [{"s": True}, {"s": False}]))
        assert len(out.loop) == 2

    @pytest.mark.parametrize(
        "text, message",
        [
            ("states: q\ninitial: q\ninputs: s\ntrans: q s=1 -> q -\n", "missing transition"),
            ("states: q\ninitial: q\ninputs: s\ntrans: q s=1 -> q -\ntrans: q s=1 -> q -\ntrans: q s=0 -> q -\n", "nondeterministic"),
            ("states: q\ninitial: r\n", "initial"),
            ("states: q\ninitial: q\ninputs: s\ntrans: q s=2 -> q -\n", "bad assignment"),
            ("states: q\ninitial: q\nfoo: bar\n", "unknown key"),
            ("states: q\ninitial: q\ntrans: q - -> z -\n", "unknown state"),
        ],
    )
    def test_malformed(self, text, message):
        with pytest.raises(MealyError, match=message):
            parse_mealy(text)
