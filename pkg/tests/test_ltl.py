import warnings

import pytest
from hypothesis import given, settings

from agc.ltl import (
    FALSE,
    TRUE,
    And,
    Atom,
    Eventually,
    FreshAtomWarning,
    Globally,
    Iff,
    Implies,
    LassoTrace,
    Next,
    Not,
    Or,
    ParseError,
    Release,
    Until,
    atoms,
    evaluate_on_lasso,
    nnf,
    parse,
    simplify,
    temporal_depth,
    to_str,
)
from agc.patterns import resolve

from .strategies import formulas, lassos

a, b, c = Atom("a"), Atom("b"), Atom("c")


class TestParser:
    def test_precedence(self):
        assert parse("a | b & c") == Or(a, And(b, c))
        assert parse("a -> b -> c") == Implies(a, Implies(b, c))
        assert parse("a <-> b -> c") == Iff(a, Implies(b, c))
        assert parse("!a U b") == Until(Not(a), b)
        assert parse("a U b U c") == Until(a, Until(b, c))
        assert parse("a & b U c") == And(a, Until(b, c))
        assert parse("a R b | c") == Or(Release(a, b), c)

    def test_fused_unary_operators(self):
        assert parse("GF a") == Globally(Eventually(a))
        assert parse("G F a") == parse("GF a")
        with pytest.raises(ParseError, match="unknown identifier"):
            parse("XXa")
        assert parse("X X a") == Next(Next(a))

    def test_constants(self):
        assert parse("true") is TRUE
        assert parse("!false") == Not(FALSE)

    def test_round_trip_examples(self):
        for text in ["G (F l3)", "a & (b | c)", "(!lb) U lf", "G (s -> (X g))"]:
            assert to_str(parse(text)) == text

    @pytest.mark.parametrize(
        "text, line, col",
        [("a &", 1, 4), ("a & & b", 1, 5), ("(a", 1, 3), ("a $ b", 1, 3), ("a\n  & U", 2, 5)],
    )
    def test_errors_carry_position(self, text, line, col):
        with pytest.raises(ParseError) as exc:
            parse(text)
        assert (exc.value.line, exc.value.column) == (line, col)

    def test_reserved_operator_letters(self):
        with pytest.raises(ParseError, match="reserved"):
            parse("U & a")

    def test_pattern_calls_need_resolver(self):
        with pytest.raises(ParseError):
            parse("Patrolling(a)")
        assert parse("Patrolling(a, b)", resolver=resolve) == And(Globally(Eventually(a)), Globally(Eventually(b)))

    def test_unknown_pattern_is_a_parse_error(self):
        with pytest.raises(ParseError, match="unknown pattern"):
            parse("Wander(a)", resolver=resolve)
        with pytest.raises(ParseError, match="argument"):
            parse("InfOften(a, b)", resolver=resolve)

    def test_fresh_atom_warning(self):
        with pytest.warns(FreshAtomWarning, match="zz"):
            parse("a & zz", known_aps={"a"})
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            parse("a & b", known_aps={"a", "b"})

    @given(formulas())
    def test_print_parse_round_trip(self, f):
        assert parse(to_str(f)) == f


class TestRewriting:
    def test_simplify_rules(self):
        assert simplify(a & TRUE) == a
        assert simplify(a | TRUE) is TRUE
        assert simplify(Not(Not(a))) == a
        assert simplify(a & a) == a
        assert simplify(a | (a & b)) == a
        assert simplify(Or(Globally(a), Not(TRUE))) == Globally(a)

    def test_nnf_eliminates_derived_operators(self):
        f = nnf(parse("!(G F a -> (b <-> X c))"))
        text = to_str(f)
        for op in ("->", "<->", "F", "G"):
            assert op not in text.split()

    @given(formulas(), lassos())
    @settings(max_examples=150)
    def test_nnf_and_simplify_preserve_semantics(self, f, trace):
        v = evaluate_on_lasso(f, trace)
        assert evaluate_on_lasso(nnf(f), trace) == v
        assert evaluate_on_lasso(simplify(f), trace) == v
        assert evaluate_on_lasso(nnf(f, negate=True), trace) == (not v)


class TestLasso:
    def test_basic_evaluation(self):
        t = LassoTrace.of([{"a": True, "b": False}], [{"a": False, "b": True}])
        assert evaluate_on_lasso(a, t)
        assert evaluate_on_lasso(parse("X b"), t)
        assert evaluate_on_lasso(parse("G F b"), t)
        assert not evaluate_on_lasso(parse("G F a"), t)
        assert evaluate_on_lasso(parse("a U b"), t)
        assert evaluate_on_lasso(parse("F G !a"), t)
        assert evaluate_on_lasso(parse("b R !b"), t) is False

    def test_release_without_trigger(self):
        t = LassoTrace.of([], [{"a": False, "b": True}])
        assert evaluate_on_lasso(parse("a R b"), t)

    def test_positions_wrap_into_loop(self):
        t = LassoTrace.of([{"a": True}], [{"a": False}, {"a": True}])
        assert evaluate_on_lasso(a, t, 4)
        assert not evaluate_on_lasso(a, t, 5)

    def test_trace_must_cover_atoms(self):
        t = LassoTrace.of([], [{"a": True}])
        with pytest.raises(KeyError):
            evaluate_on_lasso(parse("a & zz"), t)

    def test_malformed_traces(self):
        with pytest.raises(ValueError):
            LassoTrace.of([{"a": True}], [])
        with pytest.raises(ValueError):
            LassoTrace.of([{"a": True}], [{"b": True}])

    @given(formulas(), lassos())
    @settings(max_examples=150)
    def test_duality_laws(self, f, trace):
        g = Atom("b")
        assert evaluate_on_lasso(Eventually(f), trace) == evaluate_on_lasso(Until(TRUE, f), trace)
        assert evaluate_on_lasso(Globally(f), trace) == evaluate_on_lasso(Release(FALSE, f), trace)
        assert evaluate_on_lasso(Not(Until(f, g)), trace) == evaluate_on_lasso(Release(Not(f), Not(g)), trace)

    def test_metrics(self):
        f = parse("G (a -> X (b U c))")
        assert atoms(f) == {"a", "b", "c"}
        assert temporal_depth(f) == 3
