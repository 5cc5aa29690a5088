import warnings

import pytest
from hypothesis import given, settings, strategies as st

from sres.syntax import (Atom, Clause, Fun, ParseError, Program, ProgramError, Var, canonicalize,
                         clause_vars, parse_atom, parse_program, parse_query, parse_term,
                         print_canonical, rename_apart, rename_clause)

from conftest import CONNECT


def test_fact_clause():
    p = parse_program("k2: connect(node1,node2).")
    (c,) = p.clauses
    assert c == Clause("k2", Atom("connect", (Fun("node1"), Fun("node2"))))
    assert c.body == ()


def test_empty_text_is_empty_program():
    assert parse_program("") == Program()
    assert parse_program("% only a comment\n\n") == Program()


def test_arity_clash_is_reported_with_position():
    with pytest.raises(ParseError) as e:
        parse_program("k1: p(X) <= p(X,Y).")
    assert "arity clash" in str(e.value)
    assert e.value.line == 1


def test_duplicate_label():
    with pytest.raises(ParseError, match="duplicate"):
        parse_program("k1: p(a).\nk1: p(b).")


def test_syntax_error_has_line_and_column():
    with pytest.raises(ParseError) as e:
        parse_program("k1: p(a).\nk2: p(b) <= .")
    assert (e.value.line, e.value.column) == (2, 13)


def test_functor_arity_clash():
    with pytest.raises(ProgramError):
        parse_program("k1: p(f(a)).\nk2: p(f(a,b)).")


def test_program_constructor_validates():
    with pytest.raises(ProgramError):
        Program((Clause("k", Atom("p", (Var("X"),))), Clause("k", Atom("p", (Var("Y"),)))))


def test_queries():
    assert parse_query("connect(X,Y)") == (Atom("connect", (Var("X"), Var("Y"))),)
    assert [a.pred for a in parse_query("bit(X), blist(Y)")] == ["bit", "blist"]
    assert parse_query("p(a).") == (Atom("p", (Fun("a"),)),)
    with pytest.raises(ParseError):
        parse_query("connect(X,)")


def test_unknown_predicate_warns_but_parses():
    program = parse_program(CONNECT)
    with pytest.warns(UserWarning, match="unknown predicate"):
        goals = parse_query("reach(X)", program)
    assert goals[0].pred == "reach"
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_query("connect(X,Y)", program)


def test_query_arity_must_match_program():
    with pytest.raises(ParseError):
        parse_query("connect(X)", parse_program(CONNECT))


def test_numeric_constants_and_nesting():
    t = parse_term("cons(0,cons(1,nil))")
    assert print_canonical(t) == "cons(0,cons(1,nil))"
    assert print_canonical(Var("X")) == "X"


def test_clause_printing_is_exact():
    p = parse_program(CONNECT)
    assert str(p) == ("k1: connect(X,Z) <= connect(X,Y), connect(Y,Z).\n"
                      "k2: connect(node1,node2).\n"
                      "k3: connect(node2,node3).\n")


def test_round_trip_connect():
    p = parse_program(CONNECT)
    assert parse_program(print_canonical(p)) == p
    assert parse_program(print_canonical(p, rename=True)) == canonicalize(p)


def test_rename_apart_example():
    k1 = parse_program(CONNECT)["k1"]
    r = rename_apart(k1, {"X", "Y"})
    # body variables are numbered first, in reading order
    assert str(r) == "k1: connect(_G0,_G2) <= connect(_G0,_G1), connect(_G1,_G2)."


def test_rename_apart_ground_and_reuse():
    fact = parse_program("k: p(a,f(b)).")["k"]
    assert rename_apart(fact, {"X"}) == fact
    k1 = parse_program(CONNECT)["k1"]
    first = rename_apart(k1, set())
    second = rename_apart(k1, set(clause_vars(first)))
    assert not set(clause_vars(first)) & set(clause_vars(second))


def test_rename_apart_skips_used_names():
    k1 = parse_program(CONNECT)["k1"]
    r = rename_apart(k1, {"_G0", "_G2"})
    assert set(clause_vars(r)) == {"_G1", "_G3", "_G4"}


# -- round trip over random programs -------------------------------------------------

NAMES = st.sampled_from(["a", "b", "f", "g", "0", "nil"])
VARS = st.sampled_from(["X", "Y", "Z", "_W", "Acc"])


def _terms(depth):
    leaf = st.one_of(VARS.map(Var), NAMES.map(lambda n: Fun(n + "0")))
    if depth == 0:
        return leaf
    sub = _terms(depth - 1)
    return st.one_of(leaf, st.lists(sub, min_size=1, max_size=2).map(
        lambda xs: Fun(("h" if len(xs) == 1 else "k") + "x", tuple(xs))))


@st.composite
def programs(draw):
    arity = {p: draw(st.integers(0, 2)) for p in ("p", "q")}
    clauses = []
    for i in range(draw(st.integers(0, 4))):
        def atom(pred):
            return Atom(pred, tuple(draw(_terms(2)) for _ in range(arity[pred])))
        body = tuple(atom(draw(st.sampled_from("pq"))) for _ in range(draw(st.integers(0, 2))))
        clauses.append(Clause(f"c{i}", atom(draw(st.sampled_from("pq"))), body))
    return Program(tuple(clauses))


@settings(max_examples=200, deadline=None)
@given(programs())
def test_print_parse_round_trip(p):
    text = print_canonical(p)
    assert parse_program(text) == p
    assert parse_program(print_canonical(parse_program(text))) == p


@settings(max_examples=200, deadline=None)
@given(programs(), st.sets(VARS))
def test_rename_apart_is_alpha_equivalent(p, used):
    for c in p.clauses:
        r = rename_apart(c, used)
        assert not set(clause_vars(r)) & used
        mapping = dict(zip(clause_vars(c), (Var(v) for v in clause_vars(r))))
        assert rename_clause(c, mapping) == r


def test_parse_atom_without_arguments():
    assert parse_atom("done") == Atom("done")
    assert str(parse_program("k: done <= ready.")) == "k: done <= ready.\n"
