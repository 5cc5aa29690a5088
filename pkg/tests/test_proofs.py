import pytest
from hypothesis import given, settings, strategies as st

from sres.engine import (Budget, DerivationTrace, Outcome, OutcomeKind, solve, unif_step)
from sres.proofs import (Apply, apply_all, Const, Judgement, Lam, NormalizationBudgetExceeded, PVar,
                         RepresentationError, beta_normalize, check_judgement, extract_judgements,
                         extract_proof, format_proof, is_first_order, is_normal, parse_proof,
                         represent, substitute)
from sres.subst import EMPTY
from sres.syntax import Fun, Var, parse_atom, parse_query


def P(text, variables=()):
    return parse_proof(text, variables)


def J(proof, body, head, variables=()):
    body = tuple(parse_query(body)) if body else ()
    return Judgement(P(proof, variables), body, parse_atom(head))


# -- syntax and beta reduction -----------------------------------------------------

def test_printing():
    assert format_proof(P("(k1 k2) k3")) == "(k1 k2) k3"
    assert format_proof(P("k1 k2 k3")) == "(k1 k2) k3"
    assert format_proof(P("k1 (k2 k3)")) == "k1 (k2 k3)"
    assert format_proof(P(r"\b. (k1 b) k2")) == r"\b. (k1 b) k2"
    assert P(r"\b. b") == Lam("b", PVar("b"))
    assert P("b", variables=["b"]) == PVar("b")


def test_parse_errors():
    for bad in ["(k1", "k1 )", r"\b b", ""]:
        with pytest.raises(ValueError):
            P(bad)


def test_beta_examples():
    assert format_proof(beta_normalize(P(r"(\b. (k1 b) k3) k2"))) == "(k1 k2) k3"
    assert beta_normalize(Const("k")) == Const("k")
    assert beta_normalize(P(r"(\a. a) k")) == Const("k")


def test_beta_is_capture_avoiding():
    # (\a. \b. a) b  must not capture the free b
    e = Apply(P(r"\a. \b. a"), PVar("b"))
    out = beta_normalize(e)
    assert isinstance(out, Lam) and out.var != "b" and out.body == PVar("b")


def test_beta_leftmost_outermost_terminates_where_innermost_would_not():
    omega = P(r"(\x. x x) (\x. x x)")
    assert beta_normalize(Apply(P(r"\y. k"), omega)) == Const("k")


def test_fuel_exhaustion():
    with pytest.raises(NormalizationBudgetExceeded):
        beta_normalize(P(r"(\x. x x) (\x. x x)"), fuel=50)
    with pytest.raises(ValueError):
        beta_normalize(Const("k"), fuel=0)


def test_first_order():
    assert is_first_order(P("(k1 k2) k3"))
    assert not is_first_order(P(r"\a. a"))
    assert is_first_order(PVar("a"))
    assert not is_first_order(P(r"k1 (\a. a)"))
    assert is_normal(P("(k1 k2) k3")) and not is_normal(P(r"(\a. a) k"))


def test_represent_examples():
    assert represent(P("(k1 k2) k3"), {}) == Fun("f_k1", (Fun("c_k2"), Fun("c_k3")))
    assert represent(Const("k2"), {}) == Fun("c_k2")
    assert represent(PVar("a"), {"a": Var("U1")}) == Var("U1")
    with pytest.raises(RepresentationError):
        represent(PVar("a"), {})
    with pytest.raises(RepresentationError):
        represent(P(r"\a. a"), {})


# representable terms: a clause constant applied to representable arguments, or a variable
FO = st.recursive(
    st.one_of(st.sampled_from(["k1", "k2"]).map(Const), st.sampled_from("ab").map(PVar)),
    lambda sub: st.tuples(st.sampled_from(["k1", "k2"]), st.lists(sub, min_size=1, max_size=2))
    .map(lambda x: apply_all(Const(x[0]), x[1])), max_leaves=6)
CLOSED = st.recursive(st.sampled_from(["k1", "k2", "k3"]).map(Const),
                      lambda sub: st.tuples(sub, sub).map(lambda x: Apply(*x)), max_leaves=4)


@settings(max_examples=200, deadline=None)
@given(FO, CLOSED)
def test_representation_commutes_with_substitution(n, m):
    env = {"a": Var("Ua"), "b": Var("Ub")}
    direct = represent(substitute(n, "a", m), env)
    via_env = represent(n, {**env, "a": represent(m, env)})
    assert direct == via_env


# -- judgement checking ------------------------------------------------------------

def test_check_examples(connect):
    assert check_judgement(connect, J("(k1 k2) k3", "", "connect(node1,node3)"))
    r = check_judgement(connect, J("k2", "", "connect(node2,node3)"))
    assert not r and "does not generalize" in r.reason


def test_check_partial_proof_in_body_order(connect):
    # the premise is the second body atom of k1
    j = J(r"\b. (k1 k2) b", "connect(node2,Z)", "connect(node1,Z)")
    assert check_judgement(connect, j)


def test_check_rejects_premises_out_of_body_order(connect):
    # with arguments read in body order this term proves a different formula
    j = J(r"\b. (k1 b) k2", "connect(node2,Z)", "connect(node1,Z)")
    r = check_judgement(connect, j)
    assert not r and "argument 2 of k1" in r.reason


def test_check_diagnostics(connect):
    assert "partially applied" in check_judgement(
        connect, J("k1 k2", "", "connect(node1,node3)")).reason
    assert "body has 0" in check_judgement(connect, J("k2 k3", "", "connect(node1,node2)")).reason
    assert "unknown clause" in check_judgement(connect, J("k9", "", "connect(a,b)")).reason
    assert "premises" in check_judgement(connect, J(r"\a. \b. k2", "", "connect(a,b)")).reason
    assert "unbound" in check_judgement(connect, J("b", "", "connect(a,b)", ["b"])).reason


def test_check_clause_constant_is_eta_expanded(connect):
    j = J("k1", "connect(X,Y), connect(Y,Z)", "connect(X,Z)")
    assert check_judgement(connect, j)
    # the premises are fixed: a more specific head is fine, a more general one is not
    assert not check_judgement(connect, J("k1", "connect(X,Y), connect(W,Z)", "connect(X,Z)"))


def test_check_is_stable_under_renaming_and_instantiation(connect):
    for premise, head in [("connect(node2,W)", "connect(node1,W)"),
                          ("connect(node2,node3)", "connect(node1,node3)")]:
        assert check_judgement(connect, J(r"\c. (k1 k2) c", premise, head))


def test_check_normalizes_first(connect):
    assert check_judgement(connect, J(r"(\b. (k1 b) k3) k2", "", "connect(node1,node3)"))
    r = check_judgement(connect, Judgement(P(r"(\x. x x) (\x. x x)"), (), parse_atom("p")), fuel=20)
    assert not r


# -- extraction --------------------------------------------------------------------

def test_extract_connect_proofs(connect):
    r = solve(connect, parse_query("connect(X,Y)"), "unif", Budget(max_depth=4))
    trace = next(a.trace for a in r.successes if a.trace.labels == ("k1", "k2", "k3"))
    (j,) = extract_judgements(trace)
    assert format_proof(beta_normalize(j.proof)) == "(k1 k2) k3"
    assert str(j.head) == "connect(node1,node3)" and j.body == ()
    assert check_judgement(connect, j)


def test_extract_single_fact(connect):
    r = solve(connect, parse_query("connect(node1,node2)"), "unif", Budget(max_depth=1))
    assert extract_proof(r.successes[0].trace) == [Const("k2")]


def test_extract_partial_derivation(connect):
    goals = parse_query("connect(node1,Z)")
    s1, c = unif_step(connect, goals, EMPTY, 0, "k1")
    s2, _ = unif_step(connect, s1.goals_after, s1.state, 0, "k2", c)
    trace = DerivationTrace(connect, goals, (s1, s2),
                            Outcome(OutcomeKind.STUCK, s2.goals_after))
    (j,) = extract_judgements(trace)
    assert str(j) == r"\b. (k1 k2) b : connect(node2,Z) => connect(node1,Z)"
    assert check_judgement(connect, j)


def test_extract_term_matching_normal_form(blist):
    r = solve(blist, parse_query("blist(cons(X,Y))"), "tm", Budget())
    (j,) = extract_judgements(r.answers[0].trace)
    assert str(j) == r"\b1. \b2. (k4 b1) b2 : bit(X), blist(Y) => blist(cons(X,Y))"
    assert check_judgement(blist, j)


def test_extract_multiple_goals(blist):
    r = solve(blist, parse_query("bit(X), blist(cons(X,nil))"), "unif", Budget(max_depth=4))
    ans = r.successes[0]
    proofs = [format_proof(beta_normalize(p)) for p in extract_proof(ans.trace)]
    assert proofs == ["k1", "(k4 k1) k3"]
    assert all(check_judgement(blist, j) for j in extract_judgements(ans.trace))


def test_extract_rejects_malformed_trace(connect):
    import dataclasses
    r = solve(connect, parse_query("connect(node1,node2)"), "unif", Budget(max_depth=1))
    bad = dataclasses.replace(r.successes[0].trace, outcome=Outcome(OutcomeKind.STUCK))
    with pytest.raises(ValueError, match="malformed"):
        extract_judgements(bad)
