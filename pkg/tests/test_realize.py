import pytest

from sres import harness
from sres.engine import Budget, replay, solve
from sres.proofs import Judgement, check_judgement, parse_proof
from sres.realize import (CertificateKind, NameCollision, check_non_overlapping, check_productivity,
                          is_transformed, measure_positions, transform_judgement,
                          transform_program, transform_query)
from sres.syntax import Program, parse_atom, parse_program, parse_query

from conftest import CONNECT_F, OVERLAP


def J(proof, body, head):
    return Judgement(parse_proof(proof), tuple(parse_query(body)) if body else (),
                     parse_atom(head))


def test_transform_connect_program(connect):
    f = transform_program(connect)
    assert f == parse_program(CONNECT_F)
    assert str(f["k1"]) == "k1: connect(X,Z,f_k1(U1,U2)) <= connect(X,Y,U1), connect(Y,Z,U2)."
    assert str(f["k2"]) == "k2: connect(node1,node2,c_k2)."
    assert is_transformed(f) and not is_transformed(connect)


def test_transform_empty_and_loop():
    assert transform_program(Program()) == Program()
    f = transform_program(parse_program("k: p(X) <= p(X)."))
    assert str(f) == "k: p(X,f_k(U1)) <= p(X,U1).\n"


def test_transform_avoids_program_variables():
    f = transform_program(parse_program("k: p(U1) <= p(f(U1))."))
    assert str(f) == "k: p(U1,f_k(U2)) <= p(f(U1),U2).\n"


def test_transform_laws_on_corpus():
    for item in harness.corpus(50):
        p, f = item.program, transform_program(item.program)
        assert f.labels == p.labels
        assert [len(c.body) for c in f] == [len(c.body) for c in p]
        assert {k: v + 1 for k, v in p.predicates().items()} == f.predicates()
        assert check_non_overlapping(f)
        assert check_productivity(f).kind is CertificateKind.MEASURE_DECREASING


def test_name_collision():
    with pytest.raises(NameCollision):
        transform_program(parse_program("k1: p(f_k1(a))."))
    with pytest.raises(NameCollision):
        transform_program(parse_program("k1: p(c_k1)."))


def test_transform_query():
    assert transform_query(parse_query("connect(X,Y)")) == parse_query("connect(X,Y,_P0)")
    assert transform_query(()) == ()
    two = transform_query(parse_query("p(X), p(Y)"))
    assert two[0].args[-1] != two[1].args[-1]


def test_transform_judgement_examples(connect):
    fp = transform_program(connect)
    j = transform_judgement(J(r"\b. (k1 k2) b", "connect(node2,Z)", "connect(node1,Z)"))
    assert str(j) == r"\b. (k1 k2) b : connect(node2,Z,U1) => connect(node1,Z,f_k1(c_k2,U1))"
    assert check_judgement(fp, j)
    j = transform_judgement(J("k2", "", "connect(node1,node2)"))
    assert str(j) == "k2 : => connect(node1,node2,c_k2)"
    j = transform_judgement(J(r"\a. a", "p(X)", "p(X)"))
    assert str(j) == r"\a. a : p(X,U1) => p(X,U1)"


def test_transform_judgement_rejects_non_normal_and_higher_order():
    with pytest.raises(ValueError, match="beta-normal"):
        transform_judgement(J(r"(\a. a) k", "", "p(X)"))
    with pytest.raises(ValueError, match="first-order"):
        transform_judgement(J(r"k (\a. a)", "", "p(X)"))


def test_transformed_judgements_check_against_transformed_program(connect, blist):
    cases = [(connect, r"(k1 k2) k3", "", "connect(node1,node3)"),
             (connect, r"\b. (k1 k2) b", "connect(node2,Z)", "connect(node1,Z)"),
             (connect, "k1", "connect(X,Y), connect(Y,Z)", "connect(X,Z)"),
             (blist, r"\b. (k4 k2) b", "blist(L)", "blist(cons(1,L))")]
    for program, proof, body, head in cases:
        j = J(proof, body, head)
        assert check_judgement(program, j)
        assert check_judgement(transform_program(program), transform_judgement(j))


def test_non_overlap(overlap, connect):
    r = check_non_overlapping(overlap)
    assert not r
    assert str(r.witness) == "(k1,k2,{_R0=c})"
    assert check_non_overlapping(transform_program(connect))
    assert check_non_overlapping(parse_program("k: p(X) <= p(X)."))
    assert not check_non_overlapping(connect)


def test_productivity_certificates(connect, stream):
    cert = check_productivity(connect)
    assert cert.kind is CertificateKind.REFUTED
    assert cert.witness is not None and replay(cert.witness)
    assert cert.witness.labels == ("k1",)
    cert = check_productivity(stream)
    assert cert.kind is CertificateKind.MEASURE_DECREASING and cert.positions == {"stream": 1}
    assert cert.productive
    assert check_productivity(transform_program(connect)).kind is \
        CertificateKind.MEASURE_DECREASING


def test_productivity_bounded_evidence_and_unknown(overlap):
    cert = check_productivity(overlap)
    assert cert.kind is CertificateKind.BOUNDED_EVIDENCE and not cert.productive
    assert cert.report()["depth"] == 8
    # terminating but not structurally decreasing, and deeper than the bound
    chain = parse_program("k1: p(s(X)) <= p(X).\nk2: q(X) <= p(s(s(s(X)))).")
    assert check_productivity(chain, {"q": 1}).kind is CertificateKind.BOUNDED_EVIDENCE
    assert check_productivity(chain, {"q": 1}, bound=2).kind is CertificateKind.UNKNOWN


def test_productivity_finds_deeper_loops():
    p = parse_program("k1: p(X) <= q(X).\nk2: q(X) <= r(f(X)).\nk3: r(Y) <= p(Y).")
    cert = check_productivity(p)
    assert cert.kind is CertificateKind.REFUTED
    assert replay(cert.witness) and len(cert.witness.steps) == 3


def test_measure_positions():
    p = parse_program("k: p(X,s(Y)) <= p(X,Y).")
    assert measure_positions(p) == {"p": 2}
    assert check_productivity(p).kind is CertificateKind.MEASURE_DECREASING
    assert check_productivity(p, {"p": 1}).kind is not CertificateKind.MEASURE_DECREASING
    with pytest.raises(ValueError):
        measure_positions(p, {"p": 3})
    with pytest.raises(ValueError):
        check_productivity(p, bound=0)


def test_certificate_report_is_serializable(connect):
    import json
    json.dumps(check_productivity(connect).report())
    json.dumps(check_productivity(transform_program(connect)).report())


def test_proof_argument_records_connect_proofs(connect):
    fp, fq = transform_program(connect), transform_query(parse_query("connect(X,Y)"))
    r = solve(fp, fq, "unif", Budget(max_depth=4))
    assert sorted(a.format() for a in r.successes) == [
        "X = node1, Y = node2, _P0 = c_k2",
        "X = node1, Y = node3, _P0 = f_k1(c_k2,c_k3)",
        "X = node2, Y = node3, _P0 = c_k3"]
