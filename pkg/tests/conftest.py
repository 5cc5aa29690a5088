import pytest

from sres.syntax import parse_program

CONNECT = """\
% reachability over a three-node graph
k1: connect(X,Z) <= connect(X,Y), connect(Y,Z).
k2: connect(node1,node2).
k3: connect(node2,node3).
"""

# transformed by hand: body atoms get U1, U2 and the head records the proof
CONNECT_F = """\
k1: connect(X,Z,f_k1(U1,U2)) <= connect(X,Y,U1), connect(Y,Z,U2).
k2: connect(node1,node2,c_k2).
k3: connect(node2,node3,c_k3).
"""

STREAM = """\
k1: stream(cons(X,Y)) <= stream(Y).
"""

# the body lists bit before blist so that term matching yields {bit(X), blist(Y)}
BLIST = """\
k1: bit(0).
k2: bit(1).
k3: blist(nil).
k4: blist(cons(X,Y)) <= bit(X), blist(Y).
"""

OVERLAP = """\
k1: p(c).
k2: p(X) <= q(X).
"""


@pytest.fixture
def connect():
    return parse_program(CONNECT)


@pytest.fixture
def connect_f():
    return parse_program(CONNECT_F)


@pytest.fixture
def stream():
    return parse_program(STREAM)


@pytest.fixture
def blist():
    return parse_program(BLIST)


@pytest.fixture
def overlap():
    return parse_program(OVERLAP)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
