"""Realizability transformation, non-overlap check and productivity certificates.

The transformation adds one argument to every predicate.  In a clause
``k : B1,...,Bm => A`` the body atom ``Bi`` receives a fresh variable ``yi``
and the head receives ``f_k(y1,...,ym)``, so every derivation carries a
first-order record of its own proof, and term matching always consumes a
strictly smaller proof argument.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .engine import DerivationTrace, Outcome, OutcomeKind, tm_reducible, tm_step
from .proofs import (DEFAULT_SCHEME, Judgement, NameScheme, PVar, apply_all, beta_normalize,
                     format_proof, is_first_order, represent, strip_lams)
from .subst import EMPTY, Substitution, match, unify
from .syntax import (Atom, Clause, Fun, Goals, Program, ProgramError, Term, Var, atom_vars,
                     clause_vars, fresh_instance, is_strict_subterm)


class NameCollision(ProgramError):
    pass


def extend(atom: Atom, t: Term) -> Atom:
    """``A[t]``: ``atom`` with ``t`` appended as a new last argument."""
    return Atom(atom.pred, atom.args + (t,))


def _fresh_names(prefix: str, count: int, avoid: set[str], start: int = 1) -> list[str]:
    out, i = [], start
    while len(out) < count:
        if f"{prefix}{i}" not in avoid:
            out.append(f"{prefix}{i}")
        i += 1
    return out


def check_scheme(program: Program, scheme: NameScheme = DEFAULT_SCHEME) -> None:
    clash = scheme.reserved(program.labels) & set(program.functors())
    if clash:
        raise NameCollision(f"proof functor names already used: {', '.join(sorted(clash))}")


def transform_clause(clause: Clause, scheme: NameScheme = DEFAULT_SCHEME) -> Clause:
    ys = [Var(n) for n in _fresh_names(scheme.arg_prefix, len(clause.body),
                                       set(clause_vars(clause)))]
    proof = Fun(scheme.proof_fun(clause.label, len(ys)), tuple(ys))
    return Clause(clause.label, extend(clause.head, proof),
                  tuple(extend(b, y) for b, y in zip(clause.body, ys)))


def transform_program(program: Program, scheme: NameScheme = DEFAULT_SCHEME) -> Program:
    check_scheme(program, scheme)
    return Program(tuple(transform_clause(c, scheme) for c in program.clauses))


def transform_query(goals: Goals, scheme: NameScheme = DEFAULT_SCHEME) -> Goals:
    """Give every goal a distinct fresh proof variable as its last argument."""
    ys = _fresh_names(scheme.query_prefix, len(goals), set(atom_vars(goals)), start=0)
    return tuple(extend(a, Var(y)) for a, y in zip(goals, ys))


def query_proof_vars(goals: Goals, scheme: NameScheme = DEFAULT_SCHEME) -> list[str]:
    return _fresh_names(scheme.query_prefix, len(goals), set(atom_vars(goals)), start=0)


def transform_judgement(j: Judgement, scheme: NameScheme = DEFAULT_SCHEME) -> Judgement:
    """Index premises with fresh variables and the head with the proof's representation.

    A proof with fewer binders than premises is treated as its eta-expansion,
    so a bare clause constant transforms like its clause.
    """
    proof = j.proof
    binders, n = strip_lams(proof)
    if beta_normalize(proof) != proof:
        raise ValueError("proof term is not beta-normal")
    if not is_first_order(n):
        raise ValueError(f"proof body {format_proof(n)} is not first-order")
    if len(binders) > len(j.body):
        raise ValueError("more binders than premises")
    avoid = set(atom_vars((*j.body, j.head)))
    ys = [Var(y) for y in _fresh_names(scheme.arg_prefix, len(j.body), avoid)]
    extra = [f"$eta{i}" for i in range(len(binders), len(j.body))]
    n = apply_all(n, [PVar(x) for x in extra])
    env = dict(zip([*binders, *extra], ys))
    return Judgement(j.proof, tuple(extend(b, y) for b, y in zip(j.body, ys)),
                     extend(j.head, represent(n, env, scheme)))


def is_transformed(program: Program, scheme: NameScheme = DEFAULT_SCHEME) -> bool:
    """True iff every clause has the shape produced by :func:`transform_clause`."""
    if not program.clauses:
        return False
    for c in program.clauses:
        if not c.head.args or any(not b.args for b in c.body):
            return False
        ys = [b.args[-1] for b in c.body]
        if not all(isinstance(y, Var) for y in ys) or len(set(ys)) != len(ys):
            return False
        if c.head.args[-1] != Fun(scheme.proof_fun(c.label, len(ys)), tuple(ys)):
            return False
    return True


# -- non-overlap -----------------------------------------------------------------

@dataclass(frozen=True)
class OverlapWitness:
    first: str
    second: str
    unifier: Substitution

    def __str__(self) -> str:
        return f"({self.first},{self.second},{self.unifier})"


@dataclass(frozen=True)
class OverlapReport:
    non_overlapping: bool
    witness: OverlapWitness | None = None

    def __bool__(self) -> bool:
        return self.non_overlapping


def check_non_overlapping(program: Program) -> OverlapReport:
    """Whether no two distinct clauses have unifiable (renamed-apart) heads."""
    clauses = program.clauses
    for i, a in enumerate(clauses):
        for b in clauses[i + 1:]:
            b2 = fresh_instance(b, clause_vars(a), prefix="_R")[0]
            gamma = unify(a.head, b2.head)
            if gamma is not None:
                return OverlapReport(False, OverlapWitness(a.label, b.label, gamma))
    return OverlapReport(True)


# -- productivity ----------------------------------------------------------------

class CertificateKind(enum.Enum):
    MEASURE_DECREASING = "measure-decreasing"
    BOUNDED_EVIDENCE = "bounded-evidence"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


@dataclass
class Certificate:
    kind: CertificateKind
    positions: dict[str, int] = field(default_factory=dict)
    witness: DerivationTrace | None = None
    depth: int = 0
    queries: list[Atom] = field(default_factory=list)
    reason: str = ""

    @property
    def productive(self) -> bool:
        return self.kind is CertificateKind.MEASURE_DECREASING

    def report(self) -> dict:
        out = {"kind": self.kind.value, "positions": dict(self.positions)}
        if self.reason:
            out["reason"] = self.reason
        if self.kind in (CertificateKind.BOUNDED_EVIDENCE, CertificateKind.UNKNOWN):
            out["depth"] = self.depth
            out["queries"] = [str(q) for q in self.queries]
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        return out


def measure_positions(program: Program,
                      positions: Mapping[str, int] | None = None) -> dict[str, int]:
    """1-based measured argument per predicate; defaults to the last argument."""
    positions = dict(positions or {})
    out = {}
    for pred, arity in program.predicates().items():
        pos = positions.get(pred, arity)
        if arity and not 1 <= pos <= arity:
            raise ValueError(f"measure position {pos} out of range for {pred}/{arity}")
        out[pred] = pos
    return out


def measured(atom: Atom, positions: Mapping[str, int]) -> Term | None:
    pos = positions.get(atom.pred, len(atom.args))
    return atom.args[pos - 1] if atom.args and pos >= 1 else None


def measure_decreases(clause: Clause, positions: Mapping[str, int]) -> bool:
    top = measured(clause.head, positions)
    for b in clause.body:
        t = measured(b, positions)
        if top is None or t is None or not is_strict_subterm(t, top):
            return False
    return True


def _most_general(pred: str, arity: int) -> Atom:
    return Atom(pred, tuple(Var(f"X{i}") for i in range(1, arity + 1)))


def _self_embedding(program: Program, start: Atom, bound: int
                    ) -> tuple[DerivationTrace | None, bool]:
    """Search for a term-matching path from ``start`` to a descendant atom that
    is an instance of one of its ancestors.

    Reductions of distinct atoms are independent, so only the chain of
    ancestors of one atom is followed.  Returns the witness trace (or None) and
    whether some chain was cut at ``bound`` steps while still reducible.
    """
    cut = False

    def go(goals: Goals, idx: int, line: tuple[Atom, ...], steps: tuple, counter: int):
        nonlocal cut
        atom = goals[idx]
        if len(steps) >= bound:
            cut = cut or tm_reducible(program, atom)
            return None
        line = line + (atom,)
        for clause in program.clauses:
            r = tm_step(program, goals, EMPTY, idx, clause.label, counter)
            if r is None:
                continue
            step, nxt = r
            kids = range(idx, idx + len(step.clause_instance.body))
            if any(match(anc, step.goals_after[k]) is not None for k in kids for anc in line):
                return steps + (step,)
            for k in kids:
                found = go(step.goals_after, k, line, steps + (step,), nxt)
                if found is not None:
                    return found
        return None

    steps = go((start,), 0, (), (), 0)
    if steps is None:
        return None, cut
    return DerivationTrace(program, (start,), steps,
                           Outcome(OutcomeKind.TM_DIVERGENCE, steps[-1].goals_after)), cut


def check_productivity(program: Program, positions: Mapping[str, int] | None = None,
                       bound: int = 8) -> Certificate:
    """Certificate for "every term-matching reduction is finite".

    Sound when the measured argument of every body atom is a strict subterm of
    the head's.  Otherwise term matching is explored from the most general
    atom of each predicate and from each clause head, up to ``bound`` steps; an
    atom whose descendant is an instance of it refutes productivity, since
    term matching is stable under instantiation.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    pos = measure_positions(program, positions)
    if all(measure_decreases(c, pos) for c in program.clauses):
        return Certificate(CertificateKind.MEASURE_DECREASING, pos)
    starts: list[Atom] = [_most_general(p, n) for p, n in program.predicates().items()]
    starts += [c.head for c in program.clauses if c.head not in starts]
    any_cut = False
    for start in starts:
        witness, cut = _self_embedding(program, start, bound)
        if witness is not None:
            return Certificate(CertificateKind.REFUTED, pos, witness, bound, [start],
                               reason=f"{start} reduces to an instance of itself")
        any_cut |= cut
    kind = CertificateKind.UNKNOWN if any_cut else CertificateKind.BOUNDED_EVIDENCE
    return Certificate(kind, pos, None, bound, starts)
