"""Proof terms for Horn-formula judgements.

Proof terms are lambda terms over clause constants::

    e ::= k | a | \\a. e | e e'

A successful derivation yields a first-order proof term (constants and
variables under application only); :func:`represent` turns such a term into
an ordinary first-order term so it can be carried as a predicate argument.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from .subst import EMPTY, Substitution, apply, compose, match, unify
from .syntax import Atom, Fun, Program, Term, Var, atom_vars, fresh_instance


class NormalizationBudgetExceeded(RuntimeError):
    """Beta normalization ran out of fuel."""


class RepresentationError(ValueError):
    pass


@dataclass(frozen=True)
class Const:
    label: str


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    body: "ProofTerm"


@dataclass(frozen=True)
class Apply:
    fun: "ProofTerm"
    arg: "ProofTerm"


ProofTerm = Union[Const, PVar, Lam, Apply]


def apply_all(head: ProofTerm, args) -> ProofTerm:
    for a in args:
        head = Apply(head, a)
    return head


def lams(names, body: ProofTerm) -> ProofTerm:
    for n in reversed(list(names)):
        body = Lam(n, body)
    return body


def spine(e: ProofTerm) -> tuple[ProofTerm, list[ProofTerm]]:
    args = []
    while isinstance(e, Apply):
        args.append(e.arg)
        e = e.fun
    return e, args[::-1]


def strip_lams(e: ProofTerm) -> tuple[list[str], ProofTerm]:
    names = []
    while isinstance(e, Lam):
        names.append(e.var)
        e = e.body
    return names, e


# -- printing and parsing ------------------------------------------------------

def format_proof(e: ProofTerm) -> str:
    r"""``(k1 k2) k3`` style: compound operands are parenthesized; ``\b. body``."""
    if isinstance(e, Const):
        return e.label
    if isinstance(e, PVar):
        return e.name
    if isinstance(e, Lam):
        return f"\\{e.var}. {format_proof(e.body)}"

    def operand(x: ProofTerm) -> str:
        s = format_proof(x)
        return f"({s})" if isinstance(x, (Apply, Lam)) else s

    return f"{operand(e.fun)} {operand(e.arg)}"


_PTOK = re.compile(r"\s*(?:(\\)|(\.)|(\()|(\))|([A-Za-z0-9_]+))")


def parse_proof(text: str, variables=()) -> ProofTerm:
    """Parse ``format_proof`` output.

    Names bound by a lambda, or listed in ``variables``, are proof variables;
    every other name is a clause constant.
    """
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _PTOK.match(text, pos)
        if m is None:
            raise ValueError(f"bad proof term at {pos}: {text[pos:]!r}")
        toks.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
    toks.append("")
    i = 0

    def expr(bound: frozenset) -> ProofTerm:
        nonlocal i
        if toks[i] == "\\":
            i += 1
            name = toks[i]
            i += 1
            if toks[i] != ".":
                raise ValueError("expected '.' after lambda binder")
            i += 1
            return Lam(name, expr(bound | {name}))
        head = atom(bound)
        while toks[i] not in ("", ")"):
            if toks[i] == "\\":
                head = Apply(head, expr(bound))
                break
            head = Apply(head, atom(bound))
        return head

    def atom(bound: frozenset) -> ProofTerm:
        nonlocal i
        tok = toks[i]
        i += 1
        if tok == "(":
            e = expr(bound)
            if toks[i] != ")":
                raise ValueError("unbalanced parentheses")
            i += 1
            return e
        if tok in ("", ")", ".", "\\"):
            raise ValueError(f"unexpected {tok or 'end of input'!r}")
        return PVar(tok) if tok in bound else Const(tok)

    e = expr(frozenset(variables))
    if toks[i] != "":
        raise ValueError(f"trailing input {toks[i]!r}")
    return e


# -- beta reduction ------------------------------------------------------------

def free_vars(e: ProofTerm) -> set[str]:
    if isinstance(e, PVar):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Lam):
        return free_vars(e.body) - {e.var}
    return free_vars(e.fun) | free_vars(e.arg)


def _all_names(e: ProofTerm) -> set[str]:
    if isinstance(e, PVar):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Lam):
        return _all_names(e.body) | {e.var}
    return _all_names(e.fun) | _all_names(e.arg)


def _fresh(base: str, avoid: set[str]) -> str:
    for n in itertools.count(1):
        name = f"{base}{n}"
        if name not in avoid:
            return name


def substitute(e: ProofTerm, name: str, value: ProofTerm) -> ProofTerm:
    """Capture-avoiding ``[value/name] e``."""
    if isinstance(e, PVar):
        return value if e.name == name else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Apply):
        return Apply(substitute(e.fun, name, value), substitute(e.arg, name, value))
    if e.var == name or name not in free_vars(e.body):
        return e
    fv = free_vars(value)
    if e.var in fv:
        new = _fresh(e.var.rstrip("0123456789") or "a", fv | _all_names(e.body) | {name})
        return Lam(new, substitute(substitute(e.body, e.var, PVar(new)), name, value))
    return Lam(e.var, substitute(e.body, name, value))


def beta_step(e: ProofTerm) -> ProofTerm | None:
    """One leftmost-outermost beta step, or None when ``e`` is normal."""
    if isinstance(e, Apply):
        if isinstance(e.fun, Lam):
            return substitute(e.fun.body, e.fun.var, e.arg)
        f = beta_step(e.fun)
        if f is not None:
            return Apply(f, e.arg)
        a = beta_step(e.arg)
        return None if a is None else Apply(e.fun, a)
    if isinstance(e, Lam):
        b = beta_step(e.body)
        return None if b is None else Lam(e.var, b)
    return None


def beta_normalize(e: ProofTerm, fuel: int = 100_000) -> ProofTerm:
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    for _ in range(fuel):
        nxt = beta_step(e)
        if nxt is None:
            return e
        e = nxt
    if beta_step(e) is None:
        return e
    raise NormalizationBudgetExceeded(f"no normal form within {fuel} beta steps")


def is_normal(e: ProofTerm) -> bool:
    return beta_step(e) is None


def is_first_order(e: ProofTerm) -> bool:
    if isinstance(e, (Const, PVar)):
        return True
    if isinstance(e, Apply):
        return is_first_order(e.fun) and is_first_order(e.arg)
    return False


# -- representation ------------------------------------------------------------

@dataclass(frozen=True)
class NameScheme:
    """Function symbols standing for clause constants in proof arguments.

    A clause ``k`` with a non-empty body is represented by ``f_k``, a fact by
    the constant ``c_k``.
    """

    fun_prefix: str = "f_"
    const_prefix: str = "c_"
    arg_prefix: str = "U"
    query_prefix: str = "_P"

    def proof_fun(self, label: str, arity: int) -> str:
        return f"{self.fun_prefix if arity else self.const_prefix}{label}"

    def reserved(self, labels) -> set[str]:
        return {p + l for l in labels for p in (self.fun_prefix, self.const_prefix)}


DEFAULT_SCHEME = NameScheme()


def represent(n: ProofTerm, env: Mapping[str, Term] | None = None,
              scheme: NameScheme = DEFAULT_SCHEME) -> Term:
    """First-order term for a first-order normal proof term."""
    env = env or {}
    head, args = spine(n)
    if isinstance(head, PVar):
        if args:
            raise RepresentationError(f"proof variable {head.name} applied to arguments")
        if head.name not in env:
            raise RepresentationError(f"unbound proof variable {head.name}")
        return env[head.name]
    if isinstance(head, Const):
        return Fun(scheme.proof_fun(head.label, len(args)),
                   tuple(represent(a, env, scheme) for a in args))
    raise RepresentationError("not a first-order proof term")


# -- judgements ----------------------------------------------------------------

@dataclass(frozen=True)
class Judgement:
    """``proof : forall xs. body => head`` (all term variables quantified)."""

    proof: ProofTerm
    body: tuple[Atom, ...]
    head: Atom

    def __str__(self) -> str:
        body = ", ".join(map(str, self.body))
        arrow = f"{body} => " if body else "=> "
        return f"{format_proof(self.proof)} : {arrow}{self.head}"


@dataclass
class CheckResult:
    ok: bool
    reason: str = ""
    conclusion: Atom | None = None

    def __bool__(self) -> bool:
        return self.ok


class _CheckFailure(Exception):
    pass


@dataclass
class _Checker:
    program: Program
    premises: dict[str, Atom]
    counter: int = 0
    used: set[str] = field(default_factory=set)

    def conclusion(self, n: ProofTerm) -> Atom:
        head, args = spine(n)
        if isinstance(head, PVar):
            if args:
                raise _CheckFailure(f"premise {head.name} is applied to arguments")
            if head.name not in self.premises:
                raise _CheckFailure(f"unbound proof variable {head.name}")
            return self.premises[head.name]
        if not isinstance(head, Const):
            raise _CheckFailure("proof is not in first-order normal form")
        try:
            clause = self.program[head.label]
        except KeyError:
            raise _CheckFailure(f"unknown clause constant {head.label}") from None
        if len(args) > len(clause.body):
            raise _CheckFailure(f"{head.label} applied to {len(args)} arguments, "
                                f"its body has {len(clause.body)}")
        if len(args) < len(clause.body):
            raise _CheckFailure(f"{head.label} is partially applied")
        clause, self.counter = fresh_instance(clause, self.used, self.counter, prefix="_C")
        theta: Substitution = EMPTY
        for i, (arg, premise) in enumerate(zip(args, clause.body), 1):
            got = self.conclusion(arg)
            gamma = unify(apply(theta, premise), apply(theta, got))
            if gamma is None:
                raise _CheckFailure(f"argument {i} of {head.label} proves {apply(theta, got)}, "
                                    f"expected {apply(theta, premise)}")
            theta = compose(gamma, theta)
        return apply(theta, clause.head)


def _skolemize(atoms) -> tuple[dict[str, Term], list[Atom]]:
    names = atom_vars(atoms)
    sk = {v: Fun(f"$sk_{v}") for v in names}
    return sk, [apply(sk, a) for a in atoms]


def check_judgement(program: Program, j: Judgement, fuel: int = 100_000) -> CheckResult:
    """Decide whether ``j`` is derivable from ``program``.

    The proof is normalized to ``\\a1...ak. n`` with ``n`` first-order; missing
    binders are eta-expanded.  Premises become local axioms over skolem
    constants, the most general conclusion of ``n`` is rebuilt by unifying each
    clause premise with the conclusion of its argument, and the declared head
    must be an instance of it.
    """
    try:
        proof = beta_normalize(j.proof, fuel)
    except NormalizationBudgetExceeded as e:
        return CheckResult(False, str(e))
    binders, n = strip_lams(proof)
    if len(binders) > len(j.body):
        return CheckResult(False, f"{len(binders)} binders for {len(j.body)} premises")
    if len(set(binders)) != len(binders):
        return CheckResult(False, "repeated binder")
    if not is_first_order(n):
        return CheckResult(False, "proof body is not first-order")
    extra = [f"$eta{i}" for i in range(len(binders), len(j.body))]
    n = apply_all(n, [PVar(x) for x in extra])
    sk, atoms = _skolemize((*j.body, j.head))
    premises = dict(zip([*binders, *extra], atoms[:-1]))
    head = atoms[-1]
    checker = _Checker(program, premises)
    try:
        got = checker.conclusion(n)
    except _CheckFailure as e:
        return CheckResult(False, str(e))
    if match(got, head) is None:
        return CheckResult(False, f"proof concludes {got}, which does not generalize {head}",
                           got)
    return CheckResult(True, "", got)


# -- extraction ------------------------------------------------------------------

@dataclass
class _Hole:
    label: str | None = None
    children: list["_Hole"] = field(default_factory=list)
    var: str | None = None

    def term(self) -> ProofTerm:
        if self.label is None:
            return PVar(self.var)
        return apply_all(Const(self.label), [c.term() for c in self.children])

    def open_vars(self) -> Iterator[str]:
        if self.label is None:
            yield self.var
        for c in self.children:
            yield from c.open_vars()


def extract_judgements(trace, fuel: int = 100_000) -> list[Judgement]:
    """One judgement per initial goal, read off a derivation trace.

    Resolving steps (unification or term matching) apply the clause constant
    to one hole per body atom; substitutional steps only instantiate.  Goals
    left over at the end become premises bound by lambdas.  The head is the
    initial goal under the final state, which stays empty for term-matching
    runs.
    """
    from .engine import StepMode, replay_error

    why = replay_error(trace)
    if why is not None:
        raise ValueError(f"malformed trace: {why}")
    roots = [_Hole() for _ in trace.initial]
    holes = list(roots)
    for step in trace.steps:
        if step.mode is StepMode.SUB:
            continue
        hole = holes[step.selected_index]
        hole.label = step.clause_label
        hole.children = [_Hole() for _ in step.clause_instance.body]
        i = step.selected_index
        holes[i:i + 1] = hole.children
    leftover = trace.final_goals
    for k, hole in enumerate(holes, 1):
        hole.var = "b" if len(holes) == 1 else f"b{k}"
    premise_of = {h.var: atom for h, atom in zip(holes, leftover)}
    state = trace.final_state
    out = []
    for root, goal in zip(roots, trace.initial):
        names = list(root.open_vars())
        out.append(Judgement(lams(names, root.term()),
                             tuple(premise_of[n] for n in names),
                             apply(state, goal)))
    return out


def extract_proof(trace) -> list[ProofTerm]:
    """Proof term for each initial goal, in goal order."""
    return [j.proof for j in extract_judgements(trace)]
