"""Term-matching, unification and substitutional reduction, and the three
search strategies built from them.

A derivation state is a goal tuple plus an accumulated substitution.  Every
step renames the clause apart with a derivation-local counter, so identical
inputs always give identical traces.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .subst import EMPTY, Substitution, apply, compose, match, unify
from .syntax import (Atom, Clause, Goals, Program, atom_vars, clause_vars, format_goals,
                     fresh_instance)


class StepMode(enum.Enum):
    TM = "tm"
    UNIF = "unif"
    SUB = "sub"


class Strategy(enum.Enum):
    UNIF = "unif"
    TM = "tm"
    STRUCT = "struct"


class OutcomeKind(enum.Enum):
    SUCCESS = "success"
    STUCK = "stuck"
    TM_DIVERGENCE = "tm-divergence"
    SEARCH_BUDGET = "search-budget"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    goals: Goals = ()

    def __str__(self) -> str:
        if self.kind in (OutcomeKind.STUCK, OutcomeKind.TM_DIVERGENCE) and self.goals:
            return f"outcome={self.kind.value} goals={format_goals(self.goals)}"
        return f"outcome={self.kind.value}"

    @property
    def is_budget(self) -> bool:
        return self.kind in (OutcomeKind.TM_DIVERGENCE, OutcomeKind.SEARCH_BUDGET)


@dataclass(frozen=True)
class DerivationStep:
    mode: StepMode
    clause_label: str
    selected_index: int
    local_binding: Substitution
    state: Substitution
    goals_after: Goals
    # the renamed-apart clause copy the step used; replay checks it
    clause_instance: Clause

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "clause": self.clause_label,
            "at": self.selected_index,
            "bind": {k: str(v) for k, v in sorted(self.local_binding.items())},
            "state": {k: str(v) for k, v in sorted(self.state.items())},
            "goals": [str(a) for a in self.goals_after],
            "instance": str(self.clause_instance),
        }


@dataclass(frozen=True)
class DerivationTrace:
    program: Program
    initial: Goals
    steps: tuple[DerivationStep, ...]
    outcome: Outcome

    @property
    def final_goals(self) -> Goals:
        return self.steps[-1].goals_after if self.steps else self.initial

    @property
    def final_state(self) -> Substitution:
        return self.steps[-1].state if self.steps else EMPTY

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.clause_label for s in self.steps)

    def format(self) -> str:
        """Line-oriented text form: one ``step=`` and one ``goals=`` line per step."""
        lines = [f"query={format_goals(self.initial)}"]
        for n, s in enumerate(self.steps, 1):
            lines.append(f"step={n} mode={s.mode.value} clause={s.clause_label} "
                         f"at={s.selected_index} bind={s.local_binding} state={s.state}")
            lines.append(f"goals={format_goals(s.goals_after)}")
        lines.append(str(self.outcome))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "query": [str(a) for a in self.initial],
            "steps": [s.to_dict() for s in self.steps],
            "outcome": self.outcome.kind.value,
            "outcome_goals": [str(a) for a in self.outcome.goals],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class Answer:
    bindings: Substitution
    trace: DerivationTrace

    @property
    def success(self) -> bool:
        return self.trace.outcome.kind is OutcomeKind.SUCCESS

    @property
    def goals(self) -> Goals:
        return self.trace.final_goals

    def key(self) -> tuple:
        return answer_key(self.bindings, atom_vars(self.trace.initial))

    def format(self) -> str:
        if not self.bindings:
            return "true"
        return ", ".join(f"{k} = {self.bindings[k]}" for k in sorted(self.bindings))


def answer_key(bindings: Substitution, query_vars: Iterable[str]) -> tuple:
    """Hashable form of an answer, insensitive to names of unbound variables."""
    from .syntax import Var, canonical_mapping, rename_term, term_vars

    names = sorted(query_vars)
    image = [bindings.get(n, Var(n)) for n in names]
    order: dict[str, None] = {}
    for t in image:
        term_vars(t, order)
    mapping = canonical_mapping(order, prefix="_V")
    return tuple((n, str(rename_term(t, mapping))) for n, t in zip(names, image))


@dataclass(frozen=True)
class Budget:
    """Search limits.

    ``max_steps`` bounds the total number of reduction steps taken by the
    search, ``max_tm_steps`` the length of each term-matching run,
    ``max_solutions`` the number of answers, and ``max_depth`` (optional) the
    number of unification steps (UNIF), substitutional steps (STRUCT) or
    term-matching steps (TM) along one derivation.
    """

    max_steps: int = 10000
    max_tm_steps: int = 1000
    max_solutions: int = 16
    max_depth: int | None = None

    def __post_init__(self):
        for name in ("max_steps", "max_tm_steps", "max_solutions"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")


# -- single steps --------------------------------------------------------------

def _used(goals: Goals, state: Substitution) -> set[str]:
    return set(atom_vars(goals)) | state.vars()


def _instance(program: Program, label: str, goals: Goals, state: Substitution,
              counter: int) -> tuple[Clause, int]:
    return fresh_instance(program[label], _used(goals, state), counter)


def tm_step(program: Program, goals: Goals, state: Substitution, select: int, label: str,
            counter: int = 0) -> tuple[DerivationStep, int] | None:
    inst, counter = _instance(program, label, goals, state, counter)
    sigma = match(inst.head, goals[select])
    if sigma is None:
        return None
    after = goals[:select] + apply(sigma, inst.body) + goals[select + 1:]
    return DerivationStep(StepMode.TM, label, select, sigma, state, after, inst), counter


def unif_step(program: Program, goals: Goals, state: Substitution, select: int, label: str,
              counter: int = 0) -> tuple[DerivationStep, int] | None:
    inst, counter = _instance(program, label, goals, state, counter)
    gamma = unify(inst.head, goals[select])
    if gamma is None:
        return None
    after = apply(gamma, goals[:select] + inst.body + goals[select + 1:])
    return (DerivationStep(StepMode.UNIF, label, select, gamma, compose(gamma, state), after, inst),
            counter)


def sub_step(program: Program, goals: Goals, state: Substitution, select: int, label: str,
             counter: int = 0) -> tuple[DerivationStep, int] | None:
    inst, counter = _instance(program, label, goals, state, counter)
    gamma = unify(inst.head, goals[select])
    if gamma is None:
        return None
    return (DerivationStep(StepMode.SUB, label, select, gamma, compose(gamma, state),
                           apply(gamma, goals), inst),
            counter)


_STEP = {StepMode.TM: tm_step, StepMode.UNIF: unif_step, StepMode.SUB: sub_step}


def step_tm(program: Program, goals: Goals, state: Substitution, select: int,
            label: str) -> Goals | None:
    """One term-matching step on ``goals[select]``; the state is untouched."""
    r = tm_step(program, goals, state, select, label)
    return None if r is None else r[0].goals_after


def step_unif(program: Program, goals: Goals, state: Substitution, select: int,
              label: str) -> tuple[Goals, Substitution] | None:
    r = unif_step(program, goals, state, select, label)
    return None if r is None else (r[0].goals_after, r[0].state)


def step_sub(program: Program, goals: Goals, state: Substitution, select: int,
             label: str) -> tuple[Goals, Substitution] | None:
    r = sub_step(program, goals, state, select, label)
    return None if r is None else (r[0].goals_after, r[0].state)


def tm_reducible(program: Program, atom: Atom) -> bool:
    return any(match(c.head, atom) is not None for c in program.clauses)


def is_tm_normal(program: Program, goals: Goals) -> bool:
    return not any(tm_reducible(program, a) for a in goals)


# -- search ------------------------------------------------------------------

Selection = Callable[[Goals, Callable[[Atom], bool]], int | None]


def leftmost(goals: Goals, ok: Callable[[Atom], bool] = lambda a: True) -> int | None:
    return next((i for i, a in enumerate(goals) if ok(a)), None)


def rightmost(goals: Goals, ok: Callable[[Atom], bool] = lambda a: True) -> int | None:
    return next((i for i in reversed(range(len(goals))) if ok(goals[i])), None)


SELECTIONS: dict[str, Selection] = {"leftmost": leftmost, "rightmost": rightmost}


@dataclass
class SolveResult:
    answers: list[Answer]
    outcome: Outcome
    leaves: list[DerivationTrace] = field(default_factory=list)
    steps_used: int = 0
    # set when some branch was cut by a budget; answers may be incomplete
    incomplete: bool = False
    # set when every cut was a ``max_depth`` cut: the answers are then exactly
    # those reachable within the depth bound
    depth_complete: bool = True

    @property
    def successes(self) -> list[Answer]:
        return [a for a in self.answers if a.success]


@dataclass
class _Node:
    goals: Goals
    state: Substitution
    counter: int
    steps: tuple[DerivationStep, ...]
    depth: int
    tm_run: int


def solve(program: Program, query: Goals, strategy: Strategy | str = Strategy.UNIF,
          budget: Budget = Budget(), selection: str | Selection = "leftmost") -> SolveResult:
    """Depth-first search with chronological backtracking, clauses in program order.

    UNIF reports an answer at every empty goal set.  TM reports every
    term-matching normal form (empty or not).  STRUCT alternates runs to a
    term-matching normal form with at most one substitutional step.
    """
    strategy = Strategy(strategy)
    select = SELECTIONS[selection] if isinstance(selection, str) else selection
    query = tuple(query)
    qvars = list(atom_vars(query))
    answers: list[Answer] = []
    leaves: list[DerivationTrace] = []
    steps_used = 0
    stack = [_Node(query, EMPTY, 0, (), 0, 0)]
    saw_tm_cut = saw_search_cut = saw_depth_cut = truncated = False

    def trace(node: _Node, outcome: Outcome) -> DerivationTrace:
        return DerivationTrace(program, query, node.steps, outcome)

    def expand(node: _Node, mode: StepMode, idx: int, depth_inc: int, tm_inc: bool) -> list[_Node]:
        nonlocal steps_used
        children = []
        counter = node.counter
        for clause in program.clauses:
            r = _STEP[mode](program, node.goals, node.state, idx, clause.label, counter)
            if r is None:
                continue
            step, nxt = r
            children.append(_Node(step.goals_after, step.state, nxt, node.steps + (step,),
                                  node.depth + depth_inc,
                                  node.tm_run + 1 if tm_inc else 0))
        steps_used += len(children)
        return children

    while stack:
        if steps_used >= budget.max_steps or len(answers) >= budget.max_solutions:
            if stack and steps_used >= budget.max_steps:
                saw_search_cut = True
            truncated = bool(stack)
            break
        node = stack.pop()
        children: list[_Node] = []
        if strategy is Strategy.UNIF:
            if not node.goals:
                answers.append(Answer(node.state.restrict(qvars),
                                      trace(node, Outcome(OutcomeKind.SUCCESS))))
                continue
            if budget.max_depth is not None and node.depth >= budget.max_depth:
                saw_depth_cut = True
                continue
            idx = select(node.goals, lambda a: True)
            children = expand(node, StepMode.UNIF, idx, 1, False)
        else:
            idx = select(node.goals, lambda a: tm_reducible(program, a))
            if idx is not None:
                if node.tm_run >= budget.max_tm_steps:
                    saw_tm_cut = True
                    leaves.append(trace(node, Outcome(OutcomeKind.TM_DIVERGENCE, node.goals)))
                    continue
                if (strategy is Strategy.TM and budget.max_depth is not None
                        and node.depth >= budget.max_depth):
                    saw_depth_cut = True
                    continue
                children = expand(node, StepMode.TM, idx, int(strategy is Strategy.TM), True)
            elif not node.goals:
                answers.append(Answer(node.state.restrict(qvars),
                                      trace(node, Outcome(OutcomeKind.SUCCESS))))
                continue
            elif strategy is Strategy.TM:
                stuck = trace(node, Outcome(OutcomeKind.STUCK, node.goals))
                answers.append(Answer(node.state.restrict(qvars), stuck))
                leaves.append(stuck)
                continue
            else:
                if budget.max_depth is not None and node.depth >= budget.max_depth:
                    saw_depth_cut = True
                    continue
                idx = select(node.goals, lambda a: True)
                children = expand(node, StepMode.SUB, idx, 1, False)
        if not children:
            leaves.append(trace(node, Outcome(OutcomeKind.STUCK, node.goals)))
        stack.extend(reversed(children))

    successes = [a for a in answers if a.success]
    if successes:
        outcome = Outcome(OutcomeKind.SUCCESS)
    elif saw_tm_cut:
        first = next(t for t in leaves if t.outcome.kind is OutcomeKind.TM_DIVERGENCE)
        outcome = first.outcome
    elif saw_search_cut or saw_depth_cut:
        outcome = Outcome(OutcomeKind.SEARCH_BUDGET)
    else:
        stuck = [t for t in leaves if t.outcome.kind is OutcomeKind.STUCK]
        outcome = stuck[0].outcome if stuck else Outcome(OutcomeKind.STUCK, query)
    return SolveResult(answers, outcome, leaves, steps_used,
                       saw_tm_cut or saw_search_cut or saw_depth_cut or truncated,
                       not (saw_tm_cut or saw_search_cut or truncated))


def tm_normalize(program: Program, goals: Goals, max_steps: int = 1000,
                 counter: int = 0, selection: Selection = leftmost
                 ) -> tuple[Goals, list[DerivationStep], int] | None:
    """Committed-choice run to a term-matching normal form.

    Uses the first matching clause for the selected reducible atom.  Returns
    None if ``max_steps`` is exceeded.
    """
    steps = []
    while True:
        idx = selection(goals, lambda a: tm_reducible(program, a))
        if idx is None:
            return goals, steps, counter
        if len(steps) >= max_steps:
            return None
        for clause in program.clauses:
            r = tm_step(program, goals, EMPTY, idx, clause.label, counter)
            if r is not None:
                step, counter = r
                steps.append(step)
                goals = step.goals_after
                break


# -- replay ------------------------------------------------------------------

def _clause_variant(a: Clause, b: Clause) -> bool:
    from .subst import variant
    from .syntax import Fun

    def flat(c: Clause):
        return [Fun(x.pred, x.args) for x in (*c.body, c.head)]

    return a.label == b.label and len(a.body) == len(b.body) and variant(flat(a), flat(b))


def _mgu_equivalent(gamma: Substitution, head: Atom, atom: Atom) -> bool:
    from .subst import variant
    from .syntax import Fun, Var

    if apply(gamma, head) != apply(gamma, atom) or not gamma.is_idempotent():
        return False
    mgu = unify(head, atom)
    if mgu is None:
        return False
    names = sorted(atom_vars((head, atom)))
    if not set(gamma) <= set(names):
        return False
    return variant([Fun("t", tuple(gamma.get(n, Var(n)) for n in names))],
                   [Fun("t", tuple(mgu.get(n, Var(n)) for n in names))])


def check_step(program: Program, goals: Goals, state: Substitution,
               step: DerivationStep) -> str | None:
    """Why ``step`` is not a valid reduction from ``(goals, state)``; None if it is."""
    try:
        original = program[step.clause_label]
    except KeyError:
        return f"unknown clause {step.clause_label}"
    if not 0 <= step.selected_index < len(goals):
        return f"selected index {step.selected_index} out of range"
    inst = step.clause_instance
    if not _clause_variant(inst, original):
        return "clause instance is not a renaming of the program clause"
    if set(clause_vars(inst)) & _used(goals, state):
        return "clause instance is not renamed apart"
    i = step.selected_index
    selected = goals[i]
    if step.mode is StepMode.TM:
        sigma = match(inst.head, selected)
        if sigma is None or sigma != step.local_binding:
            return "head does not match the selected atom with the recorded binding"
        if step.state != state:
            return "term-matching step changed the state"
        expected = goals[:i] + apply(sigma, inst.body) + goals[i + 1:]
    else:
        gamma = step.local_binding
        if not _mgu_equivalent(gamma, inst.head, selected):
            return "recorded binding is not a most general unifier"
        if step.state != compose(gamma, state):
            return "state is not the composition of the binding and the prior state"
        if step.mode is StepMode.UNIF:
            expected = apply(gamma, goals[:i] + inst.body + goals[i + 1:])
        else:
            expected = apply(gamma, goals)
    if expected != step.goals_after:
        return "goals after the step do not follow from the rule"
    return None


def replay(trace: DerivationTrace) -> bool:
    """True iff every step re-validates under its rule and the state law."""
    return replay_error(trace) is None


def replay_error(trace: DerivationTrace) -> str | None:
    goals, state = tuple(trace.initial), EMPTY
    for n, step in enumerate(trace.steps, 1):
        why = check_step(trace.program, goals, state, step)
        if why is not None:
            return f"step {n}: {why}"
        goals, state = step.goals_after, step.state
    kind = trace.outcome.kind
    if (kind is OutcomeKind.SUCCESS) != (not goals):
        return "outcome disagrees with the final goal set"
    if kind is OutcomeKind.STUCK and trace.outcome.goals != goals:
        return "stuck outcome does not carry the final goals"
    return None


def with_outcome(trace: DerivationTrace, outcome: Outcome) -> DerivationTrace:
    return replace(trace, outcome=outcome)
