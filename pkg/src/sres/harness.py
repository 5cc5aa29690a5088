"""Differential checks between the reduction strategies, a brute-force
derivation oracle, and a seeded random program generator.
"""
from __future__ import annotations

import enum
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .engine import (Budget, DerivationStep, DerivationTrace, OutcomeKind, SolveResult, StepMode,
                     Strategy, answer_key, is_tm_normal, solve, sub_step, tm_normalize, tm_step,
                     unif_step)
from .proofs import (DEFAULT_SCHEME, Judgement, NameScheme, beta_normalize, check_judgement,
                     extract_judgements, format_proof, is_first_order, represent)
from .realize import (CertificateKind, check_non_overlapping, check_productivity, measured,
                      measure_positions, query_proof_vars, transform_program, transform_query)
from .subst import EMPTY, Substitution, apply, match, unify, variant
from .syntax import (Atom, Clause, Fun, Goals, Program, Term, Var, atom_vars, canonical_mapping,
                     fresh_instance, is_strict_subterm, print_canonical, rename_atom, rename_term,
                     term_size, term_vars)


class Verdict(enum.Enum):
    HOLDS = "holds"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass
class TheoremReport:
    theorem: str
    program: Program
    query: Goals
    verdict: Verdict
    details: dict = field(default_factory=dict)
    traces: list[DerivationTrace] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "program": str(self.program),
            "query": ", ".join(map(str, self.query)),
            "verdict": self.verdict.value,
            "details": self.details,
            "traces": [t.to_dict() for t in self.traces],
        }


HARNESS_BUDGET = Budget(max_steps=20000, max_tm_steps=200, max_solutions=100000, max_depth=6)


def _atoms_as_terms(atoms: Iterable[Atom]) -> list[Term]:
    return [Fun(a.pred, a.args) for a in atoms]


def goals_variant(a: Goals, b: Goals) -> bool:
    """Ordered goal lists equal up to a bijective variable renaming."""
    return variant(_atoms_as_terms(a), _atoms_as_terms(b))


def _shape(atom: Atom) -> str:
    return str(rename_atom(atom, {v: Var("_") for v in atom_vars(atom)}))


def multiset_variant(a: Goals, b: Goals) -> bool:
    """Goal multisets equal up to a bijective variable renaming."""
    if len(a) != len(b) or Counter(map(_shape, a)) != Counter(map(_shape, b)):
        return False
    a = sorted(a, key=_shape)
    rest = list(b)

    def go(i: int, chosen: list[Atom]) -> bool:
        if i == len(a):
            return goals_variant(tuple(a), tuple(chosen))
        if not goals_variant(tuple(a[:i]), tuple(chosen)):
            return False
        for k, cand in enumerate(rest):
            if cand is None or _shape(cand) != _shape(a[i]):
                continue
            rest[k] = None
            if go(i + 1, chosen + [cand]):
                return True
            rest[k] = cand
        return False

    return go(0, [])


# -- brute-force oracle ------------------------------------------------------------

def _canon(image: tuple[Term, ...], goals: Goals) -> tuple[tuple[Term, ...], Goals]:
    goals = tuple(sorted(goals, key=_shape))
    order: dict[str, None] = {}
    for t in image:
        term_vars(t, order)
    atom_vars(goals, order)
    m = canonical_mapping(order, prefix="_O")
    return tuple(rename_term(t, m) for t in image), tuple(rename_atom(g, m) for g in goals)


def oracle_answers(program: Program, query: Goals, strategy: Strategy | str = Strategy.UNIF,
                   depth: int = 4, max_tm_steps: int = 200,
                   max_states: int = 200000) -> set[tuple]:
    """All success answers reachable within ``depth``, by exhaustive enumeration.

    Every atom of every goal set and every clause is tried, breadth first, with
    no selection rule.  ``depth`` counts the same steps as ``Budget.max_depth``.
    States are identified up to variable renaming and goal order.
    """
    strategy = Strategy(strategy)
    query = tuple(query)
    names = sorted(atom_vars(query))
    start = _canon(tuple(Var(n) for n in names), query)
    seen: dict[tuple, tuple[int, int]] = {}
    frontier = [(start, 0, 0)]
    found: set[tuple] = set()
    while frontier:
        nxt = []
        for (image, goals), d, tm in frontier:
            if len(seen) > max_states:
                raise RuntimeError("oracle state limit exceeded")
            if not goals:
                found.add(answer_key(Substitution(dict(zip(names, image))), names))
                continue
            acc = atom_vars(goals)
            for t in image:
                term_vars(t, acc)
            used = set(acc)
            reducible = [i for i, g in enumerate(goals)
                         if any(match(c.head, g) is not None for c in program.clauses)]
            if strategy is Strategy.UNIF:
                moves = [(i, "unif") for i in range(len(goals))] if d < depth else []
            elif strategy is Strategy.TM:
                moves = [(i, "tm") for i in reducible] if d < depth else []
            elif reducible:
                moves = [(i, "tm") for i in reducible] if tm < max_tm_steps else []
            else:
                moves = [(i, "sub") for i in range(len(goals))] if d < depth else []
            for i, kind in moves:
                for clause in program.clauses:
                    inst = fresh_instance(clause, used, prefix="_F")[0]
                    if kind == "tm":
                        s = match(inst.head, goals[i])
                        if s is None:
                            continue
                        new_goals = goals[:i] + apply(s, inst.body) + goals[i + 1:]
                        new_image = image
                    else:
                        s = unify(inst.head, goals[i])
                        if s is None:
                            continue
                        if kind == "unif":
                            new_goals = apply(s, goals[:i] + inst.body + goals[i + 1:])
                        else:
                            new_goals = apply(s, goals)
                        new_image = apply(s, image)
                    nd = d + (kind != "tm" or strategy is Strategy.TM)
                    ntm = tm + 1 if kind == "tm" else 0
                    state = _canon(new_image, new_goals)
                    best = seen.get(state)
                    if best is not None and best[0] <= nd and best[1] <= ntm:
                        continue
                    seen[state] = (nd, ntm)
                    nxt.append((state, nd, ntm))
        frontier = nxt
    return found


def engine_answers(program: Program, query: Goals, strategy: Strategy | str = Strategy.UNIF,
                   depth: int = 4, max_tm_steps: int = 200) -> set[tuple]:
    budget = Budget(max_steps=10 ** 7, max_tm_steps=max_tm_steps, max_solutions=10 ** 7,
                    max_depth=depth)
    return {a.key() for a in solve(program, query, strategy, budget).successes}


# -- random programs -------------------------------------------------------------

@dataclass(frozen=True)
class GenConfig:
    max_clauses: int = 5
    max_body: int = 2
    max_arity: int = 2
    max_depth: int = 3
    functors: tuple[tuple[str, int], ...] = (("a", 0), ("b", 0), ("f", 1), ("g", 2))
    predicates: tuple[str, ...] = ("p", "q", "r")
    variables: tuple[str, ...] = ("X", "Y", "Z")
    seed: int = 0

    def __post_init__(self):
        if min(self.max_clauses, self.max_arity, self.max_depth) < 1 or self.max_body < 0:
            raise ValueError("generator bounds must be at least 1 (body length at least 0)")
        if not any(n == 0 for _, n in self.functors):
            raise ValueError("need at least one constant")


def _random_term(rng: random.Random, cfg: GenConfig, depth: int, var_bias: float = 0.6) -> Term:
    if depth <= 1 or rng.random() < 0.55:
        if rng.random() < var_bias:
            return Var(rng.choice(cfg.variables))
        return Fun(rng.choice([f for f, n in cfg.functors if n == 0]))
    name, arity = rng.choice([fn for fn in cfg.functors if fn[1] > 0] or list(cfg.functors))
    return Fun(name, tuple(_random_term(rng, cfg, depth - 1, var_bias) for _ in range(arity)))


def _random_atom(rng: random.Random, cfg: GenConfig, pred: str, arity: int,
                 depth: int | None = None, var_bias: float = 0.6) -> Atom:
    return Atom(pred, tuple(_random_term(rng, cfg, depth or cfg.max_depth, var_bias)
                            for _ in range(arity)))


def generate_program(cfg: GenConfig = GenConfig()) -> Program:
    """Random arity-consistent program, a pure function of ``cfg``."""
    rng = random.Random(cfg.seed)
    arity = {p: rng.randint(1, cfg.max_arity) for p in cfg.predicates}
    clauses = []
    for k in range(1, rng.randint(1, cfg.max_clauses) + 1):
        head_pred = rng.choice(cfg.predicates)
        # facts are drawn more often than any single body length, so that a
        # fair share of queries have answers
        size = 0 if rng.random() < 0.4 else rng.randint(1, max(cfg.max_body, 1))
        size = min(size, cfg.max_body)
        body = tuple(_random_atom(rng, cfg, p, arity[p])
                     for p in (rng.choice(cfg.predicates) for _ in range(size)))
        clauses.append(Clause(f"k{k}", _random_atom(rng, cfg, head_pred, arity[head_pred]), body))
    return Program(tuple(clauses))


def generate_query(program: Program, seed: int = 0, cfg: GenConfig = GenConfig()) -> Goals:
    """One atom over a predicate defined by some clause head."""
    rng = random.Random(f"query-{seed}")
    preds = program.predicates()
    heads = sorted({c.head.pred for c in program.clauses})
    pred = rng.choice(heads)
    return (_random_atom(rng, cfg, pred, preds[pred], depth=2, var_bias=0.8),)


@dataclass(frozen=True)
class CorpusItem:
    seed: int
    program: Program
    query: Goals


def corpus(size: int = 200, seed: int = 0, cfg: GenConfig = GenConfig()) -> list[CorpusItem]:
    out = []
    for i in range(size):
        s = seed * 100003 + i
        program = generate_program(GenConfig(**{**cfg.__dict__, "seed": s}))
        out.append(CorpusItem(s, program, generate_query(program, s, cfg)))
    return out


# -- theorem checks ----------------------------------------------------------------

def _success_traces(result: SolveResult) -> list[DerivationTrace]:
    return [a.trace for a in result.successes]


def _budget_cut(*results: SolveResult) -> bool:
    """True if some search stopped for a reason other than the depth bound.

    A search cut only by ``max_depth`` has enumerated every derivation up to
    that length, so comparing two of them decides the bounded statement.
    """
    return not all(r.depth_complete for r in results)


def _verdict(same: bool, any_success: bool, cut: bool, decidable: bool = True) -> Verdict:
    """``cut`` means some search was not exhaustive up to the depth bound."""
    if same:
        if any_success or not cut:
            return Verdict.HOLDS
        return Verdict.INCONCLUSIVE
    return Verdict.REFUTED if decidable else Verdict.INCONCLUSIVE


def check_preservation(program: Program, query: Goals,
                       budget: Budget = HARNESS_BUDGET,
                       scheme: NameScheme = DEFAULT_SCHEME) -> TheoremReport:
    """Unification answers of ``query`` under ``program`` and of the extended
    query under the transformed program agree, derivation for derivation."""
    fp, fq = transform_program(program, scheme), transform_query(query, scheme)
    names = list(atom_vars(query))
    raw = solve(program, query, Strategy.UNIF, budget)
    tr = solve(fp, fq, Strategy.UNIF, budget)
    left = sorted((a.trace.labels, a.key()) for a in raw.successes)
    right = sorted((a.trace.labels, answer_key(a.bindings, names)) for a in tr.successes)
    same = left == right
    cut = _budget_cut(raw, tr)
    verdict = _verdict(same, bool(left or right), cut,
                       decidable=raw.steps_used == tr.steps_used or not cut)
    details = {"answers": len(left), "steps": [raw.steps_used, tr.steps_used],
               "cut": [raw.incomplete, tr.incomplete],
               "vacuous": not (left or right) and raw.incomplete}
    traces = []
    if not same:
        details["only_original"] = [str(x) for x in sorted(set(left) - set(right))]
        details["only_transformed"] = [str(x) for x in sorted(set(right) - set(left))]
        traces = _success_traces(raw)[:1] + _success_traces(tr)[:1]
    return TheoremReport("preservation", program, query, verdict, details, traces)


def fused_shape_error(program: Program, trace: DerivationTrace) -> str | None:
    """Check that a structural trace alternates substitutional steps with one
    term-matching step on the same atom and clause, each ending in normal form."""
    steps = trace.steps
    if len(steps) % 2:
        return "odd number of steps"
    for k in range(0, len(steps), 2):
        s, t = steps[k], steps[k + 1]
        if s.mode is not StepMode.SUB or t.mode is not StepMode.TM:
            return f"steps {k + 1},{k + 2} are not a substitutional/term-matching pair"
        if s.clause_label != t.clause_label or s.selected_index != t.selected_index:
            return f"steps {k + 1},{k + 2} use different clauses or atoms"
        if not is_tm_normal(program, t.goals_after):
            return f"goals after step {k + 2} are not in term-matching normal form"
    return None


def check_equiv_struct_unif(program: Program, query: Goals,
                            budget: Budget = HARNESS_BUDGET, raw: bool = False,
                            scheme: NameScheme = DEFAULT_SCHEME) -> TheoremReport:
    """Unification and structural resolution find the same answers.

    ``program`` is used as given (apply the transformation first for the
    intended use); unless ``raw``, the query is extended with a proof variable.
    """
    q = tuple(query) if raw else transform_query(query, scheme)
    unif = solve(program, q, Strategy.UNIF, budget)
    struct = solve(program, q, Strategy.STRUCT, budget)
    left = {a.key() for a in unif.successes}
    right = {a.key() for a in struct.successes}
    details: dict = {"unif": len(left), "struct": len(right),
                     "struct_outcome": struct.outcome.kind.value}
    shape_errors = []
    if not raw:
        for t in _success_traces(struct):
            why = fused_shape_error(program, t)
            if why:
                shape_errors.append(why)
    same = left == right and not shape_errors
    decidable = not (struct.outcome.kind is OutcomeKind.TM_DIVERGENCE
                     or any(t.outcome.kind is OutcomeKind.TM_DIVERGENCE for t in struct.leaves)
                     or unif.steps_used >= budget.max_steps
                     or struct.steps_used >= budget.max_steps)
    details["vacuous"] = not (left or right) and unif.incomplete
    if raw:
        # goal-set normal forms are reported next to the answers but do not
        # enter the verdict: unification fails at a selected atom, so its
        # dead ends need not coincide with structural normal forms
        stuck = [sorted({print_canonical(tuple(sorted(t.outcome.goals, key=str)), rename=True)
                         for t in r.leaves if t.outcome.kind is OutcomeKind.STUCK})
                 for r in (unif, struct)]
        details["stuck_unif"], details["stuck_struct"] = stuck
        details["normal_forms_agree"] = stuck[0] == stuck[1]
    verdict = _verdict(same, bool(left or right), _budget_cut(unif, struct), decidable)
    traces = []
    if not same:
        details["only_unif"] = [str(k) for k in sorted(left - right)]
        details["only_struct"] = [str(k) for k in sorted(right - left)]
        details["shape_errors"] = shape_errors
        traces = _success_traces(unif)[:1] + (_success_traces(struct) or struct.leaves)[:1]
    return TheoremReport("equiv", program, tuple(query), verdict, details, traces)


def check_record(program: Program, query: Goals, budget: Budget = HARNESS_BUDGET,
                 scheme: NameScheme = DEFAULT_SCHEME) -> TheoremReport:
    """On the transformed program the proof argument of every answer is the
    representation of the proof extracted from its derivation."""
    if len(query) != 1:
        raise ValueError("check_record takes a single-atom query")
    fp, fq = transform_program(program, scheme), transform_query(query, scheme)
    y = query_proof_vars(query, scheme)[0]
    result = solve(fp, fq, Strategy.UNIF, budget)
    bad, witnesses = [], []
    for ans in result.successes:
        state = ans.trace.final_state
        (j,) = extract_judgements(ans.trace)
        proof = beta_normalize(j.proof)
        rep = represent(proof, {}, scheme) if is_first_order(proof) else None
        witnesses.append(f"{format_proof(proof)} ~ {rep}")
        if rep is None or rep != apply(state, Var(y)) or not check_judgement(fp, j):
            bad.append(ans.trace)
    verdict = (Verdict.REFUTED if bad else
               Verdict.HOLDS if result.successes or not _budget_cut(result) else
               Verdict.INCONCLUSIVE)
    return TheoremReport("record", program, tuple(query), verdict,
                         {"successes": len(result.successes), "witnesses": witnesses[:4],
                          "vacuous": not result.successes and result.incomplete},
                         bad[:2])


def check_soundness(program: Program, query: Goals,
                    budget: Budget = HARNESS_BUDGET) -> TheoremReport:
    """Extracted proofs of unification and term-matching successes type-check;
    unification proves the instantiated goals, term matching the goals as given."""
    failures = []
    checked = 0
    for strategy in (Strategy.UNIF, Strategy.TM):
        result = solve(program, query, strategy, budget)
        for ans in result.successes:
            for j, goal in zip(extract_judgements(ans.trace), query):
                checked += 1
                expected = apply(ans.trace.final_state, goal)
                if strategy is Strategy.TM and expected != goal:
                    failures.append(("state changed", ans.trace))
                if j.head != expected or j.body:
                    failures.append(("wrong judgement", ans.trace))
                if not is_first_order(j.proof):
                    failures.append(("proof not first-order", ans.trace))
                r = check_judgement(program, j)
                if not r:
                    failures.append((r.reason, ans.trace))
    verdict = Verdict.REFUTED if failures else Verdict.HOLDS
    return TheoremReport("soundness", program, tuple(query), verdict,
                         {"checked": checked, "failures": [f[0] for f in failures]},
                         [f[1] for f in failures[:2]])


def measure_multiset(goals: Goals, positions) -> Counter:
    return Counter(term_size(t) for t in (measured(a, positions) for a in goals) if t is not None)


def multiset_less(smaller: Counter, bigger: Counter) -> bool:
    """Dershowitz-Manna ordering on multisets of integers."""
    if smaller == bigger:
        return False
    added = smaller - bigger
    removed = bigger - smaller
    return all(any(r > x for r in removed) for x in added)


def tm_step_decreases(before: Goals, step: DerivationStep, positions) -> bool:
    """The replaced atom's measured argument strictly contains every new one,
    and the measure multiset of the goal set decreases."""
    i, m = step.selected_index, len(step.clause_instance.body)
    top = measured(before[i], positions)
    if top is None:
        return False
    for a in step.goals_after[i:i + m]:
        t = measured(a, positions)
        if t is None or not is_strict_subterm(t, top):
            return False
    return multiset_less(measure_multiset(step.goals_after, positions),
                         measure_multiset(before, positions))


def check_measure(program: Program, query: Goals, budget: Budget = HARNESS_BUDGET,
                  scheme: NameScheme = DEFAULT_SCHEME) -> TheoremReport:
    """Term matching on the transformed program always shrinks the proof argument."""
    fp, fq = transform_program(program, scheme), transform_query(query, scheme)
    cert = check_productivity(fp)
    positions = measure_positions(fp)
    traces = []
    result = solve(fp, fq, Strategy.STRUCT, budget)
    traces += [a.trace for a in result.answers] + result.leaves
    for c in fp.clauses:
        traces += [a.trace for a in solve(fp, (c.head,), Strategy.TM, budget).answers]
    bad, count = [], 0
    for t in traces:
        goals = t.initial
        for step in t.steps:
            if step.mode is StepMode.TM:
                count += 1
                if not tm_step_decreases(goals, step, positions):
                    bad.append(t)
                    break
            goals = step.goals_after
    ok = cert.kind is CertificateKind.MEASURE_DECREASING and not bad
    return TheoremReport("measure", program, tuple(query), Verdict.HOLDS if ok else Verdict.REFUTED,
                         {"certificate": cert.kind.value, "tm_steps": count}, bad[:2])


def _all_traces(result: SolveResult) -> list[DerivationTrace]:
    return [a.trace for a in result.answers] + list(result.leaves)


def _steps_with_context(traces: Iterable[DerivationTrace]
                        ) -> Iterator[tuple[Goals, Substitution, DerivationStep]]:
    seen = set()
    for t in traces:
        goals, state = t.initial, EMPTY
        for step in t.steps:
            if id(step) not in seen:
                seen.add(id(step))
                yield goals, state, step
            goals, state = step.goals_after, step.state


def check_decomposition(program: Program, query: Goals, budget: Budget = HARNESS_BUDGET,
                        scheme: NameScheme = DEFAULT_SCHEME) -> TheoremReport:
    """Each unification step equals a substitutional step followed by a
    term-matching step with the same clause; on the transformed program each
    substitutional/term-matching pair of a structural run equals one
    unification step."""
    failures = []
    unif_count = pair_count = 0
    for goals, state, step in _steps_with_context(
            _all_traces(solve(program, query, Strategy.UNIF, budget))):
        unif_count += 1
        r = sub_step(program, goals, state, step.selected_index, step.clause_label)
        ok = False
        if r is not None:
            sub, counter = r
            t = tm_step(program, sub.goals_after, sub.state, step.selected_index,
                        step.clause_label, counter)
            ok = t is not None and goals_variant(t[0].goals_after, step.goals_after)
        if not ok:
            failures.append(f"unif step {step.clause_label} at {step.selected_index}")
    fp, fq = transform_program(program, scheme), transform_query(query, scheme)
    for t in _all_traces(solve(fp, fq, Strategy.STRUCT, budget)):
        goals, state = t.initial, EMPTY
        steps = t.steps
        for k, step in enumerate(steps):
            if step.mode is StepMode.SUB and k + 1 < len(steps):
                nxt = steps[k + 1]
                pair_count += 1
                r = unif_step(fp, goals, state, step.selected_index, step.clause_label)
                if (r is None or nxt.mode is not StepMode.TM
                        or not goals_variant(r[0].goals_after, nxt.goals_after)):
                    failures.append(f"struct pair {step.clause_label} at {step.selected_index}")
            goals, state = step.goals_after, step.state
    verdict = Verdict.REFUTED if failures else Verdict.HOLDS
    return TheoremReport("decomposition", program, tuple(query), verdict,
                         {"unif_steps": unif_count, "struct_pairs": pair_count,
                          "failures": failures[:5]})


def _struct_successors(program: Program, goals: Goals, max_tm: int) -> list[Goals]:
    """Normal forms reachable by a term-matching run optionally followed by one
    substitutional step and another run."""
    base = tm_normalize(program, goals, max_tm)
    if base is None:
        return []
    nf, _, counter = base
    out = [nf]
    for i in range(len(nf)):
        for clause in program.clauses:
            r = sub_step(program, nf, EMPTY, i, clause.label, counter)
            if r is None:
                continue
            again = tm_normalize(program, r[0].goals_after, max_tm, r[1])
            if again is not None:
                out.append(again[0])
    return out


def _simulate_struct(program: Program, trace: DerivationTrace) -> str | None:
    """Rebuild a structural trace as a unification derivation; compare the goal
    lists at every term-matching normal form."""
    unif_goals, state, counter = trace.initial, EMPTY, 10 ** 6
    pending: int | None = None  # index of the atom resolved ahead of its TM step
    struct_goals = trace.initial
    for n, step in enumerate(trace.steps, 1):
        i = step.selected_index
        if step.mode is StepMode.SUB:
            if pending is not None:
                return f"step {n}: substitution before the previous one was resolved"
            if not goals_variant(unif_goals, struct_goals):
                return f"step {n}: goal lists diverged"
            r = unif_step(program, unif_goals, state, i, step.clause_label, counter)
            if r is None:
                return f"step {n}: unification step failed"
            (s, counter), pending = r, i
            unif_goals, state = s.goals_after, s.state
            pending_len = len(s.clause_instance.body)
        elif step.mode is StepMode.TM:
            m = len(step.clause_instance.body)
            if pending is not None and i == pending:
                pending = None
            else:
                if pending is None or i < pending:
                    j = i
                else:
                    j = i - 1 + pending_len
                r = unif_step(program, unif_goals, state, j, step.clause_label, counter)
                if r is None:
                    return f"step {n}: term-matching step has no unification counterpart"
                s, counter = r
                unif_goals, state = s.goals_after, s.state
                if pending is not None and i < pending:
                    pending += m - 1
        struct_goals = step.goals_after
    if pending is None and not goals_variant(unif_goals, struct_goals):
        return "final goal lists differ"
    return None


def check_stepwise(program: Program, query: Goals, budget: Budget = HARNESS_BUDGET,
                   samples: int = 200) -> TheoremReport:
    """Step-by-step correspondence for non-overlapping productive programs.

    Part 1: for a unification step ``G ~> B`` some structural path from ``G``
    and a term-matching run from ``B`` meet.  Part 2: every structural prefix
    ending in a term-matching normal form is reachable by unification steps.
    """
    overlap = check_non_overlapping(program)
    cert = check_productivity(program)
    if not overlap or cert.kind is not CertificateKind.MEASURE_DECREASING:
        return TheoremReport("stepwise", program, tuple(query), Verdict.INCONCLUSIVE,
                             {"precondition": "not non-overlapping" if not overlap
                              else f"productivity {cert.kind.value}"})
    failures = []
    n1 = 0
    unif = solve(program, query, Strategy.UNIF, budget)
    for goals, state, step in _steps_with_context(_all_traces(unif)):
        if n1 >= samples:
            break
        n1 += 1
        target = tm_normalize(program, step.goals_after, budget.max_tm_steps)
        if target is None:
            failures.append("term-matching run did not terminate")
            continue
        if not any(multiset_variant(c, target[0])
                   for c in _struct_successors(program, goals, budget.max_tm_steps)):
            failures.append(f"part 1: unif step {step.clause_label} at {step.selected_index}")
    n2 = 0
    struct = solve(program, query, Strategy.STRUCT, budget)
    for t in _all_traces(struct)[:samples]:
        n2 += 1
        why = _simulate_struct(program, t)
        if why:
            failures.append(f"part 2: {why}")
    verdict = Verdict.REFUTED if failures else Verdict.HOLDS
    return TheoremReport("stepwise", program, tuple(query), verdict,
                         {"part1_steps": n1, "part2_traces": n2, "failures": failures[:5]})


THEOREMS = {
    "equiv": lambda p, q, b: check_equiv_struct_unif(transform_program(p), q, b),
    "preservation": check_preservation,
    "record": check_record,
    "stepwise": lambda p, q, b: check_stepwise(transform_program(p), transform_query(q), b),
    "soundness": check_soundness,
    "measure": check_measure,
    "decomposition": check_decomposition,
}


def run_corpus(theorems: Iterable[str] = ("equiv", "preservation", "record"),
               size: int = 200, seed: int = 0,
               budget: Budget = HARNESS_BUDGET) -> list[TheoremReport]:
    reports = []
    for item in corpus(size, seed):
        for name in theorems:
            reports.append(THEOREMS[name](item.program, item.query, budget))
            reports[-1].details["seed"] = item.seed
    return reports


def summarize(reports: Iterable[TheoremReport]) -> dict[str, Counter]:
    out: dict[str, Counter] = {}
    for r in reports:
        out.setdefault(r.theorem, Counter())[r.verdict.value] += 1
    return out


def format_summary(summary: dict[str, Counter]) -> str:
    lines = [f"{'theorem':<14}{'holds':>8}{'refuted':>9}{'inconcl.':>10}"]
    for name, c in summary.items():
        lines.append(f"{name:<14}{c['holds']:>8}{c['refuted']:>9}{c['inconclusive']:>10}")
    return "\n".join(lines)


# -- unification properties ----------------------------------------------------------

PAIR_SIGNATURE = (("a", 0), ("f", 1), ("g", 2))
PAIR_VARIABLES = ("X", "Y", "Z")


def _ground_terms(depth: int, signature=PAIR_SIGNATURE) -> list[Term]:
    terms = [Fun(n) for n, k in signature if k == 0]
    for _ in range(depth):
        layer = list(terms)
        for name, k in signature:
            if k == 1:
                layer += [Fun(name, (t,)) for t in terms]
            elif k == 2:
                layer += [Fun(name, (s, t)) for s in terms for t in terms]
        terms = list(dict.fromkeys(layer))
    return terms


def random_atom_pair(rng: random.Random, depth: int = 3) -> tuple[Atom, Atom]:
    """Two atoms over a three-symbol signature and at most three variables."""
    cfg = GenConfig(functors=PAIR_SIGNATURE, variables=PAIR_VARIABLES, max_depth=depth)
    arity = rng.randint(1, 2)
    a = _random_atom(rng, cfg, "p", arity, var_bias=0.7)
    if rng.random() < 0.3:
        # an instance of the first atom, so that matching has a chance
        s = {v: _random_term(rng, cfg, 2) for v in atom_vars(a)}
        return a, apply(s, a)
    return a, _random_atom(rng, cfg, "p", arity, var_bias=0.7)


def brute_force_unifiers(a: Atom, b: Atom, candidates: list[Term]) -> Iterator[Substitution]:
    """Every ground substitution over ``candidates`` that unifies ``a`` and ``b``."""
    names = sorted(atom_vars((a, b)))

    def go(i: int, acc: dict[str, Term]) -> Iterator[Substitution]:
        if i == len(names):
            s = Substitution(acc)
            if apply(s, a) == apply(s, b):
                yield s
            return
        for t in candidates:
            acc[names[i]] = t
            yield from go(i + 1, acc)
        del acc[names[i]]

    return go(0, {})


def unification_failures(a: Atom, b: Atom, candidates: list[Term]) -> list[str]:
    """Violations of the unification and matching laws on one atom pair.

    Checks correctness and idempotence of the unifier, agreement with a
    brute-force search over ground substitutions (some ground unifier exists
    iff ``unify`` succeeds, and every one found is an instance of the
    returned unifier), and that a successful match implies a unifier
    agreeing with it.
    """
    from .subst import is_instance

    out = []
    gamma = unify(a, b)
    names = sorted(atom_vars((a, b)))
    if gamma is not None:
        if apply(gamma, a) != apply(gamma, b):
            out.append("unifier does not unify")
        if not gamma.is_idempotent() or apply(gamma, apply(gamma, a)) != apply(gamma, a):
            out.append("unifier is not idempotent")
    general = [apply(gamma, Var(n)) for n in names] if gamma is not None else None
    found = False
    for theta in brute_force_unifiers(a, b, candidates):
        found = True
        if general is None:
            out.append(f"no unifier returned, but {theta} unifies")
            break
        if not is_instance([theta[n] for n in names], general):
            out.append(f"ground unifier {theta} is not an instance of {gamma}")
            break
    if gamma is not None and not found:
        # ground the unifier with the constant; it must be in the candidate set
        ground = {v: Fun(PAIR_SIGNATURE[0][0]) for v in gamma.vars() | set(names)}
        closed = apply(Substitution(ground), apply(gamma, a))
        if all(t in candidates for t in closed.args):
            out.append("unifier found but no ground unifier enumerated")
    # the engine always matches a renamed-apart clause head against a goal
    pattern = rename_atom(a, {v: Var(f"_M{i}") for i, v in enumerate(atom_vars(a))})
    sigma = match(pattern, b)
    if sigma is not None:
        if apply(sigma, pattern) != b:
            out.append("matcher does not match")
        if not set(sigma) <= set(atom_vars(pattern)):
            out.append("matcher binds target variables")
        delta = unify(pattern, b)
        if delta is None:
            out.append("match succeeds but unify fails")
        elif not (apply(delta, pattern) == apply(delta, b) == apply(delta, apply(sigma, pattern))):
            out.append("unifier disagrees with matcher")
    return out


def occurs_check_pair(rng: random.Random) -> tuple[Atom, Atom]:
    """``p(X)`` against a term that strictly contains ``X``."""
    cfg = GenConfig(functors=PAIR_SIGNATURE, variables=PAIR_VARIABLES, max_depth=2)
    name, k = rng.choice([fn for fn in PAIR_SIGNATURE if fn[1]])
    args = [_random_term(rng, cfg, 2) for _ in range(k)]
    args[rng.randrange(k)] = Var("X")
    return Atom("p", (Var("X"),)), Atom("p", (Fun(name, tuple(args)),))


def unification_property_run(n: int = 1000, seed: int = 0, depth: int = 3) -> dict:
    """Check ``n`` seeded random pairs plus ``n`` occurs-check pairs."""
    rng = random.Random(seed)
    # ground terms up to depth 2 (13 terms); pairs with three variables use
    # depth 1 (3 terms) to keep the enumeration small
    small, large = _ground_terms(1), _ground_terms(2)
    failures, unified, matched = [], 0, 0
    for i in range(n):
        a, b = random_atom_pair(rng, depth)
        unified += unify(a, b) is not None
        matched += match(a, b) is not None
        candidates = large if len(atom_vars((a, b))) <= 2 else small
        failures += [f"{a} / {b}: {why}" for why in unification_failures(a, b, candidates)]
        x, t = occurs_check_pair(rng)
        if unify(x, t) is not None or unify(t, x) is not None:
            failures.append(f"{x} / {t}: occurs check not enforced")
    return {"pairs": n, "unified": unified, "matched": matched, "failures": failures}
