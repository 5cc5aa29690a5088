"""Command-line front end: solve, transform, check, prove and diff.

Exit codes: 0 success, 1 definite failure (no answer, refuted), 2 budget
exhausted or evidence only, 3 parse or usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .engine import SELECTIONS, Budget, Strategy, solve
from .proofs import beta_normalize, check_judgement, extract_judgements, format_proof, \
    is_first_order, represent
from .realize import (CertificateKind, check_non_overlapping, check_productivity, is_transformed,
                      transform_program)
from .syntax import ParseError, Program, ProgramError, parse_program, parse_query

EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


DEFAULT_DEPTH = 8


def _budget(args, strategy: Strategy | None = None) -> Budget:
    depth = args.max_depth
    if depth is None and strategy is not Strategy.TM:
        # unification and structural search are depth-first; without a depth
        # bound a left-recursive clause would absorb the whole step budget.
        # Term-matching runs are bounded by --max-tm-steps instead.
        depth = DEFAULT_DEPTH
    try:
        return Budget(args.max_steps, args.max_tm_steps, args.max_solutions, depth)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load(path: str | None) -> Program:
    if path is None:
        raise UsageError("a program file is required")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    return parse_program(text)


def _query(args, program: Program):
    if not args.query:
        raise UsageError("a query is required")
    return parse_query(args.query, program)


def _write_traces(path: str | None, traces) -> None:
    if not path or not traces:
        return
    if path.endswith(".json"):
        Path(path).write_text(json.dumps([t.to_dict() for t in traces], indent=2) + "\n")
    else:
        Path(path).write_text("\n".join(t.format() for t in traces))


# -- commands ----------------------------------------------------------------------

def cmd_solve(args) -> int:
    program = _load(args.program)
    query = _query(args, program)
    strategy = Strategy(args.mode)
    result = solve(program, query, strategy, _budget(args, strategy), args.selection)
    successes = result.successes
    for n, ans in enumerate(successes):
        print(ans.format() + (" ;" if n + 1 < len(successes) else ""))
    print(result.outcome)
    traces = [a.trace for a in successes]
    if not traces:
        traces = [t for t in result.leaves if t.outcome == result.outcome][:1] or result.leaves[:1]
    _write_traces(args.trace, traces)
    if successes:
        return EXIT_OK
    return EXIT_BUDGET if result.outcome.is_budget else EXIT_FAIL


def cmd_transform(args) -> int:
    program = _load(args.program)
    text = str(transform_program(program))
    if text and not text.endswith("\n"):
        text += "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _positions(spec: str | None) -> dict[str, int]:
    out = {}
    for item in filter(None, (spec or "").split(",")):
        pred, _, pos = item.partition("=")
        if not pos.isdigit():
            raise UsageError(f"bad --positions entry {item!r}; expected pred=N")
        out[pred.strip()] = int(pos)
    return out


def cmd_check(args) -> int:
    program = _load(args.program)
    overlap = check_non_overlapping(program)
    if overlap:
        print("non-overlapping: yes")
    else:
        print(f"non-overlapping: no, witness {overlap.witness}")
    try:
        cert = check_productivity(program, _positions(args.positions), args.bound)
    except ValueError as e:
        raise UsageError(str(e)) from None
    pos = ", ".join(f"{p}={n}" for p, n in sorted(cert.positions.items()))
    print(f"productivity: {cert.kind.value} (positions {pos or 'none'})")
    if cert.reason:
        print(f"  {cert.reason}")
    if cert.witness is not None:
        for line in cert.witness.format().splitlines():
            print(f"  {line}")
    _write_traces(args.trace, [cert.witness] if cert.witness else [])
    if not overlap or cert.kind is CertificateKind.REFUTED:
        return EXIT_FAIL
    if cert.kind is not CertificateKind.MEASURE_DECREASING:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_prove(args) -> int:
    program = _load(args.program)
    query = _query(args, program)
    budget = _budget(args)
    result = solve(program, query, Strategy.UNIF, budget, args.selection)
    if not result.successes:
        print(result.outcome)
        return EXIT_BUDGET if result.outcome.is_budget else EXIT_FAIL
    ans = result.successes[0]
    transformed = is_transformed(program)
    ok = True
    if ans.bindings:
        print(f"answer: {ans.format()}")
    for j in extract_judgements(ans.trace):
        proof = beta_normalize(j.proof)
        print(f"proof: {format_proof(proof)}")
        print(f"judgement: {j}")
        if transformed and is_first_order(proof):
            print(f"representation: {represent(proof, {})}")
        verdict = check_judgement(program, j)
        ok = ok and verdict.ok
        print("check: ok" if verdict else f"check: failed ({verdict.reason})")
    _write_traces(args.trace, [ans.trace])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_diff(args) -> int:
    names = [t.strip() for t in args.theorems.split(",") if t.strip()]
    unknown = [n for n in names if n not in harness.THEOREMS]
    if unknown or not names:
        raise UsageError(f"unknown theorem(s): {', '.join(unknown) or '(none)'}; "
                         f"choose from {', '.join(harness.THEOREMS)}")
    budget = harness.HARNESS_BUDGET if args.harness_budget else _budget(args)
    if args.corpus:
        if args.program:
            raise UsageError("--corpus does not take a program file")
        reports = harness.run_corpus(names, args.size, args.seed, budget)
        print(f"corpus: {args.size} programs, seed {args.seed}")
        print(harness.format_summary(harness.summarize(reports)))
    else:
        program = _load(args.program)
        query = _query(args, program)
        reports = []
        for name in names:
            if args.raw and name == "equiv":
                r = harness.check_equiv_struct_unif(program, query, budget, raw=True)
            elif args.raw and name == "stepwise":
                r = harness.check_stepwise(program, query, budget)
            else:
                r = harness.THEOREMS[name](program, query, budget)
            reports.append(r)
            print(f"{name}: {r.verdict.value}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            for r in reports:
                fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    refuted = any(r.verdict is harness.Verdict.REFUTED for r in reports)
    return EXIT_FAIL if refuted else EXIT_OK


# -- argument parsing --------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("budgets and output")
    g.add_argument("--max-steps", type=int, default=10000,
                   help="reduction steps for the whole search (default: %(default)s)")
    g.add_argument("--max-tm-steps", type=int, default=1000,
                   help="length of one term-matching run (default: %(default)s)")
    g.add_argument("--max-solutions", type=int, default=16,
                   help="answers to report (default: %(default)s)")
    g.add_argument("--max-depth", type=int, default=None,
                   help="unification or substitutional steps per derivation, or "
                        f"term-matching steps in tm mode (default: {DEFAULT_DEPTH}, "
                        "none in tm mode)")
    g.add_argument("--trace", metavar="FILE",
                   help="write derivation traces to FILE (JSON if it ends in .json)")
    g.add_argument("--seed", type=int, default=0,
                   help="corpus seed for diff --corpus (default: %(default)s)")
    g.add_argument("--selection", choices=sorted(SELECTIONS), default="leftmost",
                   help="atom selection rule (default: %(default)s)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="sres", description="Horn-clause resolution by unification, term matching "
                                 "and structural resolution.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("solve", parents=[common], help="answer a query")
    p.add_argument("--mode", choices=[s.value for s in Strategy], default="unif",
                   help="reduction strategy (default: %(default)s)")
    p.add_argument("program")
    p.add_argument("query")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("transform", parents=[common],
                       help="add proof arguments to every predicate")
    p.add_argument("program")
    p.add_argument("-o", "--output", help="write here instead of standard output")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("check", parents=[common],
                       help="non-overlap and productivity certificate")
    p.add_argument("program")
    p.add_argument("--positions", metavar="PRED=N,...",
                   help="1-based measured argument per predicate (default: last)")
    p.add_argument("--bound", type=int, default=8,
                   help="term-matching steps explored when the measure test fails "
                        "(default: %(default)s)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("prove", parents=[common],
                       help="extract and check a proof term for a query")
    p.add_argument("program")
    p.add_argument("query")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("diff", parents=[common], help="differential theorem checks")
    p.add_argument("program", nargs="?")
    p.add_argument("query", nargs="?")
    p.add_argument("--theorems", default="equiv,preservation,record",
                   help=f"comma-separated subset of {','.join(harness.THEOREMS)} "
                        "(default: %(default)s)")
    p.add_argument("--corpus", action="store_true",
                   help="run on the generated corpus instead of a file")
    p.add_argument("--size", type=int, default=200, help="corpus size (default: %(default)s)")
    p.add_argument("--raw", action="store_true",
                   help="compare strategies on the program as given, without transforming it")
    p.add_argument("--report", metavar="FILE", help="write one JSON record per check")
    p.add_argument("--harness-budget", action="store_true",
                   help="use the corpus budget (depth 6) instead of the budget flags")
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 means "budget" here
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
    except ProgramError as e:
        print(f"error: {e}", file=sys.stderr)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
