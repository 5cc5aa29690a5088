"""First-order terms, atoms, Horn clauses and programs.

Surface syntax::

    k1: connect(X,Z) <= connect(X,Y), connect(Y,Z).
    k2: connect(node1,node2).   % a fact

Uppercase-initial (or ``_``-initial) identifiers are variables; everything
else is a functor, predicate or constant.  Every clause variable is
implicitly universally quantified.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Union


class ProgramError(ValueError):
    """Raised for ill-formed programs and queries."""


class ParseError(ProgramError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        if line:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Fun:
    """Function application; a constant is a ``Fun`` with no arguments."""

    name: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(map(str, self.args))})"


Term = Union[Var, Fun]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class Clause:
    """``label : forall xs. body => head``."""

    label: str
    head: Atom
    body: tuple[Atom, ...] = ()

    def __str__(self) -> str:
        if not self.body:
            return f"{self.label}: {self.head}."
        return f"{self.label}: {self.head} <= {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class Program:
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self):
        check_program(self)

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def __getitem__(self, label: str) -> Clause:
        for clause in self.clauses:
            if clause.label == label:
                return clause
        raise KeyError(label)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.clauses)

    def predicates(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for clause in self.clauses:
            for atom in (clause.head, *clause.body):
                out.setdefault(atom.pred, len(atom.args))
        return out

    def functors(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for clause in self.clauses:
            for atom in (clause.head, *clause.body):
                for t in atom.args:
                    for sub in subterms(t):
                        if isinstance(sub, Fun):
                            out.setdefault(sub.name, len(sub.args))
        return out

    def __str__(self) -> str:
        return "".join(f"{c}\n" for c in self.clauses)


Goals = tuple[Atom, ...]


# -- traversal helpers -------------------------------------------------------

def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Fun):
        for a in t.args:
            yield from subterms(a)


def term_vars(t: Term, acc: dict[str, None] | None = None) -> dict[str, None]:
    """Variables of ``t`` in first-appearance order (an ordered set)."""
    if acc is None:
        acc = {}
    if isinstance(t, Var):
        acc.setdefault(t.name, None)
    else:
        for a in t.args:
            term_vars(a, acc)
    return acc


def atom_vars(atoms: Atom | Iterable[Atom], acc: dict[str, None] | None = None) -> dict[str, None]:
    if acc is None:
        acc = {}
    if isinstance(atoms, Atom):
        atoms = (atoms,)
    for atom in atoms:
        for t in atom.args:
            term_vars(t, acc)
    return acc


def clause_vars(clause: Clause) -> list[str]:
    # formula reading order: body atoms first, then the head
    return list(atom_vars((*clause.body, clause.head)))


def term_size(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def is_strict_subterm(small: Term, big: Term) -> bool:
    if isinstance(big, Var):
        return False
    return any(small == a or is_strict_subterm(small, a) for a in big.args)


# -- renaming ----------------------------------------------------------------

def fresh_instance(clause: Clause, used: Iterable[str], counter: int = 0,
                   prefix: str = "_G") -> tuple[Clause, int]:
    """Rename ``clause`` apart from ``used`` with counter-based names.

    Returns the renamed clause and the next free counter value.
    """
    used = set(used)
    mapping: dict[str, Term] = {}
    for name in clause_vars(clause):
        while f"{prefix}{counter}" in used:
            counter += 1
        mapping[name] = Var(f"{prefix}{counter}")
        counter += 1
    if not mapping:
        return clause, counter
    return rename_clause(clause, mapping), counter


def rename_apart(clause: Clause, used: Iterable[str]) -> Clause:
    """Alpha-equivalent copy of ``clause`` whose variables avoid ``used``."""
    return fresh_instance(clause, used)[0]


def rename_term(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if not t.args:
        return t
    return Fun(t.name, tuple(rename_term(a, mapping) for a in t.args))


def rename_atom(atom: Atom, mapping: dict[str, Term]) -> Atom:
    return Atom(atom.pred, tuple(rename_term(a, mapping) for a in atom.args))


def rename_clause(clause: Clause, mapping: dict[str, Term]) -> Clause:
    return Clause(clause.label, rename_atom(clause.head, mapping),
                  tuple(rename_atom(b, mapping) for b in clause.body))


def canonical_mapping(names: Iterable[str], prefix: str = "_G") -> dict[str, Term]:
    return {name: Var(f"{prefix}{i}") for i, name in enumerate(names)}


def canonicalize(x):
    """Rename variables of a clause, atom, term or program to ``_G0, _G1, ...``.

    Variables are numbered in first-appearance order; for clauses the body is
    read before the head, and each clause of a program is numbered separately.
    """
    if isinstance(x, Program):
        return Program(tuple(canonicalize(c) for c in x.clauses))
    if isinstance(x, Clause):
        return rename_clause(x, canonical_mapping(clause_vars(x)))
    if isinstance(x, Atom):
        return rename_atom(x, canonical_mapping(atom_vars(x)))
    if isinstance(x, (Var, Fun)):
        return rename_term(x, canonical_mapping(term_vars(x)))
    if isinstance(x, tuple):
        mapping = canonical_mapping(atom_vars(x))
        return tuple(rename_atom(a, mapping) for a in x)
    raise TypeError(f"cannot canonicalize {type(x).__name__}")


# -- printing ----------------------------------------------------------------

def format_goals(goals: Iterable[Atom]) -> str:
    return "{" + ", ".join(map(str, goals)) + "}"


def print_canonical(x, rename: bool = False) -> str:
    """Bit-exact textual form of a term, atom, clause, program or goal tuple.

    With ``rename=True`` variables are first renamed by :func:`canonicalize`.
    """
    if rename:
        x = canonicalize(x)
    if isinstance(x, tuple):
        return ", ".join(map(str, x))
    return str(x)


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<ident>[a-z0-9][A-Za-z0-9_]*)
  | (?P<arrow><=)
  | (?P<punct>[(),.:])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind if kind != "punct" else m.group(), m.group(), line,
                             pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        tok = self.toks[self.i]
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise ParseError(f"expected {kind!r}, found {shown!r}", tok.line, tok.col)
        self.i += 1
        return tok

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "var":
            self.i += 1
            return Var(tok.text)
        name = self.take("ident").text
        return Fun(name, self.arglist())

    def arglist(self) -> tuple[Term, ...]:
        if self.peek().kind != "(":
            return ()
        self.take("(")
        args = [self.term()]
        while self.peek().kind == ",":
            self.take(",")
            args.append(self.term())
        self.take(")")
        return tuple(args)

    def atom(self) -> Atom:
        name = self.take("ident").text
        return Atom(name, self.arglist())

    def clause(self) -> tuple[Clause, _Tok]:
        label = self.take("ident")
        self.take(":")
        head = self.atom()
        body = []
        if self.peek().kind == "arrow":
            self.take("arrow")
            body.append(self.atom())
            while self.peek().kind == ",":
                self.take(",")
                body.append(self.atom())
        self.take(".")
        return Clause(label.text, head, tuple(body)), label

    def goals(self) -> Goals:
        atoms = [self.atom()]
        while self.peek().kind == ",":
            self.take(",")
            atoms.append(self.atom())
        if self.peek().kind == ".":
            self.take(".")
        self.take("eof")
        return tuple(atoms)


class _Signature:
    """Arity bookkeeping for predicates and functors."""

    def __init__(self):
        self.preds: dict[str, int] = {}
        self.funs: dict[str, int] = {}

    def add_atom(self, atom: Atom, where: str = "") -> None:
        self._add(self.preds, "predicate", atom.pred, len(atom.args), where)
        for t in atom.args:
            for sub in subterms(t):
                if isinstance(sub, Fun):
                    self._add(self.funs, "functor", sub.name, len(sub.args), where)

    @staticmethod
    def _add(table, what, name, arity, where):
        known = table.setdefault(name, arity)
        if known != arity:
            raise ProgramError(f"{where}arity clash for {what} {name}: {known} vs {arity}")


def check_program(program: Program) -> None:
    seen: set[str] = set()
    sig = _Signature()
    for clause in program.clauses:
        if clause.label in seen:
            raise ProgramError(f"duplicate clause label {clause.label}")
        seen.add(clause.label)
        for atom in (clause.head, *clause.body):
            sig.add_atom(atom, f"clause {clause.label}: ")


def parse_program(text: str) -> Program:
    p = _Parser(text)
    clauses = []
    labels: set[str] = set()
    sig = _Signature()
    while p.peek().kind != "eof":
        clause, tok = p.clause()
        if clause.label in labels:
            raise ParseError(f"duplicate clause label {clause.label}", tok.line, tok.col)
        labels.add(clause.label)
        for atom in (clause.head, *clause.body):
            try:
                sig.add_atom(atom)
            except ProgramError as e:
                raise ParseError(str(e), tok.line, tok.col) from None
        clauses.append(clause)
    return Program(tuple(clauses))


def parse_query(text: str, program: Program | None = None) -> Goals:
    """Parse a comma-separated list of atoms (an optional final ``.`` is allowed).

    When ``program`` is given, predicates it does not define trigger a
    warning and arity mismatches an error.
    """
    goals = _Parser(text).goals()
    sig = _Signature()
    if program is not None:
        for clause in program.clauses:
            for atom in (clause.head, *clause.body):
                sig.add_atom(atom)
    known = dict(sig.preds)
    for atom in goals:
        try:
            sig.add_atom(atom, "query: ")
        except ProgramError as e:
            raise ParseError(str(e)) from None
        if program is not None and atom.pred not in known:
            warnings.warn(f"unknown predicate {atom.pred}/{len(atom.args)}", stacklevel=2)
    return goals


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.take("eof")
    return t


def parse_atom(text: str) -> Atom:
    p = _Parser(text)
    a = p.atom()
    p.take("eof")
    return a
