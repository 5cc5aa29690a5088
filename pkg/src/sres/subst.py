"""Substitutions, term matching and unification with occurs check."""
from __future__ import annotations

from typing import Iterable, Mapping

from .syntax import Atom, Fun, Term, Var


class Substitution(Mapping[str, Term]):
    """Immutable finite map from variable names to terms.

    Identity bindings ``X -> X`` are dropped on construction.  Substitutions
    built by :func:`unify`, :func:`match` and :func:`compose` over the engine's
    renamed-apart inputs are idempotent.
    """

    __slots__ = ("_map", "_hash")

    def __init__(self, bindings: Mapping[str, Term] | Iterable[tuple[str, Term]] = ()):
        items = bindings.items() if isinstance(bindings, Mapping) else bindings
        self._map = {k: v for k, v in items if v != Var(k)}
        self._hash = None

    def __getitem__(self, name: str) -> Term:
        return self._map[name]

    def __iter__(self):
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Substitution):
            return self._map == other._map
        return NotImplemented

    def __repr__(self) -> str:
        return f"Substitution({self})"

    def __str__(self) -> str:
        return "{" + ", ".join(f"{k}={self._map[k]}" for k in sorted(self._map)) + "}"

    def __call__(self, x):
        return apply(self, x)

    def range_vars(self) -> set[str]:
        out: set[str] = set()
        seen: set[int] = set()
        stack = list(self._map.values())
        while stack:
            t = stack.pop()
            if isinstance(t, Var):
                out.add(t.name)
            elif t.args and id(t) not in seen:
                seen.add(id(t))
                stack.extend(t.args)
        return out

    def vars(self) -> set[str]:
        return set(self._map) | self.range_vars()

    def restrict(self, names: Iterable[str]) -> "Substitution":
        names = set(names)
        return Substitution({k: v for k, v in self._map.items() if k in names})

    def is_idempotent(self) -> bool:
        return not (set(self._map) & self.range_vars())


EMPTY = Substitution()


def apply_term(s: Mapping[str, Term], t: Term, memo: dict[int, Term] | None = None) -> Term:
    """``s`` applied to ``t``.

    Unchanged subterms are returned as the same objects, and ``memo`` (keyed
    by object identity) lets a caller visit each shared subterm once, which
    keeps repeated composition of growing states linear per step.
    """
    if isinstance(t, Var):
        return s.get(t.name, t)
    if not t.args:
        return t
    if memo is None:
        memo = {}
    key = id(t)
    done = memo.get(key)
    if done is not None:
        return done
    args = tuple(apply_term(s, a, memo) for a in t.args)
    out = t if all(x is y for x, y in zip(args, t.args)) else Fun(t.name, args)
    memo[key] = out
    return out


def apply_atom(s: Mapping[str, Term], atom: Atom) -> Atom:
    if not s:
        return atom
    memo: dict[int, Term] = {}
    return Atom(atom.pred, tuple(apply_term(s, a, memo) for a in atom.args))


def apply(s: Mapping[str, Term], x):
    """Apply ``s`` to a term, an atom, or a tuple/list of atoms."""
    if isinstance(x, Atom):
        return apply_atom(s, x)
    if isinstance(x, (Var, Fun)):
        return apply_term(s, x)
    if isinstance(x, (tuple, list)):
        return tuple(apply(s, a) for a in x)
    raise TypeError(f"cannot apply a substitution to {type(x).__name__}")


def compose(outer: Substitution, inner: Substitution) -> Substitution:
    """The substitution that applies ``inner`` first, then ``outer``.

    The result is idempotent whenever both arguments are and no variable of
    ``outer``'s range is bound by ``inner``.
    """
    if not inner:
        return outer
    if not outer:
        return inner
    memo: dict[int, Term] = {}
    out = {k: apply_term(outer, v, memo) for k, v in inner.items()}
    for k, v in outer.items():
        out.setdefault(k, v)
    return Substitution(out)


# -- term matching -----------------------------------------------------------

def _match_term(p: Term, t: Term, acc: dict[str, Term]) -> bool:
    if isinstance(p, Var):
        bound = acc.get(p.name)
        if bound is None:
            acc[p.name] = t
            return True
        return bound == t
    if isinstance(t, Var) or p.name != t.name or len(p.args) != len(t.args):
        return False
    return all(_match_term(a, b, acc) for a, b in zip(p.args, t.args))


def match_terms(pattern: Term, target: Term) -> Substitution | None:
    acc: dict[str, Term] = {}
    return Substitution(acc) if _match_term(pattern, target, acc) else None


def match(pattern: Atom, target: Atom) -> Substitution | None:
    """One-sided unifier: ``sigma`` with ``sigma(pattern) == target``, or None.

    Only pattern variables are bound; a pattern variable met twice must meet
    identical target subterms.
    """
    if pattern.pred != target.pred or len(pattern.args) != len(target.args):
        return None
    acc: dict[str, Term] = {}
    for p, t in zip(pattern.args, target.args):
        if not _match_term(p, t, acc):
            return None
    return Substitution(acc)


# -- unification -------------------------------------------------------------

def occurs(name: str, t: Term) -> bool:
    if isinstance(t, Var):
        return t.name == name
    return any(occurs(name, a) for a in t.args)


def _bind(name: str, t: Term, s: dict[str, Term]) -> bool:
    if occurs(name, t):
        return False
    single = {name: t}
    for k, v in s.items():
        s[k] = apply_term(single, v)
    s[name] = t
    return True


def _unify_terms(a: Term, b: Term, s: dict[str, Term]) -> bool:
    a = apply_term(s, a)
    b = apply_term(s, b)
    if isinstance(a, Var):
        if isinstance(b, Var) and a.name == b.name:
            return True
        return _bind(a.name, b, s)
    if isinstance(b, Var):
        return _bind(b.name, a, s)
    if a.name != b.name or len(a.args) != len(b.args):
        return False
    # left to right, each pair under the substitution accumulated so far
    return all(_unify_terms(x, y, s) for x, y in zip(a.args, b.args))


def unify_terms(a: Term, b: Term) -> Substitution | None:
    s: dict[str, Term] = {}
    return Substitution(s) if _unify_terms(a, b, s) else None


def unify(a: Atom, b: Atom) -> Substitution | None:
    """Most general idempotent unifier of two atoms, or None.

    When both sides are variables the left one is bound, so clause-head
    variables are bound when the head is passed first.
    """
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    s: dict[str, Term] = {}
    for x, y in zip(a.args, b.args):
        if not _unify_terms(x, y, s):
            return None
    return Substitution(s)


def is_renaming(s: Mapping[str, Term]) -> bool:
    values = list(s.values())
    return all(isinstance(v, Var) for v in values) and len(set(values)) == len(values)


def is_instance(specific: Iterable[Term], general: Iterable[Term]) -> bool:
    """True iff some substitution maps every ``general`` term onto ``specific``."""
    acc: dict[str, Term] = {}
    specific, general = list(specific), list(general)
    if len(specific) != len(general):
        return False
    return all(_match_term(g, t, acc) for g, t in zip(general, specific))


def variant(xs: Iterable[Term], ys: Iterable[Term]) -> bool:
    """True iff the sequences are equal up to a bijective variable renaming."""
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys):
        return False
    fwd: dict[str, str] = {}
    bwd: dict[str, str] = {}

    def go(a: Term, b: Term) -> bool:
        if isinstance(a, Var) or isinstance(b, Var):
            if not (isinstance(a, Var) and isinstance(b, Var)):
                return False
            if fwd.setdefault(a.name, b.name) != b.name:
                return False
            return bwd.setdefault(b.name, a.name) == a.name
        if a.name != b.name or len(a.args) != len(b.args):
            return False
        return all(go(x, y) for x, y in zip(a.args, b.args))

    return all(go(a, b) for a, b in zip(xs, ys))
