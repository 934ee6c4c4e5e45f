"""Immutable value types for parsed domains and problems.

Terms are plain strings: variables keep their leading ``?`` and anything else
is an object name. All names are lowercase.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Union

ROOT_TYPE = "object"
# (type, parent) in declaration order
BUILTIN_TYPES: tuple[tuple[str, str], ...] = (
    ("agent", ROOT_TYPE),
    ("loc", ROOT_TYPE),
    ("obj", ROOT_TYPE),
    ("utterance", ROOT_TYPE),
    ("room", "loc"),
    ("container", "loc"),
)

TypedVars = tuple[tuple[str, str], ...]


def is_var(term: str) -> bool:
    return term.startswith("?")


class SymbolTable:
    """Interns lowercase identifiers to stable integer ids."""

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._names: list[str] = []
        self._lock = threading.Lock()

    def intern(self, name: str) -> int:
        key = name.lower()
        with self._lock:
            sid = self._ids.get(key)
            if sid is None:
                sid = len(self._names)
                self._ids[key] = sid
                self._names.append(key)
            return sid

    def name(self, sid: int) -> str:
        return self._names[sid]

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._ids

    def __len__(self) -> int:
        return len(self._names)


@dataclass(frozen=True)
class TypeTree:
    parents: dict[str, str]
    order: tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def builtin(cls) -> TypeTree:
        return cls(dict(BUILTIN_TYPES), tuple(t for t, _ in BUILTIN_TYPES))

    def __contains__(self, name: str) -> bool:
        return name == ROOT_TYPE or name in self.parents

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.parents.items())))

    def ancestors(self, name: str) -> list[str]:
        """``name`` followed by each ancestor up to the root."""
        chain = [name]
        while name != ROOT_TYPE:
            name = self.parents[name]
            chain.append(name)
        return chain

    def is_subtype(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def compatible(self, a: str, b: str) -> bool:
        return self.is_subtype(a, b) or self.is_subtype(b, a)

    def declared(self) -> tuple[str, ...]:
        return self.order or tuple(self.parents)


# -- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    predicate: str
    terms: tuple[str, ...]


@dataclass(frozen=True)
class Equality:
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    arg: Formula


@dataclass(frozen=True)
class And:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists:
    variables: TypedVars
    body: Formula


@dataclass(frozen=True)
class Forall:
    variables: TypedVars
    body: Formula


Formula = Union[Atom, Equality, Not, And, Or, Exists, Forall]

TRUE = And(())


# -- effects ----------------------------------------------------------------


@dataclass(frozen=True)
class AddAtom:
    atom: Atom


@dataclass(frozen=True)
class DelAtom:
    atom: Atom


@dataclass(frozen=True)
class ForallWhen:
    """``(forall vars (when condition body))``; either part may be trivial."""

    variables: TypedVars
    condition: Formula
    body: tuple[Effect, ...]


@dataclass(frozen=True)
class Conjunction:
    parts: tuple[Effect, ...]


Effect = Union[AddAtom, DelAtom, ForallWhen, Conjunction]


def free_vars(node: Formula | Effect) -> frozenset[str]:
    match node:
        case Atom(terms=terms):
            return frozenset(t for t in terms if is_var(t))
        case Equality(left=l, right=r):
            return frozenset(t for t in (l, r) if is_var(t))
        case Not(arg=a):
            return free_vars(a)
        case And(args=args) | Or(args=args):
            return frozenset().union(*(free_vars(a) for a in args))
        case Exists(variables=vs, body=b) | Forall(variables=vs, body=b):
            return free_vars(b) - {v for v, _ in vs}
        case AddAtom(atom=a) | DelAtom(atom=a):
            return free_vars(a)
        case ForallWhen(variables=vs, condition=c, body=body):
            inner = free_vars(c).union(*(free_vars(e) for e in body))
            return inner - {v for v, _ in vs}
        case Conjunction(parts=parts):
            return frozenset().union(*(free_vars(e) for e in parts))
    raise TypeError(f"not a formula or effect: {node!r}")


# -- declarations -----------------------------------------------------------


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    parameters: TypedVars

    @property
    def arity(self) -> int:
        return len(self.parameters)

    @property
    def types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.parameters)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: TypedVars
    precondition: Formula
    effect: Effect

    @property
    def arity(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class DomainDef:
    name: str
    types: TypeTree
    predicates: tuple[PredicateDecl, ...]
    actions: tuple[ActionSchema, ...]
    requirements: tuple[str, ...] = field(default=(), compare=False)
    symbols: SymbolTable = field(default_factory=SymbolTable, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_preds", {p.name: p for p in self.predicates})
        object.__setattr__(self, "_acts", {a.name: a for a in self.actions})

    def predicate(self, name: str) -> PredicateDecl | None:
        return self._preds.get(name)  # type: ignore[attr-defined]

    def action(self, name: str) -> ActionSchema | None:
        return self._acts.get(name)  # type: ignore[attr-defined]

    @property
    def action_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions)


@dataclass(frozen=True)
class ProblemDef:
    name: str
    domain_name: str
    objects: dict[str, str]
    init: frozenset[Atom]
    utterance_texts: dict[str, str] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash((self.name, self.domain_name, tuple(self.objects.items()), self.init))


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return "(" + " ".join((self.name, *self.args)) + ")"
