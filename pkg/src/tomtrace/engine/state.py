"""Grounded evaluation of formulas and effects over closed-world states."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from itertools import product

from ..pddl.model import (
    ROOT_TYPE,
    AddAtom,
    And,
    Atom,
    Conjunction,
    DelAtom,
    DomainDef,
    Effect,
    Equality,
    Exists,
    Forall,
    ForallWhen,
    Formula,
    GroundAction,
    Not,
    Or,
    ProblemDef,
    TypedVars,
)
from ..pddl.printer import format_formula

# A state is the set of ground atoms that hold; everything else is false.
WorldState = frozenset[Atom]
Binding = Mapping[str, str]


class UnknownActionError(KeyError):
    pass


class ActionTypeError(ValueError):
    """A candidate action whose arguments do not fit the schema."""


class UnboundVariableError(LookupError):
    pass


class World:
    """A domain paired with the objects declared by one problem."""

    def __init__(self, domain: DomainDef, problem: ProblemDef):
        self.domain = domain
        self.problem = problem
        self._by_type: dict[str, tuple[str, ...]] = {}

    def objects_of(self, type_name: str) -> tuple[str, ...]:
        cached = self._by_type.get(type_name)
        if cached is None:
            if type_name not in self.domain.types:
                raise KeyError(f"unknown type {type_name}")
            is_sub = self.domain.types.is_subtype
            cached = tuple(
                name for name, typ in self.problem.objects.items() if is_sub(typ, type_name)
            )
            self._by_type[type_name] = cached
        return cached

    def type_of(self, name: str) -> str | None:
        return self.problem.objects.get(name)

    def initial_state(self) -> WorldState:
        return self.problem.init


def enumerate_objects(problem: ProblemDef, type_name: str, domain: DomainDef) -> list[str]:
    return list(World(domain, problem).objects_of(type_name))


def assignments(variables: TypedVars, binding: Binding, world: World) -> Iterator[dict[str, str]]:
    """Every extension of ``binding`` over the quantified variables."""
    names = [v for v, _ in variables]
    pools = [world.objects_of(t) for _, t in variables]
    for combo in product(*pools):
        inner = dict(binding)
        inner.update(zip(names, combo))
        yield inner


def _resolve(term: str, binding: Binding) -> str:
    if term[0] != "?":
        return term
    try:
        return binding[term]
    except KeyError:
        raise UnboundVariableError(f"unbound variable {term}") from None


def ground_atom(atom: Atom, binding: Binding) -> Atom:
    return Atom(atom.predicate, tuple(_resolve(t, binding) for t in atom.terms))


def eval_formula(state: WorldState, formula: Formula, binding: Binding, world: World) -> bool:
    if isinstance(formula, Atom):
        return ground_atom(formula, binding) in state
    if isinstance(formula, Not):
        return not eval_formula(state, formula.arg, binding, world)
    if isinstance(formula, And):
        return all(eval_formula(state, f, binding, world) for f in formula.args)
    if isinstance(formula, Or):
        return any(eval_formula(state, f, binding, world) for f in formula.args)
    if isinstance(formula, Equality):
        return _resolve(formula.left, binding) == _resolve(formula.right, binding)
    if isinstance(formula, Exists):
        return any(
            eval_formula(state, formula.body, b, world)
            for b in assignments(formula.variables, binding, world)
        )
    if isinstance(formula, Forall):
        return all(
            eval_formula(state, formula.body, b, world)
            for b in assignments(formula.variables, binding, world)
        )
    raise TypeError(f"not a formula: {formula!r}")


def effect_sets(
    state: WorldState, effect: Effect, binding: Binding, world: World
) -> tuple[set[Atom], set[Atom]]:
    """Expand ``effect`` into (adds, deletes); conditions read ``state``."""
    adds: set[Atom] = set()
    dels: set[Atom] = set()

    def collect(e: Effect, b: Binding) -> None:
        if isinstance(e, AddAtom):
            adds.add(ground_atom(e.atom, b))
        elif isinstance(e, DelAtom):
            dels.add(ground_atom(e.atom, b))
        elif isinstance(e, Conjunction):
            for part in e.parts:
                collect(part, b)
        elif isinstance(e, ForallWhen):
            for inner in assignments(e.variables, b, world):
                if eval_formula(state, e.condition, inner, world):
                    for part in e.body:
                        collect(part, inner)
        else:
            raise TypeError(f"not an effect: {e!r}")

    collect(effect, binding)
    return adds, dels


def apply_effect(state: WorldState, effect: Effect, binding: Binding, world: World) -> WorldState:
    adds, dels = effect_sets(state, effect, binding, world)
    # adds win when an atom is both added and deleted
    return (state - dels) | adds


def top_conjuncts(formula: Formula) -> list[Formula]:
    if isinstance(formula, And):
        out: list[Formula] = []
        for f in formula.args:
            out.extend(top_conjuncts(f))
        return out
    return [formula]


def bind_action(action: GroundAction, world: World) -> dict[str, str]:
    """Map schema parameters to the action's arguments, checking types."""
    schema = world.domain.action(action.name)
    if schema is None:
        raise UnknownActionError(action.name)
    if len(action.args) != schema.arity:
        raise ActionTypeError(
            f"arity mismatch: {schema.name} takes {schema.arity} argument(s), got {len(action.args)}"
        )
    binding = {}
    for (var, typ), arg in zip(schema.parameters, action.args):
        actual = world.type_of(arg)
        if actual is None:
            raise ActionTypeError(f"undeclared object {arg}")
        if typ != ROOT_TYPE and not world.domain.types.is_subtype(actual, typ):
            raise ActionTypeError(f"type mismatch: {arg} is {actual}, {var} expects {typ}")
        binding[var] = arg
    return binding


@dataclass(frozen=True)
class Verdict:
    satisfied: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.satisfied


SATISFIED = Verdict(True)


def check_action(state: WorldState, action: GroundAction, world: World) -> Verdict:
    """Evaluate the precondition; on failure name the leftmost failing conjunct."""
    binding = bind_action(action, world)
    schema = world.domain.action(action.name)
    assert schema is not None
    for conjunct in top_conjuncts(schema.precondition):
        if not eval_formula(state, conjunct, binding, world):
            return Verdict(False, format_formula(conjunct, binding))
    return SATISFIED
