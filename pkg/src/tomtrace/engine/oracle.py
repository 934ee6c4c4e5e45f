"""Differential oracle for :func:`validate_and_filter`.

Quantifiers are expanded into propositional formulas over ground atoms
before evaluation, and every pre-state is rebuilt from ``s0`` by folding the
accepted prefix again. Nothing is carried over between steps.
"""

from __future__ import annotations

from collections.abc import Sequence
from itertools import product

from ..pddl.model import (
    AddAtom,
    And,
    Atom,
    Conjunction,
    DelAtom,
    Effect,
    Equality,
    Exists,
    Forall,
    ForallWhen,
    Formula,
    GroundAction,
    Not,
    Or,
)
from ..pddl.printer import format_formula
from .state import ActionTypeError, UnknownActionError, World, WorldState, bind_action
from .trace import UNKNOWN_ACTION, Trace, TraceStep

# Ground propositions: ("atom", Atom) | ("const", bool) | ("not", g) | ("and", [g]) | ("or", [g])
Prop = tuple


def _subst(term: str, binding: dict[str, str]) -> str:
    return binding[term] if term.startswith("?") else term


def _expansions(variables, binding, world):
    names = [v for v, _ in variables]
    for combo in product(*(world.objects_of(t) for _, t in variables)):
        yield {**binding, **dict(zip(names, combo))}


def ground(f: Formula, binding: dict[str, str], world: World) -> Prop:
    match f:
        case Atom(predicate=p, terms=ts):
            return ("atom", Atom(p, tuple(_subst(t, binding) for t in ts)))
        case Equality(left=l, right=r):
            return ("const", _subst(l, binding) == _subst(r, binding))
        case Not(arg=a):
            return ("not", ground(a, binding, world))
        case And(args=args):
            return ("and", [ground(a, binding, world) for a in args])
        case Or(args=args):
            return ("or", [ground(a, binding, world) for a in args])
        case Exists(variables=vs, body=b):
            return ("or", [ground(b, inner, world) for inner in _expansions(vs, binding, world)])
        case Forall(variables=vs, body=b):
            return ("and", [ground(b, inner, world) for inner in _expansions(vs, binding, world)])
    raise TypeError(f"not a formula: {f!r}")


def holds(p: Prop, state: WorldState) -> bool:
    tag = p[0]
    if tag == "atom":
        return p[1] in state
    if tag == "const":
        return p[1]
    if tag == "not":
        return not holds(p[1], state)
    if tag == "and":
        return all(holds(q, state) for q in p[1])
    return any(holds(q, state) for q in p[1])


def conditional_literals(
    e: Effect, binding: dict[str, str], world: World, guard: tuple[Prop, ...] = ()
) -> list[tuple[tuple[Prop, ...], bool, Atom]]:
    """Flatten an effect into (guards, is_add, atom) triples."""
    match e:
        case AddAtom(atom=a) | DelAtom(atom=a):
            atom = Atom(a.predicate, tuple(_subst(t, binding) for t in a.terms))
            return [(guard, isinstance(e, AddAtom), atom)]
        case Conjunction(parts=parts):
            return [lit for part in parts for lit in conditional_literals(part, binding, world, guard)]
        case ForallWhen(variables=vs, condition=c, body=body):
            out = []
            for inner in _expansions(vs, binding, world):
                g = (*guard, ground(c, inner, world))
                for part in body:
                    out.extend(conditional_literals(part, inner, world, g))
            return out
    raise TypeError(f"not an effect: {e!r}")


def _successor(state: WorldState, action: GroundAction, world: World) -> WorldState:
    schema = world.domain.action(action.name)
    assert schema is not None
    lits = conditional_literals(schema.effect, bind_action(action, world), world)
    fired = [(is_add, atom) for guards, is_add, atom in lits if all(holds(g, state) for g in guards)]
    adds = {atom for is_add, atom in fired if is_add}
    dels = {atom for is_add, atom in fired if not is_add}
    return frozenset((state - dels) | adds)


def _fold(s0: WorldState, accepted: Sequence[GroundAction], world: World) -> WorldState:
    state = s0
    for action in accepted:
        state = _successor(state, action, world)
    return state


def _judge(state: WorldState, action: GroundAction, world: World) -> str | None:
    """None when the action is applicable, else the rejection reason."""
    schema = world.domain.action(action.name)
    if schema is None:
        return UNKNOWN_ACTION
    try:
        binding = bind_action(action, world)
    except (UnknownActionError, ActionTypeError) as exc:
        return str(exc)
    conjuncts = [schema.precondition]
    while any(isinstance(c, And) for c in conjuncts):
        conjuncts = [x for c in conjuncts for x in (c.args if isinstance(c, And) else (c,))]
    for c in conjuncts:
        if not holds(ground(c, binding, world), state):
            return format_formula(c, binding)
    return None


def replay_oracle(s0: WorldState, candidates: Sequence[GroundAction], world: World) -> Trace:
    accepted: list[GroundAction] = []
    steps = []
    for i, action in enumerate(candidates, start=1):
        pre = _fold(s0, accepted, world)
        reason = _judge(pre, action, world)
        if reason is None:
            accepted.append(action)
            post = _fold(s0, accepted, world)
        else:
            post = pre
        steps.append(TraceStep(i, action, reason is None, reason, post))
    return Trace(s0, tuple(steps))
