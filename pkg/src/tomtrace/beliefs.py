"""Belief answers derived from a verified trace by observation filtering.

Each agent's belief about an object is the placement it last witnessed. An
agent witnesses an accepted step when it performs it, shares the actor's
room beforehand, or (for a move) is already in the room the actor enters.
Second-order beliefs fold only the steps both agents witnessed.

This oracle is tied to the bundled domain's action names.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

from .engine.state import World, WorldState
from .engine.trace import Trace
from .pddl.model import Atom, GroundAction

INITIAL_STEP = 0


@dataclass(frozen=True)
class ObservationEvent:
    step: int
    actor: str
    action: GroundAction
    pre_room: str | None
    post_room: str | None
    # objects relocated or revealed, or the utterance spoken
    payload: tuple[str, ...]


@dataclass
class BeliefMap:
    watcher: str
    # obj -> (location or holder, step of last supporting observation)
    locations: dict[str, tuple[str, int]] = field(default_factory=dict)
    heard: set[str] = field(default_factory=set)

    def where(self, obj: str) -> str | None:
        entry = self.locations.get(obj)
        return entry[0] if entry else None


@dataclass(frozen=True)
class BeliefQuery:
    kind: str  # "location-belief" | "heard" | "nested-location-belief"
    subjects: tuple[str, ...]
    target: str

    def __post_init__(self) -> None:
        expected = {"location-belief": 1, "heard": 1, "nested-location-belief": 2}
        if self.kind not in expected:
            raise QueryError(f"unknown query kind {self.kind}")
        if len(self.subjects) != expected[self.kind]:
            raise QueryError(f"{self.kind} takes {expected[self.kind]} subject(s)")


class QueryError(ValueError):
    pass


def _room_of(state: WorldState, agent: str) -> str | None:
    for atom in state:
        if atom.predicate == "at" and atom.terms[0] == agent:
            return atom.terms[1]
    return None


def placement(state: WorldState, obj: str) -> str | None:
    """The location holding ``obj``, or the agent carrying it."""
    for atom in state:
        if atom.predicate == "in" and atom.terms[0] == obj:
            return atom.terms[1]
        if atom.predicate == "holding" and atom.terms[1] == obj:
            return atom.terms[0]
    return None


def visible_from(state: WorldState, room: str) -> list[str]:
    """Objects loose in ``room``, in its open containers, or carried there."""
    local = {room}
    local.update(
        a.terms[0]
        for a in state
        if a.predicate == "part-of" and a.terms[1] == room and Atom("opened", (a.terms[0],)) in state
    )
    present = {a.terms[0] for a in state if a.predicate == "at" and a.terms[1] == room}
    out = {a.terms[0] for a in state if a.predicate == "in" and a.terms[1] in local}
    out.update(a.terms[1] for a in state if a.predicate == "holding" and a.terms[0] in present)
    return sorted(out)


def observation_events(trace: Trace, world: World) -> list[ObservationEvent]:
    events = []
    agent_of = world.domain.types.is_subtype
    for step in trace.steps:
        if not step.accepted:
            continue
        action = step.action
        actor = next(
            (a for a in action.args if agent_of(world.type_of(a) or "object", "agent")), ""
        )
        pre = trace.pre_state(step.index)
        post = step.post_state
        if action.name in ("grab", "drop"):
            payload: tuple[str, ...] = (action.args[1],)
        elif action.name == "open":
            c = action.args[1]
            payload = tuple(sorted(a.terms[0] for a in post if a.predicate == "in" and a.terms[1] == c))
        elif action.name == "move":
            payload = tuple(visible_from(post, action.args[2]))
        elif action.name in ("tell", "ask"):
            payload = (action.args[1],)
        else:
            payload = ()
        events.append(
            ObservationEvent(step.index, actor, action, _room_of(pre, actor), _room_of(post, actor), payload)
        )
    return events


def observes(event: ObservationEvent, watcher: str, trace: Trace) -> bool:
    if watcher == event.actor:
        return True
    pre = trace.pre_state(event.step)
    if event.pre_room is not None and Atom("at", (watcher, event.pre_room)) in pre:
        return True
    if event.action.name == "move" and event.post_room is not None:
        post = trace.steps[event.step - 1].post_state
        return Atom("at", (watcher, event.post_room)) in post
    return False


def initial_observations(state: WorldState, watcher: str) -> dict[str, str]:
    """obj -> placement for everything ``watcher`` knows about at the start."""
    known = {}
    room = _room_of(state, watcher)
    if room is not None:
        for obj in visible_from(state, room):
            where = placement(state, obj)
            if where is not None:
                known[obj] = where
    for atom in state:
        if atom.predicate == "seen" and atom.terms[0] == watcher:
            where = placement(state, atom.terms[1])
            if where is not None:
                known[atom.terms[1]] = where
    return known


def fold_events(
    trace: Trace,
    watcher: str,
    events: Iterable[ObservationEvent],
    initial: dict[str, str] | None = None,
    initial_heard: Iterable[str] = (),
) -> BeliefMap:
    beliefs = BeliefMap(watcher)
    for obj, where in (initial or {}).items():
        beliefs.locations[obj] = (where, INITIAL_STEP)
    beliefs.heard.update(initial_heard)
    for ev in events:
        name, args = ev.action.name, ev.action.args
        if name == "grab":
            beliefs.locations[args[1]] = (ev.actor, ev.step)
        elif name == "drop":
            beliefs.locations[args[1]] = (args[2], ev.step)
        elif name == "open":
            for obj in ev.payload:
                beliefs.locations[obj] = (args[1], ev.step)
        elif name == "move" and watcher == ev.actor:
            post = trace.steps[ev.step - 1].post_state
            for obj in ev.payload:
                where = placement(post, obj)
                if where is not None:
                    beliefs.locations[obj] = (where, ev.step)
        elif name in ("tell", "ask"):
            beliefs.heard.add(args[1])
    return beliefs


def _initial_heard(state: WorldState, watcher: str) -> set[str]:
    return {a.terms[1] for a in state if a.predicate == "heard" and a.terms[0] == watcher}


def fold_beliefs(
    trace: Trace,
    watcher: str,
    world: World,
    witnessed: Callable[[ObservationEvent], bool] | None = None,
) -> BeliefMap:
    """Fold the events ``watcher`` witnessed (or those ``witnessed`` selects)."""
    keep = witnessed or (lambda ev: observes(ev, watcher, trace))
    events = [ev for ev in observation_events(trace, world) if keep(ev)]
    return fold_events(
        trace,
        watcher,
        events,
        initial_observations(trace.initial, watcher),
        _initial_heard(trace.initial, watcher),
    )


def shared_events(trace: Trace, world: World, a: str, b: str) -> list[ObservationEvent]:
    return [
        ev
        for ev in observation_events(trace, world)
        if observes(ev, a, trace) and observes(ev, b, trace)
    ]


def nested_beliefs(trace: Trace, outer: str, inner: str, world: World) -> BeliefMap:
    """What ``outer`` thinks ``inner`` believes."""
    seen_outer = initial_observations(trace.initial, outer)
    seen_inner = initial_observations(trace.initial, inner)
    initial = {o: w for o, w in seen_inner.items() if o in seen_outer}
    heard = _initial_heard(trace.initial, inner) & _initial_heard(trace.initial, outer)
    return fold_events(trace, inner, shared_events(trace, world, outer, inner), initial, heard)


def parse_query(text: str) -> BeliefQuery:
    words = text.strip().lower().split()
    if len(words) == 3 and words[0] == "believes":
        return BeliefQuery("location-belief", (words[1],), words[2])
    if len(words) == 4 and words[0] == "believes":
        return BeliefQuery("nested-location-belief", (words[1], words[2]), words[3])
    if len(words) == 3 and words[0] == "heard":
        return BeliefQuery("heard", (words[1],), words[2])
    raise QueryError(f"cannot parse query {text!r}")


def answer_query(query: BeliefQuery, trace: Trace, world: World) -> str | bool | None:
    """Location name, truth value, or None when the belief is unknown."""
    def require(name: str, kind: str) -> None:
        declared = world.type_of(name)
        if declared is None or not world.domain.types.is_subtype(declared, kind):
            raise QueryError(f"{name} is not a declared {kind}")

    for s in query.subjects:
        require(s, "agent")
    require(query.target, "utterance" if query.kind == "heard" else "obj")

    if query.kind == "heard":
        return query.target in fold_beliefs(trace, query.subjects[0], world).heard
    if query.kind == "location-belief":
        return fold_beliefs(trace, query.subjects[0], world).where(query.target)
    outer, inner = query.subjects
    return nested_beliefs(trace, outer, inner, world).where(query.target)


def format_answer(answer: str | bool | None) -> str:
    if answer is None:
        return "unknown"
    if isinstance(answer, bool):
        return "true" if answer else "false"
    return answer
