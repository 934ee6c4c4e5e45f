"""Seeded random worlds and candidate plans over the bundled domain.

Plans are well-typed but deliberately include actions whose preconditions
fail, so both branches of the verification loop get exercised.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass

from ..pddl import canonical_domain
from ..pddl.model import Atom, DomainDef, GroundAction, ProblemDef
from .state import World, WorldState, check_action, apply_effect, bind_action

AGENT_NAMES = ("alice", "bob", "carol", "dave")
ROOM_NAMES = ("kitchen", "hall", "garden")
CONTAINER_NAMES = ("box", "basket", "drawer", "fridge")
OBJECT_NAMES = ("ball", "apple", "key", "book", "cup", "coin")
UTTERANCE_TEXTS = (
    "I hope everyone is doing well!",
    "I need to leave now, talk to you later!",
    'She said "the key is in the drawer".',
    "Back\\slash and café are fine too.",
)


@dataclass(frozen=True)
class Sizes:
    """Upper bounds; each count is drawn uniformly from 1..bound."""

    agents: int = 4
    rooms: int = 3
    containers: int = 4
    objects: int = 6
    utterances: int = 4
    plan_length: int = 30

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.agents > len(AGENT_NAMES) or self.rooms > len(ROOM_NAMES):
            raise ValueError("too many agents or rooms for the name pool")
        if self.containers > len(CONTAINER_NAMES) or self.objects > len(OBJECT_NAMES):
            raise ValueError("too many containers or objects for the name pool")
        if self.utterances > len(UTTERANCE_TEXTS):
            raise ValueError("too many utterances for the text pool")


def _location_of(state: WorldState, obj: str) -> str | None:
    for atom in state:
        if atom.predicate == "in" and atom.terms[0] == obj:
            return atom.terms[1]
        if atom.predicate == "holding" and atom.terms[1] == obj:
            return atom.terms[0]
    return None


def _room_of(state: WorldState, agent: str) -> str | None:
    for atom in state:
        if atom.predicate == "at" and atom.terms[0] == agent:
            return atom.terms[1]
    return None


def random_problem(rng: random.Random, sizes: Sizes, name: str = "scenario") -> ProblemDef:
    agents = AGENT_NAMES[: rng.randint(1, sizes.agents)]
    rooms = ROOM_NAMES[: rng.randint(1, sizes.rooms)]
    containers = CONTAINER_NAMES[: rng.randint(1, sizes.containers)]
    objs = OBJECT_NAMES[: rng.randint(1, sizes.objects)]
    utterances = tuple(f"u{i + 1}" for i in range(rng.randint(1, sizes.utterances)))

    objects: dict[str, str] = {}
    objects.update((a, "agent") for a in agents)
    objects.update((r, "room") for r in rooms)
    objects.update((c, "container") for c in containers)
    objects.update((o, "obj") for o in objs)
    objects.update((u, "utterance") for u in utterances)

    init: set[Atom] = set()
    for a in agents:
        init.add(Atom("at", (a, rng.choice(rooms))))
    for c in containers:
        init.add(Atom("part-of", (c, rng.choice(rooms))))
        if rng.random() < 0.5:
            init.add(Atom("opened", (c,)))
    for o in objs:
        roll = rng.random()
        if roll < 0.4:
            init.add(Atom("in", (o, rng.choice(rooms))))
        elif roll < 0.8:
            init.add(Atom("in", (o, rng.choice(containers))))
        else:
            init.add(Atom("holding", (rng.choice(agents), o)))
    for a in agents:
        for o in objs:
            if rng.random() < 0.2:
                init.add(Atom("seen", (a, o)))
        for u in utterances:
            if rng.random() < 0.15:
                init.add(Atom("heard", (a, u)))

    texts = {u: rng.choice(UTTERANCE_TEXTS) for u in utterances}
    return ProblemDef(name, "tom", objects, frozenset(init), texts)


def _plausible(rng: random.Random, kind: str, state: WorldState, world: World) -> tuple[str, ...]:
    """Arguments that stand a fair chance of satisfying ``kind``."""
    agent = rng.choice(world.objects_of("agent"))
    here = _room_of(state, agent) or rng.choice(world.objects_of("room"))
    containers = world.objects_of("container")
    objs = world.objects_of("obj")
    if kind == "move":
        return (agent, here, rng.choice(world.objects_of("room")))
    if kind in ("open", "close"):
        local = [c for c in containers if Atom("part-of", (c, here)) in state]
        return (agent, rng.choice(local or containers), here)
    if kind == "grab":
        obj = rng.choice(objs)
        where = _location_of(state, obj)
        if where is None or world.type_of(where) == "agent":
            where = rng.choice(world.objects_of("loc"))
        return (agent, obj, where, here)
    if kind == "drop":
        held = sorted(a.terms[1] for a in state if a.predicate == "holding" and a.terms[0] == agent)
        obj = rng.choice(held or objs)
        spots = [here, *(c for c in containers if Atom("part-of", (c, here)) in state)]
        return (agent, obj, rng.choice(spots), here)
    return (agent, rng.choice(world.objects_of("utterance")), here)


def random_plan(
    rng: random.Random, world: World, length: int, plausible_rate: float = 0.7
) -> list[GroundAction]:
    state = world.initial_state()
    plan = []
    schemas = world.domain.actions
    for _ in range(length):
        schema = rng.choice(schemas)
        if rng.random() < plausible_rate:
            args = _plausible(rng, schema.name, state, world)
        else:
            args = tuple(rng.choice(world.objects_of(t)) for _, t in schema.parameters)
        action = GroundAction(schema.name, args)
        plan.append(action)
        if check_action(state, action, world):
            state = apply_effect(state, schema.effect, bind_action(action, world), world)
    return plan


def random_scenario(
    seed: int, sizes: Sizes = Sizes(), domain: DomainDef | None = None
) -> tuple[ProblemDef, list[GroundAction]]:
    domain = domain or canonical_domain()
    rng = random.Random(seed)
    problem = random_problem(rng, sizes, name=f"scenario-{seed}")
    world = World(domain, problem)
    plan = random_plan(rng, world, rng.randint(1, sizes.plan_length))
    return problem, plan


def structural_violations(state: WorldState, world: World) -> list[str]:
    """Breaches of functional location and object exclusivity."""
    problems = []
    rooms_of = Counter(a.terms[0] for a in state if a.predicate == "at")
    for agent in world.objects_of("agent"):
        if rooms_of[agent] != 1:
            problems.append(f"{agent} is in {rooms_of[agent]} rooms")
    placed = Counter(a.terms[0] for a in state if a.predicate == "in")
    held = Counter(a.terms[1] for a in state if a.predicate == "holding")
    for obj in world.objects_of("obj"):
        if placed[obj] + held[obj] > 1:
            problems.append(f"{obj} has {placed[obj]} locations and {held[obj]} holders")
    parents = Counter(a.terms[0] for a in state if a.predicate == "part-of")
    for c in world.objects_of("container"):
        if parents[c] > 1:
            problems.append(f"{c} is part of {parents[c]} rooms")
    return problems
