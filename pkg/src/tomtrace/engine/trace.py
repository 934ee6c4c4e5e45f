"""The verification loop and the bit-exact trace rendering fed to the QA prompt."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..pddl.model import GroundAction
from ..pddl.printer import format_atom
from .state import (
    ActionTypeError,
    UnknownActionError,
    World,
    WorldState,
    apply_effect,
    bind_action,
    check_action,
)

UNKNOWN_ACTION = "unknown action"


@dataclass(frozen=True)
class TraceStep:
    index: int
    action: GroundAction
    accepted: bool
    reason: str | None
    post_state: WorldState


@dataclass(frozen=True)
class Trace:
    initial: WorldState
    steps: tuple[TraceStep, ...]
    # False when actions were passed through without checking (ablation mode)
    verified: bool = True

    @property
    def verified_actions(self) -> list[GroundAction]:
        return [s.action for s in self.steps if s.accepted]

    @property
    def rejected(self) -> list[TraceStep]:
        return [s for s in self.steps if not s.accepted]

    def pre_state(self, index: int) -> WorldState:
        """State before step ``index`` (1-based)."""
        return self.initial if index <= 1 else self.steps[index - 2].post_state

    @property
    def final_state(self) -> WorldState:
        return self.steps[-1].post_state if self.steps else self.initial

    @property
    def states(self) -> list[WorldState]:
        return [self.initial, *(s.post_state for s in self.steps)]


def step(state: WorldState, action: GroundAction, world: World) -> tuple[bool, str | None, WorldState]:
    """Check one candidate and apply it if its precondition holds."""
    try:
        verdict = check_action(state, action, world)
    except UnknownActionError:
        return False, UNKNOWN_ACTION, state
    except ActionTypeError as exc:
        return False, str(exc), state
    if not verdict:
        return False, verdict.reason, state
    schema = world.domain.action(action.name)
    assert schema is not None
    return True, None, apply_effect(state, schema.effect, bind_action(action, world), world)


def validate_and_filter(
    s0: WorldState, candidates: Sequence[GroundAction], world: World
) -> Trace:
    state = s0
    steps = []
    for i, action in enumerate(candidates, start=1):
        accepted, reason, state = step(state, action, world)
        steps.append(TraceStep(i, action, accepted, reason, state))
    return Trace(s0, tuple(steps))


def unchecked_trace(s0: WorldState, candidates: Sequence[GroundAction]) -> Trace:
    """Every candidate marked accepted, no effects applied."""
    steps = tuple(TraceStep(i, a, True, None, s0) for i, a in enumerate(candidates, start=1))
    return Trace(s0, steps, verified=False)


def format_state(state: WorldState) -> str:
    return " ".join(sorted(format_atom(a) for a in state))


def render_trace(trace: Trace) -> str:
    if not trace.verified:
        return "".join(f"STEP {s.index} ACTION {s.action}\n" for s in trace.steps)
    lines = ["STEP 0", "STATE " + format_state(trace.initial)]
    for s in trace.steps:
        verdict = "ACCEPTED" if s.accepted else f"REJECTED {s.reason}"
        lines.append(f"STEP {s.index} ACTION {s.action} {verdict}")
        lines.append("STATE " + format_state(s.post_state))
    return "\n".join(lines) + "\n"
