"""Grounding, precondition checking, effect application and plan verification."""

from .oracle import replay_oracle
from .scenarios import Sizes, random_scenario, structural_violations
from .state import (
    ActionTypeError,
    UnboundVariableError,
    UnknownActionError,
    Verdict,
    World,
    WorldState,
    apply_effect,
    bind_action,
    check_action,
    effect_sets,
    enumerate_objects,
    eval_formula,
)
from .trace import Trace, TraceStep, render_trace, unchecked_trace, validate_and_filter

__all__ = [
    "ActionTypeError",
    "Sizes",
    "Trace",
    "TraceStep",
    "UnboundVariableError",
    "UnknownActionError",
    "Verdict",
    "World",
    "WorldState",
    "apply_effect",
    "bind_action",
    "check_action",
    "effect_sets",
    "enumerate_objects",
    "eval_formula",
    "random_scenario",
    "render_trace",
    "replay_oracle",
    "structural_violations",
    "unchecked_trace",
    "validate_and_filter",
]
