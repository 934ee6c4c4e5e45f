"""Prompt templates shipped as text assets under ``templates/``."""

from __future__ import annotations

import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

PLACEHOLDERS = ("domain_file", "narrative", "problem_file", "trace", "question", "choices")
TEMPLATE_IDS = ("gen_problem", "gen_actions", "qa", "gen_domain")

_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")


class PromptError(KeyError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    text: str

    @property
    def placeholders(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(_PLACEHOLDER_RE.findall(self.text)))

    def render(self, bindings: Mapping[str, str]) -> str:
        missing = [p for p in self.placeholders if p not in bindings]
        if missing:
            raise PromptError(f"template {self.template_id} needs a value for {{{missing[0]}}}")
        # single pass: substituted text is never rescanned
        return _PLACEHOLDER_RE.sub(lambda m: bindings[m.group(1)], self.text)


@lru_cache(maxsize=None)
def load_template(template_id: str) -> PromptTemplate:
    if template_id not in TEMPLATE_IDS:
        raise PromptError(f"unknown template {template_id}")
    text = resources.files("tomtrace.llm").joinpath("templates", f"{template_id}.txt").read_text()
    return PromptTemplate(template_id, text)


def render_prompt(template_id: str, bindings: Mapping[str, str]) -> str:
    return load_template(template_id).render(bindings)


def format_choices(choices: Sequence[str]) -> str:
    if len(choices) > 26:
        raise ValueError("at most 26 choices can be lettered")
    return "\n".join(f"{chr(ord('A') + i)}. {c}" for i, c in enumerate(choices))
