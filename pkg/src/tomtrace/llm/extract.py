"""Pull problem files, action lists and answer letters out of model replies."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from ..pddl.model import GroundAction


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class ExtractionResult:
    raw: str
    payload: Any = None
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.diagnostics


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.S)
_ACTION_RE = re.compile(r"\(\s*([a-z][a-z0-9_-]*)((?:\s+[a-z0-9_][a-z0-9_.-]*)*)\s*\)", re.I)
_LINE_PREFIX_RE = re.compile(r"^\s*(?:(?:step\s*)?\d+\s*[.):]|[-*•])?\s*", re.I)
_ANSWER_RE = re.compile(r"ANSWER\s*:\s*[*_`]*\s*\(?([A-Za-z])\b")


def _only_actions(line: str) -> list[GroundAction] | None:
    body = line.split(";", 1)[0]
    body = _LINE_PREFIX_RE.sub("", body, count=1).strip()
    if not body:
        return None
    actions = []
    pos = 0
    for m in _ACTION_RE.finditer(body):
        if body[pos : m.start()].strip():
            return None
        actions.append(GroundAction(m.group(1).lower(), tuple(m.group(2).lower().split())))
        pos = m.end()
    if not actions or body[pos:].strip():
        return None
    return actions


def extract_actions(response: str) -> ExtractionResult:
    """Every line that consists solely of flat ``(name arg ...)`` forms, in order."""
    blocks = _FENCE_RE.findall(response)
    source = "\n".join(blocks) if blocks else response
    actions: list[GroundAction] = []
    for line in source.splitlines():
        found = _only_actions(line)
        if found:
            actions.extend(found)
    if not actions and blocks:
        # fall back to the whole reply when the code block held something else
        for line in response.splitlines():
            found = _only_actions(line)
            if found:
                actions.extend(found)
    if not actions:
        return ExtractionResult(response, None, ("no actions found in response",))
    return ExtractionResult(response, actions)


def _balanced_from(text: str, start: int) -> str | None:
    depth = 0
    in_string = False
    i = start
    while i < len(text):
        ch = text[i]
        if in_string:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == ";":
            nl = text.find("\n", i)
            i = len(text) if nl < 0 else nl
            continue
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
        i += 1
    return None


_DEFINE_RE = re.compile(r"\(\s*define\b", re.I)


def extract_define(response: str, kind: str = "problem") -> str:
    """The first complete ``(define ...)`` form, preferring fenced blocks."""
    for source in (*_FENCE_RE.findall(response), response):
        for m in _DEFINE_RE.finditer(source):
            form = _balanced_from(source, m.start())
            if form is not None and re.search(rf"\(\s*{kind}\b", form, re.I):
                return form
    raise ExtractionError(f"no complete (define ({kind} ...)) form in response")


def extract_choice(response: str, n_choices: int) -> int:
    if n_choices < 2:
        raise ValueError("need at least two choices")
    matches = _ANSWER_RE.findall(response)
    if not matches:
        raise ExtractionError("no 'ANSWER: <letter>' marker in response")
    letter = matches[-1].upper()
    index = ord(letter) - ord("A")
    if index >= n_choices:
        raise ExtractionError(f"answer {letter} is out of range for {n_choices} choices")
    return index
