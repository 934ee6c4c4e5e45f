"""Benchmark instances in, scored reports out.

Instances are JSON lines with the fields ``id``, ``narrative``, ``question``,
``choices`` and optionally ``answer_index`` and ``category``. Datasets that
name these differently are loaded through a field map.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

FAILURE_STAGES = ("none", "problem-parse", "action-extract", "answer-extract", "missing")
UNCATEGORIZED = "uncategorized"
FIELDS = ("id", "narrative", "question", "choices", "answer_index", "category")


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    id: str
    narrative: str
    question: str
    choices: tuple[str, ...]
    answer_index: int | None = None
    category: str | None = None

    def __post_init__(self) -> None:
        if len(self.choices) < 2:
            raise InstanceError(f"instance {self.id}: needs at least 2 choices, got {len(self.choices)}")
        if self.answer_index is not None and not 0 <= self.answer_index < len(self.choices):
            raise InstanceError(f"instance {self.id}: answer_index {self.answer_index} out of range")


@dataclass
class Prediction:
    instance_id: str
    predicted_index: int | None = None
    failure_stage: str = "none"
    calls: list[dict] = field(default_factory=list)
    rejections: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.failure_stage not in FAILURE_STAGES:
            raise ValueError(f"unknown failure stage {self.failure_stage}")
        if (self.predicted_index is None) != (self.failure_stage != "none"):
            raise ValueError("a prediction is present exactly when no stage failed")

    @property
    def llm_calls(self) -> int:
        return len(self.calls)


@dataclass
class Report:
    records: list[dict]
    accuracy: Fraction | None
    accuracy_by_category: dict[str, Fraction]
    mean_llm_calls: Fraction
    failures_by_stage: dict[str, int]
    meta: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "instances": self.records,
            "accuracy": self.accuracy,
            "accuracy_by_category": self.accuracy_by_category,
            "mean_llm_calls": self.mean_llm_calls,
            "failures_by_stage": self.failures_by_stage,
            **self.meta,
        }


def load_field_map(path: str | Path) -> dict[str, str]:
    mapping = json.loads(Path(path).read_text())
    if not isinstance(mapping, dict) or not all(isinstance(v, str) for v in mapping.values()):
        raise InstanceError("field map must be a JSON object of strings")
    unknown = set(mapping) - set(FIELDS)
    if unknown:
        raise InstanceError(f"field map names unknown fields: {sorted(unknown)}")
    return mapping


def _instance_from(record: Any, lineno: int, field_map: Mapping[str, str]) -> Instance:
    if not isinstance(record, dict):
        raise InstanceError(f"line {lineno}: expected a JSON object")

    def get(name: str, required: bool = True) -> Any:
        key = field_map.get(name, name)
        if key not in record:
            if required:
                raise InstanceError(f"line {lineno}: missing field {key!r}")
            return None
        return record[key]

    ident = get("id")
    if not isinstance(ident, (str, int)) or isinstance(ident, bool):
        raise InstanceError(f"line {lineno}: id must be a string")
    ident = str(ident)
    narrative, question = get("narrative"), get("question")
    if not isinstance(narrative, str) or not isinstance(question, str):
        raise InstanceError(f"line {lineno} ({ident}): narrative and question must be strings")
    choices = get("choices")
    if not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
        raise InstanceError(f"line {lineno} ({ident}): choices must be a list of strings")
    answer = get("answer_index", required=False)
    if answer is not None and (not isinstance(answer, int) or isinstance(answer, bool)):
        raise InstanceError(f"line {lineno} ({ident}): answer_index must be an integer")
    category = get("category", required=False)
    if category is not None and not isinstance(category, str):
        raise InstanceError(f"line {lineno} ({ident}): category must be a string")
    try:
        return Instance(ident, narrative, question, tuple(choices), answer, category)
    except InstanceError as exc:
        raise InstanceError(f"line {lineno}: {exc}") from None


def load_instances(path: str | Path, field_map: Mapping[str, str] | None = None) -> list[Instance]:
    instances = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InstanceError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            inst = _instance_from(record, lineno, field_map or {})
            if inst.id in seen:
                raise InstanceError(f"line {lineno}: duplicate id {inst.id!r}")
            seen.add(inst.id)
            instances.append(inst)
    return instances


def sample_per_category(instances: Sequence[Instance], n: int, seed: int) -> list[Instance]:
    """Keep at most ``n`` instances per category, chosen with a seeded RNG."""
    if n < 1:
        raise ValueError("sample size must be positive")
    rng = random.Random(seed)
    groups: dict[str, list[Instance]] = defaultdict(list)
    for inst in instances:
        groups[inst.category or UNCATEGORIZED].append(inst)
    keep: set[str] = set()
    for cat in sorted(groups):
        members = groups[cat]
        chosen = members if len(members) <= n else rng.sample(members, n)
        keep.update(i.id for i in chosen)
    return [i for i in instances if i.id in keep]


def score(instances: Sequence[Instance], predictions: Iterable[Prediction]) -> Report:
    by_id = {i.id: i for i in instances}
    preds: dict[str, Prediction] = {}
    for p in predictions:
        if p.instance_id not in by_id:
            raise KeyError(f"prediction for unknown instance {p.instance_id!r}")
        preds[p.instance_id] = p

    records = []
    stages = dict.fromkeys(FAILURE_STAGES, 0)
    correct_by_cat: dict[str, int] = defaultdict(int)
    scored_by_cat: dict[str, int] = defaultdict(int)
    total_calls = 0
    for inst in sorted(instances, key=lambda i: i.id):
        pred = preds.get(inst.id) or Prediction(inst.id, failure_stage="missing")
        stages[pred.failure_stage] += 1
        total_calls += pred.llm_calls
        correct = None
        if inst.answer_index is not None:
            correct = pred.predicted_index == inst.answer_index
            cat = inst.category or UNCATEGORIZED
            scored_by_cat[cat] += 1
            correct_by_cat[cat] += int(correct)
        records.append(
            {
                "id": inst.id,
                "category": inst.category,
                "gold_index": inst.answer_index,
                "predicted_index": pred.predicted_index,
                "correct": correct,
                "failure_stage": pred.failure_stage,
                "llm_calls": pred.llm_calls,
                "calls": pred.calls,
                "rejected_actions": len(pred.rejections),
                "rejections": pred.rejections,
                "diagnostics": pred.diagnostics,
            }
        )

    scored = sum(scored_by_cat.values())
    accuracy = Fraction(sum(correct_by_cat.values()), scored) if scored else None
    by_cat = {c: Fraction(correct_by_cat[c], scored_by_cat[c]) for c in sorted(scored_by_cat)}
    mean_calls = Fraction(total_calls, len(instances)) if instances else Fraction(0)
    return Report(records, accuracy, by_cat, mean_calls, stages)


# -- deterministic serialization --------------------------------------------


def _emit(value: Any, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (float, Fraction)):
        return f"{float(value):.4f}"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {_emit(value[k], indent + 1)}"
            for k in sorted(value, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(inner + _emit(v, indent + 1) for v in value) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps_report(report: Report) -> str:
    return _emit(report.to_dict(), 0) + "\n"


def write_report(report: Report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report), encoding="utf-8")
    return path
