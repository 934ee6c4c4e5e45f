"""End-to-end runs: problem file, action list, verification, question answering."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .bench import (
    Instance,
    Prediction,
    Report,
    load_field_map,
    load_instances,
    sample_per_category,
    score,
    write_report,
)
from .engine import World, render_trace, unchecked_trace, validate_and_filter
from .engine.trace import Trace
from .llm import (
    DEFAULT_ENDPOINT,
    CompletionRequest,
    ExtractionError,
    LLMClient,
    LLMError,
    ResponseCache,
    extract_actions,
    extract_choice,
    extract_define,
    format_choices,
    render_prompt,
)
from .pddl import PddlError, canonical_domain_text, parse_domain, parse_problem, print_canonical
from .pddl.model import DomainDef, GroundAction

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    instances_path: Path
    domain_path: Path | None = None
    mode: str = "replay"
    cache_dir: Path = Path(".tomtrace-cache")
    endpoint: str = DEFAULT_ENDPOINT
    model: str = "gpt-4o"
    concurrency: int = 4
    no_verification: bool = False
    no_domain: bool = False
    out: Path = Path("report.json")
    traces_dir: Path | None = None
    sample_per_category: int | None = None
    seed: int = 0
    field_map: Path | None = None

    def validate(self) -> None:
        if self.mode not in ("live", "record", "replay"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be at least 1")
        if not Path(self.instances_path).is_file():
            raise ConfigError(f"instances file not found: {self.instances_path}")
        if self.domain_path is not None and not Path(self.domain_path).is_file():
            raise ConfigError(f"domain file not found: {self.domain_path}")
        if self.no_domain and self.domain_path is not None:
            raise ConfigError("--no-domain generates the domain; do not pass --domain")
        if self.sample_per_category is not None and self.sample_per_category < 1:
            raise ConfigError("--sample-per-category must be positive")

    @property
    def trace_directory(self) -> Path:
        if self.traces_dir is not None:
            return Path(self.traces_dir)
        out = Path(self.out)
        return out.with_name(out.stem + "_traces")


@dataclass
class InstanceRun:
    instance_id: str
    prediction: Prediction
    problem_text: str | None = None
    candidates: list[GroundAction] = field(default_factory=list)
    trace: Trace | None = None
    trace_text: str | None = None
    qa_response: str | None = None
    prompts: dict[str, str] = field(default_factory=dict)


class _Stage(Exception):
    def __init__(self, stage: str, detail: str):
        super().__init__(detail)
        self.stage = stage
        self.detail = detail


def _call(client: LLMClient, model: str, run: InstanceRun, calls: list[dict], template: str, **bindings: str) -> str:
    prompt = render_prompt(template, bindings)
    run.prompts[template] = prompt
    record = {"template": template, "prompt_chars": len(prompt)}
    calls.append(record)
    completion = client.complete(CompletionRequest.for_prompt(model, template, prompt))
    record.update(
        cached=completion.from_cache,
        response_chars=len(completion.text),
        latency_ms=completion.latency_ms,
    )
    if completion.usage:
        record["usage"] = {k: v for k, v in completion.usage.items() if isinstance(v, int)}
    return completion.text


def run_instance(
    instance: Instance,
    config: PipelineConfig,
    domain: DomainDef,
    client: LLMClient,
    domain_text: str | None = None,
) -> InstanceRun:
    """Run the three calls for one instance; failures are recorded, not raised."""
    domain_file = domain_text if domain_text is not None else print_canonical(domain)
    calls: list[dict] = []
    run = InstanceRun(instance.id, Prediction(instance.id, 0))
    rejections: list[str] = []
    try:
        try:
            reply = _call(client, config.model, run, calls, "gen_problem",
                          domain_file=domain_file, narrative=instance.narrative)
            run.problem_text = extract_define(reply, "problem")
            problem = parse_problem(run.problem_text, domain)
        except (LLMError, ExtractionError, PddlError) as exc:
            raise _Stage("problem-parse", str(exc)) from exc

        try:
            reply = _call(client, config.model, run, calls, "gen_actions",
                          domain_file=domain_file, problem_file=print_canonical(problem),
                          narrative=instance.narrative)
        except LLMError as exc:
            raise _Stage("action-extract", str(exc)) from exc
        extracted = extract_actions(reply)
        if not extracted.payload:
            raise _Stage("action-extract", "; ".join(extracted.diagnostics))
        run.candidates = list(extracted.payload)

        if config.no_verification:
            run.trace = unchecked_trace(problem.init, run.candidates)
        else:
            run.trace = validate_and_filter(problem.init, run.candidates, World(domain, problem))
            rejections = [f"STEP {s.index} {s.action}: {s.reason}" for s in run.trace.rejected]
        run.trace_text = render_trace(run.trace)

        try:
            run.qa_response = _call(client, config.model, run, calls, "qa",
                                    trace=run.trace_text, question=instance.question,
                                    choices=format_choices(instance.choices))
            predicted = extract_choice(run.qa_response, len(instance.choices))
        except (LLMError, ExtractionError) as exc:
            raise _Stage("answer-extract", str(exc)) from exc
        run.prediction = Prediction(instance.id, predicted, "none", calls, rejections)
    except _Stage as failure:
        log.info("instance %s failed at %s: %s", instance.id, failure.stage, failure.detail)
        run.prediction = Prediction(
            instance.id, None, failure.stage, calls, rejections, [failure.detail]
        )
    return run


def make_client(config: PipelineConfig) -> LLMClient:
    cache = ResponseCache(config.cache_dir) if config.mode != "live" else None
    return LLMClient(config.mode, cache, config.endpoint, concurrency=config.concurrency)


def _trace_filename(instance_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", instance_id) + ".trace"


def bootstrap_domain(exemplar: Instance, config: PipelineConfig, client: LLMClient) -> tuple[DomainDef, str]:
    """Have the model write its own domain from one example narrative."""
    prompt = render_prompt("gen_domain", {"narrative": exemplar.narrative})
    reply = client.complete(CompletionRequest.for_prompt(config.model, "gen_domain", prompt)).text
    text = extract_define(reply, "domain")
    return parse_domain(text), text


def run_batch(config: PipelineConfig, client: LLMClient | None = None) -> Report:
    config.validate()
    field_map = load_field_map(config.field_map) if config.field_map else None
    instances = load_instances(config.instances_path, field_map)
    if config.sample_per_category:
        instances = sample_per_category(instances, config.sample_per_category, config.seed)

    own_client = client is None
    client = client or make_client(config)
    meta: dict = {
        "mode": config.mode,
        "model": config.model,
        "no_verification": config.no_verification,
        "no_domain": config.no_domain,
        "bootstrap_llm_calls": 0,
    }
    if config.sample_per_category:
        meta["sample_per_category"] = config.sample_per_category
        meta["seed"] = config.seed
    try:
        domain: DomainDef | None
        domain_text: str | None
        bootstrap_failure = None
        if config.no_domain:
            domain, domain_text = None, None
            if instances:
                meta["bootstrap_llm_calls"] = 1
                meta["bootstrap_exemplar"] = instances[0].id
                try:
                    domain, domain_text = bootstrap_domain(instances[0], config, client)
                except (LLMError, ExtractionError, PddlError) as exc:
                    bootstrap_failure = f"generated domain unusable: {exc}"
        else:
            domain_text = (
                Path(config.domain_path).read_text() if config.domain_path else canonical_domain_text()
            )
            try:
                domain = parse_domain(domain_text)
            except PddlError as exc:
                raise ConfigError(f"domain file does not parse: {exc}") from exc

        if domain is None:
            runs = [
                InstanceRun(i.id, Prediction(i.id, None, "problem-parse", diagnostics=[bootstrap_failure or ""]))
                for i in instances
            ]
        else:
            with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
                runs = list(
                    pool.map(lambda inst: run_instance(inst, config, domain, client, domain_text), instances)
                )
    finally:
        if own_client:
            client.close()

    runs.sort(key=lambda r: r.instance_id)
    report = score(instances, [r.prediction for r in runs])
    report.meta.update(meta)

    trace_dir = config.trace_directory
    trace_dir.mkdir(parents=True, exist_ok=True)
    for r in runs:
        if r.trace_text is not None:
            (trace_dir / _trace_filename(r.instance_id)).write_text(r.trace_text, encoding="utf-8")
    write_report(report, config.out)
    return report
