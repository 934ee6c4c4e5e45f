"""Command-line entry point.

Exit codes: 0 success, 1 parse or usage error, 2 plan had rejected actions.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .beliefs import QueryError, answer_query, format_answer, parse_query
from .bench import InstanceError
from .engine import World, render_trace, validate_and_filter
from .llm import DEFAULT_ENDPOINT
from .pddl import PddlError, canonical_domain_text, parse_domain, parse_plan, parse_problem, print_canonical
from .pipeline import ConfigError, PipelineConfig, run_batch

EXIT_OK, EXIT_ERROR, EXIT_REJECTED = 0, 1, 2


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _domain_text(path: str | None) -> str:
    return _read(path) if path else canonical_domain_text()


def _where(path: str | None, exc: PddlError) -> str:
    return f"{path or '<bundled domain>'}:{exc}"


def _load_world(args: argparse.Namespace):
    """Parse domain, problem and plan, reporting the file that failed."""
    try:
        domain = parse_domain(_domain_text(args.domain))
    except PddlError as exc:
        raise _CliError(_where(args.domain, exc)) from exc
    try:
        problem = parse_problem(_read(args.problem), domain)
    except PddlError as exc:
        raise _CliError(_where(args.problem, exc)) from exc
    try:
        plan = parse_plan(_read(args.plan))
    except PddlError as exc:
        raise _CliError(_where(args.plan, exc)) from exc
    world = World(domain, problem)
    return world, validate_and_filter(problem.init, plan, world)


class _CliError(Exception):
    pass


def cmd_parse_domain(args: argparse.Namespace) -> int:
    try:
        domain = parse_domain(_domain_text(args.domain))
    except PddlError as exc:
        raise _CliError(_where(args.domain, exc)) from exc
    sys.stdout.write(print_canonical(domain))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    _, trace = _load_world(args)
    text = render_trace(trace)
    if args.trace_out and args.trace_out != "-":
        Path(args.trace_out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    for s in trace.rejected:
        print(f"step {s.index} {s.action} rejected: {s.reason}", file=sys.stderr)
    return EXIT_REJECTED if trace.rejected else EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    world, trace = _load_world(args)
    for text in args.query:
        try:
            answer = answer_query(parse_query(text), trace, world)
        except QueryError as exc:
            raise _CliError(str(exc)) from exc
        print(format_answer(answer))
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = PipelineConfig(
        instances_path=Path(args.instances),
        domain_path=Path(args.domain) if args.domain else None,
        mode=args.mode,
        cache_dir=Path(args.cache),
        endpoint=args.llm_endpoint,
        model=args.model,
        concurrency=args.concurrency,
        no_verification=args.no_verification,
        no_domain=args.no_domain,
        out=Path(args.out),
        traces_dir=Path(args.traces) if args.traces else None,
        sample_per_category=args.sample_per_category,
        seed=args.seed,
        field_map=Path(args.field_map) if args.field_map else None,
    )
    try:
        report = run_batch(config)
    except (ConfigError, InstanceError) as exc:
        raise _CliError(str(exc)) from exc
    acc = "n/a" if report.accuracy is None else f"{float(report.accuracy):.4f}"
    print(f"{len(report.records)} instances, accuracy {acc}, report written to {config.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tomtrace", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-domain", help="parse a domain file and print it canonically")
    p.add_argument("domain", nargs="?", help="domain file (default: bundled domain)")
    p.set_defaults(func=cmd_parse_domain)

    for name, func, help_text in (
        ("validate", cmd_validate, "verify a plan and write its state trace"),
        ("oracle", cmd_oracle, "answer belief queries over a verified plan"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--domain", help="domain file (default: bundled domain)")
        p.add_argument("problem")
        p.add_argument("plan")
        if name == "validate":
            p.add_argument("-o", "--trace-out", help="trace output file (default: stdout)")
        else:
            p.add_argument("query", nargs="+", help='e.g. "believes sally ball"')
        p.set_defaults(func=func)

    p = sub.add_parser("run", help="run the LLM pipeline over a benchmark file")
    p.add_argument("--domain", help="domain file (default: bundled domain)")
    p.add_argument("--instances", required=True)
    p.add_argument("--mode", choices=("live", "record", "replay"), default="replay")
    p.add_argument("--cache", default=".tomtrace-cache")
    p.add_argument("--llm-endpoint", default=DEFAULT_ENDPOINT)
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--no-verification", action="store_true")
    p.add_argument("--no-domain", action="store_true")
    p.add_argument("--sample-per-category", type=int, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="report.json")
    p.add_argument("--traces", help="directory for per-instance trace files")
    p.add_argument("--field-map", help="JSON file renaming instance fields")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
