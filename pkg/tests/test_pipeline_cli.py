import json

import pytest

from conftest import GOLDEN, REPLAY
from fakes import CACHE_DIR, record_all, replay_client, replay_config
from tomtrace.bench import load_instances
from tomtrace.cli import main
from tomtrace.pddl import canonical_domain, canonical_domain_text, parse_domain
from tomtrace.pipeline import ConfigError, PipelineConfig, make_client, run_batch, run_instance


def instance(name, file="instances.jsonl"):
    return next(i for i in load_instances(REPLAY / file) if i.id == name)


def run_one(cache, name, file="instances.jsonl", **extra):
    config = replay_config(cache, cache.parent, file, **extra)
    client = replay_client(config)
    return run_instance(instance(name, file), config, canonical_domain(), client, canonical_domain_text()), client


# -- run_instance ------------------------------------------------------------


def test_sally_anne_instance(replay_cache):
    run, client = run_one(replay_cache, "sa-classic")
    assert run.prediction.failure_stage == "none"
    assert run.prediction.predicted_index == instance("sa-classic").answer_index
    assert client.calls == 3
    assert client.calls_by_template == {"gen_problem": 1, "gen_actions": 1, "qa": 1}
    assert run.trace_text == (GOLDEN / "01_sally_anne_classic" / "expected.trace").read_text()
    assert run.trace_text in run.prompts["qa"]


@pytest.mark.parametrize(
    "name, stage, calls",
    [("fail-parse", "problem-parse", 1), ("fail-actions", "action-extract", 2), ("fail-answer", "answer-extract", 3)],
)
def test_failure_stage_stops_later_calls(replay_cache, name, stage, calls):
    run, client = run_one(replay_cache, name, "failures.jsonl")
    assert run.prediction.failure_stage == stage
    assert run.prediction.predicted_index is None
    assert client.calls == calls == run.prediction.llm_calls
    assert run.prediction.diagnostics


def test_replay_miss_is_a_stage_failure(tmp_path):
    (tmp_path / "cache").mkdir()
    run, client = run_one(tmp_path / "cache", "sa-classic")
    assert run.prediction.failure_stage == "problem-parse"
    assert "no cached response" in run.prediction.diagnostics[0]


def test_verification_rejects_impossible_action(replay_cache):
    run, _ = run_one(replay_cache, "impossible", "ablation.jsonl")
    impossible = "(grab sally ball basket room1)"
    assert [str(s.action) for s in run.trace.rejected] == [impossible]
    assert impossible not in [str(a) for a in run.trace.verified_actions]
    assert f"ACTION {impossible} REJECTED (at sally room1)" in run.prompts["qa"]
    assert run.prediction.rejections == [f"STEP 2 {impossible}: (at sally room1)"]


def test_no_verification_passes_raw_actions(replay_cache):
    plain, _ = run_one(replay_cache, "impossible", "ablation.jsonl")
    raw, _ = run_one(replay_cache, "impossible", "ablation.jsonl", no_verification=True)
    qa = raw.prompts["qa"]
    assert "(grab sally ball basket room1)" in qa
    assert not any(line.startswith("STATE") for line in qa.splitlines())
    assert all(s.accepted for s in raw.trace.steps)
    # the ablation only touches the third call
    assert raw.prompts["gen_problem"] == plain.prompts["gen_problem"]
    assert raw.prompts["gen_actions"] == plain.prompts["gen_actions"]
    assert raw.prompts["qa"] != plain.prompts["qa"]


# -- run_batch ---------------------------------------------------------------


def test_batch_report(replay_cache, tmp_path):
    config = replay_config(replay_cache, tmp_path)
    report = run_batch(config)
    data = json.loads(config.out.read_text())
    assert data["mean_llm_calls"] == 3.0
    assert data["failures_by_stage"]["none"] == 5
    assert data["accuracy"] == 0.8
    assert sorted(p.name for p in config.trace_directory.iterdir()) == [f"{r['id']}.trace" for r in report.records]


def test_batch_is_deterministic_across_concurrency(replay_cache, tmp_path):
    outputs = []
    for c in (1, 4):
        config = replay_config(replay_cache, tmp_path / f"c{c}", concurrency=c)
        run_batch(config)
        traces = {p.name: p.read_bytes() for p in config.trace_directory.iterdir()}
        outputs.append((config.out.read_bytes(), traces))
    assert outputs[0] == outputs[1]


def test_no_domain_adds_one_bootstrap_call(replay_cache, tmp_path):
    config = replay_config(replay_cache, tmp_path, no_domain=True)
    client = replay_client(config)
    report = run_batch(config, client)
    assert client.calls == 1 + 3 * 5
    assert client.calls_by_template["gen_domain"] == 1
    assert report.meta["bootstrap_llm_calls"] == 1
    assert report.mean_llm_calls == 3


def test_unusable_generated_domain_fails_every_instance(tmp_path):
    (tmp_path / "cache").mkdir()
    config = replay_config(tmp_path / "cache", tmp_path, no_domain=True)
    report = run_batch(config)
    assert report.failures_by_stage["problem-parse"] == 5
    assert "generated domain unusable" in report.records[0]["diagnostics"][0]


def test_empty_instance_file(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    config = PipelineConfig(instances_path=empty, cache_dir=tmp_path, out=tmp_path / "r.json")
    report = run_batch(config)
    assert report.records == [] and report.mean_llm_calls == 0


def test_sampling_records_seed(replay_cache, tmp_path):
    config = replay_config(replay_cache, tmp_path, sample_per_category=1, seed=3)
    report = run_batch(config)
    assert len(report.records) == 3
    assert report.meta["seed"] == 3


def test_custom_domain_file(replay_cache, tmp_path):
    domain_file = tmp_path / "domain.pddl"
    domain_file.write_text((REPLAY.parents[2] / "src" / "tomtrace" / "data" / "tom_domain.pddl").read_text())
    config = replay_config(replay_cache, tmp_path, domain_path=domain_file)
    assert run_batch(config).failures_by_stage["none"] == 5


@pytest.mark.parametrize(
    "changes, message",
    [
        ({"mode": "dream"}, "unknown mode"),
        ({"concurrency": 0}, "concurrency"),
        ({"instances_path": "nope.jsonl"}, "not found"),
        ({"no_domain": True, "domain_path": REPLAY / "responses.json"}, "--no-domain"),
        ({"sample_per_category": 0}, "positive"),
    ],
)
def test_config_errors_fail_fast(tmp_path, changes, message):
    config = replay_config(tmp_path, tmp_path)
    for k, v in changes.items():
        setattr(config, k, v)
    with pytest.raises(ConfigError, match=message):
        run_batch(config)


def test_recorded_fixtures_are_current(tmp_path):
    """The committed cache matches what the canned server records today."""
    record_all(tmp_path / "cache")
    fresh = {p.name: p.read_bytes() for p in (tmp_path / "cache").iterdir()}
    committed = {p.name: p.read_bytes() for p in CACHE_DIR.iterdir()}
    assert fresh == committed


# -- CLI ---------------------------------------------------------------------


SA = GOLDEN / "01_sally_anne_classic"


def test_cli_validate_writes_golden_trace(tmp_path, capsys):
    out = tmp_path / "t.trace"
    assert main(["validate", str(SA / "problem.pddl"), str(SA / "plan.pddl"), "-o", str(out)]) == 0
    assert out.read_bytes() == (SA / "expected.trace").read_bytes()


def test_cli_validate_rejection_exits_2(tmp_path, capsys):
    plan = tmp_path / "plan.pddl"
    plan.write_text("(grab sally ball box room1)\n")
    assert main(["validate", str(SA / "problem.pddl"), str(plan)]) == 2
    captured = capsys.readouterr()
    assert "REJECTED (in ball box)" in captured.out
    assert "(in ball box)" in captured.err


def test_cli_validate_parse_error_exits_1(tmp_path, capsys):
    plan = tmp_path / "plan.pddl"
    plan.write_text("(move sally room1\n")
    assert main(["validate", str(SA / "problem.pddl"), str(plan)]) == 1
    err = capsys.readouterr().err
    assert str(plan) in err and ":1:1:" in err


def test_cli_missing_file_exits_1(capsys):
    assert main(["validate", "nope.pddl", "nope.plan"]) == 1


@pytest.mark.parametrize(
    "query, answer",
    [("believes sally ball", "basket"), ("believes sally sally ball", "basket"), ("heard sally ball", None)],
)
def test_cli_oracle(capsys, query, answer):
    code = main(["oracle", str(SA / "problem.pddl"), str(SA / "plan.pddl"), query])
    out = capsys.readouterr().out.strip()
    if answer is None:
        assert code == 1
    else:
        assert code == 0 and out == answer


def test_cli_oracle_heard_false(tmp_path, capsys):
    d = GOLDEN / "09_conversation_leave"
    assert main(["oracle", str(d / "problem.pddl"), str(d / "plan.pddl"), "heard carol u2", "heard carol u1"]) == 0
    assert capsys.readouterr().out.split() == ["false", "true"]


def test_cli_oracle_bad_query_exits_1(capsys):
    assert main(["oracle", str(SA / "problem.pddl"), str(SA / "plan.pddl"), "where is the ball"]) == 1


def test_cli_parse_domain(tmp_path, capsys):
    assert main(["parse-domain"]) == 0
    printed = capsys.readouterr().out
    assert parse_domain(printed) == canonical_domain()
    bad = tmp_path / "bad.pddl"
    bad.write_text("(define (domain d) (:predicates (p ?x - widget)))")
    assert main(["parse-domain", str(bad)]) == 1


def test_cli_run(replay_cache, tmp_path, capsys):
    out = tmp_path / "report.json"
    args = ["run", "--instances", str(REPLAY / "instances.jsonl"), "--mode", "replay", "--cache", str(replay_cache),
            "--out", str(out), "--concurrency", "2"]
    assert main(args) == 0
    assert "5 instances, accuracy 0.8000" in capsys.readouterr().out
    assert (tmp_path / "report_traces" / "sa-classic.trace").is_file()


def test_cli_run_config_error(tmp_path, capsys):
    assert main(["run", "--instances", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "r.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_cli_run_with_field_map(replay_cache, tmp_path):
    renamed = tmp_path / "renamed.jsonl"
    rows = [json.loads(l) for l in (REPLAY / "instances.jsonl").read_text().splitlines()]
    renamed.write_text("".join(json.dumps({("story" if k == "narrative" else k): v for k, v in r.items()}) + "\n"
                               for r in rows))
    mapping = tmp_path / "map.json"
    mapping.write_text('{"narrative": "story"}')
    out = tmp_path / "r.json"
    assert main(["run", "--instances", str(renamed), "--field-map", str(mapping), "--cache", str(replay_cache),
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["failures_by_stage"]["none"] == 5


def test_live_client_is_built_without_cache(tmp_path):
    client = make_client(replay_config(tmp_path, tmp_path, mode="live"))
    assert client.mode == "live" and client.cache is None
    client.close()
