import shutil
from pathlib import Path

import pytest

from tomtrace.engine import World, validate_and_filter
from tomtrace.pddl import canonical_domain, parse_plan, parse_problem

TESTS = Path(__file__).parent
GOLDEN = TESTS / "golden"
REPLAY = TESTS / "fixtures" / "replay"


def golden_dirs() -> list[Path]:
    return sorted(p for p in GOLDEN.iterdir() if (p / "problem.pddl").is_file())


def load_scenario(directory: Path):
    """(world, trace) for a golden scenario directory."""
    domain = canonical_domain()
    problem = parse_problem((directory / "problem.pddl").read_text(), domain)
    plan = parse_plan((directory / "plan.pddl").read_text())
    world = World(domain, problem)
    return world, validate_and_filter(problem.init, plan, world)


@pytest.fixture
def domain():
    return canonical_domain()


@pytest.fixture
def replay_cache(tmp_path):
    """A private copy of the recorded cache, so tests cannot disturb the fixture."""
    target = tmp_path / "cache"
    shutil.copytree(REPLAY / "cache", target)
    return target
