"""Build expected.trace for each golden scenario from its hand-written deltas.

steps.txt has one line per plan step: either ``ACCEPTED`` followed by
``+(atom)`` / ``-(atom)`` changes, or ``REJECTED`` followed by the failing
conjunct. Nothing here touches the engine, so the output is an independent
reference for the trace renderer.

Run ``python3 tests/golden/materialize.py`` after editing a scenario.
"""

from __future__ import annotations

import re
import sys
from pathlib import Path

HERE = Path(__file__).parent
ATOM_RE = re.compile(r"\([a-z][a-z0-9_-]*(?: [a-z0-9_][a-z0-9_.-]*)*\)")
DELTA_RE = re.compile(r"([+-])(\([^()]*\))")


def initial_atoms(problem_text: str) -> set[str]:
    start = problem_text.index("(:init")
    end = problem_text.find("(:utterances", start)
    section = problem_text[start : end if end >= 0 else len(problem_text)]
    return set(ATOM_RE.findall(section[len("(:init") :]))


def plan_lines(plan_text: str) -> list[str]:
    return [line.strip() for line in plan_text.splitlines() if line.strip()]


def materialize(scenario: Path) -> str:
    state = initial_atoms((scenario / "problem.pddl").read_text())
    plan = plan_lines((scenario / "plan.pddl").read_text())
    steps = [l for l in (scenario / "steps.txt").read_text().splitlines() if l.strip()]
    if len(plan) != len(steps):
        raise ValueError(f"{scenario.name}: {len(plan)} actions but {len(steps)} step lines")
    out = ["STEP 0", "STATE " + " ".join(sorted(state))]
    for t, (action, line) in enumerate(zip(plan, steps), start=1):
        verdict, _, rest = line.partition(" ")
        if verdict == "REJECTED":
            out.append(f"STEP {t} ACTION {action} REJECTED {rest}")
        elif verdict == "ACCEPTED":
            adds = {a for sign, a in DELTA_RE.findall(rest) if sign == "+"}
            dels = {a for sign, a in DELTA_RE.findall(rest) if sign == "-"}
            state = (state - dels) | adds
            out.append(f"STEP {t} ACTION {action} ACCEPTED")
        else:
            raise ValueError(f"{scenario.name} step {t}: bad verdict {verdict!r}")
        out.append("STATE " + " ".join(sorted(state)))
    return "\n".join(out) + "\n"


def scenarios() -> list[Path]:
    return sorted(p for p in HERE.iterdir() if (p / "steps.txt").is_file())


if __name__ == "__main__":
    for s in scenarios():
        (s / "expected.trace").write_text(materialize(s), newline="\n")
        print(f"wrote {s.name}/expected.trace", file=sys.stderr)
