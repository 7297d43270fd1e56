"""Dynamic validation and cross-validation on instrumented trees.

Outcome classification is a fixed priority: a recursion-guard hit beats a
timeout beats a test failure beats a pass, so identical logs always map to
the same feedback. Checker failures are attributed through the checker id
embedded in every violation message.
"""

from __future__ import annotations

import json
import re
import shutil
from dataclasses import dataclass
from pathlib import Path

from flycatcher.artifacts import (
    CheckerArtifact,
    Feedback,
    PipelineError,
    Status,
    recursive_call_feedback,
    test_failure_feedback,
    timeout_feedback,
)
from flycatcher.corpus import CorpusSplit
from flycatcher.instrument import GUARD_MESSAGE, InstrumentationPlan, instrument
from flycatcher.runner import RunnerError, RunResult, run_tests
from flycatcher.subject import SubjectProject

DEFAULT_FAILED_LINE = r"^FAILED\s+(\S+)(?:\s+-\s+(.*))?$"
VIOLATION_ATTRIBUTION = r"CheckerViolation \[checker ([^\]]+)\]"
DEFAULT_CAP_S = 1800.0  # whole validation batch budget


@dataclass
class RunOutcome:
    checker_id: str
    tests_run: int
    failures: list[tuple[str, str]]
    recursion_hit: bool
    wall_time_s: float
    timed_out: bool
    log_excerpt: str = ""

    @property
    def passed(self) -> bool:
        return not self.failures and not self.recursion_hit and not self.timed_out

    def to_dict(self) -> dict:
        return {
            "checker_id": self.checker_id,
            "tests_run": self.tests_run,
            "failures": [list(f) for f in self.failures],
            "recursion_hit": self.recursion_hit,
            "wall_time_s": self.wall_time_s,
            "timed_out": self.timed_out,
            "log_excerpt": self.log_excerpt,
            "passed": self.passed,
        }


def parse_failures(output: str, pattern: str = DEFAULT_FAILED_LINE) -> list[tuple[str, str]]:
    failures = []
    for match in re.finditer(pattern, output, re.MULTILINE):
        groups = match.groups()
        test_id = groups[0]
        excerpt = groups[1] if len(groups) > 1 and groups[1] else ""
        failures.append((test_id, excerpt))
    return failures


def parse_tests_run(output: str) -> int:
    total = 0
    for count, _ in re.findall(r"(\d+) (passed|failed|errors?)", output):
        total += int(count)
    return total


def _tail(text: str, limit: int = 2000) -> str:
    return text[-limit:] if len(text) > limit else text


def assess(
    checker_id: str,
    result: RunResult,
    cap_s: float,
    failure_pattern: str = DEFAULT_FAILED_LINE,
) -> tuple[RunOutcome, Feedback | None]:
    """Classify one validation run; None feedback means pass."""
    output = result.output
    recursion = GUARD_MESSAGE in output
    timed_out = result.timed_out or result.wall_time_s > cap_s
    failures = parse_failures(output, failure_pattern)
    if result.exit_code != 0 and not failures:
        # infrastructure failure or a runner whose output we cannot parse:
        # surface the raw log as a test failure
        failures = [("<suite>", _tail(output))]
    outcome = RunOutcome(
        checker_id=checker_id,
        tests_run=parse_tests_run(output),
        failures=failures,
        recursion_hit=recursion,
        wall_time_s=result.wall_time_s,
        timed_out=timed_out,
        log_excerpt=_tail(output, 4000),
    )
    if recursion:
        return outcome, recursive_call_feedback()
    if timed_out:
        return outcome, timeout_feedback(cap_s)
    if failures:
        logs = "; ".join(
            f"{test_id}: {excerpt}" if excerpt else test_id for test_id, excerpt in failures
        )
        return outcome, test_failure_feedback(logs)
    return outcome, None


def dynamic_validate(
    project: SubjectProject,
    artifact: CheckerArtifact,
    split: CorpusSplit,
    cap_s: float = DEFAULT_CAP_S,
    work_dir: Path | None = None,
    on_violation: str = "raise",
    outcome_path: Path | None = None,
    rerun_flaky: bool = False,
) -> Feedback | None:
    """Run the split's validation tests on a tree instrumented for this checker."""
    work_dir = Path(work_dir) if work_dir else project.root.parent / "fc_work"
    tree = work_dir / "tree"
    if tree.exists():
        shutil.rmtree(tree)
    plan = InstrumentationPlan.from_checkers([artifact], tree, on_violation=on_violation)
    instrument(project, plan)

    result = _run_or_synthesize(project, tree, split.run_list(), cap_s)
    outcome, feedback = assess(artifact.id, result, cap_s)
    if feedback is not None and feedback.kind.value == "TestFailure" and rerun_flaky:
        result = _run_or_synthesize(project, tree, split.run_list(), cap_s)
        outcome, feedback = assess(artifact.id, result, cap_s)

    if outcome_path is not None:
        outcome_path.parent.mkdir(parents=True, exist_ok=True)
        outcome_path.write_text(json.dumps(outcome.to_dict(), indent=2, sort_keys=True) + "\n")
    if feedback is None:
        artifact.advance(Status.VALIDATED)
    return feedback


def _run_or_synthesize(project, tree, test_ids, cap_s) -> RunResult:
    try:
        return run_tests(tree, project.test_runner_command, test_ids, cap_s)
    except RunnerError as err:
        return RunResult(
            command=[],
            exit_code=2,
            stdout="",
            stderr=f"runner infrastructure failure: {err}",
            wall_time_s=0.0,
            timed_out=False,
        )


def cross_validate(
    project: SubjectProject,
    artifacts: list[CheckerArtifact],
    passing_ids: list[str],
    work_dir: Path,
    cap_s: float = DEFAULT_CAP_S,
    on_violation: str = "raise",
) -> dict[str, bool]:
    """Run the full passing suite with every validated checker enabled at once.

    A checker whose assertions never fail anywhere is cross-validated.
    Recursion cannot be attributed to a checker id (the guard fires before
    any id is known), so it aborts the whole run like an infrastructure
    failure would.
    """
    for artifact in artifacts:
        if artifact.rank() < 2:  # below validated
            raise PipelineError(f"{artifact.id}: cross-validation needs a validated checker")
    if not artifacts:
        return {}

    tree = Path(work_dir) / "crossval"
    if tree.exists():
        shutil.rmtree(tree)
    plan = InstrumentationPlan.from_checkers(artifacts, tree, on_violation=on_violation)
    instrument(project, plan)
    result = run_tests(tree, project.test_runner_command, list(passing_ids), cap_s)

    failed_ids = set(re.findall(VIOLATION_ATTRIBUTION, result.output))
    if GUARD_MESSAGE in result.output:
        raise RunnerError("cross-validation aborted: a checker hit the recursion guard")
    if result.exit_code != 0 and not failed_ids:
        raise RunnerError(
            f"cross-validation suite failed without checker attribution:\n{_tail(result.output)}"
        )

    flags: dict[str, bool] = {}
    for artifact in artifacts:
        ok = artifact.id not in failed_ids
        flags[artifact.id] = ok
        if ok:
            artifact.advance(Status.CROSS_VALIDATED)
    return flags
