"""Checker artifact model: lifecycle, feedback kinds, scaffolding, persistence.

An artifact's status only ever moves forward along
draft -> statically_valid -> validated -> cross_validated, or sideways to
rejected. Feedback kinds map to the three refinement stages; the mapping is
fixed here and nowhere else.
"""

from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class PipelineError(Exception):
    """A target test failed in a way feedback cannot repair."""


class Status(str, Enum):
    DRAFT = "draft"
    STATICALLY_VALID = "statically_valid"
    VALIDATED = "validated"
    CROSS_VALIDATED = "cross_validated"
    REJECTED = "rejected"


_STATUS_RANK = {
    Status.DRAFT: 0,
    Status.STATICALLY_VALID: 1,
    Status.VALIDATED: 2,
    Status.CROSS_VALIDATED: 3,
}


class FeedbackKind(str, Enum):
    SYNTAX_ERROR = "SyntaxError"
    NO_ASSERTION = "NoAssertion"
    NON_SUT_METHOD = "NonSutMethod"
    UNQUALIFIED_SIGNATURE = "UnqualifiedSignature"
    TEST_FAILURE = "TestFailure"
    RECURSIVE_CALL = "RecursiveCall"
    TIMEOUT = "Timeout"


# Stage word used in the refinement prompt, per feedback kind.
STAGE_BY_KIND = {
    FeedbackKind.SYNTAX_ERROR: "compile",
    FeedbackKind.NO_ASSERTION: "compile",
    FeedbackKind.NON_SUT_METHOD: "compile",
    FeedbackKind.UNQUALIFIED_SIGNATURE: "compile",
    FeedbackKind.RECURSIVE_CALL: "instrument",
    FeedbackKind.TEST_FAILURE: "execute",
    FeedbackKind.TIMEOUT: "execute",
}


@dataclass
class Feedback:
    kind: FeedbackKind
    message: str

    @property
    def stage(self) -> str:
        return STAGE_BY_KIND[self.kind]


def syntax_error_feedback() -> Feedback:
    return Feedback(
        FeedbackKind.SYNTAX_ERROR,
        "Syntax error in Python code. Make sure that the checker method is "
        "indeed a single method, i.e. do not output helper methods or classes.",
    )


def no_assertion_feedback() -> Feedback:
    return Feedback(
        FeedbackKind.NO_ASSERTION,
        "The checker does not contain a call to an assertion method. "
        "Make sure to include assertions outside comments.",
    )


def non_sut_method_feedback(signatures: list[str]) -> Feedback:
    return Feedback(
        FeedbackKind.NON_SUT_METHOD,
        "The system under test (SUT) does not contain the following methods: "
        f"{', '.join(signatures)}. Make sure that the checker handles methods "
        "from the system under analysis rather than built-in functions or "
        "methods from the test suite.",
    )


def unqualified_signature_feedback(literals: list[str]) -> Feedback:
    return Feedback(
        FeedbackKind.UNQUALIFIED_SIGNATURE,
        "The checker handles methods without fully qualified signature: "
        f"{', '.join(literals)}. Use fully qualified names for the method and "
        "all argument types.",
    )


def test_failure_feedback(logs: str) -> Feedback:
    return Feedback(
        FeedbackKind.TEST_FAILURE,
        f"The following tests fail: {logs}. The checker should be generic and "
        "robust enough to meaningfully satisfy all test cases.",
    )


def recursive_call_feedback() -> Feedback:
    return Feedback(
        FeedbackKind.RECURSIVE_CALL,
        "This checker is calling a state-changing method. This is not allowed.",
    )


def timeout_feedback(cap_s: float) -> Feedback:
    cap = int(cap_s)
    rendered = f"{cap // 60}min" if cap % 60 == 0 and cap >= 60 else f"{cap}s"
    return Feedback(
        FeedbackKind.TIMEOUT,
        f"The checker is making the tests run for more than {rendered}.",
    )


@dataclass
class AnnotatedTest:
    """Target test plus the set of signatures identified as state-changing."""

    base: object  # subject.TestCase
    state_changing: set[str]
    annotated_body: str


@dataclass
class CheckerArtifact:
    id: str
    target: str
    checker_source: str = ""
    handled_signatures: list[str] = field(default_factory=list)
    monitored_signatures: list[str] = field(default_factory=list)
    status: Status = Status.DRAFT
    attempts: int = 0
    transcript_ref: str = "transcript.jsonl"
    failure_history: list[str] = field(default_factory=list)

    def advance(self, new_status: Status) -> None:
        """Move status forward; backwards transitions are programming errors."""
        if new_status == Status.REJECTED:
            self.status = new_status
            return
        if self.status == Status.REJECTED:
            raise PipelineError(f"{self.id}: rejected is terminal")
        if _STATUS_RANK[new_status] < _STATUS_RANK[self.status]:
            raise PipelineError(
                f"{self.id}: status may not regress {self.status.value} -> {new_status.value}"
            )
        self.status = new_status

    def rank(self) -> int:
        return -1 if self.status == Status.REJECTED else _STATUS_RANK[self.status]

    def to_meta(self) -> dict:
        return {
            "id": self.id,
            "target": self.target,
            "status": self.status.value,
            "attempts": self.attempts,
            "handled_signatures": list(self.handled_signatures),
            "monitored_signatures": list(self.monitored_signatures),
            "failure_history": list(self.failure_history),
            "transcript": self.transcript_ref,
        }


def make_checker_id(target_id: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9]+", "_", target_id).strip("_").lower()
    return f"chk_{slug}"


def unit_module_name(checker_id: str) -> str:
    return "unit_" + re.sub(r"[^A-Za-z0-9]+", "_", checker_id).lower()


def checker_entry_name(checker_source: str) -> str:
    """Name of the single function the checker source defines."""
    tree = ast.parse(checker_source)
    for node in tree.body:
        if isinstance(node, ast.FunctionDef):
            return node.name
    raise PipelineError("checker source holds no function definition")


SCAFFOLD_TEMPLATE = '''"""Container for inferred checker {checker_id}.

The guard raises on reentry, is set for the checker body, and is always
cleared on exit.
"""

from fc_runtime.core import (
    ABSENT,
    STATE,
    CheckerRecursionError,
    CheckerViolation,
    assertEquals,
    assertNotNull,
    assertTrue,
    guard_enter,
    guard_exit,
)

CHECKER_ID = "{checker_id}"

{checker_source}

def run_checker(op, shadow_state):
    guard_enter(CHECKER_ID)
    try:
        {entry_name}(op, shadow_state)
    finally:
        guard_exit()
'''


def scaffold(artifact: CheckerArtifact) -> str:
    """Wrap the checker source into a compilable, guarded unit module."""
    if artifact.rank() < _STATUS_RANK[Status.STATICALLY_VALID]:
        raise PipelineError(f"{artifact.id}: scaffold requires a statically valid checker")
    source = artifact.checker_source.rstrip("\n")
    unit = SCAFFOLD_TEMPLATE.format(
        checker_id=artifact.id,
        checker_source=source,
        entry_name=checker_entry_name(source),
    )
    ast.parse(unit)  # a unit that does not parse is a scaffolding bug
    return unit


NOOP_CHECKER_SOURCE = (
    "def noop_checker(op, shadow_state):\n"
    "    # Observes the operation and asserts only a tautology.\n"
    "    assertTrue(True)\n"
)


def make_noop_checker(checker_id: str = "chk_noop", monitored=()) -> CheckerArtifact:
    """Bundled do-nothing checker, used for behavioral-identity and overhead runs."""
    artifact = CheckerArtifact(
        id=checker_id,
        target="<noop>",
        checker_source=NOOP_CHECKER_SOURCE,
        monitored_signatures=sorted(monitored),
    )
    # a single function with one assertion helper call is statically valid by
    # construction, so the status can be set without running the validator
    artifact.advance(Status.STATICALLY_VALID)
    return artifact


# ---------------------------------------------------------------------------
# Persistence: checkers/<id>/{checker.src, meta.json, transcript.jsonl}
# ---------------------------------------------------------------------------


def save_artifact(directory: Path, artifact: CheckerArtifact) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "checker.src").write_text(artifact.checker_source)
    (directory / "meta.json").write_text(
        json.dumps(artifact.to_meta(), indent=2, sort_keys=True) + "\n"
    )


def load_artifact(directory: Path) -> CheckerArtifact:
    meta = json.loads((directory / "meta.json").read_text())
    return CheckerArtifact(
        id=meta["id"],
        target=meta["target"],
        checker_source=(directory / "checker.src").read_text(),
        handled_signatures=list(meta["handled_signatures"]),
        monitored_signatures=list(meta["monitored_signatures"]),
        status=Status(meta["status"]),
        attempts=int(meta["attempts"]),
        transcript_ref=meta.get("transcript", "transcript.jsonl"),
        failure_history=list(meta["failure_history"]),
    )
