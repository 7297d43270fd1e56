"""Per-target inference: identification, generation, static validation, and
the bounded refinement loop.

Each target test gets one conversation. The loop regenerates the checker on
every piece of feedback, stopping at the attempt cap or when the same
feedback kind repeats too many times in a row.
"""

from __future__ import annotations

import ast
import logging
import re
from pathlib import Path

from flycatcher.artifacts import (
    AnnotatedTest,
    CheckerArtifact,
    Feedback,
    PipelineError,
    Status,
    make_checker_id,
    no_assertion_feedback,
    non_sut_method_feedback,
    save_artifact,
    scaffold,
    syntax_error_feedback,
    unqualified_signature_feedback,
)
from flycatcher.corpus import CorpusSplit
from flycatcher.gateway import Conversation, ProviderError
from flycatcher.prompts import (
    STATE_CHANGING_MARK,
    render_generation_prompt,
    render_identification_prompt,
    render_refinement_prompt,
)
from flycatcher.signatures import is_canonical, parse_signature
from flycatcher.subject import SubjectProject, TestCase
from flycatcher.validate import dynamic_validate

log = logging.getLogger("flycatcher.pipeline")

ASSERTION_HELPERS = ("assertTrue", "assertEquals", "assertNotNull")

_FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*\n(.*?)```", re.DOTALL)
_CALL_NAME_RE = re.compile(r"([A-Za-z_]\w*)\s*\(")


# ---------------------------------------------------------------------------
# Identification of state-changing methods
# ---------------------------------------------------------------------------


def _call_name_map(test: TestCase) -> dict[str, str]:
    """Simple callee name -> canonical signature for the test's resolved calls."""
    mapping = {}
    for sig_text in test.sut_calls:
        sig = parse_signature(sig_text)
        mapping[sig.type_name if sig.is_constructor else sig.method] = sig_text
    return mapping


def _body_candidate(reply: str) -> str:
    match = _FENCE_RE.search(reply)
    return match.group(1) if match else reply


def _recognizable(reply_body: str, original_body: str) -> bool:
    reply_lines = {line.strip() for line in reply_body.splitlines() if line.strip()}
    for line in original_body.splitlines():
        normalized = line.strip()
        if normalized and normalized in reply_lines:
            return True
        if normalized and any(r.startswith(normalized) for r in reply_lines):
            return True
    return False


def identify_state_changing(
    project: SubjectProject, test: TestCase, provider, conversation: Conversation
) -> AnnotatedTest:
    """Ask the provider to flag side-effecting calls; constructors are always in."""
    if not test.sut_calls:
        raise PipelineError(f"{test.id}: no resolved subject calls to identify")
    implementations = [project.method_index[sig].body for sig in test.sut_calls]
    prompt = render_identification_prompt(test.body, implementations)

    body = None
    for _ in range(2):  # one retry on an unrecognizable reply
        reply = conversation.send(prompt, provider)
        candidate = _body_candidate(reply.content)
        if _recognizable(candidate, test.body):
            body = candidate
            break
        log.warning("%s: identification reply had no recognizable test body", test.id)
    if body is None:
        raise PipelineError(f"{test.id}: identification reply unusable after retry")

    names = _call_name_map(test)
    state_changing: set[str] = set()
    for line in body.splitlines():
        if STATE_CHANGING_MARK not in line:
            continue
        code = line.split(STATE_CHANGING_MARK)[0]
        matched = False
        for name in _CALL_NAME_RE.findall(code):
            sig = names.get(name)
            if sig is not None:
                state_changing.add(sig)
                matched = True
        if not matched:
            log.warning("%s: flagged line has no resolved call, ignored: %s", test.id, line.strip())

    for sig_text in test.sut_calls:
        if parse_signature(sig_text).is_constructor:
            state_changing.add(sig_text)

    return AnnotatedTest(
        base=test,
        state_changing=state_changing,
        annotated_body=_annotate_body(test.body, names, state_changing),
    )


def _annotate_body(body: str, names: dict[str, str], state_changing: set[str]) -> str:
    """Re-derive the annotated test from our own resolution, not the reply."""
    out = []
    for line in body.splitlines():
        flagged = any(
            names.get(name) in state_changing for name in _CALL_NAME_RE.findall(line)
        )
        if flagged and STATE_CHANGING_MARK not in line:
            out.append(f"{line}  {STATE_CHANGING_MARK}")
        else:
            out.append(line)
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Generation and static validation
# ---------------------------------------------------------------------------


def extract_checker_source(reply: str, context: str = "") -> tuple[str | None, Feedback | None]:
    """First fenced code block of the reply, or syntax-error feedback."""
    blocks = _FENCE_RE.findall(reply)
    if not blocks:
        return None, syntax_error_feedback()
    if len(blocks) > 1:
        log.warning("%s: reply contains %d code blocks, taking the first", context, len(blocks))
    return blocks[0].strip("\n") + "\n", None


def _callee(node: ast.Call) -> str | None:
    if isinstance(node.func, ast.Name):
        return node.func.id
    if isinstance(node.func, ast.Attribute):
        return node.func.attr
    return None


def _signature_literals(fn: ast.FunctionDef) -> list[str]:
    """String literals compared against an operation's signature field."""
    found: list[str] = []
    for node in ast.walk(fn):
        if not isinstance(node, ast.Compare):
            continue
        sides = [node.left, *node.comparators]
        if not any(isinstance(s, ast.Attribute) and s.attr == "signature" for s in sides):
            continue
        for side in sides:
            found.extend(_string_constants(side))
    seen = set()
    unique = []
    for text in found:
        if text not in seen:
            seen.add(text)
            unique.append(text)
    return unique


def _string_constants(node) -> list[str]:
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        return [node.value]
    if isinstance(node, (ast.Tuple, ast.List, ast.Set)):
        return [
            e.value for e in node.elts if isinstance(e, ast.Constant) and isinstance(e.value, str)
        ]
    return []


def static_validate(
    artifact: CheckerArtifact, project: SubjectProject, extra_assertions=()
) -> Feedback | None:
    """Single method, has assertions, handles only fully qualified SUT methods.

    On success records the handled signatures and advances the status.
    """
    try:
        tree = ast.parse(artifact.checker_source)
    except SyntaxError:
        return syntax_error_feedback()
    if len(tree.body) != 1 or not isinstance(tree.body[0], ast.FunctionDef):
        return syntax_error_feedback()
    fn = tree.body[0]

    helpers = set(ASSERTION_HELPERS) | set(extra_assertions)
    has_assertion = any(
        isinstance(node, ast.Call) and _callee(node) in helpers for node in ast.walk(fn)
    )
    if not has_assertion:
        return no_assertion_feedback()

    literals = _signature_literals(fn)
    canonical = [text for text in literals if is_canonical(text)]
    unknown = sorted(text for text in canonical if text not in project.method_index)
    if unknown:
        return non_sut_method_feedback(unknown)
    unqualified = sorted(text for text in literals if not is_canonical(text))
    if unqualified:
        return unqualified_signature_feedback(unqualified)

    artifact.handled_signatures = sorted(set(canonical))
    artifact.advance(Status.STATICALLY_VALID)
    return None


def append_refinement(conversation: Conversation, provider, feedback: Feedback):
    """Send the refinement message in the same conversation, never a fresh one."""
    if not conversation.exchanges:
        raise RuntimeError("internal error: refinement requires an existing conversation")
    message = render_refinement_prompt(feedback.stage, feedback.message)
    return conversation.send(message, provider)


# ---------------------------------------------------------------------------
# The bounded refinement loop
# ---------------------------------------------------------------------------


def refine_loop(
    project: SubjectProject,
    target: TestCase,
    provider,
    split: CorpusSplit,
    out_dir: Path,
    work_dir: Path,
    k: int = 125,
    same_kind_cutoff: int = 5,
    cap_s: float = 1800.0,
    on_violation: str = "raise",
    extra_assertions=(),
) -> tuple[CheckerArtifact, Conversation]:
    """Drive identify -> generate -> validate with feedback until success or cutoff."""
    if k < 1 or same_kind_cutoff < 1:
        raise ValueError("k and same_kind_cutoff must be at least 1")

    checker_id = make_checker_id(target.id)
    checker_dir = Path(out_dir) / "checkers" / checker_id
    checker_dir.mkdir(parents=True, exist_ok=True)
    transcript = checker_dir / "transcript.jsonl"
    if transcript.exists():
        transcript.unlink()  # a rerun starts a fresh conversation
    conversation = Conversation(transcript_path=transcript)

    artifact = CheckerArtifact(id=checker_id, target=target.id)

    try:
        annotated = identify_state_changing(project, target, provider, conversation)
    except (PipelineError, ProviderError) as err:
        log.warning("%s: identification failed: %s", target.id, err)
        artifact.advance(Status.REJECTED)
        save_artifact(checker_dir, artifact)
        return artifact, conversation
    artifact.monitored_signatures = sorted(annotated.state_changing)

    context = [project.test_by_id(test_id) for test_id in split.context]
    message = render_generation_prompt(
        annotated.annotated_body, target.imports, [t.body for t in context]
    )

    while True:
        artifact.attempts += 1
        try:
            if artifact.attempts == 1:
                reply = conversation.send(message, provider)
            else:
                reply = append_refinement(conversation, provider, feedback)
        except ProviderError as err:
            log.warning("%s: provider failed on attempt %d: %s", target.id, artifact.attempts, err)
            artifact.advance(Status.REJECTED)
            break

        source, feedback = extract_checker_source(reply.content, context=target.id)
        if feedback is None:
            artifact.checker_source = source
            feedback = static_validate(artifact, project, extra_assertions)
        if feedback is None:
            scaffold(artifact)  # must render; failures here are internal bugs
            feedback = dynamic_validate(
                project,
                artifact,
                split,
                cap_s=cap_s,
                work_dir=Path(work_dir) / checker_id,
                on_violation=on_violation,
                outcome_path=Path(out_dir)
                / "outcomes"
                / f"{checker_id}_attempt{artifact.attempts:03d}.json",
            )
        if feedback is None:
            break  # dynamic_validate advanced the status to validated

        artifact.failure_history.append(feedback.kind.value)
        tail = artifact.failure_history[-same_kind_cutoff:]
        if len(tail) == same_kind_cutoff and len(set(tail)) == 1:
            log.info(
                "%s: rejected after %d consecutive %s", target.id, same_kind_cutoff, tail[0]
            )
            artifact.advance(Status.REJECTED)
            break
        if artifact.attempts >= k:
            log.info("%s: rejected at the attempt cap k=%d", target.id, k)
            artifact.advance(Status.REJECTED)
            break

    save_artifact(checker_dir, artifact)
    return artifact, conversation
