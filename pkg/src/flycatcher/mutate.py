"""Desk-scale mutation testing over subject classes.

Six operators produce small syntactic faults as textual span replacements,
so applying then reverting a mutant restores the file byte-exactly. A
lightweight line-tracing probe (pytest runners only) marks mutants on
unexecuted lines as not covered. Evaluation runs the target tests plain
first, then with checkers instrumented, and always reverts; the working
tree hash is verified after every mutant.
"""

from __future__ import annotations

import ast
import hashlib
import json
import logging
import os
import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from flycatcher.instrument import InstrumentationPlan, instrument
from flycatcher.runner import run_tests
from flycatcher.signatures import parse_signature
from flycatcher.subject import SubjectProject, module_namespace

log = logging.getLogger("flycatcher.mutate")


class MutationError(Exception):
    pass


class MutantApplyError(MutationError):
    """The mutant's span no longer matches the file (span drift)."""


class MutationOperator(str, Enum):
    EMPTY_RETURN = "EmptyReturn"
    NEGATE_CONDITIONAL = "NegateConditional"
    BOOLEAN_LITERAL_FLIP = "BooleanLiteralFlip"
    ARITHMETIC_SWAP = "ArithmeticSwap"
    CONSTANT_NUDGE = "ConstantNudge"
    REMOVE_INITIALIZER = "RemoveInitializer"


STATUS_NOT_COVERED = "not_covered"
STATUS_KILLED_BY_TESTS = "killed_by_tests"
STATUS_SURVIVED = "survived"
STATUS_KILLED_BY_CHECKER = "killed_by_checker"
STATUS_PENDING = "pending"
STATUS_SKIPPED = "skipped_infrastructure"


@dataclass
class MutantRecord:
    id: str
    operator: MutationOperator
    file: str  # project-relative posix path
    span: tuple[int, int]
    original_snippet: str
    mutated_snippet: str
    line: int
    status: str = STATUS_PENDING
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "operator": self.operator.value,
            "file": self.file,
            "span": list(self.span),
            "original_snippet": self.original_snippet,
            "mutated_snippet": self.mutated_snippet,
            "line": self.line,
            "status": self.status,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MutantRecord":
        return cls(
            id=data["id"],
            operator=MutationOperator(data["operator"]),
            file=data["file"],
            span=(data["span"][0], data["span"][1]),
            original_snippet=data["original_snippet"],
            mutated_snippet=data["mutated_snippet"],
            line=data["line"],
            status=data.get("status", STATUS_PENDING),
            note=data.get("note", ""),
        )


# ---------------------------------------------------------------------------
# Site enumeration
# ---------------------------------------------------------------------------

_EMPTY_BY_ANNOTATION = {
    "set": "set()",
    "frozenset": "frozenset()",
    "dict": "{}",
    "Dict": "{}",
    "list": "[]",
    "List": "[]",
    "tuple": "()",
    "Tuple": "()",
    "str": "''",
    "int": "0",
    "float": "0.0",
    "bool": "False",
    "Set": "set()",
    "FrozenSet": "frozenset()",
}

_ARITH_SWAP = {
    ast.Add: "-",
    ast.Sub: "+",
    ast.Mult: "/",
    ast.Div: "*",
    ast.FloorDiv: "*",
    ast.Mod: "*",
}


def _annotation_key(node) -> str | None:
    if node is None:
        return None
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        return node.attr
    if isinstance(node, ast.Subscript):
        return _annotation_key(node.value)
    return None


def _node_span(source: str, node, offsets) -> tuple[int, int]:
    start = offsets[node.lineno - 1] + node.col_offset
    end = offsets[node.end_lineno - 1] + node.end_col_offset
    return start, end


def _line_offsets(source: str) -> list[int]:
    offsets = [0]
    for line in source.splitlines(keepends=True):
        offsets.append(offsets[-1] + len(line))
    return offsets


def _scope_classes(project: SubjectProject, scope: set[str]):
    """Yield (file, namespace, ClassDef) for every scoped declaring type."""
    known = {parse_signature(sig).declaring_type for sig in project.method_index}
    unknown = sorted(scope - known)
    if unknown:
        raise MutationError(f"scope names unknown declaring types: {', '.join(unknown)}")
    files = sorted({info.file for info in project.method_index.values()})
    for file in files:
        namespace = None
        for source_dir in project.source_dirs:
            try:
                file.relative_to(source_dir)
            except ValueError:
                continue
            namespace = module_namespace(file, source_dir)
        if namespace is None:
            continue
        tree = ast.parse(file.read_text())
        for cls in tree.body:
            if isinstance(cls, ast.ClassDef) and f"{namespace}.{cls.name}" in scope:
                yield file, namespace, cls


def generate_mutants(project: SubjectProject, scope: set[str]) -> list[MutantRecord]:
    """All applicable operator sites within the scoped classes, in stable order."""
    if not scope:
        raise MutationError("mutation scope must name at least one declaring type")
    sites: list[tuple[str, tuple[int, int], MutationOperator, str, str, int]] = []
    for file, _, cls in _scope_classes(project, set(scope)):
        source = file.read_text()
        offsets = _line_offsets(source)
        rel = file.relative_to(project.root).as_posix()
        sites.extend(_class_sites(source, offsets, rel, cls))

    unique = {}
    for rel, span, operator, original, mutated, line in sites:
        unique[(rel, span, operator.value)] = (rel, span, operator, original, mutated, line)
    ordered = sorted(unique.values(), key=lambda s: (s[0], s[1][0], s[1][1], s[2].value))
    return [
        MutantRecord(
            id=f"m{index:04d}",
            operator=operator,
            file=rel,
            span=span,
            original_snippet=original,
            mutated_snippet=mutated,
            line=line,
        )
        for index, (rel, span, operator, original, mutated, line) in enumerate(ordered)
    ]


def _class_sites(source, offsets, rel, cls):
    sites = []

    def add(node, operator, mutated, stmt=False):
        span = _node_span(source, node, offsets)
        original = source[span[0] : span[1]]
        if mutated == original:
            return
        sites.append((rel, span, operator, original, mutated, node.lineno))

    for stmt in cls.body:
        # class-level literal initializer: drop the value, keep the annotation
        if (
            isinstance(stmt, ast.AnnAssign)
            and stmt.value is not None
            and isinstance(stmt.value, ast.Constant)
        ):
            add(stmt, MutationOperator.REMOVE_INITIALIZER, ast.unparse(
                ast.AnnAssign(
                    target=stmt.target,
                    annotation=stmt.annotation,
                    value=None,
                    simple=stmt.simple,
                )
            ))
        if not isinstance(stmt, ast.FunctionDef):
            continue
        method = stmt
        return_key = _annotation_key(method.returns)
        for node in ast.walk(method):
            if isinstance(node, ast.Return) and node.value is not None:
                empty = _EMPTY_BY_ANNOTATION.get(return_key, "None")
                add(node, MutationOperator.EMPTY_RETURN, f"return {empty}")
            elif isinstance(node, (ast.If, ast.While)):
                test_span = _node_span(source, node.test, offsets)
                segment = source[test_span[0] : test_span[1]]
                sites.append(
                    (
                        rel,
                        test_span,
                        MutationOperator.NEGATE_CONDITIONAL,
                        segment,
                        f"not ({segment})",
                        node.test.lineno,
                    )
                )
            elif isinstance(node, ast.Constant) and isinstance(node.value, bool):
                if ast.get_source_segment(source, node) in ("True", "False"):
                    add(node, MutationOperator.BOOLEAN_LITERAL_FLIP, str(not node.value))
            elif (
                isinstance(node, ast.Constant)
                and isinstance(node.value, (int, float))
                and not isinstance(node.value, bool)
            ):
                add(node, MutationOperator.CONSTANT_NUDGE, repr(node.value + 1))
            elif isinstance(node, ast.BinOp) and type(node.op) in _ARITH_SWAP:
                swapped = _ARITH_SWAP[type(node.op)]
                mutated = f"({ast.unparse(node.left)} {swapped} {ast.unparse(node.right)})"
                add(node, MutationOperator.ARITHMETIC_SWAP, mutated)
            elif (
                method.name == "__init__"
                and isinstance(node, ast.Assign)
                and len(node.targets) == 1
                and isinstance(node.targets[0], ast.Attribute)
                and isinstance(node.targets[0].value, ast.Name)
                and node.targets[0].value.id == "self"
                and isinstance(node.value, ast.Constant)
            ):
                add(node, MutationOperator.REMOVE_INITIALIZER, "pass")
    return sites


# ---------------------------------------------------------------------------
# Apply / revert / hashing
# ---------------------------------------------------------------------------


def apply_mutant(root: Path, record: MutantRecord) -> None:
    path = Path(root) / record.file
    text = path.read_text()
    start, end = record.span
    if text[start:end] != record.original_snippet:
        raise MutantApplyError(f"{record.id}: span drifted in {record.file}")
    path.write_text(text[:start] + record.mutated_snippet + text[end:])


def revert_mutant(root: Path, record: MutantRecord) -> None:
    path = Path(root) / record.file
    text = path.read_text()
    start = record.span[0]
    end = start + len(record.mutated_snippet)
    if text[start:end] != record.mutated_snippet:
        raise MutantApplyError(f"{record.id}: cannot revert, file changed under us")
    path.write_text(text[:start] + record.original_snippet + text[end:])


_HASH_IGNORES = {"__pycache__", ".pytest_cache", ".git", "fc_out"}


def tree_hash(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        rel = path.relative_to(root)
        if _HASH_IGNORES & set(rel.parts) or rel.suffix == ".pyc":
            continue
        if path.is_file():
            digest.update(rel.as_posix().encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Coverage probe (pytest-style runners)
# ---------------------------------------------------------------------------

_PROBE_SCRIPT = """\
import json, os, sys, trace
import pytest

out_path = sys.argv[1]
tracer = trace.Trace(count=1, trace=0)
code = tracer.runfunc(pytest.main, sys.argv[2:])
root = os.getcwd()
lines = []
for (filename, lineno), hits in tracer.results().counts.items():
    if hits <= 0:
        continue
    rel = os.path.relpath(os.path.abspath(filename), root)
    if rel.startswith(".."):
        continue
    lines.append([rel.replace(os.sep, "/"), lineno])
json.dump(lines, open(out_path, "w"))
sys.exit(0 if code == 0 else 1)
"""


def coverage_probe(project: SubjectProject, test_ids: list[str]) -> set[tuple[str, int]]:
    """Executed (file, line) pairs for one run of the given tests."""
    with tempfile.TemporaryDirectory(prefix="fc_probe_") as tmp:
        script = Path(tmp) / "probe.py"
        out = Path(tmp) / "lines.json"
        script.write_text(_PROBE_SCRIPT)
        proc = subprocess.run(
            [sys.executable, str(script), str(out), "-q", "-p", "no:cacheprovider", *test_ids],
            cwd=project.root,
            capture_output=True,
            text=True,
            timeout=max(600, project.config.timeout_seconds),
            env={**os.environ, "PYTHONDONTWRITEBYTECODE": "1"},
        )
        if proc.returncode != 0 or not out.exists():
            raise MutationError(f"coverage probe failed:\n{proc.stdout}{proc.stderr}")
        return {(rel, line) for rel, line in json.loads(out.read_text())}


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class MutationReport:
    records: list[MutantRecord] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def count(self, status: str) -> int:
        return sum(1 for r in self.records if r.status == status)

    def to_dict(self) -> dict:
        covered = (
            self.count(STATUS_KILLED_BY_TESTS)
            + self.count(STATUS_SURVIVED)
            + self.count(STATUS_KILLED_BY_CHECKER)
        )
        return {
            "all": covered,
            "killed_by_target_tests": self.count(STATUS_KILLED_BY_TESTS),
            "survived": self.count(STATUS_SURVIVED),
            "killed_by_checkers": self.count(STATUS_KILLED_BY_CHECKER),
            "not_covered": self.count(STATUS_NOT_COVERED),
            "skipped_infrastructure": len(self.skipped),
        }


def evaluate_mutants(
    project: SubjectProject,
    mutants: list[MutantRecord],
    target_ids: list[str],
    checkers=(),
    work_dir: Path | None = None,
    use_coverage: bool = True,
    cap_s: float | None = None,
    on_violation: str = "raise",
) -> MutationReport:
    """Partition mutants into not_covered / killed_by_tests / survived / killed_by_checker.

    Runs against the project tree itself with strict revert discipline; hand
    this a disposable copy. Statuses always sum to the number of applied
    mutants plus the infrastructure skips.
    """
    cap = cap_s if cap_s is not None else project.config.timeout_seconds
    runner = project.test_runner_command
    baseline = run_tests(project.root, runner, target_ids, cap)
    if not baseline.passed:
        raise MutationError(f"baseline run of target tests fails:\n{baseline.output}")
    covered = coverage_probe(project, target_ids) if use_coverage else None
    work_dir = Path(work_dir) if work_dir else project.root.parent / "fc_mutation_work"
    pre_hash = tree_hash(project.root)

    report = MutationReport(records=list(mutants))
    for record in report.records:
        if covered is not None and (record.file, record.line) not in covered:
            record.status = STATUS_NOT_COVERED
            continue
        try:
            apply_mutant(project.root, record)
        except MutantApplyError as err:
            log.warning("%s", err)
            record.status = STATUS_SKIPPED
            report.skipped.append(record.id)
            continue
        try:
            plain = run_tests(project.root, runner, target_ids, cap)
            if not plain.passed:
                record.status = STATUS_KILLED_BY_TESTS
            elif checkers:
                record.status, record.note = _checked_status(
                    project, list(checkers), target_ids, work_dir, cap, on_violation
                )
            else:
                record.status = STATUS_SURVIVED
        finally:
            revert_mutant(project.root, record)
        if tree_hash(project.root) != pre_hash:
            raise MutationError(f"working tree corrupted after mutant {record.id}")
    return report


def _checked_status(project, checkers, target_ids, work_dir, cap, on_violation):
    tree = work_dir / "mutant_tree"
    if tree.exists():
        shutil.rmtree(tree)
    plan = InstrumentationPlan.from_checkers(checkers, tree, on_violation=on_violation)
    instrument(project, plan)
    checked = run_tests(tree, project.test_runner_command, target_ids, cap)
    if "CheckerViolation [checker" in checked.output and not checked.passed:
        return STATUS_KILLED_BY_CHECKER, checked.output[-2000:]
    if not checked.passed:
        log.warning("instrumented run failed without a checker violation")
    return STATUS_SURVIVED, ""
