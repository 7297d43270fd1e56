"""Source-to-source instrumentation of the subject project.

Produces a full copy of the project in which every targeted state-changing
method is wrapped: the original body moves into an inner callable, its
return value (absent on exceptional exit) is captured, and an epilogue that
always runs hands an operation record plus the global shadow state to the
chained checkers. Method signatures are untouched, so the copy is a drop-in
replacement. The runtime itself is emitted from embedded templates into
``fc_runtime/`` at the tree root.

Only targeted methods change. Modified files gain the marker comment as
their first line and one hook import; everything else is byte-identical,
which ``uninstrument_diff`` verifies.
"""

from __future__ import annotations

import ast
import shutil
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from flycatcher.artifacts import CheckerArtifact, Status, scaffold, unit_module_name
from flycatcher.subject import (
    MethodSyntax,
    SubjectProject,
    method_span,
    module_namespace,
    parse_methods,
)

MARKER_COMMENT = "# /* fc-instrumented */"
HOOK_IMPORT = "from fc_runtime import hook as _fc_hook"
SHIM_DIR_NAME = "fc_runtime"
GUARD_MESSAGE = "Checker is calling a state-changing method."
COPY_IGNORES = ("__pycache__", "*.pyc", ".git", ".pytest_cache", "fc_out")

_SHIM_FILES = ("__init__.py", "core.py", "hook.py")


class InstrumentError(Exception):
    pass


@dataclass
class InstrumentationPlan:
    """Which checkers run after which methods, and where the copy goes."""

    checkers: list[CheckerArtifact]
    targets: dict[str, list[str]]  # canonical signature -> checker ids
    output_root: Path
    on_violation: str = "raise"  # or "log": report to stderr, keep running

    def __post_init__(self):
        self.output_root = Path(self.output_root)
        if self.on_violation not in ("raise", "log"):
            raise InstrumentError(f"on_violation must be raise or log: {self.on_violation!r}")
        known = {c.id for c in self.checkers}
        # chained checkers run in lexicographic id order, deterministically
        self.targets = {sig: sorted(ids) for sig, ids in self.targets.items()}
        for sig, ids in self.targets.items():
            missing = [i for i in ids if i not in known]
            if missing:
                raise InstrumentError(f"plan references unknown checkers {missing} for {sig}")

    @classmethod
    def from_checkers(
        cls,
        checkers: list[CheckerArtifact],
        output_root: Path,
        on_violation: str = "raise",
        targets: dict[str, list[str]] | None = None,
    ) -> "InstrumentationPlan":
        if targets is None:
            targets = {}
            for checker in sorted(checkers, key=lambda c: c.id):
                for sig in checker.monitored_signatures:
                    targets.setdefault(sig, []).append(checker.id)
        return cls(
            checkers=list(checkers),
            targets=targets,
            output_root=Path(output_root),
            on_violation=on_violation,
        )


def shim_template_files() -> dict[str, str]:
    base = resources.files("flycatcher").joinpath("_shim")
    return {name: base.joinpath(name).read_text() for name in _SHIM_FILES}


def instrument(project: SubjectProject, plan: InstrumentationPlan) -> Path:
    """Copy the project under the plan's output root and wrap its targets."""
    _check_plan(project, plan)
    out = plan.output_root
    if out.exists() and any(out.iterdir()):
        raise InstrumentError(f"output root is not empty: {out}")
    if out.resolve().is_relative_to(project.root.resolve()):
        raise InstrumentError("output root must lie outside the project tree")

    shutil.copytree(
        project.root, out, ignore=shutil.ignore_patterns(*COPY_IGNORES), dirs_exist_ok=True
    )

    by_file: dict[Path, dict[str, list[str]]] = {}
    for sig, checker_ids in plan.targets.items():
        info = project.method_index[sig]
        rel = info.file.relative_to(project.root)
        by_file.setdefault(rel, {})[sig] = checker_ids

    for rel, wanted in sorted(by_file.items()):
        namespace = _namespace_for(project, rel)
        if namespace is None:
            raise InstrumentError(f"targeted file is outside the source dirs: {rel}")
        _rewrite_file(out / rel, namespace, set(wanted))

    _emit_runtime(out, plan)
    return out


def _check_plan(project: SubjectProject, plan: InstrumentationPlan) -> None:
    for sig in plan.targets:
        if sig not in project.method_index:
            raise InstrumentError(f"targeted method not found: {sig}")
    for checker in plan.checkers:
        if checker.rank() < 1:  # below statically_valid
            raise InstrumentError(
                f"checker {checker.id} is {checker.status.value}; "
                "instrumentation needs at least a statically valid checker"
            )
    for source_dir in project.source_dirs:
        if not source_dir.is_dir():
            continue
        for file in source_dir.rglob("*.py"):
            with file.open() as fh:
                if fh.readline().rstrip("\n") == MARKER_COMMENT:
                    raise InstrumentError(f"tree is already instrumented: {file}")


def _namespace_for(project: SubjectProject, rel: Path) -> str | None:
    file = project.root / rel
    for source_dir in project.source_dirs:
        try:
            file.relative_to(source_dir)
        except ValueError:
            continue
        return module_namespace(file, source_dir)
    return None


# ---------------------------------------------------------------------------
# Per-file rewriting
# ---------------------------------------------------------------------------


def _rewrite_file(path: Path, namespace: str, wanted: set[str]) -> None:
    source = path.read_text()
    try:
        _, methods, _ = parse_methods(source, namespace)
    except SyntaxError as err:
        raise InstrumentError(f"unparseable target file {path}: {err.msg}") from None
    by_sig = {m.signature: m for m in methods}
    missing = sorted(sig for sig in wanted if sig not in by_sig)
    if missing:
        raise InstrumentError(f"targeted method not found: {', '.join(missing)}")

    replacements = []
    for sig in wanted:
        method = by_sig[sig]
        start, end = _line_span(source, method)
        replacements.append((start, end, _render_wrapped(source, method)))
    for start, end, text in sorted(replacements, reverse=True):
        source = source[:start] + text + source[end:]

    source = _insert_hook_import(source)
    source = MARKER_COMMENT + "\n" + source

    # the rewrite must parse and must not have touched any signature
    try:
        _, rewritten, _ = parse_methods(source, namespace)
    except SyntaxError as err:  # pragma: no cover - guards rewriter bugs
        raise InstrumentError(f"instrumented file no longer parses: {path}: {err.msg}")
    if not wanted <= {m.signature for m in rewritten}:
        raise InstrumentError(f"instrumentation changed a method signature in {path}")
    path.write_text(source)


def _line_span(source: str, method: MethodSyntax) -> tuple[int, int]:
    """Method span widened to the start of its first line."""
    start, end = method_span(source, method.node)
    line_start = source.rfind("\n", 0, start) + 1
    if source[line_start:start].strip():
        raise InstrumentError(f"method does not start its own line: {method.signature}")
    return line_start, end


def _render_wrapped(source: str, method: MethodSyntax) -> str:
    node = method.node
    indent = " " * node.col_offset
    inner = indent + "    "
    body = inner + "    "

    params = ", ".join(method.param_names)
    if method.kind == "static":
        base_expr = "None"
        value_params = list(method.param_names)
    else:
        base_expr = method.param_names[0]
        value_params = list(method.param_names[1:])
    args_list = "[" + ", ".join(value_params) + "]"
    ret_expr = "_fc_hook.ABSENT" if method.kind == "constructor" else "__fc_ret"

    lines = _header_lines(source, node, indent)
    lines.append(f"{inner}def __fc_body({params}):")
    for stmt in node.body:
        # per-statement unparse keeps string literals single-line, so the
        # reindentation below cannot corrupt them
        for text_line in ast.unparse(stmt).splitlines():
            lines.append(f"{body}{text_line}")
    lines.append(f"{inner}__fc_ret = _fc_hook.ABSENT")
    lines.append(f"{inner}try:")
    lines.append(f"{body}__fc_ret = __fc_body({params})")
    lines.append(f"{body}return __fc_ret")
    lines.append(f"{inner}finally:")
    lines.append(
        f"{body}_fc_hook.dispatch_call({method.signature!r}, {base_expr}, {args_list}, {ret_expr})"
    )
    return "\n".join(lines)


def _header_lines(source: str, node: ast.FunctionDef, indent: str) -> list[str]:
    lines = source.splitlines()
    start_line = node.decorator_list[0].lineno if node.decorator_list else node.lineno
    first = node.body[0]
    before_first = lines[first.lineno - 1][: first.col_offset]
    if first.lineno <= node.lineno or before_first.strip():
        # header and body share a line; synthesize a normalized header
        clone = ast.FunctionDef(
            name=node.name,
            args=node.args,
            body=[ast.Pass()],
            decorator_list=node.decorator_list,
            returns=node.returns,
            type_comment=None,
        )
        module = ast.Module(body=[clone], type_ignores=[])
        rendered = ast.unparse(ast.fix_missing_locations(module)).splitlines()
        assert rendered[-1].strip() == "pass"
        return [indent + line for line in rendered[:-1]]
    return lines[start_line - 1 : first.lineno - 1]


def _insert_hook_import(source: str) -> str:
    tree = ast.parse(source)
    insert_after = 0
    for index, node in enumerate(tree.body):
        is_docstring = (
            index == 0
            and isinstance(node, ast.Expr)
            and isinstance(node.value, ast.Constant)
            and isinstance(node.value.value, str)
        )
        is_future = isinstance(node, ast.ImportFrom) and node.module == "__future__"
        if is_docstring or is_future:
            insert_after = node.end_lineno
        else:
            break
    lines = source.splitlines(keepends=True)
    lines.insert(insert_after, HOOK_IMPORT + "\n")
    return "".join(lines)


# ---------------------------------------------------------------------------
# Runtime emission
# ---------------------------------------------------------------------------


def _emit_runtime(output_root: Path, plan: InstrumentationPlan) -> None:
    shim = output_root / SHIM_DIR_NAME
    checkers_dir = shim / "checkers"
    checkers_dir.mkdir(parents=True, exist_ok=True)
    for name, text in shim_template_files().items():
        (shim / name).write_text(text)
    (checkers_dir / "__init__.py").write_text("")
    for checker in plan.checkers:
        unit = scaffold(checker)
        (checkers_dir / f"{unit_module_name(checker.id)}.py").write_text(unit)
    _write_plan_module(shim, plan)


def _write_plan_module(shim: Path, plan: InstrumentationPlan) -> None:
    modules = {c.id: unit_module_name(c.id) for c in plan.checkers}
    lines = ['"""Generated checker wiring for this instrumented tree."""', ""]
    for cid in sorted(modules):
        lines.append(f"from fc_runtime.checkers import {modules[cid]}")
    lines.append("")
    lines.append(f"ON_VIOLATION = {plan.on_violation!r}")
    lines.append("")
    lines.append("REGISTRY = {")
    for sig in sorted(plan.targets):
        entries = ", ".join(f"{modules[cid]}.run_checker" for cid in plan.targets[sig])
        lines.append(f"    {sig!r}: [{entries}],")
    lines.append("}")
    (shim / "fc_plan.py").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Structured diff between an original and an instrumented tree
# ---------------------------------------------------------------------------


@dataclass
class DiffReport:
    wrapped: dict[str, list[str]] = field(default_factory=dict)  # rel file -> signatures
    shim_files: list[str] = field(default_factory=list)
    corrupted: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.corrupted

    def wrapped_signatures(self) -> list[str]:
        return sorted(sig for sigs in self.wrapped.values() for sig in sigs)


def _tree_files(root: Path) -> dict[str, Path]:
    skip_parts = {"__pycache__", ".pytest_cache", ".git", "fc_out"}
    files = {}
    for path in root.rglob("*"):
        if not path.is_file():
            continue
        rel = path.relative_to(root)
        if skip_parts & set(rel.parts) or rel.suffix == ".pyc":
            continue
        files[rel.as_posix()] = path
    return files


def uninstrument_diff(project: SubjectProject, instrumented_root: Path) -> DiffReport:
    """Per-file wrapped signatures; flags any change outside targeted methods."""
    report = DiffReport()
    original = _tree_files(project.root)
    instrumented = _tree_files(Path(instrumented_root))

    for rel in sorted(instrumented):
        if rel.split("/", 1)[0] == SHIM_DIR_NAME:
            report.shim_files.append(rel)
        elif rel not in original:
            report.corrupted.append(rel)
    for rel in sorted(original):
        if rel not in instrumented:
            report.corrupted.append(rel)
            continue
        original_bytes = original[rel].read_bytes()
        instrumented_bytes = instrumented[rel].read_bytes()
        if original_bytes == instrumented_bytes:
            continue
        if not rel.endswith(".py"):
            report.corrupted.append(rel)
            continue
        wrapped = _wrapped_signatures(
            project, Path(rel), original_bytes.decode(), instrumented_bytes.decode()
        )
        if wrapped is None:
            report.corrupted.append(rel)
        else:
            report.wrapped[rel] = wrapped
    return report


def _wrapped_signatures(
    project: SubjectProject, rel: Path, original_text: str, instrumented_text: str
) -> list[str] | None:
    """Signatures wrapped in this file, or None if it changed in other ways."""
    head, _, rest = instrumented_text.partition("\n")
    if head != MARKER_COMMENT:
        return None
    kept = []
    removed_import = False
    for line in rest.splitlines(keepends=True):
        if not removed_import and line.rstrip("\n") == HOOK_IMPORT:
            removed_import = True
            continue
        kept.append(line)
    if not removed_import:
        return None
    stripped = "".join(kept)

    namespace = _namespace_for(project, rel)
    if namespace is None:
        return None
    try:
        _, original_methods, _ = parse_methods(original_text, namespace)
        _, instrumented_methods, _ = parse_methods(stripped, namespace)
    except SyntaxError:
        return None
    original_by_sig = {m.signature: m for m in original_methods}

    wrapped: list[str] = []
    replacements = []
    for method in instrumented_methods:
        twin = original_by_sig.get(method.signature)
        if twin is None:
            return None
        start, end = _line_span(stripped, method)
        segment = stripped[start:end]
        orig_start, orig_end = _line_span(original_text, twin)
        original_segment = original_text[orig_start:orig_end]
        if segment == original_segment:
            continue
        if "_fc_hook.dispatch_call(" not in segment:
            return None
        wrapped.append(method.signature)
        replacements.append((start, end, original_segment))

    restored = stripped
    for start, end, text in sorted(replacements, reverse=True):
        restored = restored[:start] + text + restored[end:]
    if restored != original_text:
        return None
    return sorted(wrapped)
