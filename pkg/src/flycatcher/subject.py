"""Syntax-aware static model of the subject project.

Scans source directories into a method index keyed by canonical signatures,
discovers tests, and resolves which subject methods each test invokes.
Resolution is deliberately cheap: simple callee name plus arity, no type
inference. Ambiguous calls are omitted with a warning; the downstream
identification step tolerates both over- and under-approximation.

Conventions for the Python subject language:
  * only methods of top-level classes are indexed; ``__init__`` is recorded
    as the constructor under the class name, other dunders are skipped
  * parameter types come from annotations (simple name), ``object`` otherwise
  * methods using ``*args``/``**kwargs``/keyword-only parameters are skipped
    with a warning, since the signature grammar cannot express them
  * a bare ``assert`` statement counts as an assertion when the configured
    assertion-name set contains ``"assert"``
"""

from __future__ import annotations

import ast
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from flycatcher.signatures import make_signature

log = logging.getLogger("flycatcher.subject")

DEFAULT_ASSERTION_NAMES = (
    "assert",
    "assertTrue",
    "assertEquals",
    "assertEqual",
    "assertNotNull",
)


class ProjectError(Exception):
    """Fatal problem with the subject project or its configuration."""


class UnparseableTestError(ProjectError):
    """The given test source does not parse."""


def estimate_tokens(text: str) -> int:
    """Provider-independent size proxy: ceil(chars / 4), at least 1 if nonempty."""
    if not text:
        return 0
    return max(1, math.ceil(len(text) / 4))


@dataclass
class ProjectConfig:
    source_dirs: list[str]
    test_dirs: list[str]
    test_runner: str
    assertion_names: list[str] = field(default_factory=lambda: list(DEFAULT_ASSERTION_NAMES))
    timeout_seconds: int = 180

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectConfig":
        try:
            return cls(
                source_dirs=list(data["source_dirs"]),
                test_dirs=list(data["test_dirs"]),
                test_runner=str(data["test_runner"]),
                assertion_names=list(data.get("assertion_names", DEFAULT_ASSERTION_NAMES)),
                timeout_seconds=int(data.get("timeout_seconds", 180)),
            )
        except KeyError as missing:
            raise ProjectError(f"project config is missing key {missing}") from None

    @classmethod
    def from_file(cls, path: Path | str) -> "ProjectConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "source_dirs": list(self.source_dirs),
            "test_dirs": list(self.test_dirs),
            "test_runner": self.test_runner,
            "assertion_names": list(self.assertion_names),
            "timeout_seconds": self.timeout_seconds,
        }


@dataclass(frozen=True)
class MethodInfo:
    signature: str
    file: Path
    span: tuple[int, int]  # [start, end) offsets into the file's text
    body: str
    is_constructor: bool


@dataclass
class TestCase:
    __test__ = False  # keep pytest from collecting the dataclass

    id: str
    file: Path
    name: str
    body: str
    imports: list[str]
    sut_calls: list[str]
    assertion_count: int
    token_estimate: int


@dataclass
class SubjectProject:
    root: Path
    source_dirs: list[Path]
    test_dirs: list[Path]
    method_index: dict[str, MethodInfo]
    test_runner_command: str
    config: ProjectConfig
    tests: list[TestCase] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def test_by_id(self, test_id: str) -> TestCase:
        for test in self.tests:
            if test.id == test_id:
                return test
        raise ProjectError(f"unknown test id: {test_id}")

    def index_fingerprint(self) -> str:
        """Stable serialization of the method index, for determinism checks."""
        view = {
            sig: {
                "file": info.file.relative_to(self.root).as_posix(),
                "span": list(info.span),
                "is_constructor": info.is_constructor,
            }
            for sig, info in self.method_index.items()
        }
        return json.dumps(view, sort_keys=True)


# ---------------------------------------------------------------------------
# Parsing helpers shared with the instrumenter
# ---------------------------------------------------------------------------


@dataclass
class MethodSyntax:
    """One method as parsed from a source file, with its AST node."""

    signature: str
    class_name: str
    node: ast.FunctionDef
    kind: str  # "instance" | "static" | "classmethod" | "constructor"
    param_names: tuple[str, ...]  # as declared, including self/cls


def _annotation_name(node) -> str:
    if node is None:
        return "object"
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        return node.attr
    if isinstance(node, ast.Subscript):
        return _annotation_name(node.value)
    return "object"


def _decorator_kind(node: ast.FunctionDef) -> str | None:
    kinds = {"staticmethod": "static", "classmethod": "classmethod"}
    kind = "instance"
    for dec in node.decorator_list:
        name = dec.id if isinstance(dec, ast.Name) else None
        if name in kinds:
            kind = kinds[name]
        else:
            return None  # unknown decorator: not a plain method
    return kind


def parse_methods(source: str, namespace: str) -> tuple[ast.Module, list[MethodSyntax], list[str]]:
    """Parse one source file into method records under the given namespace."""
    tree = ast.parse(source)
    methods: list[MethodSyntax] = []
    warnings: list[str] = []
    for cls in tree.body:
        if not isinstance(cls, ast.ClassDef):
            continue
        for node in cls.body:
            if not isinstance(node, ast.FunctionDef):
                continue
            if node.name.startswith("__") and node.name != "__init__":
                continue
            kind = _decorator_kind(node)
            if kind is None:
                warnings.append(
                    f"{namespace}.{cls.name}.{node.name}: decorated method skipped"
                )
                continue
            args = node.args
            if args.vararg or args.kwarg or args.kwonlyargs:
                warnings.append(
                    f"{namespace}.{cls.name}.{node.name}: variadic parameters not indexable"
                )
                continue
            params = list(args.posonlyargs) + list(args.args)
            takes_receiver = kind in ("instance", "classmethod")
            if takes_receiver and not params:
                warnings.append(
                    f"{namespace}.{cls.name}.{node.name}: missing receiver parameter"
                )
                continue
            value_params = params[1:] if takes_receiver else params
            param_types = [_annotation_name(p.annotation) for p in value_params]
            method_name = cls.name if node.name == "__init__" else node.name
            signature = make_signature(namespace, cls.name, method_name, param_types)
            methods.append(
                MethodSyntax(
                    signature=signature,
                    class_name=cls.name,
                    node=node,
                    kind="constructor" if node.name == "__init__" else kind,
                    param_names=tuple(p.arg for p in params),
                )
            )
    return tree, methods, warnings


def _line_offsets(source: str) -> list[int]:
    offsets = [0]
    for line in source.splitlines(keepends=True):
        offsets.append(offsets[-1] + len(line))
    return offsets


def method_span(source: str, node: ast.FunctionDef) -> tuple[int, int]:
    """[start, end) text offsets of the method definition, decorators included."""
    offsets = _line_offsets(source)
    if node.decorator_list:
        first = node.decorator_list[0]
        # step back over the "@" that precedes the decorator expression
        start = offsets[first.lineno - 1] + first.col_offset - 1
    else:
        start = offsets[node.lineno - 1] + node.col_offset
    end = offsets[node.end_lineno - 1] + node.end_col_offset
    return start, end


def module_namespace(file: Path, source_dir: Path) -> str | None:
    rel = file.relative_to(source_dir).with_suffix("")
    parts = list(rel.parts)
    if parts and parts[-1] == "__init__":
        parts = parts[:-1]
    if not parts:
        return None
    return ".".join(parts)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def scan_project(root: Path | str, config: ProjectConfig) -> SubjectProject:
    """Build the full static model: method index plus discovered, resolved tests."""
    root = Path(root)
    if not root.is_dir():
        raise ProjectError(f"missing root: {root}")

    source_dirs = [root / d for d in config.source_dirs]
    test_dirs = [root / d for d in config.test_dirs]
    warnings: list[str] = []

    method_index: dict[str, MethodInfo] = {}
    parsed_any = False
    for source_dir in source_dirs:
        if not source_dir.is_dir():
            warnings.append(f"source dir not found: {source_dir}")
            continue
        for file in sorted(source_dir.rglob("*.py")):
            namespace = module_namespace(file, source_dir)
            if namespace is None:
                warnings.append(f"{file}: no namespace segment, skipped")
                continue
            source = file.read_text()
            try:
                _, methods, file_warnings = parse_methods(source, namespace)
            except SyntaxError as err:
                warnings.append(f"{file}: unparseable source file ({err.msg})")
                continue
            parsed_any = True
            warnings.extend(file_warnings)
            for method in methods:
                if method.signature in method_index:
                    warnings.append(f"duplicate signature kept once: {method.signature}")
                    continue
                span = method_span(source, method.node)
                method_index[method.signature] = MethodInfo(
                    signature=method.signature,
                    file=file,
                    span=span,
                    body=source[span[0] : span[1]],
                    is_constructor=method.node.name == "__init__",
                )
    if not parsed_any:
        raise ProjectError("zero parseable source files")

    project = SubjectProject(
        root=root,
        source_dirs=source_dirs,
        test_dirs=test_dirs,
        method_index=method_index,
        test_runner_command=config.test_runner,
        config=config,
        warnings=warnings,
    )
    project.tests = _discover_tests(project)
    for warning in project.warnings:
        log.warning(warning)
    return project


def _discover_tests(project: SubjectProject) -> list[TestCase]:
    tests: list[TestCase] = []
    seen: set[str] = set()
    for test_dir in project.test_dirs:
        if not test_dir.is_dir():
            project.warnings.append(f"test dir not found: {test_dir}")
            continue
        files = sorted(set(test_dir.rglob("test_*.py")) | set(test_dir.rglob("*_test.py")))
        for file in files:
            source = file.read_text()
            try:
                tree = ast.parse(source)
            except SyntaxError as err:
                project.warnings.append(f"{file}: unparseable test file ({err.msg})")
                continue
            imports = _imports_from_tree(tree, source)
            rel = file.relative_to(project.root).as_posix()
            for node, id_parts in _iter_test_defs(tree):
                test_id = "::".join([rel, *id_parts])
                if test_id in seen:
                    continue
                seen.add(test_id)
                body = ast.get_source_segment(source, node) or ""
                tests.append(
                    _build_test_case(project, test_id, file, node, body, imports)
                )
    return tests


def _iter_test_defs(tree: ast.Module):
    for node in tree.body:
        if isinstance(node, ast.FunctionDef) and node.name.startswith("test"):
            yield node, (node.name,)
        elif isinstance(node, ast.ClassDef) and node.name.startswith("Test"):
            for sub in node.body:
                if isinstance(sub, ast.FunctionDef) and sub.name.startswith("test"):
                    yield sub, (node.name, sub.name)


def _build_test_case(project, test_id, file, node, body, imports) -> TestCase:
    sut_calls = _resolve_calls(project, node, context=test_id)
    return TestCase(
        id=test_id,
        file=file,
        name=node.name,
        body=body,
        imports=list(imports),
        sut_calls=sut_calls,
        assertion_count=_count_assertions(node, project.config.assertion_names),
        token_estimate=estimate_tokens(body),
    )


def resolve_test_calls(project: SubjectProject, test_source: str) -> TestCase:
    """Resolve a raw test function's subject-method calls into a TestCase.

    The source must contain exactly the test function (decorators allowed).
    Tests discovered by scan_project carry file context; this entry point is
    for ad-hoc sources and leaves file-derived fields empty.
    """
    try:
        tree = ast.parse(test_source)
    except SyntaxError as err:
        raise UnparseableTestError(f"unparseable test body: {err.msg}") from None
    defs = [n for n in tree.body if isinstance(n, ast.FunctionDef)]
    if len(defs) != 1:
        raise UnparseableTestError("expected exactly one test function definition")
    node = defs[0]
    return _build_test_case(
        project, f"<adhoc>::{node.name}", Path("<adhoc>"), node, test_source, []
    )


def _callee_name(func) -> str | None:
    if isinstance(func, ast.Name):
        return func.id
    if isinstance(func, ast.Attribute):
        return func.attr
    return None


def _resolve_calls(project: SubjectProject, node: ast.FunctionDef, context: str) -> list[str]:
    from flycatcher.signatures import parse_signature

    by_name: dict[tuple[str, int], list[str]] = {}
    for sig_text in project.method_index:
        sig = parse_signature(sig_text)
        by_name.setdefault((sig.method, sig.arity), []).append(sig_text)

    resolved: list[str] = []
    for call in ast.walk(node):
        if not isinstance(call, ast.Call):
            continue
        name = _callee_name(call.func)
        if name is None:
            continue
        if any(isinstance(a, ast.Starred) for a in call.args) or any(
            k.arg is None for k in call.keywords
        ):
            continue  # arity unknowable without evaluating the call
        arity = len(call.args) + len(call.keywords)
        candidates = by_name.get((name, arity), [])
        if len(candidates) == 1:
            if candidates[0] not in resolved:
                resolved.append(candidates[0])
        elif len(candidates) > 1:
            log.warning(
                "%s: ambiguous call %s/%d matches %d methods, omitted",
                context,
                name,
                arity,
                len(candidates),
            )
    return resolved


def _count_assertions(node: ast.FunctionDef, assertion_names) -> int:
    names = set(assertion_names)
    count = 0
    for sub in ast.walk(node):
        if isinstance(sub, ast.Assert) and "assert" in names:
            count += 1
        elif isinstance(sub, ast.Call):
            callee = _callee_name(sub.func)
            if callee is not None and callee in names and callee != "assert":
                count += 1
    return count


def extract_imports(file: Path | str) -> list[str]:
    """Module-level import statements, verbatim and in file order."""
    source = Path(file).read_text()
    try:
        tree = ast.parse(source)
    except SyntaxError as err:
        raise ProjectError(f"unparseable file {file}: {err.msg}") from None
    return _imports_from_tree(tree, source)


def _imports_from_tree(tree: ast.Module, source: str) -> list[str]:
    lines = []
    for node in tree.body:
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            segment = ast.get_source_segment(source, node)
            if segment is not None:
                lines.append(segment)
    return lines
