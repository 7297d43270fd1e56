import json
import shutil
from pathlib import Path

import pytest

from flycatcher.subject import ProjectConfig, scan_project

FIXTURES = Path(__file__).parent / "fixtures"

BASE_CONFIG = {
    "source_dirs": ["src"],
    "test_dirs": ["tests"],
    "test_runner": "python3 -m pytest -q {TESTS}",
    "assertion_names": ["assert", "assertTrue", "assertEquals", "assertEqual", "assertNotNull"],
    "timeout_seconds": 120,
}

CONFTEST_SNIPPET = """\
import sys
from pathlib import Path

_root = Path(__file__).resolve().parent
for _p in (str(_root), str(_root / "src")):
    if _p not in sys.path:
        sys.path.insert(0, _p)
"""


@pytest.fixture
def datanode_root(tmp_path):
    """Disposable copy of the bundled DataNode fixture project."""
    root = tmp_path / "datanode_py"
    shutil.copytree(
        FIXTURES / "datanode_py",
        root,
        ignore=shutil.ignore_patterns("__pycache__", "*.pyc", ".pytest_cache"),
    )
    return root


@pytest.fixture
def datanode_project(datanode_root):
    config = ProjectConfig.from_file(datanode_root / "project.json")
    return scan_project(datanode_root, config)


def write_project(root: Path, files: dict[str, str], config: dict | None = None) -> Path:
    """Materialize a small subject project from a path->source mapping."""
    root.mkdir(parents=True, exist_ok=True)
    for rel, source in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(source)
    (root / "conftest.py").write_text(CONFTEST_SNIPPET)
    merged = dict(BASE_CONFIG)
    merged.update(config or {})
    (root / "project.json").write_text(json.dumps(merged, indent=2))
    return root


def scan(root: Path):
    return scan_project(root, ProjectConfig.from_file(root / "project.json"))


def fenced(code: str) -> str:
    return f"```python\n{code}```"


FIG2_TEST_ID = "tests/test_datanode.py::test_get_children_empty_when_no_children"

# Canned provider replies for the DataNode fixture: the annotated test and a
# checker that shadows the children set, in the shape the worked examples teach.
IDENTIFICATION_REPLY = """Annotated test:

```python
def test_get_children_empty_when_no_children():
    # create a node and read its children
    node = DataNode()  # state-changing
    children = node.getChildren()
    assert children is not None
    assert len(children) == 0

    # add a child, remove it again, then re-read
    child = "child"
    node.addChild(child)  # state-changing
    node.removeChild(child)  # state-changing
    children = node.getChildren()
    assert children is not None
    assert len(children) == 0
```
"""

DATANODE_CHECKER = """\
def data_node_children_checker(op, shadow_state):
    # Shadow the expected children of each DataNode instance.
    node = op.base
    props = shadow_state.get(node)
    children = props.get("children", set())
    if op.signature == "datanode.DataNode.addChild(str)":
        # A new child joins the expected set.
        children.add(op.arguments[0])
    elif op.signature == "datanode.DataNode.removeChild(str)":
        # Removing an absent child leaves the expected set unchanged.
        children.discard(op.arguments[0])
    props["children"] = children
    # getChildren is read-only, so the checker may call it.
    actual = node.getChildren()
    assertNotNull(actual)
    assertEquals(len(children), len(actual))
    for child in children:
        assertTrue(child in actual)
"""

DATANODE_CHECKER_REPLY = f"Here is the checker:\n\n{fenced(DATANODE_CHECKER)}\n"


def write_run_setup(tmp_path: Path, replies, caps=None, out_name="fc_out") -> Path:
    """Materialize a subject copy plus a flycatcher.json wired to a scripted provider."""
    root = tmp_path / "subject"
    if not root.exists():
        shutil.copytree(
            FIXTURES / "datanode_py",
            root,
            ignore=shutil.ignore_patterns("__pycache__", "*.pyc", ".pytest_cache"),
        )
    (tmp_path / "replies.json").write_text(json.dumps(list(replies)))
    config = {
        "root": "subject",
        "out_dir": out_name,
        "seed": 0,
        "on_violation": "raise",
        "project": BASE_CONFIG,
        "provider": {"kind": "scripted", "script_path": "replies.json", "model_name": "canned"},
        "budgets": {
            "context_tokens": 30000,
            "max_attempts": 125,
            "same_kind_cutoff": 5,
            "validation_extra": 20,
        },
        "caps": dict(
            {"dynamic_validation_seconds": 300, "overhead_noise_epsilon": 0.35},
            **(caps or {}),
        ),
        "pricing": {"input_per_1k": 0.0, "output_per_1k": 0.0},
    }
    path = tmp_path / "flycatcher.json"
    path.write_text(json.dumps(config, indent=2))
    return path
