import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

SHIM_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = SHIM_ROOT / "fixtures"

# the package under test is imported straight from the repository
if str(SHIM_ROOT) not in sys.path:
    sys.path.insert(0, str(SHIM_ROOT))


@pytest.fixture(autouse=True)
def fresh_shadow_state():
    import fc_runtime

    fc_runtime.STATE.clear()
    fc_runtime.STATE.in_checker = False
    yield
    fc_runtime.STATE.clear()
    fc_runtime.STATE.in_checker = False


def copy_fixture(name: str, dest: Path) -> Path:
    root = dest / name
    shutil.copytree(
        FIXTURES / name,
        root,
        ignore=shutil.ignore_patterns("__pycache__", "*.pyc", ".pytest_cache"),
    )
    return root


def run_cli(args, cwd: Path) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "flycatcher.cli", *args],
        cwd=cwd,
        capture_output=True,
        text=True,
        timeout=600,
    )


def write_config(
    run_dir: Path,
    replies,
    fixture: str = "datanode_py",
    script_name: str = "replies.json",
    config_name: str = "flycatcher.json",
    validation_extra: int = 20,
) -> Path:
    """Subject copy plus a flycatcher.json driving the scripted provider."""
    subject = run_dir / "subject"
    if not subject.exists():
        copy_fixture(fixture, run_dir)
        (run_dir / fixture).rename(subject)
    (run_dir / script_name).write_text(json.dumps(list(replies)))
    config = {
        "root": "subject",
        "out_dir": "fc_out",
        "seed": 0,
        "on_violation": "raise",
        "project": json.loads((subject / "project.json").read_text()),
        "provider": {"kind": "scripted", "script_path": script_name, "model_name": "canned"},
        "budgets": {
            "context_tokens": 30000,
            "max_attempts": 125,
            "same_kind_cutoff": 5,
            "validation_extra": validation_extra,
        },
        "caps": {"dynamic_validation_seconds": 300, "overhead_noise_epsilon": 0.35},
        "pricing": {"input_per_1k": 0.0, "output_per_1k": 0.0},
    }
    path = run_dir / config_name
    path.write_text(json.dumps(config, indent=2))
    return path


def fenced(code: str) -> str:
    return f"```python\n{code}```"


FIG2_TEST_ID = "tests/test_datanode.py::test_get_children_empty_when_no_children"
ADD_TEST_ID = "tests/test_datanode.py::test_add_child_reports_new_membership"

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

IDENTIFICATION_REPLY_ADD = """Annotated test:

```python
def test_add_child_reports_new_membership():
    node = DataNode()  # state-changing
    assert node.addChild("a") is True  # state-changing
    assert node.addChild("a") is False  # state-changing
    assert node.childCount() == 1
```
"""

CHILDREN_CHECKER = """\
def data_node_children_checker(op, shadow_state):
    # Shadow the expected children of each DataNode instance.
    node = op.base
    props = shadow_state.get(node)
    children = props.get("children", set())
    if op.signature == "datanode.DataNode.addChild(str)":
        children.add(op.arguments[0])
    elif op.signature == "datanode.DataNode.removeChild(str)":
        children.discard(op.arguments[0])
    props["children"] = children
    actual = node.getChildren()
    assertNotNull(actual)
    assertEquals(len(children), len(actual))
    for child in children:
        assertTrue(child in actual)
"""

RECURSIVE_CHECKER = """\
def recursive_checker(op, shadow_state):
    # Calls back into a monitored method, which the guard must refuse.
    if op.signature == "datanode.DataNode.addChild(str)":
        op.base.addChild("evil")
    assertTrue(True)
"""

OVERFIT_CHECKER = """\
def overfit_names_checker(op, shadow_state):
    # Pins the child names of one test file instead of generalizing them.
    if op.signature == "datanode.DataNode.addChild(str)":
        assertTrue(op.arguments[0] in ("child", "a", "ab", "c"))
    assertTrue(True)
"""

NOOP_CHECKER = """\
def noop_checker(op, shadow_state):
    # Observes the operation and asserts only a tautology.
    assertTrue(True)
"""

DATANODE_STATE_CHANGING = [
    "datanode.DataNode.DataNode()",
    "datanode.DataNode.addChild(str)",
    "datanode.DataNode.removeChild(str)",
    "datanode.DataNode.bumpAclIndex(int)",
    "datanode.DataTree.DataTree()",
    "datanode.DataTree.createNode(str)",
    "datanode.DataTree.deleteNode(str)",
]


def write_checker_dir(out_dir: Path, checker_id: str, source: str, target: str, monitored, status: str):
    """Handcraft a checker artifact in the documented on-disk layout."""
    directory = out_dir / "checkers" / checker_id
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "checker.src").write_text(source)
    (directory / "meta.json").write_text(
        json.dumps(
            {
                "id": checker_id,
                "target": target,
                "status": status,
                "attempts": 1,
                "handled_signatures": [],
                "monitored_signatures": sorted(monitored),
                "failure_history": [],
                "transcript": "transcript.jsonl",
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return directory
