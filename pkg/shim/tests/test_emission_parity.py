"""The runtime this package ships must match what the pipeline emits."""

import json
from pathlib import Path

from conftest import (
    CHILDREN_CHECKER,
    FIG2_TEST_ID,
    IDENTIFICATION_REPLY,
    SHIM_ROOT,
    fenced,
    run_cli,
    write_config,
)

STATIC_SHIM_FILES = ("__init__.py", "core.py", "hook.py")


def test_emitted_runtime_is_byte_identical_to_this_package(tmp_path):
    config = write_config(tmp_path, [IDENTIFICATION_REPLY, fenced(CHILDREN_CHECKER)])
    gen = run_cli(["--config", str(config), "gen", "--test", FIG2_TEST_ID], cwd=tmp_path)
    assert gen.returncode == 0, gen.stdout + gen.stderr

    checker_id = json.loads(
        next((tmp_path / "fc_out" / "checkers").glob("*/meta.json")).read_text()
    )["id"]
    out_tree = tmp_path / "tree"
    instrument = run_cli(
        ["--config", str(config), "instrument", "--checkers", checker_id, "--out", str(out_tree)],
        cwd=tmp_path,
    )
    assert instrument.returncode == 0, instrument.stdout + instrument.stderr

    for name in STATIC_SHIM_FILES:
        emitted = (out_tree / "fc_runtime" / name).read_bytes()
        shipped = (SHIM_ROOT / "fc_runtime" / name).read_bytes()
        assert emitted == shipped, f"fc_runtime/{name} diverged from the emitted runtime"
