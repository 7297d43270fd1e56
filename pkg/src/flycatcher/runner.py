"""Child-process execution of the subject project's test runner."""

from __future__ import annotations

import os
import shlex
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path


class RunnerError(Exception):
    """Infrastructure failure, distinct from ordinary test failure."""


@dataclass
class RunResult:
    command: list[str]
    exit_code: int
    stdout: str
    stderr: str
    wall_time_s: float
    timed_out: bool

    @property
    def output(self) -> str:
        return self.stdout + self.stderr

    @property
    def passed(self) -> bool:
        return self.exit_code == 0 and not self.timed_out


def build_command(template: str, test_ids: list[str]) -> list[str]:
    """Expand the {TESTS} token of a runner template into argv form."""
    parts = shlex.split(template)
    if "{TESTS}" not in parts:
        raise RunnerError(f"test runner template lacks a {{TESTS}} token: {template!r}")
    command: list[str] = []
    for part in parts:
        if part == "{TESTS}":
            command.extend(test_ids)
        else:
            command.append(part)
    return command


def run_tests(
    root: Path,
    template: str,
    test_ids: list[str],
    timeout_s: float,
    extra_env: dict[str, str] | None = None,
) -> RunResult:
    command = build_command(template, test_ids)
    env = dict(os.environ)
    # Keep subject trees byte-stable across runs.
    env["PYTHONDONTWRITEBYTECODE"] = "1"
    env.setdefault("PYTEST_ADDOPTS", "-p no:cacheprovider")
    if extra_env:
        env.update(extra_env)

    start = time.monotonic()
    try:
        proc = subprocess.run(
            command,
            cwd=root,
            env=env,
            capture_output=True,
            text=True,
            timeout=timeout_s,
        )
    except FileNotFoundError as err:
        raise RunnerError(f"test runner not found: {command[0]}") from err
    except subprocess.TimeoutExpired as err:
        wall = time.monotonic() - start
        return RunResult(
            command=command,
            exit_code=-1,
            stdout=_decode(err.stdout),
            stderr=_decode(err.stderr),
            wall_time_s=wall,
            timed_out=True,
        )
    wall = time.monotonic() - start
    return RunResult(
        command=command,
        exit_code=proc.returncode,
        stdout=proc.stdout,
        stderr=proc.stderr,
        wall_time_s=wall,
        timed_out=False,
    )


def _decode(data) -> str:
    if data is None:
        return ""
    if isinstance(data, bytes):
        return data.decode(errors="replace")
    return data
