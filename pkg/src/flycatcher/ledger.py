"""Run ledger: per-target costs, aggregates, and runtime-overhead records.

Ledger rows carry only provider-side wall time, which the scripted provider
pins to zero, so scripted runs serialize byte-identically. Currency costs
come from user-supplied per-token prices, never from built-in rates.
"""

from __future__ import annotations

import json
import shutil
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from flycatcher.artifacts import CheckerArtifact
from flycatcher.instrument import InstrumentationPlan, instrument
from flycatcher.runner import run_tests
from flycatcher.subject import SubjectProject

OVERHEAD_NOTE = (
    "upper bound: only the test files containing target tests were run; "
    "broader workloads dilute the instrumented fraction"
)


@dataclass
class TargetRow:
    target: str
    checker_id: str
    wall_time_s: float
    input_tokens: int
    output_tokens: int
    attempts: int
    final_status: str

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "checker_id": self.checker_id,
            "wall_time_s": self.wall_time_s,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "attempts": self.attempts,
            "final_status": self.final_status,
        }


@dataclass
class OverheadRecord:
    repeat: int
    baseline_mean_s: float
    checked_mean_s: float
    relative_overhead: float
    noise_epsilon: float
    baseline_runs: list[float]
    checked_runs: list[float]
    note: str = OVERHEAD_NOTE

    def to_dict(self) -> dict:
        return {
            "repeat": self.repeat,
            "baseline_mean_s": self.baseline_mean_s,
            "checked_mean_s": self.checked_mean_s,
            "relative_overhead": self.relative_overhead,
            "noise_epsilon": self.noise_epsilon,
            "baseline_runs": self.baseline_runs,
            "checked_runs": self.checked_runs,
            "note": self.note,
        }


class RunLedger:
    def __init__(self):
        self.rows: list[TargetRow] = []
        self.overheads: list[OverheadRecord] = []

    def upsert(self, row: TargetRow) -> None:
        self.rows = [r for r in self.rows if r.target != row.target]
        self.rows.append(row)
        self.rows.sort(key=lambda r: r.target)

    def totals(self) -> dict:
        return {
            "targets": len(self.rows),
            "input_tokens": sum(r.input_tokens for r in self.rows),
            "output_tokens": sum(r.output_tokens for r in self.rows),
            "tokens": sum(r.input_tokens + r.output_tokens for r in self.rows),
            "wall_time_s": round(sum(r.wall_time_s for r in self.rows), 6),
            "attempts": sum(r.attempts for r in self.rows),
        }

    def medians(self) -> dict:
        if not self.rows:
            return {"wall_time_s": 0.0, "tokens": 0, "attempts": 0}
        return {
            "wall_time_s": statistics.median(r.wall_time_s for r in self.rows),
            "tokens": statistics.median(r.input_tokens + r.output_tokens for r in self.rows),
            "attempts": statistics.median(r.attempts for r in self.rows),
        }

    def cost(self, pricing: dict) -> float:
        per_in = float(pricing.get("input_per_1k", 0.0))
        per_out = float(pricing.get("output_per_1k", 0.0))
        total = sum(
            r.input_tokens / 1000 * per_in + r.output_tokens / 1000 * per_out
            for r in self.rows
        )
        return round(total, 6)

    def to_dict(self, pricing: dict | None = None) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "totals": self.totals(),
            "medians": self.medians(),
            "cost": self.cost(pricing or {}),
            "overheads": [o.to_dict() for o in self.overheads],
        }

    def save(self, path: Path, pricing: dict | None = None) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(pricing), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Path) -> "RunLedger":
        ledger = cls()
        if not Path(path).is_file():
            return ledger
        data = json.loads(Path(path).read_text())
        for row in data.get("rows", []):
            ledger.rows.append(
                TargetRow(
                    target=row["target"],
                    checker_id=row["checker_id"],
                    wall_time_s=row["wall_time_s"],
                    input_tokens=row["input_tokens"],
                    output_tokens=row["output_tokens"],
                    attempts=row["attempts"],
                    final_status=row["final_status"],
                )
            )
        for rec in data.get("overheads", []):
            ledger.overheads.append(
                OverheadRecord(
                    repeat=rec["repeat"],
                    baseline_mean_s=rec["baseline_mean_s"],
                    checked_mean_s=rec["checked_mean_s"],
                    relative_overhead=rec["relative_overhead"],
                    noise_epsilon=rec["noise_epsilon"],
                    baseline_runs=list(rec["baseline_runs"]),
                    checked_runs=list(rec["checked_runs"]),
                    note=rec.get("note", OVERHEAD_NOTE),
                )
            )
        return ledger

    def render_text(self) -> str:
        lines = ["target  status  attempts  tokens  wall_s"]
        for row in self.rows:
            tokens = row.input_tokens + row.output_tokens
            lines.append(
                f"{row.target}  {row.final_status}  {row.attempts}  {tokens}  {row.wall_time_s:.3f}"
            )
        totals = self.totals()
        lines.append(
            f"TOTAL  targets={totals['targets']}  tokens={totals['tokens']}  "
            f"wall_s={totals['wall_time_s']:.3f}"
        )
        return "\n".join(lines)


def measure_overhead(
    project: SubjectProject,
    checkers: list[CheckerArtifact],
    repeat: int,
    work_dir: Path,
    noise_epsilon: float,
    test_files: list[str] | None = None,
    on_violation: str = "raise",
    cap_s: float = 600.0,
) -> OverheadRecord:
    """Mean suite runtimes with and without instrumentation.

    Runs the test files containing the checkers' target tests ``repeat``
    times against both trees. The result is an upper bound on production
    overhead, since only instrumented workloads are measured.
    """
    if repeat < 1:
        raise ValueError("repeat must be at least 1")
    for checker in checkers:
        if checker.rank() < 3:
            raise ValueError(f"{checker.id}: overhead runs need cross-validated checkers")

    if test_files is None:
        targets = {c.target for c in checkers}
        files = set()
        for test in project.tests:
            if test.id in targets:
                files.add(test.file.relative_to(project.root).as_posix())
        test_files = sorted(files)
    if not test_files:
        raise ValueError("no test files to measure")

    tree = Path(work_dir) / "overhead"
    if tree.exists():
        shutil.rmtree(tree)
    plan = InstrumentationPlan.from_checkers(checkers, tree, on_violation=on_violation)
    instrument(project, plan)

    baseline_runs: list[float] = []
    checked_runs: list[float] = []
    for _ in range(repeat):
        base = run_tests(project.root, project.test_runner_command, test_files, cap_s)
        if not base.passed:
            raise ValueError(f"baseline run failed:\n{base.output}")
        baseline_runs.append(base.wall_time_s)
        checked = run_tests(tree, project.test_runner_command, test_files, cap_s)
        if not checked.passed:
            raise ValueError(f"instrumented run failed:\n{checked.output}")
        checked_runs.append(checked.wall_time_s)

    baseline_mean = statistics.fmean(baseline_runs)
    checked_mean = statistics.fmean(checked_runs)
    return OverheadRecord(
        repeat=repeat,
        baseline_mean_s=round(baseline_mean, 6),
        checked_mean_s=round(checked_mean, 6),
        relative_overhead=round(checked_mean / baseline_mean - 1.0, 6),
        noise_epsilon=noise_epsilon,
        baseline_runs=[round(w, 6) for w in baseline_runs],
        checked_runs=[round(w, 6) for w in checked_runs],
    )
