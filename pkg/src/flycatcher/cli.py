"""Command-line entry points.

Exit codes: 0 on success, 1 on a domain failure (for example a rejected
checker), 2 on infrastructure or usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from flycatcher.artifacts import CheckerArtifact, PipelineError, Status, load_artifact, save_artifact
from flycatcher.config import FlycatcherConfig, load_config
from flycatcher.corpus import CorpusSplit, build_split, filter_candidate_tests
from flycatcher.gateway import ProviderError, make_provider
from flycatcher.instrument import InstrumentationPlan, InstrumentError, instrument
from flycatcher.ledger import RunLedger, TargetRow, measure_overhead
from flycatcher.mutate import MutantRecord, MutationError, evaluate_mutants, generate_mutants
from flycatcher.pipeline import refine_loop
from flycatcher.runner import RunnerError
from flycatcher.subject import ProjectError, SubjectProject, scan_project
from flycatcher.validate import cross_validate, dynamic_validate

log = logging.getLogger("flycatcher.cli")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (
        ProjectError,
        RunnerError,
        MutationError,
        InstrumentError,
        ProviderError,
        PipelineError,
        ValueError,
        OSError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flycatcher",
        description="Generalize unit tests into stateful runtime checkers.",
    )
    parser.add_argument("--config", type=Path, default=Path("flycatcher.json"))
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="filter tests and report the funnel")
    analyze.set_defaults(func=cmd_analyze)

    gen = sub.add_parser("gen", help="infer a checker for one target test")
    gen.add_argument("--test", required=True, help="target test id (file::name)")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--provider", choices=["scripted", "http"], default=None)
    gen.set_defaults(func=cmd_gen)

    validate = sub.add_parser("validate", help="re-run dynamic validation for a checker")
    validate.add_argument("--checker", required=True)
    validate.set_defaults(func=cmd_validate)

    crossval = sub.add_parser("cross-validate", help="run the full passing suite with all checkers")
    crossval.set_defaults(func=cmd_cross_validate)

    instr = sub.add_parser("instrument", help="emit an instrumented project copy")
    instr.add_argument("--checkers", required=True, help="comma-separated checker ids")
    instr.add_argument("--out", required=True, type=Path)
    instr.set_defaults(func=cmd_instrument)

    mutate = sub.add_parser("mutate", help="generate mutants over subject classes")
    mutate.add_argument("--scope", required=True, help="comma-separated declaring types")
    mutate.set_defaults(func=cmd_mutate)

    evaluate = sub.add_parser("evaluate-mutants", help="kill evaluation with and without checkers")
    evaluate.add_argument("--checkers", default=None, help="comma-separated checker ids")
    evaluate.add_argument("--tests", default=None, help="comma-separated target test ids")
    evaluate.add_argument("--no-coverage", action="store_true")
    evaluate.set_defaults(func=cmd_evaluate_mutants)

    overhead = sub.add_parser("overhead", help="measure runtime overhead of the checkers")
    overhead.add_argument("--repeat", type=int, default=5)
    overhead.add_argument("--checkers", default=None)
    overhead.set_defaults(func=cmd_overhead)

    report = sub.add_parser("report", help="aggregate run artifacts into one report")
    report.set_defaults(func=cmd_report)
    return parser


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _setup(args) -> tuple[FlycatcherConfig, SubjectProject]:
    config = load_config(args.config)
    project = scan_project(config.root, config.project)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    return config, project


def _passing_ids(config: FlycatcherConfig, project: SubjectProject, refresh=False) -> list[str]:
    cache = config.out_dir / "passing_tests.json"
    if cache.is_file() and not refresh:
        return json.loads(cache.read_text())
    passing, funnel = filter_candidate_tests(project)
    ids = [t.id for t in passing]
    (config.out_dir / "funnel.json").write_text(
        json.dumps(funnel.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    cache.write_text(json.dumps(ids, indent=2) + "\n")
    return ids


def _load_checkers(config: FlycatcherConfig, ids=None, min_rank=0) -> list[CheckerArtifact]:
    base = config.out_dir / "checkers"
    artifacts = []
    if base.is_dir():
        for directory in sorted(base.iterdir()):
            if (directory / "meta.json").is_file():
                artifacts.append(load_artifact(directory))
    if ids is not None:
        wanted = set(ids)
        artifacts = [a for a in artifacts if a.id in wanted]
        missing = wanted - {a.id for a in artifacts}
        if missing:
            raise ProjectError(f"unknown checker ids: {', '.join(sorted(missing))}")
    return [a for a in artifacts if a.rank() >= min_rank]


def _csv(value: str | None) -> list[str] | None:
    if value is None:
        return None
    return [item.strip() for item in value.split(",") if item.strip()]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    config, project = _setup(args)
    _passing_ids(config, project, refresh=True)
    funnel = json.loads((config.out_dir / "funnel.json").read_text())
    print(json.dumps(funnel, sort_keys=True))
    return 0


def cmd_gen(args) -> int:
    config, project = _setup(args)
    seed = config.seed if args.seed is None else args.seed
    provider_config = config.provider
    if args.provider is not None and args.provider != provider_config.kind:
        provider_config = type(provider_config)(
            kind=args.provider,
            endpoint=provider_config.endpoint,
            model_name=provider_config.model_name,
            script_path=provider_config.script_path,
        )
    provider = make_provider(provider_config, base_dir=config.base_dir)

    passing = _passing_ids(config, project)
    target = project.test_by_id(args.test)
    split = build_split(
        project,
        target,
        budget=config.context_token_budget,
        seed=seed,
        extra=config.validation_extra,
        passing_ids=passing,
    )
    artifact, conversation = refine_loop(
        project,
        target,
        provider,
        split,
        out_dir=config.out_dir,
        work_dir=config.work_dir,
        k=config.max_attempts,
        same_kind_cutoff=config.same_kind_cutoff,
        cap_s=config.dynamic_validation_cap_s,
        on_violation=config.on_violation,
    )
    checker_dir = config.out_dir / "checkers" / artifact.id
    (checker_dir / "split.json").write_text(
        json.dumps(
            {
                "target": split.target,
                "context": split.context,
                "validation": split.validation,
                "seed": split.seed,
                "context_token_budget": split.context_token_budget,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )

    ledger = RunLedger.load(config.out_dir / "ledger.json")
    ledger.upsert(
        TargetRow(
            target=target.id,
            checker_id=artifact.id,
            wall_time_s=conversation.total_wall_ms / 1000.0,
            input_tokens=conversation.total_input_tokens,
            output_tokens=conversation.total_output_tokens,
            attempts=artifact.attempts,
            final_status=artifact.status.value,
        )
    )
    ledger.save(config.out_dir / "ledger.json", config.pricing)

    print(f"{artifact.id}: {artifact.status.value} after {artifact.attempts} attempts")
    return 0 if artifact.status in (Status.VALIDATED, Status.CROSS_VALIDATED) else 1


def cmd_validate(args) -> int:
    config, project = _setup(args)
    checker_dir = config.out_dir / "checkers" / args.checker
    artifact = load_artifact(checker_dir)
    split_data = json.loads((checker_dir / "split.json").read_text())
    split = CorpusSplit(
        target=split_data["target"],
        context=split_data["context"],
        validation=split_data["validation"],
        seed=split_data["seed"],
        context_token_budget=split_data["context_token_budget"],
    )
    feedback = dynamic_validate(
        project,
        artifact,
        split,
        cap_s=config.dynamic_validation_cap_s,
        work_dir=config.work_dir / artifact.id,
        on_violation=config.on_violation,
        outcome_path=config.out_dir / "outcomes" / f"{artifact.id}_revalidation.json",
    )
    save_artifact(checker_dir, artifact)
    if feedback is None:
        print(f"{artifact.id}: pass")
        return 0
    print(f"{artifact.id}: {feedback.kind.value}: {feedback.message}")
    return 1


def cmd_cross_validate(args) -> int:
    config, project = _setup(args)
    artifacts = _load_checkers(config, min_rank=2)
    passing = _passing_ids(config, project)
    flags = cross_validate(
        project,
        artifacts,
        passing,
        work_dir=config.work_dir,
        cap_s=config.dynamic_validation_cap_s,
        on_violation=config.on_violation,
    )
    for artifact in artifacts:
        save_artifact(config.out_dir / "checkers" / artifact.id, artifact)
    ledger = RunLedger.load(config.out_dir / "ledger.json")
    by_id = {artifact.id: artifact for artifact in artifacts}
    for row in ledger.rows:
        if row.checker_id in by_id:
            row.final_status = by_id[row.checker_id].status.value
    ledger.save(config.out_dir / "ledger.json", config.pricing)
    (config.out_dir / "crossval.json").write_text(
        json.dumps(flags, indent=2, sort_keys=True) + "\n"
    )
    print(json.dumps(flags, sort_keys=True))
    return 0


def cmd_instrument(args) -> int:
    config, project = _setup(args)
    artifacts = _load_checkers(config, ids=_csv(args.checkers))
    plan = InstrumentationPlan.from_checkers(
        artifacts, args.out, on_violation=config.on_violation
    )
    out = instrument(project, plan)
    print(str(out))
    return 0


def cmd_mutate(args) -> int:
    config, project = _setup(args)
    scope = set(_csv(args.scope) or [])
    mutants = generate_mutants(project, scope)
    payload = {
        "scope": sorted(scope),
        "mutants": [m.to_dict() for m in mutants],
    }
    (config.out_dir / "mutants.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    print(f"{len(mutants)} mutants over {len(scope)} types")
    return 0


def cmd_evaluate_mutants(args) -> int:
    config, project = _setup(args)
    mutants_file = config.out_dir / "mutants.json"
    if not mutants_file.is_file():
        raise ProjectError("no mutants.json; run `flycatcher mutate` first")
    records = [
        MutantRecord.from_dict(d) for d in json.loads(mutants_file.read_text())["mutants"]
    ]
    checkers = _load_checkers(config, ids=_csv(args.checkers), min_rank=2)
    targets = _csv(args.tests) or sorted({a.target for a in checkers})
    if not targets:
        raise ProjectError("no target tests: pass --tests or generate checkers first")

    # never mutate the user's tree: evaluate against a disposable copy
    work = config.work_dir / "mutation"
    tree = work / "tree"
    if tree.exists():
        shutil.rmtree(tree)
    shutil.copytree(
        project.root,
        tree,
        ignore=shutil.ignore_patterns("__pycache__", "*.pyc", ".pytest_cache", "fc_out"),
    )
    copy_project = scan_project(tree, config.project)
    report = evaluate_mutants(
        copy_project,
        records,
        targets,
        checkers=checkers,
        work_dir=work,
        use_coverage=not args.no_coverage,
        on_violation=config.on_violation,
    )
    payload = {"counts": report.to_dict(), "mutants": [m.to_dict() for m in report.records]}
    (config.out_dir / "mutation_report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_overhead(args) -> int:
    config, project = _setup(args)
    artifacts = _load_checkers(config, ids=_csv(args.checkers), min_rank=3)
    if not artifacts:
        raise ProjectError("no cross-validated checkers to measure")
    record = measure_overhead(
        project,
        artifacts,
        repeat=args.repeat,
        work_dir=config.work_dir,
        noise_epsilon=config.overhead_noise_epsilon,
        on_violation=config.on_violation,
    )
    ledger = RunLedger.load(config.out_dir / "ledger.json")
    ledger.overheads.append(record)
    ledger.save(config.out_dir / "ledger.json", config.pricing)
    print(
        f"baseline {record.baseline_mean_s:.3f}s  checked {record.checked_mean_s:.3f}s  "
        f"overhead {record.relative_overhead * 100:.1f}%"
    )
    return 0


def cmd_report(args) -> int:
    config = load_config(args.config)
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)

    def read_json(name):
        path = out / name
        return json.loads(path.read_text()) if path.is_file() else None

    checkers = _load_checkers(config) if (out / "checkers").is_dir() else []
    by_status: dict[str, int] = {}
    for artifact in checkers:
        by_status[artifact.status.value] = by_status.get(artifact.status.value, 0) + 1
    ledger = RunLedger.load(out / "ledger.json")
    mutation = read_json("mutation_report.json")
    payload = {
        "funnel": read_json("funnel.json"),
        "checkers": {"total": len(checkers), "by_status": by_status},
        "mutation": mutation["counts"] if mutation else None,
        "ledger": {
            "totals": ledger.totals(),
            "medians": ledger.medians(),
            "cost": ledger.cost(config.pricing),
        },
        "overheads": [o.to_dict() for o in ledger.overheads],
    }
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    print("== flycatcher report ==")
    print(f"funnel: {json.dumps(payload['funnel'], sort_keys=True)}")
    print(f"checkers: {json.dumps(payload['checkers'], sort_keys=True)}")
    print(f"mutation: {json.dumps(payload['mutation'], sort_keys=True)}")
    print(ledger.render_text())
    for record in ledger.overheads:
        print(
            f"overhead: baseline={record.baseline_mean_s:.3f}s "
            f"checked={record.checked_mean_s:.3f}s rel={record.relative_overhead:+.3%}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
