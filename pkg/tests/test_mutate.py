import pytest

from flycatcher.artifacts import CheckerArtifact, Status
from flycatcher.mutate import (
    STATUS_KILLED_BY_CHECKER,
    STATUS_KILLED_BY_TESTS,
    STATUS_NOT_COVERED,
    STATUS_SURVIVED,
    MutantApplyError,
    MutationError,
    MutationOperator,
    apply_mutant,
    coverage_probe,
    evaluate_mutants,
    generate_mutants,
    revert_mutant,
    tree_hash,
)

from conftest import DATANODE_CHECKER, FIG2_TEST_ID

SCOPE = {"datanode.DataNode", "datanode.DataTree"}


def children_checker():
    artifact = CheckerArtifact(
        id="chk_children",
        target=FIG2_TEST_ID,
        checker_source=DATANODE_CHECKER,
        handled_signatures=[
            "datanode.DataNode.addChild(str)",
            "datanode.DataNode.removeChild(str)",
        ],
        monitored_signatures=[
            "datanode.DataNode.DataNode()",
            "datanode.DataNode.addChild(str)",
            "datanode.DataNode.removeChild(str)",
        ],
    )
    artifact.advance(Status.STATICALLY_VALID)
    return artifact


def find(mutants, operator, snippet_contains):
    hits = [
        m
        for m in mutants
        if m.operator == operator and snippet_contains in m.original_snippet
    ]
    assert hits, f"no {operator.value} mutant over {snippet_contains!r}"
    return hits[0]


def test_generation_is_deterministic_and_covers_known_sites(datanode_project):
    first = generate_mutants(datanode_project, SCOPE)
    second = generate_mutants(datanode_project, SCOPE)
    assert [m.to_dict() for m in first] == [m.to_dict() for m in second]
    assert len(first) >= 50
    kinds = {m.operator for m in first}
    assert len(kinds) >= 4

    # the motivating bug: getChildren forced to return an empty set
    fig1 = find(first, MutationOperator.EMPTY_RETURN, "return set(self.children)")
    assert fig1.mutated_snippet == "return set()"
    # the literal-initializer analog that stays behavior-preserving
    find(first, MutationOperator.REMOVE_INITIALIZER, "self.aclIndex = 0")
    class_level = find(first, MutationOperator.REMOVE_INITIALIZER, "aclIndex: int = 0")
    assert class_level.mutated_snippet == "aclIndex: int"
    # capacity hint nudged from 8 to 9, also behavior-preserving
    capacity = find(first, MutationOperator.CONSTANT_NUDGE, "8")
    assert capacity.mutated_snippet == "9"
    find(first, MutationOperator.NEGATE_CONDITIONAL, "self.children is None")
    find(first, MutationOperator.ARITHMETIC_SWAP, "self.aclIndex + step")


def test_generation_rejects_unknown_scope(datanode_project):
    with pytest.raises(MutationError, match="unknown declaring types"):
        generate_mutants(datanode_project, {"datanode.Ghost"})
    with pytest.raises(MutationError, match="at least one"):
        generate_mutants(datanode_project, set())


def test_apply_then_revert_restores_bytes(datanode_project):
    mutants = generate_mutants(datanode_project, SCOPE)
    target = datanode_project.root / "src/datanode.py"
    original = target.read_bytes()
    for record in mutants:
        if record.file != "src/datanode.py":
            continue
        apply_mutant(datanode_project.root, record)
        assert target.read_bytes() != original
        revert_mutant(datanode_project.root, record)
        assert target.read_bytes() == original


def test_apply_detects_span_drift(datanode_project):
    record = generate_mutants(datanode_project, SCOPE)[0]
    path = datanode_project.root / record.file
    path.write_text("# shifted\n" + path.read_text())
    with pytest.raises(MutantApplyError, match="span drifted"):
        apply_mutant(datanode_project.root, record)


def test_coverage_probe_sees_executed_lines(datanode_project):
    covered = coverage_probe(datanode_project, [FIG2_TEST_ID])
    files = {rel for rel, _ in covered}
    assert "src/datanode.py" in files
    assert all(not rel.startswith("..") for rel in files)


def test_evaluation_partition_sums_and_marks_uncovered(datanode_project, tmp_path):
    mutants = generate_mutants(datanode_project, SCOPE)
    # keep the integration run small: a few from each interesting region
    acl_swap = find(mutants, MutationOperator.ARITHMETIC_SWAP, "self.aclIndex + step")
    add_cond = find(mutants, MutationOperator.NEGATE_CONDITIONAL, "self.children is None")
    fig1 = find(mutants, MutationOperator.EMPTY_RETURN, "return set(self.children)")
    subset = [acl_swap, add_cond, fig1]

    report = evaluate_mutants(
        datanode_project,
        subset,
        [FIG2_TEST_ID],
        checkers=(),
        work_dir=tmp_path / "work",
    )
    counts = report.to_dict()
    assert acl_swap.status == STATUS_NOT_COVERED  # target test never bumps the index
    assert fig1.status == STATUS_SURVIVED  # silent: test asserts size 0 both times
    assert counts["not_covered"] + counts["all"] == len(subset)
    assert counts["skipped_infrastructure"] == 0
    total = (
        counts["killed_by_target_tests"]
        + counts["survived"]
        + counts["killed_by_checkers"]
        + counts["not_covered"]
    )
    assert total == len(subset)


def test_fig1_mutant_survives_plain_but_dies_under_the_checker(datanode_project, tmp_path):
    mutants = generate_mutants(datanode_project, SCOPE)
    fig1 = find(mutants, MutationOperator.EMPTY_RETURN, "return set(self.children)")

    report = evaluate_mutants(
        datanode_project,
        [fig1],
        [FIG2_TEST_ID],
        checkers=[children_checker()],
        work_dir=tmp_path / "work",
    )
    assert fig1.status == STATUS_KILLED_BY_CHECKER
    # detected at the first addChild: one expected child, zero observed
    assert "expected=1 actual=0" in fig1.note
    assert report.to_dict()["killed_by_checkers"] == 1


def test_equivalent_mutants_survive_both_runs(datanode_project, tmp_path):
    mutants = generate_mutants(datanode_project, SCOPE)
    equivalents = [
        find(mutants, MutationOperator.REMOVE_INITIALIZER, "self.aclIndex = 0"),
        find(mutants, MutationOperator.CONSTANT_NUDGE, "8"),
    ]
    evaluate_mutants(
        datanode_project,
        equivalents,
        [FIG2_TEST_ID],
        checkers=[children_checker()],
        work_dir=tmp_path / "work",
    )
    assert all(m.status == STATUS_SURVIVED for m in equivalents)


def test_killed_by_tests_is_independent_of_checkers(datanode_project, tmp_path):
    mutants = generate_mutants(datanode_project, SCOPE)
    cond = find(mutants, MutationOperator.NEGATE_CONDITIONAL, "child in self.children")
    plain = evaluate_mutants(
        datanode_project, [cond], [FIG2_TEST_ID], checkers=(), work_dir=tmp_path / "a"
    )
    status_plain = cond.status
    cond.status = "pending"
    checked = evaluate_mutants(
        datanode_project,
        [cond],
        [FIG2_TEST_ID],
        checkers=[children_checker()],
        work_dir=tmp_path / "b",
    )
    assert status_plain == STATUS_KILLED_BY_TESTS
    assert cond.status == STATUS_KILLED_BY_TESTS
    assert plain.to_dict()["killed_by_target_tests"] == checked.to_dict()["killed_by_target_tests"]


def test_baseline_failure_aborts(datanode_project, tmp_path):
    with pytest.raises(MutationError, match="baseline"):
        evaluate_mutants(
            datanode_project,
            [],
            ["tests/test_datanode.py::test_no_such_test"],
            work_dir=tmp_path / "work",
        )


def test_tree_hash_stable_across_pyc_noise(datanode_project):
    before = tree_hash(datanode_project.root)
    cache = datanode_project.root / "src" / "__pycache__"
    cache.mkdir()
    (cache / "junk.pyc").write_bytes(b"x")
    assert tree_hash(datanode_project.root) == before
