"""Benchmark population filtering and per-target corpus assembly.

The filtering funnel keeps tests that call the subject, assert something,
and pass alone within the configured timeout. For each target test we then
assemble context tests (same declaring types, sampled under a hard token
budget) and validation tests (the target, its file mates, plus seeded
extras). Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from flycatcher.runner import run_tests
from flycatcher.signatures import parse_signature
from flycatcher.subject import SubjectProject, TestCase


@dataclass
class FunnelReport:
    all: int
    with_sut_calls: int
    with_assert: int
    passing: int

    def to_dict(self) -> dict:
        return {
            "all": self.all,
            "with_sut_calls": self.with_sut_calls,
            "with_assert": self.with_assert,
            "passing": self.passing,
        }


@dataclass
class CorpusSplit:
    """Target test plus its disjoint context and validation id lists.

    ``validation`` holds the held-out tests only; validation runs always
    prepend the target itself (see ``run_list``).
    """

    target: str
    context: list[str]
    validation: list[str]
    seed: int
    context_token_budget: int

    def run_list(self) -> list[str]:
        return [self.target, *self.validation]

    def verify(self, project: SubjectProject) -> None:
        context = set(self.context)
        validation = set(self.validation)
        if self.target in context or self.target in validation:
            raise ValueError("target test leaked into context or validation")
        if context & validation:
            raise ValueError("context and validation overlap")
        by_id = {t.id: t for t in project.tests}
        spent = sum(by_id[i].token_estimate for i in self.context)
        if spent > self.context_token_budget:
            raise ValueError(f"context tokens {spent} exceed budget {self.context_token_budget}")


def filter_candidate_tests(
    project: SubjectProject, runner=run_tests
) -> tuple[list[TestCase], FunnelReport]:
    """Apply the three-step funnel; each survivor passed alone within the timeout."""
    with_sut = [t for t in project.tests if len(t.sut_calls) >= 1]
    with_assert = [t for t in with_sut if t.assertion_count >= 1]
    passing = []
    for test in with_assert:
        result = runner(
            project.root,
            project.test_runner_command,
            [test.id],
            project.config.timeout_seconds,
        )
        if result.passed:
            passing.append(test)
    funnel = FunnelReport(
        all=len(project.tests),
        with_sut_calls=len(with_sut),
        with_assert=len(with_assert),
        passing=len(passing),
    )
    return passing, funnel


def _declaring_types(test: TestCase) -> set[str]:
    return {parse_signature(sig).declaring_type for sig in test.sut_calls}


def select_context_tests(
    project: SubjectProject, target: TestCase, budget: int, seed: int
) -> list[TestCase]:
    """Sample same-type tests without replacement until the next one would overshoot."""
    if budget <= 0:
        raise ValueError("context token budget must be positive")
    target_types = _declaring_types(target)
    pool = [
        t
        for t in project.tests
        if t.id != target.id and _declaring_types(t) & target_types
    ]
    pool.sort(key=lambda t: t.id)
    random.Random(seed).shuffle(pool)
    picked: list[TestCase] = []
    spent = 0
    for test in pool:
        if spent + test.token_estimate > budget:
            break  # hard budget: stop before the test that would exceed it
        picked.append(test)
        spent += test.token_estimate
    return picked


def select_validation_tests(
    project: SubjectProject,
    target: TestCase,
    extra: int,
    seed: int,
    passing_ids: set[str] | list[str],
    exclude=(),
) -> list[TestCase]:
    """Target itself, passing tests from its file, plus seeded same-type extras.

    Anything in ``exclude`` (normally the context selection) is left out to
    keep the corpus split disjoint.
    """
    if extra < 0:
        raise ValueError("extra must be nonnegative")
    passing = set(passing_ids)
    excluded = set(exclude)
    chosen: list[TestCase] = [target]
    seen = {target.id}

    for test in project.tests:
        if (
            test.file == target.file
            and test.id not in seen
            and test.id in passing
            and test.id not in excluded
        ):
            chosen.append(test)
            seen.add(test.id)

    target_types = _declaring_types(target)
    pool = [
        t
        for t in project.tests
        if t.id not in seen
        and t.id in passing
        and t.id not in excluded
        and _declaring_types(t) & target_types
    ]
    pool.sort(key=lambda t: t.id)
    random.Random(seed).shuffle(pool)
    chosen.extend(pool[:extra])
    return chosen


def build_split(
    project: SubjectProject,
    target: TestCase,
    budget: int,
    seed: int,
    extra: int,
    passing_ids,
) -> CorpusSplit:
    context = select_context_tests(project, target, budget, seed)
    context_ids = [t.id for t in context]
    validation = select_validation_tests(
        project, target, extra, seed, passing_ids, exclude=context_ids
    )
    split = CorpusSplit(
        target=target.id,
        context=context_ids,
        validation=[t.id for t in validation if t.id != target.id],
        seed=seed,
        context_token_budget=budget,
    )
    split.verify(project)
    return split
