"""Checker runtime emitted into instrumented trees."""

from fc_runtime.core import (
    ABSENT,
    GUARD_MESSAGE,
    STATE,
    CheckerRecursionError,
    CheckerViolation,
    Operation,
    ShadowState,
    assertEquals,
    assertNotNull,
    assertTrue,
    dispatch,
    guard_enter,
    guard_exit,
)

__all__ = [
    "ABSENT",
    "GUARD_MESSAGE",
    "STATE",
    "CheckerRecursionError",
    "CheckerViolation",
    "Operation",
    "ShadowState",
    "assertEquals",
    "assertNotNull",
    "assertTrue",
    "dispatch",
    "guard_enter",
    "guard_exit",
]
