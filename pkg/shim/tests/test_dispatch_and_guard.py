import pytest

import fc_runtime
from fc_runtime import (
    ABSENT,
    GUARD_MESSAGE,
    STATE,
    CheckerRecursionError,
    CheckerViolation,
    Operation,
    assertEquals,
    assertNotNull,
    assertTrue,
    dispatch,
    guard_enter,
    guard_exit,
)

SIG = "datanode.DataNode.addChild(str)"


class Node:
    pass


def guarded(checker_id, body):
    """Scaffold-shaped entry: guard set for the body, always cleared on exit."""

    def entry(op, shadow_state):
        guard_enter(checker_id)
        try:
            body(op, shadow_state)
        finally:
            guard_exit()

    return entry


def test_dispatch_runs_chained_checkers_in_order():
    seen = []
    entries = [
        guarded("chk_a", lambda op, s: seen.append(("a", op.signature))),
        guarded("chk_b", lambda op, s: seen.append(("b", op.signature))),
    ]
    dispatch(Operation(SIG, Node(), ["x"], True), entries)
    assert seen == [("a", SIG), ("b", SIG)]


def test_assertion_helpers_tag_the_active_checker():
    def failing(op, shadow_state):
        assertEquals(1, 0)

    with pytest.raises(CheckerViolation) as exc:
        dispatch(Operation(SIG, Node(), ["x"], True), [guarded("chk_tagged", failing)])
    message = str(exc.value)
    assert message.startswith("CheckerViolation [checker chk_tagged]:")
    assert "expected=1 actual=0" in message
    assert STATE.in_checker is False


def test_assertion_helper_edge_values():
    guard_enter("chk_edge")
    try:
        assertEquals(0, 0)  # no-op
        assertTrue(1 == 1)
        with pytest.raises(CheckerViolation, match="assertNotNull"):
            assertNotNull(None)
        with pytest.raises(CheckerViolation, match="assertNotNull"):
            assertNotNull(ABSENT)
        with pytest.raises(CheckerViolation, match="assertTrue"):
            assertTrue(False)
    finally:
        guard_exit()


def test_checker_sees_absent_return_value():
    captured = []

    def capture(op, shadow_state):
        captured.append(op.return_value)

    dispatch(Operation(SIG, Node(), ["x"]), [guarded("chk_cap", capture)])
    assert captured == [ABSENT]
    assert not captured[0]  # absent is falsy and printable
    assert repr(captured[0]) == "<absent>"


def test_recursive_dispatch_raises_exact_message_and_clears_flag():
    node = Node()

    def recursing(op, shadow_state):
        # a checker touching a monitored method re-enters dispatch
        dispatch(Operation(SIG, node, ["evil"], True), [guarded("chk_inner", lambda o, s: None)])

    with pytest.raises(CheckerRecursionError) as exc:
        dispatch(Operation(SIG, node, ["x"], True), [guarded("chk_outer", recursing)])
    assert str(exc.value) == GUARD_MESSAGE
    assert str(exc.value) == "Checker is calling a state-changing method."
    assert STATE.in_checker is False


def test_guard_enter_refuses_reentry_directly():
    guard_enter("chk_one")
    try:
        with pytest.raises(CheckerRecursionError):
            guard_enter("chk_two")
        assert STATE.current_checker == "chk_one"
    finally:
        guard_exit()
    assert STATE.in_checker is False


def test_raise_mode_stops_the_chain():
    seen = []
    entries = [
        guarded("chk_bad", lambda op, s: assertTrue(False)),
        guarded("chk_later", lambda op, s: seen.append("later")),
    ]
    with pytest.raises(CheckerViolation):
        dispatch(Operation(SIG, Node(), ["x"], True), entries, on_violation="raise")
    assert seen == []


def test_log_mode_lets_later_checkers_run(capsys):
    seen = []
    entries = [
        guarded("chk_bad", lambda op, s: assertTrue(False)),
        guarded("chk_later", lambda op, s: seen.append("later")),
    ]
    dispatch(Operation(SIG, Node(), ["x"], True), entries, on_violation="log")
    assert seen == ["later"]
    err = capsys.readouterr().err
    assert "CheckerViolation [checker chk_bad]" in err


def test_dispatch_clears_a_leaked_flag():
    def leaking(op, shadow_state):
        STATE.in_checker = True  # no guard_exit: dispatch must still clean up

    dispatch(Operation(SIG, Node(), ["x"], True), [leaking])
    assert STATE.in_checker is False


def test_dispatch_without_entries_for_signature_is_cheap():
    # the hook never calls dispatch with an empty chain, but the contract holds
    dispatch(Operation(SIG, Node(), ["x"], True), [])
    assert STATE.size() == 0
