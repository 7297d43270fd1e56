"""Core checker runtime: operation records, shadow state, guard, assertions.

Self-contained, stdlib-only. Instrumented trees import this as
``fc_runtime.core``; the generated checker units and the dispatch hook are
the only intended callers.
"""

import sys
import threading

GUARD_MESSAGE = "Checker is calling a state-changing method."


class _Absent:
    """Marker for "no return value": constructors and exceptional exits."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<absent>"

    def __bool__(self):
        return False


ABSENT = _Absent()


class CheckerRecursionError(RuntimeError):
    """A checker invoked a monitored state-changing method."""


class CheckerViolation(Exception):
    """A checker assertion failed.

    Deliberately not an AssertionError subclass, so violations are never
    confused with the subject test framework's own assertion failures. The
    message embeds the checker id for attribution in multi-checker runs.
    """

    def __init__(self, checker_id, message):
        super().__init__("CheckerViolation [checker %s]: %s" % (checker_id, message))
        self.checker_id = checker_id


class Operation:
    """One intercepted call: signature, receiver, arguments, return value.

    ``base`` is the receiver instance (the new instance for constructors,
    None for static methods). ``return_value`` is ABSENT when the wrapped
    call exited exceptionally or is a constructor.
    """

    __slots__ = ("signature", "base", "arguments", "return_value")

    def __init__(self, signature, base, arguments, return_value=ABSENT):
        self.signature = signature
        self.base = base
        self.arguments = list(arguments)
        self.return_value = return_value

    def __repr__(self):
        return "Operation(%r, base=%r, arguments=%r, return_value=%r)" % (
            self.signature,
            self.base,
            self.arguments,
            self.return_value,
        )


class ShadowState:
    """Identity-keyed object -> (property -> value) mapping.

    Entries key on id(obj) and keep the instance referenced, so identities
    are never recycled while the state is alive and equal-but-distinct
    objects stay disjoint. The guard flag is per thread: one thread running
    a checker must not trip checkers on other threads.
    """

    def __init__(self):
        self._entries = {}
        self.lock = threading.Lock()
        self._tls = threading.local()

    # -- per-thread guard flag ------------------------------------------

    @property
    def in_checker(self):
        return getattr(self._tls, "in_checker", False)

    @in_checker.setter
    def in_checker(self, value):
        self._tls.in_checker = bool(value)

    @property
    def current_checker(self):
        return getattr(self._tls, "current_checker", None)

    @current_checker.setter
    def current_checker(self, value):
        self._tls.current_checker = value

    # -- mapping ---------------------------------------------------------

    def get(self, obj):
        """Property dict for obj, created and registered on first access."""
        entry = self._entries.get(id(obj))
        if entry is None:
            entry = (obj, {})
            self._entries[id(obj)] = entry
        return entry[1]

    def put(self, obj, props):
        self._entries[id(obj)] = (obj, props)

    def read(self, obj, name, default=None):
        """One property of obj, falling back to the caller-supplied default."""
        entry = self._entries.get(id(obj))
        if entry is None:
            return default
        return entry[1].get(name, default)

    def contains(self, obj):
        return id(obj) in self._entries

    def objects(self):
        return [obj for obj, _ in self._entries.values()]

    def size(self):
        return len(self._entries)

    def clear(self):
        self._entries.clear()


STATE = ShadowState()


def guard_enter(checker_id):
    """Set the reentrancy guard; refuse if a checker is already active here."""
    if STATE.in_checker:
        raise CheckerRecursionError(GUARD_MESSAGE)
    STATE.in_checker = True
    STATE.current_checker = checker_id


def guard_exit():
    STATE.in_checker = False
    STATE.current_checker = None


def _operand(value):
    text = repr(value)
    if len(text) > 120:
        text = text[:117] + "..."
    return text


def assertTrue(condition, message=None):
    if not condition:
        detail = message or "expected a true value, got %s" % _operand(condition)
        raise CheckerViolation(STATE.current_checker, "assertTrue failed: %s" % detail)


def assertEquals(expected, actual, message=None):
    if expected != actual:
        detail = message or "expected=%s actual=%s" % (_operand(expected), _operand(actual))
        raise CheckerViolation(STATE.current_checker, "assertEquals failed: %s" % detail)


def assertNotNull(value, message=None):
    if value is None or value is ABSENT:
        detail = message or "value is %s" % _operand(value)
        raise CheckerViolation(STATE.current_checker, "assertNotNull failed: %s" % detail)


def dispatch(op, checkers, on_violation="raise"):
    """Run the chained checkers for one operation under the state lock.

    Being entered with the guard flag already set means a checker caused
    this call: raise the recursion error before touching the lock (the
    caller may hold it). A violation in checker i stops the chain in raise
    mode; in log mode it goes to stderr and later checkers still run.
    """
    if STATE.in_checker:
        raise CheckerRecursionError(GUARD_MESSAGE)
    try:
        with STATE.lock:
            for entry in checkers:
                try:
                    entry(op, STATE)
                except (CheckerViolation, CheckerRecursionError):
                    if on_violation == "raise":
                        raise
                    print("fc_runtime: %s" % sys.exc_info()[1], file=sys.stderr)
    finally:
        # Defensive: never leave this thread's flag set on any exit path.
        STATE.in_checker = False
