"""Dispatch entry used by instrumented method epilogues.

The generated ``fc_plan`` module (created per instrumented tree) is loaded
lazily so importing a subject module never races the plan's own imports.
"""

from fc_runtime import core
from fc_runtime.core import ABSENT  # re-exported for epilogue code

_plan = None


def _load_plan():
    global _plan
    if _plan is None:
        from fc_runtime import fc_plan

        _plan = fc_plan
    return _plan


def dispatch_call(signature, base, arguments, return_value):
    plan = _load_plan()
    entries = plan.REGISTRY.get(signature)
    if not entries:
        return
    op = core.Operation(signature, base, arguments, return_value)
    core.dispatch(op, entries, on_violation=plan.ON_VIOLATION)
