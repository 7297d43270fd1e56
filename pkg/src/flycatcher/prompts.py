"""The three prompt templates and their fixed content.

Everything here is deterministic text assembly: identification of
state-changing calls, checker generation (guidelines, worked examples,
target test, imports, context tests), and the refinement message used by
the feedback loop. Renderers never include subject method implementations
in the generation prompt; checkers must generalize from test semantics, not
copy the code under test.
"""

from __future__ import annotations

STATE_CHANGING_MARK = "# state-changing"

IDENTIFICATION_TEMPLATE = """\
Many methods called in a test may modify the state of the target system, e.g., write and delete.
Given a test case and the implementation of the methods called in the test, identify all method calls that can cause side effects in the target system and produce a new version of the test containing the `# state-changing` comment in each line with method calls that can cause side effects. Constructors are state-changing methods by default.

Method implementations: [implementations]

Test: [test]
"""

REFINEMENT_TEMPLATE = """\
When trying to {stage} the provided checker, the following error happens:

{error}

Please, provide a fixed version of the provided checker to fix the error.
"""

REFINEMENT_STAGES = ("compile", "instrument", "execute")

GUIDELINES = """\
1. The checker is a single, parameterized method.
2. The checker receives (i) an operation object, which contains the following attributes: signature, base, arguments, and return_value; and (ii) a shadow state mapping objects to their properties and respective values.
3. The checker handles methods that modify the state of object instances. These methods are marked with a `# state-changing` comment in the target test. For these methods, the checker updates the provided shadow state.
4. When reading a property from the shadow state, the checker falls back to a default value, as the property may not be in the shadow state yet.
5. The checker updates the values in the shadow state based on the semantics of the received operation object.
6. Toward the end of the checker code, the checker asserts that properties have their expected values. Similar to the assertions in the test case, the assertions may use methods that do not modify the system state. Assert statements should be outside of if-statements, as in the test. Do not insert any return statements.
7. To obtain the expected value in the assertion, the checker retrieves it from the shadow state.
8. The checker does not modify the state of the base object from the received operation.
9. The checker only contains necessary variables and operations, and properly accesses methods and attributes according to their visibility.
10. The checker code is explained with comments.
"""

# Worked examples over toy classes. Each pairs an annotated test with the
# checker we expect back: shadow-state update keyed on the fully qualified
# operation signature, then assertions against the live object through
# read-only accessors (assertTrue / assertEquals / assertNotNull).
FEW_SHOT_EXAMPLES = [
    (
        "BankAccount",
        """\
def test_deposit_and_withdraw_update_balance():
    account = BankAccount()  # state-changing
    account.deposit(100)  # state-changing
    account.withdraw(40)  # state-changing
    assert account.getBalance() == 60
""",
        """\
def bank_account_balance_checker(op, shadow_state):
    # Track the expected balance of each account instance.
    account = op.base
    props = shadow_state.get(account)
    # Fall back to a zero balance for accounts seen for the first time.
    balance = props.get("balance", 0)
    if op.signature == "bank.BankAccount.deposit(int)":
        # Deposits increase the expected balance by the deposited amount.
        balance = balance + op.arguments[0]
    elif op.signature == "bank.BankAccount.withdraw(int)":
        # Withdrawals decrease the expected balance.
        balance = balance - op.arguments[0]
    props["balance"] = balance
    # getBalance does not modify the account, so it is safe to call here.
    assertEquals(balance, account.getBalance())
""",
    ),
    (
        "ListManager",
        """\
def test_add_and_remove_items_change_size():
    manager = ListManager()  # state-changing
    manager.addItem("a")  # state-changing
    manager.addItem("b")  # state-changing
    manager.removeItem("a")  # state-changing
    assert manager.size() == 1
""",
        """\
def list_manager_size_checker(op, shadow_state):
    # Keep a shadow item count instead of hard-coding the test's numbers.
    manager = op.base
    props = shadow_state.get(manager)
    count = props.get("count", 0)
    if op.signature == "toys.ListManager.addItem(str)":
        count = count + 1
    elif op.signature == "toys.ListManager.removeItem(str)":
        count = count - 1
    props["count"] = count
    # size is a read-only accessor.
    assertEquals(count, manager.size())
    assertTrue(count >= 0)
""",
    ),
    (
        "Rectangle",
        """\
def test_resize_updates_area():
    rect = Rectangle(2, 3)  # state-changing
    assert rect.area() == 6
    rect.setWidth(4)  # state-changing
    assert rect.area() == 12
""",
        """\
def rectangle_area_checker(op, shadow_state):
    # Mirror width and height so the expected area follows any workload.
    rect = op.base
    props = shadow_state.get(rect)
    if op.signature == "toys.Rectangle.Rectangle(int,int)":
        props["width"] = op.arguments[0]
        props["height"] = op.arguments[1]
    elif op.signature == "toys.Rectangle.setWidth(int)":
        props["width"] = op.arguments[0]
    elif op.signature == "toys.Rectangle.setHeight(int)":
        props["height"] = op.arguments[0]
    width = props.get("width", 0)
    height = props.get("height", 0)
    # area is derived state; compare it against the live object.
    assertEquals(width * height, rect.area())
""",
    ),
    (
        "Counter",
        """\
def test_increment_then_reset():
    counter = Counter()  # state-changing
    counter.increment()  # state-changing
    counter.increment()  # state-changing
    assert counter.value() == 2
    counter.reset()  # state-changing
    assert counter.value() == 0
""",
        """\
def counter_value_checker(op, shadow_state):
    # The shadow value follows every increment and reset.
    counter = op.base
    props = shadow_state.get(counter)
    value = props.get("value", 0)
    if op.signature == "toys.Counter.increment()":
        value = value + 1
    elif op.signature == "toys.Counter.reset()":
        value = 0
    props["value"] = value
    # value only reads the counter.
    assertNotNull(counter.value())
    assertEquals(value, counter.value())
""",
    ),
    (
        "KeyValueStore",
        """\
def test_put_get_and_delete():
    store = KeyValueStore()  # state-changing
    store.put("k", "v")  # state-changing
    assert store.get("k") == "v"
    store.delete("k")  # state-changing
    assert store.get("k") is None
""",
        """\
def key_value_store_checker(op, shadow_state):
    # Shadow the whole key-to-value mapping, not just the workload's keys.
    store = op.base
    props = shadow_state.get(store)
    entries = props.get("entries", {})
    if op.signature == "toys.KeyValueStore.put(str,str)":
        entries[op.arguments[0]] = op.arguments[1]
    elif op.signature == "toys.KeyValueStore.delete(str)":
        entries.pop(op.arguments[0], None)
    props["entries"] = entries
    # get and size are pure lookups; verify every shadowed key.
    assertEquals(len(entries), store.size())
    for key in entries:
        assertEquals(entries[key], store.get(key))
""",
    ),
]

GENERATION_PREAMBLE = """\
You generalize an existing unit test of a software system into a runtime checker. The checker monitors invocations of the test's state-changing methods during arbitrary executions of the system and asserts the properties the test encodes. Maintain whatever shadow state the assertions need; do not hard-code the test's workload.

Follow these guidelines:
"""

GENERATION_API_NOTES = """\
The checker is written in Python. The shadow state offers shadow_state.get(obj), returning that object's mutable property dict (created on first use), and shadow_state.put(obj, props). The assertion helpers assertTrue(condition), assertEquals(expected, actual), and assertNotNull(value) are in scope. Compare op.signature against fully qualified signatures of the form namespace.Type.method(paramtype,...). Reply with exactly one fenced code block containing one checker function.
"""


def render_identification_prompt(test_body: str, implementations: list[str]) -> str:
    """Fill the identification template's slots; deterministic for fixed inputs."""
    impl_text = "\n\n".join(implementations)
    prompt = IDENTIFICATION_TEMPLATE.replace("[implementations]", f"\n\n{impl_text}\n" if impl_text else "")
    return prompt.replace("[test]", f"\n\n{test_body}")


def render_generation_prompt(
    annotated_body: str, imports: list[str], context_bodies: list[str]
) -> str:
    """Guidelines, the five worked examples, then the annotated target, imports, context."""
    parts = [GENERATION_PREAMBLE, GUIDELINES, "\nWorked examples:\n"]
    for index, (title, test, checker) in enumerate(FEW_SHOT_EXAMPLES, start=1):
        parts.append(
            f"\nExample {index} ({title}):\n"
            f"Test:\n```python\n{test}```\n"
            f"Checker:\n```python\n{checker}```\n"
        )
    parts.append("\n" + GENERATION_API_NOTES)
    parts.append(f"\nTarget test (state-changing calls annotated):\n```python\n{annotated_body}\n```\n")
    imports_text = "\n".join(imports) if imports else "(none)"
    parts.append(f"\nImports from the test file:\n{imports_text}\n")
    if context_bodies:
        joined = "\n\n".join(context_bodies)
        parts.append(f"\nContext tests that exercise the same classes:\n```python\n{joined}\n```\n")
    else:
        parts.append("\nContext tests that exercise the same classes: (none)\n")
    return "".join(parts)


def render_refinement_prompt(stage: str, error: str) -> str:
    if stage not in REFINEMENT_STAGES:
        raise ValueError(f"unknown refinement stage: {stage!r}")
    if not error:
        raise ValueError("refinement prompt needs a nonempty error")
    return REFINEMENT_TEMPLATE.format(stage=stage, error=error)
