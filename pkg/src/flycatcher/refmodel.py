"""Reference model of shadow-state bookkeeping.

This is the pure-Python oracle the test suites compare against: an
identity-keyed object-to-properties mapping plus the add/remove child
accounting that the motivating checker maintains. It deliberately shares no
code with the runtime emitted into instrumented trees, so the two sides can
be checked against each other.
"""

from __future__ import annotations

from typing import Any


class ShadowModel:
    """Maps live object identities to property dictionaries.

    Entries are keyed by ``id(obj)`` and the instance is kept referenced so
    identities cannot be recycled during a run. Two distinct objects with
    equal contents always get disjoint entries.
    """

    def __init__(self) -> None:
        self._entries: dict[int, tuple[Any, dict[str, Any]]] = {}

    def props(self, obj: Any) -> dict[str, Any]:
        """Property dict for obj, creating (and registering) it on first use."""
        key = id(obj)
        entry = self._entries.get(key)
        if entry is None:
            entry = (obj, {})
            self._entries[key] = entry
        return entry[1]

    def read(self, obj: Any, name: str, default: Any = None) -> Any:
        """Read one property, falling back to the caller-supplied default."""
        key = id(obj)
        entry = self._entries.get(key)
        if entry is None:
            return default
        return entry[1].get(name, default)

    def write(self, obj: Any, name: str, value: Any) -> None:
        self.props(obj)[name] = value

    def contains(self, obj: Any) -> bool:
        return id(obj) in self._entries

    def objects(self) -> list[Any]:
        return [obj for obj, _ in self._entries.values()]

    def __len__(self) -> int:
        return len(self._entries)


class ChildrenTracker:
    """Shadow accounting for per-node child sets, as the inferred checker keeps it.

    ``apply`` mirrors the update rules: "add" inserts the name, "remove"
    discards it (removing an absent child is a no-op), and any other
    operation leaves the set untouched but still initializes the entry.
    """

    def __init__(self) -> None:
        self.shadow = ShadowModel()

    def apply(self, node: Any, op: str, name: str | None = None) -> None:
        props = self.shadow.props(node)
        children = props.get("children", set())
        if op == "add":
            children.add(name)
        elif op == "remove":
            children.discard(name)
        props["children"] = children

    def children(self, node: Any) -> set:
        return set(self.shadow.read(node, "children", set()))
