"""Small ordered-collection manager used as an instrumentation fixture."""


class ListManager:
    """Keeps items in insertion order; duplicates allowed."""

    def __init__(self):
        self.items = []

    def addItem(self, item: str) -> int:
        self.items.append(item)
        return len(self.items)

    def removeItem(self, item: str) -> bool:
        if item in self.items:
            self.items.remove(item)
            return True
        return False

    def size(self) -> int:
        return len(self.items)

    def itemAt(self, index: int) -> str:
        return self.items[index]

    def clear(self) -> int:
        removed = len(self.items)
        self.items = []
        return removed
