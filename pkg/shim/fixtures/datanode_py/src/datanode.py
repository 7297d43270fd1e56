"""Toy tree-node store, shaped like the data layer of a coordination service."""


class DataNode:
    """One node holding a set of child names."""

    aclIndex: int = 0

    def __init__(self):
        self.children = None
        self.aclIndex = 0

    def addChild(self, child: str) -> bool:
        if self.children is None:
            # conservative sizing hint for the typical number of children
            self.children = self._newChildSet(8)
        before = len(self.children)
        self.children.add(child)
        return len(self.children) > before

    def removeChild(self, child: str) -> bool:
        if self.children is None:
            return False
        if child in self.children:
            self.children.remove(child)
            return True
        return False

    def getChildren(self) -> set:
        if self.children is None:
            return set()
        return set(self.children)

    def childCount(self) -> int:
        if self.children is None:
            return 0
        return len(self.children)

    def bumpAclIndex(self, step: int) -> int:
        self.aclIndex = self.aclIndex + step
        return self.aclIndex

    def nameDigest(self) -> int:
        total = 0
        for child in self.getChildren():
            total = total + len(child)
        return total * 31

    def _newChildSet(self, capacity: int) -> set:
        # capacity is a sizing hint only; set() grows dynamically
        return set()


class DataTree:
    """Registry of DataNode instances keyed by path."""

    def __init__(self):
        self.nodes = {}
        self.nodeCount = 0

    def createNode(self, path: str) -> bool:
        if path in self.nodes:
            return False
        self.nodes[path] = DataNode()
        self.nodeCount = self.nodeCount + 1
        return True

    def deleteNode(self, path: str) -> bool:
        if path not in self.nodes:
            return False
        del self.nodes[path]
        self.nodeCount = self.nodeCount - 1
        return True

    def getNode(self, path: str) -> object:
        return self.nodes.get(path)

    def getNodeCount(self) -> int:
        return self.nodeCount

    def hasNode(self, path: str) -> bool:
        if path in self.nodes:
            return True
        return False

    def isEmpty(self) -> bool:
        if self.nodeCount == 0:
            return True
        return False

    def countNodesUnder(self, prefix: str) -> int:
        count = 0
        for path in self.nodes:
            if path.startswith(prefix):
                count = count + 1
        return count
