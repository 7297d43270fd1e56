"""Tests for DataNode child bookkeeping."""

from datanode import DataNode


def test_get_children_empty_when_no_children():
    # create a node and read its children
    node = DataNode()
    children = node.getChildren()
    assert children is not None
    assert len(children) == 0

    # add a child, remove it again, then re-read
    child = "child"
    node.addChild(child)
    node.removeChild(child)
    children = node.getChildren()
    assert children is not None
    assert len(children) == 0


def test_add_child_reports_new_membership():
    node = DataNode()
    assert node.addChild("a") is True
    assert node.addChild("a") is False
    assert node.childCount() == 1


def test_remove_missing_child_returns_false():
    node = DataNode()
    assert node.removeChild("ghost") is False
    node.addChild("a")
    assert node.removeChild("a") is True


def test_children_snapshot_is_isolated():
    node = DataNode()
    node.addChild("a")
    snapshot = node.getChildren()
    snapshot.add("b")
    assert node.childCount() == 1


def test_acl_index_accumulates():
    node = DataNode()
    assert node.bumpAclIndex(2) == 2
    assert node.bumpAclIndex(3) == 5


def test_name_digest_tracks_total_name_length():
    node = DataNode()
    assert node.nameDigest() == 0
    node.addChild("ab")
    node.addChild("c")
    assert node.nameDigest() == 3 * 31
