"""Tests for the DataTree node registry."""

from datanode import DataTree


def test_create_and_count_nodes():
    tree = DataTree()
    assert tree.createNode("/a") is True
    assert tree.createNode("/a") is False
    assert tree.getNodeCount() == 1


def test_delete_node_updates_count():
    tree = DataTree()
    tree.createNode("/a")
    tree.createNode("/b")
    assert tree.deleteNode("/a") is True
    assert tree.deleteNode("/a") is False
    assert tree.getNodeCount() == 1


def test_get_node_returns_live_instance():
    tree = DataTree()
    tree.createNode("/a")
    node = tree.getNode("/a")
    assert node is not None
    node.addChild("x")
    assert tree.getNode("/a").childCount() == 1


def test_has_node_tracks_membership():
    tree = DataTree()
    assert tree.hasNode("/a") is False
    tree.createNode("/a")
    assert tree.hasNode("/a") is True


def test_is_empty_follows_node_count():
    tree = DataTree()
    assert tree.isEmpty() is True
    tree.createNode("/a")
    assert tree.isEmpty() is False


def test_count_nodes_under_prefix():
    tree = DataTree()
    tree.createNode("/app/a")
    tree.createNode("/app/b")
    tree.createNode("/sys/c")
    assert tree.countNodesUnder("/app") == 2
    assert tree.countNodesUnder("/none") == 0
