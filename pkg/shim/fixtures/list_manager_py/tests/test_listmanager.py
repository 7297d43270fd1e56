"""Tests for the ListManager fixture."""

from listmanager import ListManager


def test_add_items_grows_size():
    manager = ListManager()
    assert manager.addItem("a") == 1
    assert manager.addItem("b") == 2
    assert manager.size() == 2


def test_remove_present_and_missing_items():
    manager = ListManager()
    manager.addItem("a")
    assert manager.removeItem("a") is True
    assert manager.removeItem("a") is False
    assert manager.size() == 0


def test_items_keep_insertion_order():
    manager = ListManager()
    manager.addItem("x")
    manager.addItem("y")
    assert manager.itemAt(0) == "x"
    assert manager.itemAt(1) == "y"


def test_clear_reports_removed_count():
    manager = ListManager()
    manager.addItem("a")
    manager.addItem("b")
    assert manager.clear() == 2
    assert manager.size() == 0


def test_duplicates_are_allowed():
    manager = ListManager()
    manager.addItem("a")
    manager.addItem("a")
    assert manager.size() == 2
    manager.removeItem("a")
    assert manager.size() == 1
