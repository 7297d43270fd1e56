import random

import fc_runtime
from fc_runtime import Operation, ShadowState, dispatch


class Box:
    def __init__(self, value):
        self.value = value

    def __eq__(self, other):
        return isinstance(other, Box) and other.value == self.value

    def __hash__(self):
        return hash(self.value)


def test_equal_objects_have_disjoint_entries():
    state = ShadowState()
    a, b = Box(1), Box(1)
    state.get(a)["children"] = {"x"}
    assert not state.contains(b)
    state.get(b)["children"] = {"y"}
    assert state.read(a, "children") == {"x"}
    assert state.read(b, "children") == {"y"}
    assert state.size() == 2


def test_missing_property_reads_fall_back_to_default():
    state = ShadowState()
    obj = Box(0)
    assert state.read(obj, "count", 7) == 7
    props = state.get(obj)
    assert props.get("count", 7) == 7
    props["count"] = 1
    assert state.read(obj, "count", 7) == 1


def test_put_keeps_the_given_mapping():
    state = ShadowState()
    obj = Box(0)
    props = {"children": set()}
    state.put(obj, props)
    props["children"].add("a")
    assert state.read(obj, "children") == {"a"}


def test_entries_keep_objects_alive():
    import gc

    state = ShadowState()
    state.get(Box(1))["mark"] = True
    gc.collect()
    # the temporary is still reachable through the state, so its identity
    # cannot be recycled for another object
    assert len(state.objects()) == 1
    survivor = state.objects()[0]
    assert state.read(survivor, "mark") is True


def _children_tracking_checker(op, shadow_state):
    props = shadow_state.get(op.base)
    children = props.get("children", set())
    if op.signature == "datanode.DataNode.addChild(str)":
        children.add(op.arguments[0])
    elif op.signature == "datanode.DataNode.removeChild(str)":
        children.discard(op.arguments[0])
    props["children"] = children


def test_add_then_remove_leaves_empty_shadow_children():
    node = Box("n")
    for signature, name in (
        ("datanode.DataNode.addChild(str)", "a"),
        ("datanode.DataNode.removeChild(str)", "a"),
    ):
        dispatch(Operation(signature, node, [name], True), [_children_tracking_checker])
    assert fc_runtime.STATE.read(node, "children") == set()


def test_shadow_children_match_the_reference_model():
    # oracle: the reference model shipped by the pipeline package
    from flycatcher.refmodel import ChildrenTracker

    rng = random.Random(424242)
    for _ in range(300):
        fc_runtime.STATE.clear()
        nodes = [Box(i) for i in range(rng.randint(1, 4))]
        tracker = ChildrenTracker()
        for _ in range(rng.randint(0, 64)):
            node = rng.choice(nodes)
            op_kind = rng.choice(["add", "remove"])
            name = rng.choice("abcdef")
            signature = (
                "datanode.DataNode.addChild(str)"
                if op_kind == "add"
                else "datanode.DataNode.removeChild(str)"
            )
            dispatch(Operation(signature, node, [name], True), [_children_tracking_checker])
            tracker.apply(node, op_kind, name)
        for node in nodes:
            assert fc_runtime.STATE.read(node, "children", set()) == tracker.children(node)
