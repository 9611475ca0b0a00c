"""The evolving machine hierarchy: tree maintenance and geodesic distance.

The tree is mutated only through the placement actions (new child, merge,
insert intermediate).  Mutation listeners let dependent caches (recognition
models) stay incremental without the hierarchy knowing about them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .core import Encounter, InputError, VisualObject

NodeId = int


@dataclass
class HierarchyNode:
    id: NodeId
    parent: NodeId | None
    children: list[NodeId] = field(default_factory=list)
    encounter_ids: list[str] = field(default_factory=list)
    annotation: str | None = None

    @property
    def is_root(self) -> bool:
        return self.parent is None


class Hierarchy:
    """Single-writer tree of object/genus nodes rooted at the universal concept.

    The root never holds encounters directly; every placement creates or
    extends a proper descendant.
    """

    def __init__(self) -> None:
        self._nodes: dict[NodeId, HierarchyNode] = {0: HierarchyNode(id=0, parent=None)}
        self._root: NodeId = 0
        self._encounters: dict[str, Encounter] = {}
        self._next_id: NodeId = 1
        self._listeners: list[Callable] = []
        self.version = 0

    # ------------------------------------------------------------ reads

    @property
    def root(self) -> NodeId:
        return self._root

    def node(self, node_id: NodeId) -> HierarchyNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise InputError(f"unknown node id {node_id}") from None

    def __contains__(self, node_id: NodeId) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def node_ids(self) -> list[NodeId]:
        return sorted(self._nodes)

    def encounter(self, encounter_id: str) -> Encounter:
        try:
            return self._encounters[encounter_id]
        except KeyError:
            raise InputError(f"unknown encounter id {encounter_id!r}") from None

    def parent_of(self, node_id: NodeId) -> NodeId:
        node = self.node(node_id)
        if node.parent is None:
            raise InputError("the root has no parent")
        return node.parent

    def children_of(self, node_id: NodeId) -> list[NodeId]:
        return list(self.node(node_id).children)

    def depth(self, node_id: NodeId) -> int:
        node = self.node(node_id)
        d = 0
        while node.parent is not None:
            node = self._nodes[node.parent]
            d += 1
        return d

    def path_from_root(self, node_id: NodeId) -> list[NodeId]:
        node = self.node(node_id)
        path = [node.id]
        while node.parent is not None:
            node = self._nodes[node.parent]
            path.append(node.id)
        return path[::-1]

    def is_ancestor_or_self(self, ancestor: NodeId, node_id: NodeId) -> bool:
        self.node(ancestor)
        node = self.node(node_id)
        while True:
            if node.id == ancestor:
                return True
            if node.parent is None:
                return False
            node = self._nodes[node.parent]

    def subtree_node_ids(self, node_id: NodeId) -> list[NodeId]:
        """Preorder ids of the subtree rooted at ``node_id``."""
        out = []
        stack = [self.node(node_id).id]
        while stack:
            nid = stack.pop()
            out.append(nid)
            stack.extend(reversed(self._nodes[nid].children))
        return out

    def subtree_visual_objects(self, node_id: NodeId) -> list[VisualObject]:
        """All visual objects of encounters assigned at the node or below."""
        out: list[VisualObject] = []
        for nid in self.subtree_node_ids(node_id):
            for enc_id in self._nodes[nid].encounter_ids:
                out.extend(self._encounters[enc_id].visual_objects)
        return out

    def geodesic_distance(self, a: NodeId, b: NodeId) -> int:
        """Edge count of the unique tree path between two nodes."""
        na, nb = self.node(a), self.node(b)
        da, db = self.depth(a), self.depth(b)
        dist = 0
        while da > db:
            na = self._nodes[na.parent]
            da -= 1
            dist += 1
        while db > da:
            nb = self._nodes[nb.parent]
            db -= 1
            dist += 1
        while na.id != nb.id:
            na = self._nodes[na.parent]
            nb = self._nodes[nb.parent]
            dist += 2
        return dist

    # ------------------------------------------------------------ mutations

    def add_listener(self, callback: Callable) -> None:
        """Register a mutation observer, called after each state change."""
        self._listeners.append(callback)

    def _emit(self, *event) -> None:
        self.version += 1
        for callback in self._listeners:
            callback(*event)

    def _register_encounter(self, e: Encounter) -> None:
        if e.id in self._encounters:
            raise InputError(f"encounter {e.id!r} is already placed in this hierarchy")
        self._encounters[e.id] = e

    def add_object_node(self, parent: NodeId, e: Encounter, annotation: str | None = None) -> NodeId:
        """Create a new leaf holding ``e`` as the parent's last child."""
        parent_node = self.node(parent)
        self._register_encounter(e)
        node = HierarchyNode(id=self._next_id, parent=parent, annotation=annotation)
        node.encounter_ids.append(e.id)
        self._next_id += 1
        self._nodes[node.id] = node
        parent_node.children.append(node.id)
        self._emit("add_node", node.id, parent, e)
        return node.id

    def add_encounter_to_node(self, node_id: NodeId, e: Encounter) -> None:
        """Append ``e`` to an existing node; the structure is unchanged."""
        node = self.node(node_id)
        if node.parent is None:
            raise InputError("the root cannot hold encounters")
        self._register_encounter(e)
        node.encounter_ids.append(e.id)
        self._emit("add_encounter", node_id, e)

    def insert_intermediate(
        self,
        parent: NodeId,
        child_to_reparent: NodeId,
        e: Encounter,
        intermediate_annotation: str | None = None,
        leaf_annotation: str | None = None,
    ) -> tuple[NodeId, NodeId]:
        """Push ``child_to_reparent`` down under a new intermediate node.

        The intermediate takes the child's former position among the
        parent's children; a new leaf holding ``e`` becomes its sibling.
        """
        parent_node = self.node(parent)
        child_node = self.node(child_to_reparent)
        if child_node.parent != parent:
            raise InputError(f"node {child_to_reparent} is not a child of {parent}")
        self._register_encounter(e)

        intermediate = HierarchyNode(id=self._next_id, parent=parent, annotation=intermediate_annotation)
        leaf = HierarchyNode(id=self._next_id + 1, parent=intermediate.id, annotation=leaf_annotation)
        leaf.encounter_ids.append(e.id)
        self._next_id += 2
        self._nodes[intermediate.id] = intermediate
        self._nodes[leaf.id] = leaf

        slot = parent_node.children.index(child_to_reparent)
        parent_node.children[slot] = intermediate.id
        child_node.parent = intermediate.id
        intermediate.children = [child_to_reparent, leaf.id]
        self._emit("insert", intermediate.id, parent, child_to_reparent, leaf.id, e)
        return intermediate.id, leaf.id

    # ------------------------------------------------------------ snapshots

    def snapshot(self) -> dict:
        """JSON-ready structural snapshot (ids, links, encounter ids)."""
        return {
            "root": self._root,
            "nodes": [
                {
                    "id": n.id,
                    "parent": n.parent,
                    "children": list(n.children),
                    "encounters": list(n.encounter_ids),
                    "annotation": n.annotation,
                }
                for _, n in sorted(self._nodes.items())
            ],
        }

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_snapshot(cls, snapshot: dict, encounters_by_id: dict[str, Encounter]) -> "Hierarchy":
        """Rebuild a hierarchy from ``snapshot``; encounters must all resolve."""
        h = cls()
        nodes = snapshot.get("nodes", [])
        if snapshot.get("root") != 0 or not any(n["id"] == 0 for n in nodes):
            raise InputError("snapshot must be rooted at node 0")
        for spec in nodes:
            if spec["id"] == 0:
                if spec["parent"] is not None or spec["encounters"]:
                    raise InputError("the root has no parent and holds no encounters")
                h._nodes[0].children = list(spec["children"])
                h._nodes[0].annotation = spec.get("annotation")
                continue
            node = HierarchyNode(
                id=spec["id"],
                parent=spec["parent"],
                children=list(spec["children"]),
                annotation=spec.get("annotation"),
            )
            for enc_id in spec["encounters"]:
                if enc_id not in encounters_by_id:
                    raise InputError(f"snapshot references unknown encounter {enc_id!r}")
                node.encounter_ids.append(enc_id)
                if enc_id in h._encounters:
                    raise InputError(f"encounter {enc_id!r} appears twice in snapshot")
                h._encounters[enc_id] = encounters_by_id[enc_id]
            h._nodes[node.id] = node
        h._next_id = max(h._nodes) + 1
        h.check_integrity()
        return h

    def check_integrity(self) -> None:
        """Raise if structural invariants are violated (internal sanity)."""
        root = self._nodes[self._root]
        if root.parent is not None or root.encounter_ids:
            raise RuntimeError("root must be parentless and encounter-free")
        seen = set()
        stack = [self._root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise RuntimeError(f"cycle or duplicate link at node {nid}")
            seen.add(nid)
            node = self._nodes.get(nid)
            if node is None:
                raise RuntimeError(f"child link to unknown node {nid}")
            for child in node.children:
                if self._nodes.get(child) is None or self._nodes[child].parent != nid:
                    raise RuntimeError(f"inconsistent parent link at node {child}")
                stack.append(child)
        if seen != set(self._nodes):
            raise RuntimeError("unreachable nodes present")
