"""Oracle-guided placement: the interactive main loop of the framework.

One encounter flows through three phases: predict a starting genus, ascend
until the oracle accepts the genus, then refine downward with genus and
differentia questions until one action places the encounter.  All hierarchy
mutations happen at the single decision point, so an oracle failure mid
dialogue leaves the hierarchy untouched.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from enum import Enum

from .core import Encounter, InputError, VisualObject
from .hierarchy import Hierarchy, NodeId
from .recognition import Recognizer, SupervisionMemory, SupervisionRecord
from .synth import GroundTruthTree


class PlacementAction(str, Enum):
    DESCEND = "Descend"
    MERGE = "Merge"
    NEW_CHILD = "NewChild"
    INSERT_INTERMEDIATE = "InsertIntermediate"


@dataclass(frozen=True)
class PlacementOutcome:
    action: PlacementAction
    placed_node: NodeId
    queries_asked: int
    predicted_node: NodeId | None = None


@dataclass(frozen=True)
class QueryEvent:
    query_id: int
    kind: str  # "genus" | "same-object" | "shares-genus-below"
    encounter_id: str
    node: NodeId
    under: NodeId | None
    timestamp: float


@dataclass(frozen=True)
class AnswerEvent:
    query_id: int
    answer: bool
    timestamp: float


class Transcript:
    """Ordered log of queries, answers, and placements for audit/replay."""

    def __init__(self) -> None:
        self.events: list = []
        self._next_query_id = 0

    def next_query_id(self) -> int:
        qid = self._next_query_id
        self._next_query_id += 1
        return qid

    def record(self, event) -> None:
        self.events.append(event)

    def record_placement(self, encounter_id: str, outcome: PlacementOutcome) -> None:
        self.events.append(
            {
                "type": "placement",
                "encounter_id": encounter_id,
                "action": outcome.action.value,
                "placed_node": outcome.placed_node,
                "queries_asked": outcome.queries_asked,
                "predicted_node": outcome.predicted_node,
                "timestamp": time.time(),
            }
        )

    def lines(self) -> list[str]:
        out = []
        for event in self.events:
            if isinstance(event, QueryEvent):
                payload = {"type": "query", **asdict(event)}
            elif isinstance(event, AnswerEvent):
                payload = {"type": "answer", **asdict(event)}
            else:
                payload = event
            out.append(json.dumps(payload, sort_keys=True))
        return out

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")

    def dialogue(self) -> list[tuple]:
        """The timestamp-free view used to compare sessions for equivalence."""
        out = []
        for event in self.events:
            if isinstance(event, QueryEvent):
                out.append(("query", event.kind, event.encounter_id, event.node, event.under))
            elif isinstance(event, AnswerEvent):
                out.append(("answer", event.answer))
            else:
                out.append(("placement", event["encounter_id"], event["action"], event["placed_node"]))
        return out


class OracleBase:
    """Base oracle: answers the three questions, optionally labels nodes.

    Labels are correspondence annotations for new nodes; a human oracle has
    none, so the defaults return None.
    """

    def genus_of(self, e: Encounter, node: NodeId) -> bool:
        raise NotImplementedError

    def same_object(self, e: Encounter, node: NodeId) -> bool:
        raise NotImplementedError

    def shares_genus_below(self, e: Encounter, sibling: NodeId, under: NodeId) -> bool:
        raise NotImplementedError

    def object_label(self, e: Encounter) -> str | None:
        return None

    def genus_label(self, e: Encounter, sibling: NodeId) -> str | None:
        return None


class SimulatedOracle(OracleBase):
    """Answers from the ground-truth tree via node correspondence annotations.

    The machine root corresponds to the ground-truth root by definition;
    every other node must carry an annotation naming its ground-truth
    correspondent.
    """

    def __init__(self, tree: GroundTruthTree, hierarchy: Hierarchy) -> None:
        self.tree = tree
        self.hierarchy = hierarchy

    def _correspondent(self, node_id: NodeId):
        node = self.hierarchy.node(node_id)
        if node.parent is None:
            return self.tree.root
        if node.annotation is None or node.annotation not in self.tree.by_label:
            raise RuntimeError(
                f"machine node {node_id} has no valid ground-truth correspondence "
                f"({node.annotation!r})"
            )
        return self.tree.by_label[node.annotation]

    def _leaf(self, e: Encounter):
        if e.ground_truth_leaf is None:
            raise InputError(f"encounter {e.id!r} carries no ground-truth label")
        return self.tree.node(e.ground_truth_leaf)

    def genus_of(self, e: Encounter, node: NodeId) -> bool:
        return self.tree.is_ancestor_or_self(self._correspondent(node), self._leaf(e))

    def same_object(self, e: Encounter, node: NodeId) -> bool:
        return self._correspondent(node) is self._leaf(e)

    def shares_genus_below(self, e: Encounter, sibling: NodeId, under: NodeId) -> bool:
        lca = self.tree.lca(self._correspondent(sibling), self._leaf(e))
        anchor = self._correspondent(under)
        return lca is not anchor and self.tree.is_ancestor_or_self(anchor, lca)

    def object_label(self, e: Encounter) -> str | None:
        return self._leaf(e).label

    def genus_label(self, e: Encounter, sibling: NodeId) -> str | None:
        return self.tree.lca(self._correspondent(sibling), self._leaf(e)).label


class _CountingOracle(OracleBase):
    """Counts the yes/no questions asked through it; labels pass untouched."""

    def __init__(self, inner) -> None:
        self.inner = inner
        self.count = 0

    def genus_of(self, e, node):
        self.count += 1
        return self.inner.genus_of(e, node)

    def same_object(self, e, node):
        self.count += 1
        return self.inner.same_object(e, node)

    def shares_genus_below(self, e, sibling, under):
        self.count += 1
        return self.inner.shares_genus_below(e, sibling, under)

    def object_label(self, e):
        return self.inner.object_label(e)

    def genus_label(self, e, sibling):
        return self.inner.genus_label(e, sibling)


class RecordingOracle(OracleBase):
    """Logs each question and its answer to a transcript."""

    def __init__(self, inner, transcript: Transcript) -> None:
        self.inner = inner
        self.transcript = transcript

    def _ask(self, kind: str, e: Encounter, node: NodeId, under: NodeId | None, answer_fn):
        qid = self.transcript.next_query_id()
        self.transcript.record(QueryEvent(qid, kind, e.id, node, under, time.time()))
        answer = answer_fn()
        self.transcript.record(AnswerEvent(qid, bool(answer), time.time()))
        return answer

    def genus_of(self, e, node):
        return self._ask("genus", e, node, None, lambda: self.inner.genus_of(e, node))

    def same_object(self, e, node):
        return self._ask("same-object", e, node, None, lambda: self.inner.same_object(e, node))

    def shares_genus_below(self, e, sibling, under):
        return self._ask(
            "shares-genus-below", e, sibling, under,
            lambda: self.inner.shares_genus_below(e, sibling, under),
        )

    def object_label(self, e):
        return self.inner.object_label(e)

    def genus_label(self, e, sibling):
        return self.inner.genus_label(e, sibling)


def ascend_to_valid_genus(h: Hierarchy, e: Encounter, start: NodeId, oracle) -> NodeId:
    """First node on the start-to-root path the oracle accepts as genus.

    The root is the universal genus and is never asked.
    """
    node = h.node(start).id
    while node != h.root and not oracle.genus_of(e, node):
        node = h.parent_of(node)
    return node


def refine_genus(
    h: Hierarchy,
    recognizer: Recognizer,
    g: NodeId,
    e: Encounter,
    best_vo: VisualObject,
    oracle,
) -> PlacementOutcome:
    """Walk downward from an accepted genus until one action places ``e``.

    At each level the children are tried in descending model probability
    (ties toward the lowest id).  A child accepted as genus is merged into
    when it is the same object, descended into otherwise; a rejected child
    sharing a genus below the current node triggers an intermediate
    insertion; with every child exhausted the encounter becomes a new child.
    """
    counting = _CountingOracle(oracle)
    # the accepted genus itself may already be the encounter's object
    if g != h.root and h.node(g).encounter_ids and counting.same_object(e, g):
        h.add_encounter_to_node(g, e)
        return PlacementOutcome(PlacementAction.MERGE, g, counting.count)

    current = h.node(g).id
    while True:
        order = sorted(
            h.children_of(current),
            key=lambda c: (-recognizer.child_probability(c, best_vo), c),
        )
        descended = False
        for child in order:
            if counting.genus_of(e, child):
                if h.node(child).encounter_ids and counting.same_object(e, child):
                    h.add_encounter_to_node(child, e)
                    return PlacementOutcome(PlacementAction.MERGE, child, counting.count)
                current = child
                descended = True
                break
            if counting.shares_genus_below(e, child, current):
                _, leaf = h.insert_intermediate(
                    current,
                    child,
                    e,
                    intermediate_annotation=oracle.genus_label(e, child),
                    leaf_annotation=oracle.object_label(e),
                )
                return PlacementOutcome(PlacementAction.INSERT_INTERMEDIATE, leaf, counting.count)
        if not descended:
            node = h.add_object_node(current, e, annotation=oracle.object_label(e))
            return PlacementOutcome(PlacementAction.NEW_CHILD, node, counting.count)


def process_encounter(
    h: Hierarchy,
    recognizer: Recognizer,
    e: Encounter,
    oracle,
    memory: SupervisionMemory,
    transcript: Transcript | None = None,
) -> PlacementOutcome:
    """One full iteration: predict, ascend, refine, remember.

    Returns the placement outcome carrying the predicted starting node and
    the total number of questions asked.  An oracle failure propagates with
    the hierarchy and memory untouched.
    """
    threshold = recognizer.rejection_threshold(memory)
    enc_prediction = recognizer.predict_encounter(e, threshold)
    start = enc_prediction.prediction.node
    best_vo = e.visual_objects[enc_prediction.best_vo_index]

    asked = RecordingOracle(oracle, transcript) if transcript is not None else oracle
    counting = _CountingOracle(asked)
    genus = ascend_to_valid_genus(h, e, start, counting)
    refined = refine_genus(h, recognizer, genus, e, best_vo, counting)

    for vo, trace in zip(e.visual_objects, enc_prediction.vo_traces):
        memory.append(
            SupervisionRecord(
                visual_object=vo,
                confirmed_node=refined.placed_node,
                prediction_trace=trace,
            )
        )
    outcome = PlacementOutcome(
        action=refined.action,
        placed_node=refined.placed_node,
        queries_asked=counting.count,
        predicted_node=start,
    )
    if transcript is not None:
        transcript.record_placement(e.id, outcome)
    return outcome


def homomorphism_violations(h: Hierarchy, tree: GroundTruthTree) -> list[str]:
    """Check the machine-to-ground-truth correspondence invariants.

    The mapping must be defined everywhere, injective within each sibling
    set, and parent-respecting (a parent's correspondent is a proper
    ancestor of its children's correspondents).  Returns human-readable
    violation descriptions; an empty list means the hierarchy is consistent.
    """
    violations = []
    corr: dict[NodeId, str] = {}
    for nid in h.node_ids():
        node = h.node(nid)
        if node.parent is None:
            corr[nid] = tree.root.label
        elif node.annotation is None or node.annotation not in tree.by_label:
            violations.append(f"node {nid}: missing or unknown correspondence {node.annotation!r}")
        else:
            corr[nid] = node.annotation
    for nid in h.node_ids():
        if nid not in corr:
            continue
        labels = [corr[c] for c in h.children_of(nid) if c in corr]
        if len(labels) != len(set(labels)):
            violations.append(f"node {nid}: children map to duplicate correspondents {labels}")
        for child_label in labels:
            anchor, below = tree.by_label[corr[nid]], tree.by_label[child_label]
            if anchor is below or not tree.is_ancestor_or_self(anchor, below):
                violations.append(
                    f"node {nid} ({corr[nid]!r}) is not a proper ancestor of child {child_label!r}"
                )
    return violations
