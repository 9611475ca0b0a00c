"""Genus prediction over the hierarchy and rejection-threshold optimization.

A Recognizer owns the per-child EVM models for one hierarchy.  It listens to
hierarchy mutations and invalidates exactly the models whose positive or
negative sets may have changed (the children of every node on the path from
the root to the mutated node).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Encounter, InputError, VisualObject
from .evm import WeibullModel, fit_class_model, inclusion_probabilities, inclusion_probability
from .hierarchy import Hierarchy, NodeId

DEFAULT_THRESHOLD = 0.5  # used only while the supervision memory is empty
_FIT_CACHE_LIMIT = 200_000  # distinct margin rows memoized before a reset


@dataclass(frozen=True)
class Prediction:
    node: NodeId
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise InputError(f"probability must lie in [0, 1], got {self.probability}")


@dataclass(frozen=True)
class SupervisionRecord:
    visual_object: VisualObject
    confirmed_node: NodeId
    prediction_trace: tuple[tuple[NodeId, float], ...]


class SupervisionMemory:
    """Append-only log of confirmed placements, one record per visual object."""

    def __init__(self) -> None:
        self._records: list[SupervisionRecord] = []

    def append(self, record: SupervisionRecord) -> None:
        self._records.append(record)

    @property
    def records(self) -> list[SupervisionRecord]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)


@dataclass(frozen=True)
class EvmConfig:
    tail_size: int = 16
    open_space_scale: float = 10.0

    def __post_init__(self) -> None:
        if self.tail_size < 1:
            raise InputError(f"tail size must be >= 1, got {self.tail_size}")
        if self.open_space_scale <= 0:
            raise InputError(f"open-space scale must be positive, got {self.open_space_scale}")


@dataclass(frozen=True)
class EncounterPrediction:
    """Per-encounter result: the adopted prediction plus per-view detail."""

    prediction: Prediction
    vo_predictions: tuple[Prediction, ...]
    vo_traces: tuple[tuple[tuple[NodeId, float], ...], ...]
    best_vo_index: int


class Recognizer:
    def __init__(self, hierarchy: Hierarchy, config: EvmConfig | None = None) -> None:
        self.hierarchy = hierarchy
        self.config = config or EvmConfig()
        self._subtree_vos: dict[NodeId, list[VisualObject]] = {}
        self._models: dict[NodeId, object] = {}
        self._fit_cache: dict[bytes, WeibullModel] = {}
        self._rebuild_subtrees()
        hierarchy.add_listener(self._on_mutation)

    # ------------------------------------------------------------ caches

    def _rebuild_subtrees(self) -> None:
        h = self.hierarchy
        self._subtree_vos = {nid: [] for nid in h.node_ids()}
        for nid in h.node_ids():
            direct: list[VisualObject] = []
            for enc_id in h.node(nid).encounter_ids:
                direct.extend(h.encounter(enc_id).visual_objects)
            if direct:
                cur: NodeId | None = nid
                while cur is not None:
                    self._subtree_vos[cur].extend(direct)
                    cur = h.node(cur).parent
        self._models.clear()

    def _extend_ancestors(self, node_id: NodeId, vos) -> None:
        cur: NodeId | None = node_id
        while cur is not None:
            self._subtree_vos[cur].extend(vos)
            cur = self.hierarchy.node(cur).parent

    def _invalidate_path(self, node_id: NodeId) -> None:
        for nid in self.hierarchy.path_from_root(node_id):
            for child in self.hierarchy.children_of(nid):
                self._models.pop(child, None)

    def _on_mutation(self, kind: str, *args) -> None:
        if kind == "add_node":
            node_id, parent, e = args
            self._subtree_vos[node_id] = list(e.visual_objects)
            self._extend_ancestors(parent, e.visual_objects)
            self._invalidate_path(node_id)
        elif kind == "add_encounter":
            node_id, e = args
            self._extend_ancestors(node_id, e.visual_objects)
            self._invalidate_path(node_id)
        elif kind == "insert":
            mid, parent, child, leaf, e = args
            self._subtree_vos[leaf] = list(e.visual_objects)
            self._subtree_vos[mid] = self._subtree_vos[child] + list(e.visual_objects)
            self._extend_ancestors(parent, e.visual_objects)
            self._invalidate_path(leaf)
        else:  # pragma: no cover - future-proofing
            self._rebuild_subtrees()

    def _model_for(self, child: NodeId):
        model = self._models.get(child)
        if model is None:
            parent = self.hierarchy.parent_of(child)
            negatives: list[VisualObject] = []
            for sibling in self.hierarchy.children_of(parent):
                if sibling != child:
                    negatives.extend(self._subtree_vos[sibling])
            if len(self._fit_cache) > _FIT_CACHE_LIMIT:
                self._fit_cache.clear()
            model = fit_class_model(
                self._subtree_vos[child],
                negatives,
                tail_size=self.config.tail_size,
                open_space_scale=self.config.open_space_scale,
                fit_cache=self._fit_cache,
            )
            self._models[child] = model
        return model

    # ------------------------------------------------------------ prediction

    def child_probability(self, child: NodeId, v: VisualObject) -> float:
        """Inclusion probability of ``v`` in the child's subtree model."""
        if child == self.hierarchy.root:
            raise InputError("the root has no sibling contrast; probability is 1 by definition")
        self.hierarchy.node(child)
        return inclusion_probability(self._model_for(child), v.embedding)

    def _descend(
        self, v: VisualObject, start: NodeId, start_p: float, threshold: float
    ) -> tuple[NodeId, float, list[tuple[NodeId, float]]]:
        node, p = start, start_p
        trace = [(node, p)]
        while True:
            children = sorted(self.hierarchy.children_of(node))
            if not children:
                return node, p, trace
            best_node, best_p = node, -1.0
            for c in children:  # ascending id: strict > keeps the lowest id on ties
                pc = inclusion_probability(self._model_for(c), v.embedding)
                if pc > best_p:
                    best_node, best_p = c, pc
            if best_p > threshold:
                node, p = best_node, best_p
                trace.append((node, p))
            else:
                return node, p, trace

    def predict_vo_genus(
        self, v: VisualObject, start: NodeId, start_p: float, threshold: float
    ) -> Prediction:
        node, p, _ = self._descend(v, start, start_p, threshold)
        return Prediction(node, p)

    def predict_encounter(self, e: Encounter, threshold: float) -> EncounterPrediction:
        """Combine per-view descents exactly per the update rule of the
        prediction procedure: a view's result replaces the running one when
        the running node is still the root or has a strictly lower
        probability."""
        root = self.hierarchy.root
        node, p = root, 1.0
        best_index = 0
        predictions = []
        traces = []
        for i, v in enumerate(e.visual_objects):
            vo_node, vo_p, trace = self._descend(v, root, 1.0, threshold)
            predictions.append(Prediction(vo_node, vo_p))
            traces.append(tuple(trace))
            if node == root or p < vo_p:
                node, p = vo_node, vo_p
                best_index = i
        return EncounterPrediction(
            prediction=Prediction(node, p),
            vo_predictions=tuple(predictions),
            vo_traces=tuple(traces),
            best_vo_index=best_index,
        )

    def predict_genus(self, e: Encounter, threshold: float) -> Prediction:
        return self.predict_encounter(e, threshold).prediction

    # ------------------------------------------------------------ replay

    def descent_profiles(self, queries: np.ndarray) -> tuple[list[list[NodeId]], list[list[float]]]:
        """Greedy threshold-free descent for every query row at once.

        Returns, per row, the accepted path below the root and the matching
        probability profile.  The descent a threshold lambda would take is
        the longest prefix whose probabilities all exceed lambda, so one
        profile serves every candidate threshold.
        """
        q = np.asarray(queries, dtype=np.float64)
        n = q.shape[0]
        paths: list[list[NodeId]] = [[] for _ in range(n)]
        profiles: list[list[float]] = [[] for _ in range(n)]
        current = np.full(n, self.hierarchy.root, dtype=np.int64)
        active = np.arange(n)
        while active.size:
            cur = current[active]
            still = []
            for node in np.unique(cur):
                rows = active[cur == node]
                children = sorted(self.hierarchy.children_of(int(node)))
                if not children:
                    continue
                psi = np.empty((rows.size, len(children)))
                sub = q[rows]
                for j, c in enumerate(children):
                    psi[:, j] = inclusion_probabilities(self._model_for(c), sub)
                best = np.argmax(psi, axis=1)  # first max = lowest child id
                best_p = psi[np.arange(rows.size), best]
                chosen = np.asarray(children, dtype=np.int64)[best]
                current[rows] = chosen
                for r, c, p in zip(rows, chosen, best_p):
                    paths[r].append(int(c))
                    profiles[r].append(float(p))
                still.append(rows)
            active = np.concatenate(still) if still else np.empty(0, dtype=np.int64)
        return paths, profiles

    def rejection_threshold(self, memory: SupervisionMemory) -> float:
        """The candidate threshold maximizing replayed exact-match accuracy.

        Candidates are 0, 1, and midpoints of consecutive distinct
        probabilities seen in the stored traces.  Each record is correct for
        lambda exactly when lambda admits every step down to its confirmed
        node and rejects the next one, i.e. on a half-open interval; the
        accuracy at each candidate is counted by interval sweep.
        """
        records = memory.records
        if not records:
            return DEFAULT_THRESHOLD

        seen = sorted({p for rec in records for _, p in rec.prediction_trace})
        candidates = np.array(
            [0.0] + [0.5 * (a + b) for a, b in zip(seen, seen[1:])] + [1.0]
        )

        queries = np.stack([rec.visual_object.embedding for rec in records])
        paths, profiles = self.descent_profiles(queries)

        los, his = [], []
        root = self.hierarchy.root
        for rec, path, profile in zip(records, paths, profiles):
            if rec.confirmed_node == root:
                depth = 0
            else:
                try:
                    depth = path.index(rec.confirmed_node) + 1
                except ValueError:
                    continue  # not on the greedy path: no threshold places it
            hi = min(profile[:depth]) if depth else np.inf
            lo = profile[depth] if depth < len(profile) else 0.0
            los.append(min(lo, hi))  # an inverted pair is an empty interval
            his.append(hi)
        if not los:
            return float(candidates[0])

        lo_sorted = np.sort(np.asarray(los))
        hi_sorted = np.sort(np.asarray(his))
        counts = np.searchsorted(lo_sorted, candidates, side="right") - np.searchsorted(
            hi_sorted, candidates, side="right"
        )
        return float(candidates[int(np.argmax(counts))])  # first max = lowest candidate


def get_rejection_threshold(memory: SupervisionMemory, recognizer: Recognizer) -> float:
    return recognizer.rejection_threshold(memory)
