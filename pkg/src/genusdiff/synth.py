"""Synthetic ground-truth hierarchies and encounter streams.

Generates a perfectly balanced tree of concept prototypes and, per leaf,
encounters whose visual objects are noisy views of the leaf's ancestor
prototypes (one view per level below the root).  Also reads/writes the
line-delimited JSON embedding file format used to ingest precomputed
embeddings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import Encounter, InputError, VisualObject, as_embedding, segment_encounter

# stream tags keep tree offsets, encounter noise, and shuffling independent
_TREE_STREAM = 0
_ENCOUNTER_STREAM = 1


@dataclass(frozen=True)
class GeneratorConfig:
    depth: int = 4
    branching: int = 3
    encounters_per_leaf: int = 5
    dimension: int = 32
    level_offset_scales: tuple[float, ...] = (8.0, 4.0, 2.0, 1.0)
    view_noise_sigma: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.depth < 1 or self.branching < 1 or self.encounters_per_leaf < 1:
            raise InputError("depth, branching and encounters_per_leaf must be >= 1")
        if self.dimension < 2:
            raise InputError("embedding dimension must be >= 2")
        if len(self.level_offset_scales) != self.depth:
            raise InputError(
                f"level_offset_scales must have one entry per level "
                f"({self.depth}), got {len(self.level_offset_scales)}"
            )
        if any(s <= 0 for s in self.level_offset_scales):
            raise InputError("level offset scales must be positive")
        if any(a <= b for a, b in zip(self.level_offset_scales, self.level_offset_scales[1:])):
            raise InputError("level offset scales must be strictly decreasing")
        if self.view_noise_sigma <= 0:
            raise InputError("view noise sigma must be positive")


@dataclass
class GroundTruthNode:
    label: str  # slash path from the root, e.g. "root/1/0/2"
    prototype: np.ndarray
    depth_level: int
    parent: "GroundTruthNode | None" = None
    children: list["GroundTruthNode"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def ancestors_and_self(self) -> list["GroundTruthNode"]:
        path = []
        node: GroundTruthNode | None = self
        while node is not None:
            path.append(node)
            node = node.parent
        return path[::-1]

    def __repr__(self) -> str:  # keeps test failures readable
        return f"GroundTruthNode({self.label!r})"


class GroundTruthTree:
    """Perfectly balanced concept tree with per-node prototype vectors."""

    def __init__(self, root: GroundTruthNode, config: GeneratorConfig):
        self.root = root
        self.config = config
        self.by_label: dict[str, GroundTruthNode] = {}
        stack = [root]
        while stack:
            node = stack.pop()
            self.by_label[node.label] = node
            stack.extend(reversed(node.children))
        self.leaves = [n for n in self.iter_nodes() if n.is_leaf]

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def node(self, label: str) -> GroundTruthNode:
        try:
            return self.by_label[label]
        except KeyError:
            raise InputError(f"unknown ground-truth label {label!r}") from None

    def is_ancestor_or_self(self, anc: GroundTruthNode, node: GroundTruthNode) -> bool:
        return node.label == anc.label or node.label.startswith(anc.label + "/")

    def lca(self, a: GroundTruthNode, b: GroundTruthNode) -> GroundTruthNode:
        pa = a.label.split("/")
        pb = b.label.split("/")
        k = 0
        while k < min(len(pa), len(pb)) and pa[k] == pb[k]:
            k += 1
        return self.by_label["/".join(pa[:k])]


def generate_tree(config: GeneratorConfig) -> GroundTruthTree:
    """Build the balanced prototype tree; deterministic for a given seed."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([config.seed, _TREE_STREAM])))
    root = GroundTruthNode(
        label="root",
        prototype=as_embedding(np.zeros(config.dimension)),
        depth_level=0,
    )
    frontier = [root]
    for level in range(config.depth):
        scale = config.level_offset_scales[level]
        next_frontier = []
        for parent in frontier:
            for k in range(config.branching):
                offset = rng.normal(0.0, scale, size=config.dimension)
                child = GroundTruthNode(
                    label=f"{parent.label}/{k}",
                    prototype=as_embedding(parent.prototype + offset),
                    depth_level=level + 1,
                    parent=parent,
                )
                parent.children.append(child)
                next_frontier.append(child)
        frontier = next_frontier
    return GroundTruthTree(root, config)


def _encounter_rng(config: GeneratorConfig, leaf_ordinal: int, encounter_index: int) -> np.random.Generator:
    # counter-based stream keyed by (seed, leaf, index): reproducible in any order
    seq = np.random.SeedSequence([config.seed, _ENCOUNTER_STREAM, leaf_ordinal, encounter_index])
    return np.random.Generator(np.random.Philox(seq))


def generate_encounter(
    tree: GroundTruthTree,
    leaf: GroundTruthNode,
    encounter_index: int,
    encounter_id: str | None = None,
) -> Encounter:
    """One encounter of ``leaf``: a noisy view per ancestor level, shuffled.

    The root itself contributes no view; it carries no discriminative
    content.
    """
    if tree.by_label.get(leaf.label) is not leaf:
        raise InputError(f"leaf {leaf.label!r} does not belong to this tree")
    config = tree.config
    leaf_ordinal = tree.leaves.index(leaf)
    rng = _encounter_rng(config, leaf_ordinal, encounter_index)
    if encounter_id is None:
        encounter_id = f"e{leaf_ordinal * config.encounters_per_leaf + encounter_index:04d}"

    path = leaf.ancestors_and_self()[1:]  # root-exclusive
    views = [node.prototype + rng.normal(0.0, config.view_noise_sigma, size=config.dimension) for node in path]
    order = rng.permutation(len(views))
    vos = tuple(
        VisualObject(
            id=f"{encounter_id}/v{k}",
            embedding=as_embedding(views[j]),
            frame_span=(k, k),
            encounter_id=encounter_id,
        )
        for k, j in enumerate(order)
    )
    return Encounter(id=encounter_id, visual_objects=vos, ground_truth_leaf=leaf.label)


def generate_dataset(config: GeneratorConfig) -> tuple[GroundTruthTree, list[Encounter]]:
    """The full stream: ``encounters_per_leaf`` encounters for every leaf."""
    tree = generate_tree(config)
    encounters = [
        generate_encounter(tree, leaf, j)
        for leaf in tree.leaves
        for j in range(config.encounters_per_leaf)
    ]
    return tree, encounters


def write_embedding_file(path, encounters: list[Encounter]) -> None:
    """Write encounters in the line-delimited JSON embedding format."""
    with open(path, "w", encoding="utf-8") as fh:
        for enc in encounters:
            record = {
                "encounter_id": enc.id,
                "visual_objects": [vo.embedding.tolist() for vo in enc.visual_objects],
            }
            if enc.ground_truth_leaf is not None:
                record["ground_truth"] = enc.ground_truth_leaf
            fh.write(json.dumps(record) + "\n")


def load_embedding_lines(lines, source: str = "<input>") -> list[Encounter]:
    """Parse encounters from line-delimited JSON embedding records.

    Each line holds ``encounter_id``, optionally ``ground_truth``, and either
    ``frames`` (raw frame embeddings, segmented with the line's
    ``segment_threshold``) or ``visual_objects`` (taken verbatim).  All
    vectors in one stream must share one dimension.  ``source`` names the
    origin in error messages.
    """
    encounters: list[Encounter] = []
    file_dim: int | None = None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{source}: line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict) or "encounter_id" not in record:
            raise InputError(f"{source}: line {lineno}: missing 'encounter_id'")
        enc_id = str(record["encounter_id"])
        ground_truth = record.get("ground_truth")
        if ground_truth is not None:
            ground_truth = str(ground_truth)

        try:
            if "frames" in record:
                if "segment_threshold" not in record:
                    raise InputError("'frames' requires 'segment_threshold'")
                enc = segment_encounter(
                    record["frames"],
                    float(record["segment_threshold"]),
                    encounter_id=enc_id,
                    ground_truth_leaf=ground_truth,
                )
            elif "visual_objects" in record:
                rows = record["visual_objects"]
                if not rows:
                    raise InputError("'visual_objects' is empty")
                first = as_embedding(rows[0], dim=file_dim)
                vos = tuple(
                    VisualObject(
                        id=f"{enc_id}/v{k}",
                        embedding=first if k == 0 else as_embedding(row, dim=first.size),
                        frame_span=(k, k),
                        encounter_id=enc_id,
                    )
                    for k, row in enumerate(rows)
                )
                enc = Encounter(id=enc_id, visual_objects=vos, ground_truth_leaf=ground_truth)
            else:
                raise InputError("record needs 'frames' or 'visual_objects'")
        except (InputError, TypeError) as exc:
            raise InputError(f"{source}: line {lineno}: {exc}") from None

        if file_dim is None:
            file_dim = enc.dimension
        elif enc.dimension != file_dim:
            raise InputError(
                f"{source}: line {lineno}: dimension {enc.dimension} differs from {file_dim}"
            )
        if any(prev.id == enc.id for prev in encounters):
            raise InputError(f"{source}: line {lineno}: duplicate encounter_id {enc.id!r}")
        encounters.append(enc)
    return encounters


def load_embedding_file(path) -> list[Encounter]:
    """Read encounters from a line-delimited JSON embedding file."""
    with open(path, "r", encoding="utf-8") as fh:
        return load_embedding_lines(fh, source=str(path))
