"""Core domain types: embeddings, visual objects, encounters, and the
segmentation of raw frame sequences into visual objects.

Embeddings are plain 1-D float64 numpy arrays.  A visual object summarizes a
run of similar adjacent frames by the centroid of their embeddings; an
encounter is the ordered sequence of visual objects extracted from one
sighting of one object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InputError(ValueError):
    """Raised when caller-supplied data violates a precondition."""


def as_embedding(values, dim: int | None = None) -> np.ndarray:
    """Validate and normalize one embedding vector.

    Returns a read-only float64 copy.  Entries must be finite and the length
    must be at least 2 (and equal to ``dim`` when given).
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"embedding must be 1-D, got shape {arr.shape}")
    if arr.size < 2:
        raise InputError(f"embedding dimension must be >= 2, got {arr.size}")
    if dim is not None and arr.size != dim:
        raise InputError(f"embedding dimension mismatch: expected {dim}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InputError("embedding contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two embedding vectors of equal dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pairwise_sqdist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between the rows of two matrices.

    Uses the |x|^2 + |y|^2 - 2xy expansion so the inner product runs through
    BLAS; tiny negative residuals from cancellation are clamped to zero.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[1] != y.shape[1]:
        raise InputError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    sq = np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :]
    sq -= 2.0 * (x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


@dataclass(frozen=True)
class VisualObject:
    """One embedding vector summarizing a run of similar adjacent frames."""

    id: str
    embedding: np.ndarray
    frame_span: tuple[int, int]  # inclusive start, inclusive end
    encounter_id: str

    def __post_init__(self) -> None:
        start, end = self.frame_span
        if start > end:
            raise InputError(f"frame span start {start} > end {end}")


@dataclass(frozen=True)
class Encounter:
    """An ordered, non-empty collection of visual objects from one sighting.

    ``ground_truth_leaf`` is only present for synthetic or otherwise labeled
    data; recognition code never reads it.
    """

    id: str
    visual_objects: tuple[VisualObject, ...]
    ground_truth_leaf: str | None = None

    def __post_init__(self) -> None:
        if not self.visual_objects:
            raise InputError("encounter must contain at least one visual object")
        prev_end = None
        for vo in self.visual_objects:
            if prev_end is not None and vo.frame_span[0] != prev_end + 1:
                raise InputError("visual object frame spans must be contiguous")
            prev_end = vo.frame_span[1]

    @property
    def dimension(self) -> int:
        return self.visual_objects[0].embedding.size


def segment_encounter(
    frames,
    similarity_threshold: float,
    encounter_id: str = "e0",
    ground_truth_leaf: str | None = None,
) -> Encounter:
    """Aggregate a frame-embedding sequence into visual objects.

    A new segment starts exactly when a frame's Euclidean distance to the
    running centroid of the current segment exceeds ``similarity_threshold``.
    Each visual object's embedding is the centroid of its segment.
    """
    if similarity_threshold <= 0:
        raise InputError(f"similarity threshold must be > 0, got {similarity_threshold}")
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    if not frames:
        raise InputError("frame sequence is empty")
    dim = frames[0].size
    matrix = np.empty((len(frames), dim))
    for i, f in enumerate(frames):
        matrix[i] = as_embedding(f, dim=dim)

    boundaries = [0]  # index where each segment starts
    seg_sum = matrix[0].copy()
    seg_len = 1
    for i in range(1, len(frames)):
        centroid = seg_sum / seg_len
        if distance(matrix[i], centroid) > similarity_threshold:
            boundaries.append(i)
            seg_sum = matrix[i].copy()
            seg_len = 1
        else:
            seg_sum += matrix[i]
            seg_len += 1

    boundaries.append(len(frames))
    vos = []
    for k in range(len(boundaries) - 1):
        start, end = boundaries[k], boundaries[k + 1] - 1
        centroid = matrix[start : end + 1].mean(axis=0)
        vos.append(
            VisualObject(
                id=f"{encounter_id}/v{k}",
                embedding=as_embedding(centroid),
                frame_span=(start, end),
                encounter_id=encounter_id,
            )
        )
    return Encounter(id=encounter_id, visual_objects=tuple(vos), ground_truth_leaf=ground_truth_leaf)
