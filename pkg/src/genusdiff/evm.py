"""Weibull tail models and extreme-vector inclusion probabilities.

A class model keeps every positive visual object as an extreme vector.
Each extreme vector carries a Weibull fit of its margins (half the distance
to its nearest negatives), and a query's inclusion probability is read off
the distribution of the single nearest extreme vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import InputError, VisualObject, as_embedding, pairwise_sqdist

SHAPE_TOL = 1e-8
MAX_FIT_ITERATIONS = 200
# steep-but-finite cutoff used when the likelihood has no interior optimum
FALLBACK_SHAPE = 20.0


@dataclass(frozen=True)
class WeibullModel:
    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise InputError(f"Weibull shape must be positive and finite, got {self.shape}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise InputError(f"Weibull scale must be positive and finite, got {self.scale}")


def _solve_shapes(y: np.ndarray, ln_y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Root of the profile-likelihood shape equation, per row.

    ``y`` holds samples normalized to a row maximum of 1, so powers never
    overflow.  The equation phi(k) = S1/S0 - mean(ln y) - 1/k is strictly
    increasing with a unique root; Newton steps are kept inside an evolving
    bracket and replaced by bisection when they leave it.  Returns the shape
    estimates and a mask of rows that converged to SHAPE_TOL.
    """
    m = y.shape[0]
    mean_ln = ln_y.mean(axis=1)
    k = np.ones(m)
    lo = np.zeros(m)  # phi(lo) < 0
    hi = np.full(m, np.inf)  # phi(hi) > 0
    done = np.zeros(m, dtype=bool)
    for _ in range(MAX_FIT_ITERATIONS):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        ka = k[active]
        w = y[active] ** ka[:, None]
        lw = ln_y[active]
        s0 = w.sum(axis=1)
        s1 = (w * lw).sum(axis=1)
        s2 = (w * lw * lw).sum(axis=1)
        phi = s1 / s0 - mean_ln[active] - 1.0 / ka
        dphi = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (ka * ka)

        positive = phi > 0
        hi[active] = np.where(positive, np.minimum(hi[active], ka), hi[active])
        lo[active] = np.where(positive, lo[active], np.maximum(lo[active], ka))

        k_new = ka - phi / dphi
        inside = np.isfinite(k_new) & (k_new > lo[active]) & (k_new < hi[active])
        bisect = np.where(np.isfinite(hi[active]), 0.5 * (lo[active] + hi[active]), ka * 2.0)
        k_new = np.where(inside, k_new, bisect)

        done[active[np.abs(k_new - ka) < SHAPE_TOL]] = True
        k[active] = k_new
    return k, done


def fit_weibull_batch(samples) -> tuple[np.ndarray, np.ndarray]:
    """Maximum-likelihood Weibull fits for each row of a sample matrix.

    Returns ``(shapes, scales)``.  Rows whose likelihood degenerates (all
    samples equal, a single sample, or no convergence within the iteration
    budget) fall back to shape FALLBACK_SHAPE with the matching
    maximum-likelihood scale.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] == 0:
        raise InputError(f"expected a non-empty 2-D sample matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise InputError("all samples must be positive and finite")

    x_max = x.max(axis=1)
    y = x / x_max[:, None]
    shapes = np.full(x.shape[0], FALLBACK_SHAPE)
    varying = np.ptp(x, axis=1) > 0
    if np.any(varying):
        fitted, converged = _solve_shapes(y[varying], np.log(y[varying]))
        fitted[~converged] = FALLBACK_SHAPE
        shapes[varying] = fitted
    # profile-likelihood scale; the normalized power mean stays in (0, 1]
    scales = np.mean(y ** shapes[:, None], axis=1) ** (1.0 / shapes) * x_max
    return shapes, scales


def fit_weibull(samples) -> WeibullModel:
    """Two-parameter Weibull maximum-likelihood fit of one sample set."""
    arr = np.atleast_1d(np.asarray(samples, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("samples must be a non-empty 1-D sequence")
    shapes, scales = fit_weibull_batch(arr[None, :])
    return WeibullModel(shape=float(shapes[0]), scale=float(scales[0]))


@dataclass(frozen=True)
class ExtremeVector:
    source_visual_object_id: str
    embedding: np.ndarray
    weibull: WeibullModel


@dataclass(frozen=True)
class EvmClassModel:
    """Immutable per-class model: all positives, sorted by source id."""

    extreme_vectors: tuple[ExtremeVector, ...]
    tail_size: int

    def __post_init__(self) -> None:
        if not self.extreme_vectors:
            raise InputError("a class model needs at least one extreme vector")
        if self.tail_size < 1:
            raise InputError(f"tail size must be >= 1, got {self.tail_size}")

    @cached_property
    def dimension(self) -> int:
        return self.extreme_vectors[0].embedding.size

    @cached_property
    def _embeddings(self) -> np.ndarray:
        return np.stack([ev.embedding for ev in self.extreme_vectors])

    @cached_property
    def _shapes(self) -> np.ndarray:
        return np.array([ev.weibull.shape for ev in self.extreme_vectors])

    @cached_property
    def _scales(self) -> np.ndarray:
        return np.array([ev.weibull.scale for ev in self.extreme_vectors])


def fit_class_model(
    positives: list[VisualObject],
    negatives: list[VisualObject],
    tail_size: int = 16,
    open_space_scale: float = 10.0,
    fit_cache: dict[bytes, WeibullModel] | None = None,
) -> EvmClassModel:
    """Fit one extreme vector per positive against the given negatives.

    Margins are half-distances to the ``min(tail_size, len(negatives))``
    nearest negatives.  With no negatives at all, every extreme vector gets
    the permissive open-space default (shape 1, scale ``open_space_scale``).

    ``fit_cache`` optionally memoizes fits keyed by the raw margin bytes;
    each fit depends only on its own margin row, so entries stay valid
    across calls.  The caller owns the dict and its lifetime.
    """
    if not positives:
        raise InputError("at least one positive visual object is required")
    if tail_size < 1:
        raise InputError(f"tail size must be >= 1, got {tail_size}")
    if open_space_scale <= 0:
        raise InputError(f"open-space scale must be positive, got {open_space_scale}")

    ordered = sorted(positives, key=lambda vo: vo.id)
    dim = ordered[0].embedding.size
    for vo in list(ordered) + list(negatives):
        if vo.embedding.size != dim:
            raise InputError(
                f"visual object {vo.id!r} has dimension {vo.embedding.size}, expected {dim}"
            )
    pos_matrix = np.stack([vo.embedding for vo in ordered])

    if negatives:
        neg_matrix = np.stack([vo.embedding for vo in negatives])
        dist = np.sqrt(pairwise_sqdist(pos_matrix, neg_matrix))
        tail = min(tail_size, len(negatives))
        margins = 0.5 * np.partition(dist, tail - 1, axis=1)[:, :tail]
        if np.any(margins <= 0):
            raise InputError("a positive embedding coincides with a negative; margins must be positive")
        if fit_cache is None:
            shapes, scales = fit_weibull_batch(margins)
            weibulls = [WeibullModel(float(k), float(s)) for k, s in zip(shapes, scales)]
        else:
            keys = [row.tobytes() for row in margins]
            fresh = []
            queued = set()
            for i, key in enumerate(keys):
                if key not in fit_cache and key not in queued:
                    queued.add(key)
                    fresh.append(i)
            if fresh:
                shapes, scales = fit_weibull_batch(margins[fresh])
                for i, k, s in zip(fresh, shapes, scales):
                    fit_cache[keys[i]] = WeibullModel(float(k), float(s))
            weibulls = [fit_cache[key] for key in keys]
    else:
        weibulls = [WeibullModel(1.0, open_space_scale)] * len(ordered)

    return EvmClassModel(
        extreme_vectors=tuple(
            ExtremeVector(vo.id, vo.embedding, w) for vo, w in zip(ordered, weibulls)
        ),
        tail_size=tail_size,
    )


def inclusion_probability(model: EvmClassModel, x) -> float:
    """Psi of the nearest extreme vector (ties: lowest source id)."""
    q = as_embedding(x, dim=model.dimension)
    diff = model._embeddings - q
    sqdist = np.einsum("ij,ij->i", diff, diff)
    # extreme vectors are sorted by source id, so the first minimum wins ties
    i = int(np.argmin(sqdist))
    d = np.sqrt(sqdist[i])
    with np.errstate(over="ignore"):
        z = (d / model._scales[i]) ** model._shapes[i]
    return float(np.exp(-z))


def inclusion_probabilities(model: EvmClassModel, queries: np.ndarray) -> np.ndarray:
    """Vectorized ``inclusion_probability`` over rows of a query matrix."""
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != model.dimension:
        raise InputError(f"expected queries of shape (n, {model.dimension}), got {q.shape}")
    sqdist = pairwise_sqdist(q, model._embeddings)
    idx = np.argmin(sqdist, axis=1)
    rows = np.arange(q.shape[0])
    d = np.sqrt(sqdist[rows, idx])
    with np.errstate(over="ignore"):
        z = (d / model._scales[idx]) ** model._shapes[idx]
    return np.exp(-z)
