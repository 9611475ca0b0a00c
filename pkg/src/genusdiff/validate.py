"""Self-check battery: re-verifies core invariants with independent oracles.

Each check recomputes a result through a second route (dense grids, BFS,
literal replays) and compares it with the production code path.  Run via
the ``validate`` CLI command; one PASS/FAIL line per check.
"""

from __future__ import annotations

import tempfile
from collections import deque
from pathlib import Path
from typing import Callable

import numpy as np

from .core import VisualObject, as_embedding
from .evm import fit_class_model, fit_weibull, inclusion_probability
from .experiment import RunConfig, run_experiment
from .hierarchy import Hierarchy
from .interaction import SimulatedOracle, homomorphism_violations, process_encounter
from .recognition import EvmConfig, Recognizer, SupervisionMemory
from .synth import GeneratorConfig, generate_dataset


def _weibull_log_likelihood(samples: np.ndarray, shape: float, scale: float) -> float:
    z = samples / scale
    return float(np.sum(np.log(shape / scale) + (shape - 1.0) * np.log(z) - z**shape))


def check_weibull_fit_beats_grid() -> None:
    rng = np.random.default_rng(41)
    grid = np.arange(0.2, 5.0, 0.005)
    for trial in range(5):
        true_shape = float(rng.uniform(0.5, 4.0))
        samples = rng.weibull(true_shape, size=24) * float(rng.uniform(0.5, 3.0))
        model = fit_weibull(samples)
        fitted_ll = _weibull_log_likelihood(samples, model.shape, model.scale)
        for k in grid:
            lam = float(np.mean(samples**k) ** (1.0 / k))
            grid_ll = _weibull_log_likelihood(samples, float(k), lam)
            if grid_ll > fitted_ll + 1e-4:
                raise AssertionError(
                    f"trial {trial}: grid shape {k:.3f} beats the fit by "
                    f"{grid_ll - fitted_ll:.2e}"
                )


def check_inclusion_probability_properties() -> None:
    rng = np.random.default_rng(42)
    for trial in range(20):
        positives = [
            VisualObject(f"p{i}", as_embedding(rng.normal(size=6)), (i, i), "e")
            for i in range(int(rng.integers(1, 6)))
        ]
        negatives = [
            VisualObject(f"n{i}", as_embedding(rng.normal(size=6) + 4.0), (i, i), "e")
            for i in range(int(rng.integers(1, 8)))
        ]
        model = fit_class_model(positives, negatives, tail_size=4)
        for ev in model.extreme_vectors:
            if inclusion_probability(model, ev.embedding) != 1.0:
                raise AssertionError("psi at an extreme vector must be exactly 1")
        for _ in range(10):
            q = rng.normal(size=6) * 3.0
            psi = inclusion_probability(model, q)
            if not 0.0 <= psi <= 1.0:
                raise AssertionError(f"psi {psi} out of [0, 1]")


def _bfs_distance(h: Hierarchy, a: int, b: int) -> int:
    adjacency: dict[int, list[int]] = {nid: [] for nid in h.node_ids()}
    for nid in h.node_ids():
        for child in h.children_of(nid):
            adjacency[nid].append(child)
            adjacency[child].append(nid)
    seen = {a: 0}
    queue = deque([a])
    while queue:
        cur = queue.popleft()
        if cur == b:
            return seen[cur]
        for nxt in adjacency[cur]:
            if nxt not in seen:
                seen[nxt] = seen[cur] + 1
                queue.append(nxt)
    raise AssertionError("disconnected hierarchy")


def check_geodesic_against_bfs() -> None:
    tree, encounters = generate_dataset(
        GeneratorConfig(
            depth=3,
            branching=2,
            encounters_per_leaf=2,
            dimension=4,
            level_offset_scales=(8.0, 4.0, 2.0),
            seed=7,
        )
    )
    rng = np.random.default_rng(43)
    h = Hierarchy()
    queue = list(encounters)
    # grow an arbitrary tree shape out of real encounters
    for e in queue[: len(queue) // 2]:
        parent = int(rng.choice(h.node_ids()))
        h.add_object_node(parent, e)
    ids = h.node_ids()
    for _ in range(60):
        a, b = int(rng.choice(ids)), int(rng.choice(ids))
        got = h.geodesic_distance(a, b)
        want = _bfs_distance(h, a, b)
        if got != want:
            raise AssertionError(f"geodesic({a},{b}) = {got}, BFS says {want}")


def _literal_prediction(recognizer: Recognizer, vo: VisualObject, lam: float) -> int:
    h = recognizer.hierarchy
    node = h.root
    while True:
        children = sorted(h.children_of(node))
        if not children:
            return node
        best, best_p = None, -1.0
        for child in children:
            p = recognizer.child_probability(child, vo)
            if p > best_p:
                best, best_p = child, p
        if best_p > lam:
            node = best
        else:
            return node


def check_threshold_matches_dense_grid() -> None:
    tree, encounters = generate_dataset(
        GeneratorConfig(
            depth=2,
            branching=2,
            encounters_per_leaf=2,
            dimension=6,
            level_offset_scales=(8.0, 4.0),
            view_noise_sigma=0.3,
            seed=13,
        )
    )
    h = Hierarchy()
    recognizer = Recognizer(h, EvmConfig(tail_size=4))
    memory = SupervisionMemory()
    oracle = SimulatedOracle(tree, h)
    for e in encounters:
        process_encounter(h, recognizer, e, oracle, memory)

    def accuracy(lam: float) -> float:
        hits = sum(
            1
            for rec in memory.records
            if _literal_prediction(recognizer, rec.visual_object, lam) == rec.confirmed_node
        )
        return hits / len(memory.records)

    chosen = recognizer.rejection_threshold(memory)
    chosen_accuracy = accuracy(chosen)
    best_on_grid = max(accuracy(lam) for lam in np.arange(0.0, 1.0005, 0.001))
    if chosen_accuracy < best_on_grid:
        raise AssertionError(
            f"threshold {chosen:.4f} reaches {chosen_accuracy:.4f}, "
            f"dense grid reaches {best_on_grid:.4f}"
        )


def check_simulated_run_homomorphism() -> None:
    tree, encounters = generate_dataset(
        GeneratorConfig(
            depth=3,
            branching=2,
            encounters_per_leaf=2,
            dimension=8,
            level_offset_scales=(8.0, 4.0, 2.0),
            seed=17,
        )
    )
    h = Hierarchy()
    recognizer = Recognizer(h, EvmConfig(tail_size=4))
    memory = SupervisionMemory()
    oracle = SimulatedOracle(tree, h)
    for step, e in enumerate(encounters):
        process_encounter(h, recognizer, e, oracle, memory)
        violations = homomorphism_violations(h, tree)
        if violations:
            raise AssertionError(f"step {step}: {violations[0]}")
    h.check_integrity()


def check_experiment_determinism() -> None:
    generator = GeneratorConfig(
        depth=2,
        branching=2,
        encounters_per_leaf=2,
        dimension=6,
        level_offset_scales=(8.0, 4.0),
        seed=23,
    )
    with tempfile.TemporaryDirectory() as tmp:
        paths = [Path(tmp) / "a.csv", Path(tmp) / "b.csv"]
        for path in paths:
            run_experiment(
                RunConfig(
                    generator=generator, runs=2, ordering_seed=3, tail_size=4, output_path=path
                )
            )
        if paths[0].read_bytes() != paths[1].read_bytes():
            raise AssertionError("identical seeds produced different CSV bytes")


CHECKS: list[tuple[str, Callable[[], None]]] = [
    ("weibull-fit-beats-dense-grid", check_weibull_fit_beats_grid),
    ("inclusion-probability-bounds", check_inclusion_probability_properties),
    ("geodesic-equals-bfs", check_geodesic_against_bfs),
    ("rejection-threshold-optimal-on-grid", check_threshold_matches_dense_grid),
    ("simulated-run-homomorphism", check_simulated_run_homomorphism),
    ("experiment-determinism", check_experiment_determinism),
]


def run_validation(echo: Callable[[str], None] = print) -> bool:
    """Run every check; report one PASS/FAIL line each; True when all pass."""
    ok = True
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:
            ok = False
            echo(f"FAIL {name}: {exc}")
        else:
            echo(f"PASS {name}")
    return ok
