"""Acceptance battery: production-scale targets plus oracle cross-checks.

The full-scale cost experiment runs once (module fixture, a few minutes)
and every statistical component is re-verified through an independent
route: dense likelihood grids, breadth-first search, literal greedy
replays, and byte-level file comparison. The browser client's half of
the contract (no mutations besides answers, transcript equivalence) is
exercised in test_service.py and in the frontend's own suite.
"""

import time
from collections import deque

import numpy as np
import pytest
from scipy import stats

from genusdiff.core import VisualObject, as_embedding
from genusdiff.evm import EvmClassModel, fit_class_model, fit_weibull, inclusion_probability
from genusdiff.experiment import RunConfig, encounter_order, run_experiment
from genusdiff.hierarchy import Hierarchy
from genusdiff.interaction import SimulatedOracle, homomorphism_violations, process_encounter
from genusdiff.recognition import EvmConfig, Recognizer, SupervisionMemory
from genusdiff.synth import GeneratorConfig, generate_dataset

PRODUCTION_SCALE = GeneratorConfig(seed=0)  # depth 4, branching 3, 5/leaf: 405 encounters


@pytest.fixture(scope="module")
def production_curves():
    start = time.perf_counter()
    result = run_experiment(
        RunConfig(generator=PRODUCTION_SCALE, runs=20, ordering_seed=0, tail_size=16)
    )
    return result, time.perf_counter() - start


def test_production_scale_cost_targets(production_curves):
    result, elapsed = production_curves
    predict = np.array(result.predict_mean)
    naive = np.array(result.naive_mean)
    assert result.iterations == 405

    naive_tail = float(naive[-50:].mean())
    predict_tail = float(predict[-50:].mean())
    peak_iteration = int(np.argmax(predict))
    peak = float(predict.max())

    assert 3.5 <= naive_tail <= 4.0, f"naive tail mean {naive_tail}"
    assert predict_tail <= 0.85 * naive_tail, (
        f"predictive tail {predict_tail} not >=15% under naive {naive_tail}"
    )
    assert peak_iteration < 150, f"cost peak at iteration {peak_iteration}"
    assert predict_tail <= 0.80 * peak, f"tail {predict_tail} within 20% of peak {peak}"
    assert elapsed < 600.0, f"20 runs took {elapsed:.0f}s"
    print(
        f"PASS cost targets: naive {naive_tail:.3f}, predictive {predict_tail:.3f} "
        f"({(1 - predict_tail / naive_tail) * 100:.1f}% lower), "
        f"peak {peak:.3f} at iteration {peak_iteration}, {elapsed:.0f}s for 20 runs"
    )


# --------------------------------------------------------------- weibull fit


def _log_likelihood(samples, shape, scale) -> float:
    return float(np.sum(stats.weibull_min.logpdf(samples, c=shape, scale=scale)))


def _grid_search(samples: np.ndarray, shapes: np.ndarray) -> tuple[float, float]:
    """Best (shape, log-likelihood) over a shape grid with profiled scales."""
    scales = np.mean(samples[None, :] ** shapes[:, None], axis=1) ** (1.0 / shapes)
    lls = stats.weibull_min.logpdf(samples[None, :], c=shapes[:, None], scale=scales[:, None])
    totals = lls.sum(axis=1)
    best = int(np.argmax(totals))
    return float(shapes[best]), float(totals[best])


def test_weibull_fit_matches_exhaustive_grid():
    rng = np.random.default_rng(2026)
    coarse = np.arange(0.05, 24.0, 0.002)
    draws = [
        lambda: rng.weibull(rng.uniform(0.4, 5.0), size=rng.integers(6, 49)) * rng.uniform(0.2, 5.0),
        lambda: rng.exponential(rng.uniform(0.2, 4.0), size=rng.integers(6, 49)),
        lambda: rng.uniform(0.5, 3.0, size=rng.integers(6, 49)),
        lambda: rng.lognormal(0.0, rng.uniform(0.4, 1.0), size=rng.integers(6, 49)),
        lambda: rng.gamma(rng.uniform(0.8, 4.0), 1.0, size=rng.integers(6, 49)),
    ]
    for trial in range(50):
        samples = np.asarray(draws[trial % len(draws)]())
        model = fit_weibull(samples)
        fitted_ll = _log_likelihood(samples, model.shape, model.scale)
        near, coarse_ll = _grid_search(samples, coarse)
        fine = np.arange(max(near - 0.004, 1e-3), near + 0.004, 1e-5)
        _, fine_ll = _grid_search(samples, fine)
        best_ll = max(coarse_ll, fine_ll)
        assert abs(fitted_ll - best_ll) <= 1e-4, (
            f"trial {trial}: fitted log-likelihood {fitted_ll:.6f} vs grid best {best_ll:.6f}"
        )

    exponential = np.random.default_rng(7).exponential(1.0, size=1000)
    shape = fit_weibull(exponential).shape
    assert abs(shape - 1.0) <= 0.1, f"Exponential(1) fit returned shape {shape}"
    print(f"PASS weibull fit: 50 sets within 1e-4 of grid; Exp(1) shape {shape:.4f}")


# ---------------------------------------------------------- psi properties


def _scaled(vo: VisualObject, factor: float) -> VisualObject:
    return VisualObject(vo.id, as_embedding(vo.embedding * factor), vo.frame_span, vo.encounter_id)


def test_inclusion_probability_properties_in_bulk():
    rng = np.random.default_rng(99)
    cases = 0
    for _ in range(130):
        dim = int(rng.integers(2, 9))
        separation = rng.uniform(1.5, 6.0)
        positives = [
            VisualObject(f"p{i}", as_embedding(rng.normal(size=dim)), (0, 0), "e")
            for i in range(int(rng.integers(1, 7)))
        ]
        negatives = [
            VisualObject(f"n{i}", as_embedding(rng.normal(size=dim) + separation), (0, 0), "e")
            for i in range(int(rng.integers(1, 9)))
        ]
        tail = int(rng.integers(1, 7))
        model = fit_class_model(positives, negatives, tail_size=tail)

        for ev in model.extreme_vectors:  # zero distance: exactly 1
            assert inclusion_probability(model, ev.embedding) == 1.0
            cases += 1

        for _ in range(3):  # bounded everywhere
            query = rng.normal(size=dim) * rng.uniform(0.5, 8.0)
            assert 0.0 <= inclusion_probability(model, query) <= 1.0
            cases += 3

        # walking away from an extreme vector never raises the probability
        ev = model.extreme_vectors[int(rng.integers(0, len(model.extreme_vectors)))]
        single = EvmClassModel(extreme_vectors=(ev,), tail_size=1)
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        radii = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 6.0, size=7))])
        probs = [inclusion_probability(single, ev.embedding + r * direction) for r in radii]
        assert probs[0] == 1.0
        assert all(a >= b for a, b in zip(probs, probs[1:]))
        cases += len(probs) - 1

        # rescaling the whole space rescales the model with it
        factor = float(rng.uniform(0.05, 20.0))
        rescaled = fit_class_model(
            [_scaled(v, factor) for v in positives],
            [_scaled(v, factor) for v in negatives],
            tail_size=tail,
        )
        query = rng.normal(size=dim) * 2.0
        assert inclusion_probability(rescaled, query * factor) == pytest.approx(
            inclusion_probability(model, query), rel=1e-6, abs=1e-9
        )
        cases += 1
    assert cases >= 1000
    print(f"PASS psi properties: {cases} cases")


# ------------------------------------------------------------------ geodesic


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


def _depth_formula(h: Hierarchy, a: int, b: int) -> int:
    path_a = h.path_from_root(a)
    path_b = h.path_from_root(b)
    common = 0
    for x, y in zip(path_a, path_b):
        if x != y:
            break
        common += 1
    lca_depth = common - 1
    return (len(path_a) - 1) + (len(path_b) - 1) - 2 * lca_depth


def test_geodesic_equals_bfs_and_depth_formula_on_random_trees():
    _, encounters = generate_dataset(
        GeneratorConfig(
            depth=3,
            branching=3,
            encounters_per_leaf=2,
            dimension=4,
            level_offset_scales=(8.0, 4.0, 2.0),
            seed=5,
        )
    )
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(100):
        h = Hierarchy()
        size = int(rng.integers(1, 41))
        for index in rng.permutation(len(encounters))[:size]:
            h.add_object_node(int(rng.choice(h.node_ids())), encounters[index])
        ids = h.node_ids()
        for _ in range(30):
            a, b = int(rng.choice(ids)), int(rng.choice(ids))
            got = h.geodesic_distance(a, b)
            assert got == _bfs_distance(h, a, b) == _depth_formula(h, a, b)
            checked += 1
    print(f"PASS geodesic: {checked} pairs over 100 random trees, three routes agree")


# ----------------------------------------------------------------- threshold


def _greedy_chain(recognizer: Recognizer, vo: VisualObject) -> tuple[list[int], list[float]]:
    """Nodes and best-child probabilities along the full greedy descent."""
    h = recognizer.hierarchy
    node = h.root
    nodes = [node]
    probs = []
    while True:
        children = sorted(h.children_of(node))
        if not children:
            return nodes, probs
        best, best_p = children[0], -1.0
        for child in children:
            p = recognizer.child_probability(child, vo)
            if p > best_p:
                best, best_p = child, p
        probs.append(best_p)
        nodes.append(best)
        node = best


def _chain_prediction(nodes: list[int], probs: list[float], lam: float) -> int:
    depth = 0
    while depth < len(probs) and probs[depth] > lam:
        depth += 1
    return nodes[depth]


def test_rejection_threshold_equals_grid_brute_force():
    grid = np.arange(0.0, 1.0005, 0.001)
    for case in range(20):
        tree, encounters = generate_dataset(
            GeneratorConfig(
                depth=2,
                branching=2 + case % 2,
                encounters_per_leaf=2,
                dimension=6,
                level_offset_scales=(8.0, 4.0),
                view_noise_sigma=0.3,
                seed=300 + case,
            )
        )
        h = Hierarchy()
        recognizer = Recognizer(h, EvmConfig(tail_size=4))
        memory = SupervisionMemory()
        oracle = SimulatedOracle(tree, h)
        for e in encounters:
            process_encounter(h, recognizer, e, oracle, memory)

        chains = [
            (_greedy_chain(recognizer, rec.visual_object), rec.confirmed_node)
            for rec in memory.records
        ]

        def accuracy(lam: float) -> float:
            hits = sum(
                1 for (nodes, probs), confirmed in chains
                if _chain_prediction(nodes, probs, lam) == confirmed
            )
            return hits / len(chains)

        chosen = recognizer.rejection_threshold(memory)
        chosen_accuracy = accuracy(chosen)
        grid_best = max(accuracy(float(lam)) for lam in grid)
        assert chosen_accuracy == grid_best, (
            f"case {case}: threshold {chosen:.4f} replays at {chosen_accuracy:.4f}, "
            f"grid brute force reaches {grid_best:.4f}"
        )
    print("PASS threshold: 20 memories, chosen accuracy equals 0.001-grid maximum")


# ------------------------------------------------------------- homomorphism


def test_hierarchy_consistent_after_every_iteration_of_full_runs():
    tree, encounters = generate_dataset(PRODUCTION_SCALE)
    total = 0
    for run_index in range(2):
        order = encounter_order(0, run_index, len(encounters))
        h = Hierarchy()
        recognizer = Recognizer(h, EvmConfig(tail_size=16))
        memory = SupervisionMemory()
        oracle = SimulatedOracle(tree, h)
        for step, index in enumerate(order):
            process_encounter(h, recognizer, encounters[index], oracle, memory)
            violations = homomorphism_violations(h, tree)
            assert not violations, f"run {run_index} iteration {step}: {violations[:3]}"
            total += 1
        h.check_integrity()
    print(f"PASS consistency: zero violations across {total} iterations of 2 full runs")


# -------------------------------------------------------------- determinism


def test_identical_seeds_produce_bit_identical_csv(tmp_path):
    generator = GeneratorConfig(
        depth=3,
        branching=2,
        encounters_per_leaf=3,
        dimension=8,
        level_offset_scales=(8.0, 4.0, 2.0),
        seed=21,
    )
    outputs = []
    for name in ("first.csv", "second.csv"):
        path = tmp_path / name
        run_experiment(
            RunConfig(generator=generator, runs=3, ordering_seed=9, tail_size=8, output_path=path)
        )
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith(b"iteration,model,mean_geodesic_cost\n")
    print(f"PASS determinism: {len(outputs[0])} CSV bytes identical across seeded reruns")
