"""Streamed recognition runs, the always-root baseline, and cost curves.

A run feeds a shuffled encounter stream through the interactive placement
loop and records, per iteration, how far the dialogue had to travel from
each model's suggested starting node to the node the oracle confirmed.
The predictive model starts from the recognizer's suggestion; the naive
baseline always starts from the root, so its cost is the confirmed node's
depth. Both models share the same hierarchy evolution within a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import Encounter, InputError
from .hierarchy import Hierarchy
from .interaction import SimulatedOracle, process_encounter
from .recognition import EvmConfig, Recognizer, SupervisionMemory
from .synth import GeneratorConfig, GroundTruthTree, generate_dataset

PREDICT_MODEL = "predict_genus"
NAIVE_MODEL = "naive"
CSV_HEADER = "iteration,model,mean_geodesic_cost"

_ORDERING_STREAM_BITS = 64


@dataclass(frozen=True)
class RunConfig:
    """Full experiment description: data, repetitions, and output."""

    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    runs: int = 100
    ordering_seed: int = 0
    tail_size: int = 16
    output_path: Path | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise InputError("runs must be at least 1")
        if not 0 <= self.ordering_seed < 2**_ORDERING_STREAM_BITS:
            raise InputError("ordering_seed must be a 64-bit unsigned integer")
        if self.tail_size < 1:
            raise InputError("tail_size must be at least 1")


@dataclass(frozen=True)
class RunResult:
    """Per-iteration geodesic costs of one run, for both models."""

    predict_costs: tuple[int, ...]
    naive_costs: tuple[int, ...]

    def __post_init__(self):
        if len(self.predict_costs) != len(self.naive_costs):
            raise InputError("cost series must have equal length")


@dataclass(frozen=True)
class AggregateResult:
    """Arithmetic mean cost per iteration per model across runs."""

    predict_mean: tuple[float, ...]
    naive_mean: tuple[float, ...]

    @property
    def iterations(self) -> int:
        return len(self.predict_mean)


def encounter_order(ordering_seed: int, run_index: int, count: int) -> np.ndarray:
    """Deterministic per-run permutation of the encounter stream."""
    seq = np.random.SeedSequence([ordering_seed, run_index])
    rng = np.random.Generator(np.random.Philox(seq))
    return rng.permutation(count)


def run_once(
    tree: GroundTruthTree,
    encounters: Sequence[Encounter],
    ordering_seed: int,
    run_index: int,
    tail_size: int = 16,
) -> RunResult:
    """Play one shuffled stream and measure both models on the same run."""
    order = encounter_order(ordering_seed, run_index, len(encounters))
    hierarchy = Hierarchy()
    recognizer = Recognizer(hierarchy, EvmConfig(tail_size=tail_size))
    memory = SupervisionMemory()
    oracle = SimulatedOracle(tree, hierarchy)
    predict_costs = []
    naive_costs = []
    for index in order:
        outcome = process_encounter(hierarchy, recognizer, encounters[index], oracle, memory)
        predict_costs.append(
            hierarchy.geodesic_distance(outcome.predicted_node, outcome.placed_node)
        )
        naive_costs.append(hierarchy.depth(outcome.placed_node))
    return RunResult(tuple(predict_costs), tuple(naive_costs))


def aggregate(results: Sequence[RunResult]) -> AggregateResult:
    """Mean cost per iteration per model; runs must be equally long."""
    if not results:
        raise InputError("aggregate needs at least one run")
    length = len(results[0].predict_costs)
    if any(len(r.predict_costs) != length for r in results):
        raise InputError("all runs must have the same number of iterations")
    predict = np.mean([r.predict_costs for r in results], axis=0)
    naive = np.mean([r.naive_costs for r in results], axis=0)
    return AggregateResult(tuple(map(float, predict)), tuple(map(float, naive)))


def write_csv(result: AggregateResult, path: Path | str) -> None:
    """Emit `iteration,model,mean_geodesic_cost` rows, one pair per iteration."""
    lines = [CSV_HEADER]
    for i in range(result.iterations):
        lines.append(f"{i},{PREDICT_MODEL},{result.predict_mean[i]!r}")
        lines.append(f"{i},{NAIVE_MODEL},{result.naive_mean[i]!r}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write cost CSV to {path}: {exc}") from exc


def run_experiment(
    config: RunConfig,
    progress: Callable[[int], None] | None = None,
) -> AggregateResult:
    """Generate the dataset once, repeat shuffled runs, aggregate, emit CSV."""
    tree, encounters = generate_dataset(config.generator)
    results = []
    for run_index in range(config.runs):
        results.append(
            run_once(tree, encounters, config.ordering_seed, run_index, config.tail_size)
        )
        if progress is not None:
            progress(run_index)
    result = aggregate(results)
    if config.output_path is not None:
        write_csv(result, config.output_path)
    return result
