"""Coverage-guided fuzzing of trained classifiers.

A FIFO queue of seeds is mutated with pixel-level metamorphic operators;
mutants that misclassify go to the failure set, mutants that open new
coverage under the chosen criterion are re-enqueued, everything else is
discarded. A random-testing baseline re-enqueues every surviving mutant.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .coverage import CoverageConfig, CoverageReport, CoverageTracker, StateProfile, collect_prob_vectors
from .qnn import LabeledDataset, QnnModel, forward_batch

__all__ = [
    "FuzzSeed",
    "FuzzConfig",
    "FuzzOutcome",
    "mutate",
    "fuzz",
    "random_test",
    "save_outcome",
]

CRITERIA = ("ksc", "scc", "tsc")
_CRITERION_FLAG = {"ksc": "new_cell", "scc": "new_corner", "tsc": "new_top"}

NUM_MUTATION_OPS = 4


@dataclass
class FuzzSeed:
    features: np.ndarray
    label: int
    reference: np.ndarray  # original ancestor features
    mutation_depth: int = 0
    origin: int = 0  # index of the initial seed this descends from

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.reference = np.asarray(self.reference, dtype=np.float64)


@dataclass(frozen=True)
class FuzzConfig:
    criterion: str = "ksc"  # "ksc" | "scc" | "tsc"
    max_iterations: int = 2000
    alpha: float = 0.2  # cumulative L-inf budget around the ancestor
    seed: int = 0
    coverage: CoverageConfig = field(default_factory=CoverageConfig)

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass
class FuzzOutcome:
    failed_cases: List[FuzzSeed]
    tsr: float
    iterations: int
    coverage_before: CoverageReport
    coverage_after: CoverageReport
    num_initial_seeds: int
    reenqueue_rate: float = 0.0  # re-enqueued / non-failing mutants


def _grid_side(d: int) -> Optional[int]:
    side = int(round(math.sqrt(d)))
    return side if side * side == d else None


def mutate(seed: FuzzSeed, rng: np.random.Generator, alpha: float) -> FuzzSeed:
    """One metamorphic mutation, clipped to [0,1] and the ancestor budget.

    Operators (drawn uniformly): per-feature uniform noise, brightness shift,
    contrast scaling about 0.5, and one-step row/column translation when the
    feature vector is a square grid (plain index shift otherwise).
    """
    x = seed.features
    op = int(rng.integers(NUM_MUTATION_OPS))
    if op == 0:
        out = x + rng.uniform(-0.05, 0.05, size=x.shape)
    elif op == 1:
        out = x + rng.uniform(-0.1, 0.1)
    elif op == 2:
        out = 0.5 + float(rng.uniform(0.8, 1.25)) * (x - 0.5)
    else:
        side = _grid_side(x.size)
        axis = int(rng.integers(2))
        step = 1 if rng.integers(2) else -1
        if side is not None:
            img = x.reshape(side, side)
            shifted = np.zeros_like(img)
            if axis == 0:
                if step == 1:
                    shifted[1:, :] = img[:-1, :]
                else:
                    shifted[:-1, :] = img[1:, :]
            else:
                if step == 1:
                    shifted[:, 1:] = img[:, :-1]
                else:
                    shifted[:, :-1] = img[:, 1:]
            out = shifted.reshape(-1)
        else:
            shifted = np.zeros_like(x)
            if step == 1:
                shifted[1:] = x[:-1]
            else:
                shifted[:-1] = x[1:]
            out = shifted
    out = np.clip(out, seed.reference - alpha, seed.reference + alpha)
    out = np.clip(out, 0.0, 1.0)
    return FuzzSeed(out, seed.label, seed.reference, seed.mutation_depth + 1, seed.origin)


def _eval_one(model: QnnModel, features: np.ndarray):
    probs, scores = forward_batch(model, features[None, :])
    return probs[0], int(np.argmax(scores[0]))


def _initial_queue(model: QnnModel, initial_seeds: LabeledDataset):
    """Correctly classified initial seeds, as FuzzSeed objects."""
    if len(initial_seeds) == 0:
        raise ValueError("initial seed set is empty")
    _, scores = forward_batch(model, initial_seeds.features)
    preds = np.argmax(scores, axis=1)
    queue = []
    for i in range(len(initial_seeds)):
        if preds[i] == initial_seeds.labels[i]:
            x = initial_seeds.features[i]
            queue.append(FuzzSeed(x.copy(), int(initial_seeds.labels[i]), x.copy(), 0, i))
    if not queue:
        raise ValueError("no correctly classified initial seeds to fuzz")
    return queue


def _run_loop(
    model: QnnModel,
    initial_seeds: LabeledDataset,
    prof: StateProfile,
    config: FuzzConfig,
    guided: bool,
    reenqueue_prob: float = 1.0,
) -> FuzzOutcome:
    rng = np.random.default_rng(config.seed)
    seeds = _initial_queue(model, initial_seeds)

    tracker = CoverageTracker(prof, config.coverage)
    for pv in collect_prob_vectors(model, initial_seeds):
        tracker.add_input(pv)
    coverage_before = tracker.report()

    queue = deque(seeds)
    failed: List[FuzzSeed] = []
    failing_origins = set()
    flag = _CRITERION_FLAG[config.criterion]
    iterations = 0
    non_failing = 0
    re_enqueued = 0
    while queue and iterations < config.max_iterations:
        iterations += 1
        s = queue.popleft()
        m = mutate(s, rng, config.alpha)
        pv, pred = _eval_one(model, m.features)
        if pred != m.label:
            tracker.add_input(pv)
            failed.append(m)
            failing_origins.add(m.origin)
            continue
        non_failing += 1
        if guided:
            if tracker.peek_input(pv)[flag]:
                tracker.add_input(pv)
                queue.append(m)
                re_enqueued += 1
        elif rng.random() < reenqueue_prob:
            queue.append(m)
            re_enqueued += 1

    num_initial = len(seeds)
    return FuzzOutcome(
        failed_cases=failed,
        tsr=100.0 * len(failing_origins) / num_initial,
        iterations=iterations,
        coverage_before=coverage_before,
        coverage_after=tracker.report(),
        num_initial_seeds=num_initial,
        reenqueue_rate=re_enqueued / non_failing if non_failing else 0.0,
    )


def fuzz(
    model: QnnModel,
    initial_seeds: LabeledDataset,
    prof: StateProfile,
    config: FuzzConfig,
) -> FuzzOutcome:
    """Coverage-guided fuzzing; misclassified initial seeds are excluded."""
    return _run_loop(model, initial_seeds, prof, config, guided=True)


def random_test(
    model: QnnModel,
    initial_seeds: LabeledDataset,
    prof: StateProfile,
    config: FuzzConfig,
    reenqueue_prob: float = 1.0,
) -> FuzzOutcome:
    """Baseline with the same loop and budget but no coverage gate.

    Surviving mutants are re-enqueued with the given probability; matching
    it to a guided run's reenqueue_rate equalizes the mutation budget so the
    comparison isolates seed selection quality.
    """
    return _run_loop(
        model, initial_seeds, prof, config, guided=False, reenqueue_prob=reenqueue_prob
    )


def save_outcome(outcome: FuzzOutcome, config: FuzzConfig, out_dir) -> None:
    """Persist failed cases (CSV), a JSON summary and a reproducibility manifest."""
    from pathlib import Path

    from .datasets import save_csv

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if outcome.failed_cases:
        feats = np.stack([f.features for f in outcome.failed_cases])
        labels = np.array([f.label for f in outcome.failed_cases])
        save_csv(LabeledDataset(feats, labels), out_dir / "failed_cases.csv")
    summary = {
        "tsr": outcome.tsr,
        "iterations": outcome.iterations,
        "num_failed_cases": len(outcome.failed_cases),
        "num_initial_seeds": outcome.num_initial_seeds,
        "coverage_before": outcome.coverage_before.to_dict(),
        "coverage_after": outcome.coverage_after.to_dict(),
    }
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    manifest = {
        "criterion": config.criterion,
        "max_iterations": config.max_iterations,
        "alpha": config.alpha,
        "seed": config.seed,
        "coverage": {
            "k_cells": config.coverage.k_cells,
            "top_k": config.coverage.top_k,
            "boundary_mode": config.coverage.boundary_mode,
        },
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
