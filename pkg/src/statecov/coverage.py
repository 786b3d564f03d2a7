"""Probability-region coverage of quantum classifiers.

Profiling extracts, per basis state, the lower/upper probability boundaries
seen on training data; the interval between them is the major region, split
into k equal cells, and everything outside it forms two corner regions.
Three criteria are tracked over a test suite:

  * KSC: fraction of major-region cells covered (denominator k * |S|),
  * SCC: fraction of corner regions covered (denominator 2 * |S|),
  * TSC: fraction of basis states appearing in some input's top-k.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .qnn import LabeledDataset, QnnModel, forward_batch
from .sim import Statevector, sample_probabilities

__all__ = [
    "StateProfile",
    "CoverageConfig",
    "CoverageTracker",
    "CoverageReport",
    "collect_prob_vectors",
    "profile",
    "mad_refine",
    "coverage_suite",
]

BOUNDARY_MODES = ("raw", "sigma", "mad")


@dataclass
class StateProfile:
    """Per-basis-state probability boundaries derived from profiling data."""

    lower: np.ndarray
    upper: np.ndarray
    sigma: Optional[np.ndarray] = None
    mad_lower: Optional[np.ndarray] = None
    mad_upper: Optional[np.ndarray] = None
    provenance: str = ""

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower/upper length mismatch")
        if np.any(self.lower > self.upper):
            raise ValueError("lower boundary above upper boundary")
        if np.any(self.lower < 0) or np.any(self.upper > 1):
            raise ValueError("boundaries must lie in [0, 1]")
        for name in ("sigma", "mad_lower", "mad_upper"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, np.asarray(val, dtype=np.float64))
        if (self.mad_lower is None) != (self.mad_upper is None):
            raise ValueError("mad bounds must be set together")
        if self.mad_lower is not None:
            if np.any(self.mad_lower < self.lower - 1e-12) or np.any(
                self.mad_upper > self.upper + 1e-12
            ):
                raise ValueError("mad bounds must nest within raw bounds")

    @property
    def num_states(self) -> int:
        return self.lower.shape[0]

    def to_json(self, path) -> None:
        doc = {
            "format_version": 1,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "sigma": None if self.sigma is None else self.sigma.tolist(),
            "mad_lower": None if self.mad_lower is None else self.mad_lower.tolist(),
            "mad_upper": None if self.mad_upper is None else self.mad_upper.tolist(),
            "provenance": self.provenance,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "StateProfile":
        with open(path) as fh:
            doc = json.load(fh)
        return cls(
            lower=doc["lower"],
            upper=doc["upper"],
            sigma=doc.get("sigma"),
            mad_lower=doc.get("mad_lower"),
            mad_upper=doc.get("mad_upper"),
            provenance=doc.get("provenance", ""),
        )


@dataclass(frozen=True)
class CoverageConfig:
    k_cells: int = 100
    top_k: int = 1
    boundary_mode: str = "raw"  # "raw" | "sigma" | "mad"
    epsilon_degenerate: float = 1e-12

    def __post_init__(self):
        if self.k_cells < 1 or self.top_k < 1:
            raise ValueError("k_cells and top_k must be >= 1")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")


@dataclass(frozen=True)
class CoverageReport:
    ksc: float
    scc: float
    tsc: float
    covered_cells: int
    covered_corners: int
    covered_top_states: int
    num_states: int
    k_cells: int
    num_inputs: int

    def to_dict(self) -> dict:
        return {
            "ksc": self.ksc,
            "scc": self.scc,
            "tsc": self.tsc,
            "covered_cells": self.covered_cells,
            "covered_corners": self.covered_corners,
            "covered_top_states": self.covered_top_states,
            "num_states": self.num_states,
            "k_cells": self.k_cells,
            "num_inputs": self.num_inputs,
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value"])
            for key, value in self.to_dict().items():
                writer.writerow([key, value])


def resolve_boundaries(prof: StateProfile, config: CoverageConfig):
    """Effective (LB, UB) arrays for the configured boundary mode."""
    if config.boundary_mode == "raw":
        return prof.lower.copy(), prof.upper.copy()
    if config.boundary_mode == "sigma":
        if prof.sigma is None:
            raise ValueError("sigma boundary mode requires a profile with sigma")
        return (
            np.clip(prof.lower - prof.sigma, 0.0, 1.0),
            np.clip(prof.upper + prof.sigma, 0.0, 1.0),
        )
    if prof.mad_lower is None:
        raise ValueError("mad boundary mode requires MAD-refined bounds")
    return prof.mad_lower.copy(), prof.mad_upper.copy()


class CoverageTracker:
    """Incremental, monotone record of covered cells, corners and top states.

    Bits only ever flip from 0 to 1; trackers over disjoint input shards can
    be combined with merge() (bitwise OR, associative and commutative).
    """

    def __init__(self, prof: StateProfile, config: CoverageConfig):
        self.profile = prof
        self.config = config
        self.lb, self.ub = resolve_boundaries(prof, config)
        s = prof.num_states
        self.cells = np.zeros((s, config.k_cells), dtype=bool)
        self.corners = np.zeros((s, 2), dtype=bool)  # [:, 0] lower, [:, 1] upper
        self.top_states = np.zeros(s, dtype=bool)
        self.num_inputs = 0

    def _locate(self, pv: np.ndarray):
        """Cell/corner/top hits of one probability vector, without committing."""
        pv = np.asarray(pv, dtype=np.float64)
        if pv.shape != (self.profile.num_states,):
            raise ValueError(
                f"probability vector length {pv.shape} does not match profile "
                f"({self.profile.num_states} states)"
            )
        k = self.config.k_cells
        eps = self.config.epsilon_degenerate
        width = self.ub - self.lb

        below = pv < self.lb
        above = pv > self.ub
        inside = ~(below | above)

        cell_hits = np.full(pv.shape[0], -1, dtype=np.int64)
        degenerate = inside & (width < eps)
        cell_hits[degenerate & (np.abs(pv - self.lb) <= eps)] = 0
        regular = inside & ~degenerate
        if np.any(regular):
            w = width[regular] / k
            idx = np.floor((pv[regular] - self.lb[regular]) / w).astype(np.int64)
            cell_hits[regular] = np.minimum(idx, k - 1)  # closed right edge

        # stable argsort on -pv breaks probability ties by ascending index
        top = np.argsort(-pv, kind="stable")[: self.config.top_k]
        return cell_hits, below, above, top

    def peek_input(self, pv) -> dict:
        """Delta flags this vector would produce, without mutating the tracker."""
        cell_hits, below, above, top = self._locate(np.asarray(pv))
        states = np.arange(self.profile.num_states)
        hit = cell_hits >= 0
        new_cell = bool(np.any(~self.cells[states[hit], cell_hits[hit]]))
        new_corner = bool(
            np.any(~self.corners[below, 0]) or np.any(~self.corners[above, 1])
        )
        new_top = bool(np.any(~self.top_states[top]))
        return {"new_cell": new_cell, "new_corner": new_corner, "new_top": new_top}

    def add_input(self, pv) -> dict:
        """Fold one probability vector into the tracker; returns delta flags."""
        delta = self.peek_input(pv)
        cell_hits, below, above, top = self._locate(np.asarray(pv))
        states = np.arange(self.profile.num_states)
        hit = cell_hits >= 0
        self.cells[states[hit], cell_hits[hit]] = True
        self.corners[below, 0] = True
        self.corners[above, 1] = True
        self.top_states[top] = True
        self.num_inputs += 1
        return delta

    def merge(self, other: "CoverageTracker") -> None:
        if other.cells.shape != self.cells.shape:
            raise ValueError("cannot merge trackers with different configurations")
        self.cells |= other.cells
        self.corners |= other.corners
        self.top_states |= other.top_states
        self.num_inputs += other.num_inputs

    def report(self) -> CoverageReport:
        s = self.profile.num_states
        k = self.config.k_cells
        covered_cells = int(self.cells.sum())
        covered_corners = int(self.corners.sum())
        covered_top = int(self.top_states.sum())
        return CoverageReport(
            ksc=100.0 * covered_cells / (k * s),
            scc=100.0 * covered_corners / (2 * s),
            tsc=100.0 * covered_top / s,
            covered_cells=covered_cells,
            covered_corners=covered_corners,
            covered_top_states=covered_top,
            num_states=s,
            k_cells=k,
            num_inputs=self.num_inputs,
        )


def collect_prob_vectors(
    model: QnnModel,
    data: LabeledDataset,
    shots: Optional[int] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """Measured probability vectors for every dataset row, as a (n, 2^q) matrix."""
    probs, _ = forward_batch(model, data.features)
    if shots is None:
        return probs
    base = 0 if seed is None else seed
    sampled = np.empty_like(probs)
    for i in range(probs.shape[0]):
        state = Statevector(model.num_qubits, np.sqrt(probs[i]).astype(np.complex128))
        sampled[i] = sample_probabilities(state, shots, base + i).probs
    return sampled


def profile(
    model: QnnModel,
    data: LabeledDataset,
    shots: Optional[int] = None,
    seed: Optional[int] = None,
) -> StateProfile:
    """Elementwise min/max (and std) of probability vectors over a dataset."""
    if len(data) == 0:
        raise ValueError("cannot profile an empty dataset")
    samples = collect_prob_vectors(model, data, shots=shots, seed=seed)
    return profile_from_samples(samples, provenance=data.digest())


def profile_from_samples(samples: np.ndarray, provenance: str = "") -> StateProfile:
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[0]
    sigma = samples.std(axis=0, ddof=1) if n > 1 else np.zeros(samples.shape[1])
    return StateProfile(
        lower=samples.min(axis=0),
        upper=samples.max(axis=0),
        sigma=sigma,
        provenance=provenance,
    )


def mad_refine(
    samples: np.ndarray, confidence: float = 0.99, provenance: str = ""
) -> StateProfile:
    """Profile with outlier-robust boundaries via the median absolute deviation.

    Per state, samples whose modified z-score 0.6745 |x - m| / MAD exceeds
    the two-sided normal quantile at the given confidence are discarded; the
    refined bounds are the min/max of the survivors. A zero MAD keeps only
    samples equal to the median.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] < 3:
        raise ValueError("MAD refinement needs at least 3 samples per state")
    z_cut = statistics.NormalDist().inv_cdf(0.5 + confidence / 2.0)
    base = profile_from_samples(samples, provenance=provenance)
    mad_lower = np.empty(samples.shape[1])
    mad_upper = np.empty(samples.shape[1])
    for s in range(samples.shape[1]):
        col = samples[:, s]
        m = np.median(col)
        mad = np.median(np.abs(col - m))
        if mad == 0.0:
            keep = col == m
        else:
            keep = 0.6745 * np.abs(col - m) / mad <= z_cut
        kept = col[keep]
        mad_lower[s] = kept.min()
        mad_upper[s] = kept.max()
    base.mad_lower = mad_lower
    base.mad_upper = mad_upper
    return base


def coverage_suite(
    model: QnnModel,
    suite: LabeledDataset,
    prof: StateProfile,
    config: CoverageConfig,
    shots: Optional[int] = None,
    seed: Optional[int] = None,
) -> CoverageReport:
    """Coverage report for a whole suite; equals incremental add_input folding."""
    if prof.num_states != 2**model.num_qubits:
        raise ValueError(
            f"profile has {prof.num_states} states but model produces "
            f"{2**model.num_qubits}"
        )
    tracker = CoverageTracker(prof, config)
    pvs = collect_prob_vectors(model, suite, shots=shots, seed=seed)
    for pv in pvs:
        tracker.add_input(pv)
    return tracker.report()
