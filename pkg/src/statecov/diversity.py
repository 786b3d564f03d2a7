"""Suite-diversity analytics: pairwise fidelity histograms compared against a
Haar-random baseline via Jensen-Shannon divergence (log base 2, so values
stay in [0, 1])."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .qnn import EncoderSpec, encode_batch
from .sim import Statevector, haar_random_state

__all__ = [
    "NUM_BINS",
    "FidelityHistogram",
    "DiversitySummary",
    "pairwise_fidelity_hist",
    "js_divergence",
    "suite_diversity",
]

NUM_BINS = 50
DEFAULT_MAX_PAIRS = 100_000
DEFAULT_HAAR_SAMPLES = 1000


@dataclass(frozen=True)
class FidelityHistogram:
    """Normalized histogram of pairwise fidelities over 50 uniform bins on [0, 1]."""

    bin_edges: np.ndarray
    densities: np.ndarray
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", np.asarray(self.bin_edges, dtype=np.float64))
        object.__setattr__(self, "densities", np.asarray(self.densities, dtype=np.float64))
        if self.bin_edges.shape[0] != self.densities.shape[0] + 1:
            raise ValueError("bin_edges must have one more entry than densities")
        if abs(self.densities.sum() - 1.0) > 1e-9:
            raise ValueError("densities must sum to 1")

    @classmethod
    def from_fidelities(cls, values: Sequence[float]) -> "FidelityHistogram":
        values = np.asarray(values, dtype=np.float64)
        edges = np.linspace(0.0, 1.0, NUM_BINS + 1)
        counts, _ = np.histogram(np.clip(values, 0.0, 1.0), bins=edges)
        return cls(edges, counts / counts.sum(), int(values.size))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_left", "bin_right", "density"])
            for left, right, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.densities):
                writer.writerow([left, right, d])


def _pair_fidelities(
    amps: np.ndarray, max_pairs: int, seed: Optional[int]
) -> np.ndarray:
    """|<i|j>|^2 over all i<j pairs, or a seeded uniform subsample of them."""
    n = amps.shape[0]
    total = n * (n - 1) // 2
    if total <= max_pairs:
        gram = amps @ amps.conj().T
        iu = np.triu_indices(n, k=1)
        return np.abs(gram[iu]) ** 2
    rng = np.random.default_rng(seed or 0)
    flat = rng.choice(total, size=max_pairs, replace=False)
    # decode the flat upper-triangle index into (i, j)
    i = (n - 2 - np.floor(np.sqrt(-8 * flat + 4 * n * (n - 1) - 7) / 2.0 - 0.5)).astype(int)
    j = (flat + i + 1 - n * (n - 1) // 2 + (n - i) * ((n - i) - 1) // 2).astype(int)
    return np.abs(np.sum(amps[i] * amps[j].conj(), axis=1)) ** 2


def pairwise_fidelity_hist(
    states: List[Statevector],
    max_pairs: int = DEFAULT_MAX_PAIRS,
    seed: Optional[int] = None,
) -> FidelityHistogram:
    if len(states) < 2:
        raise ValueError("need at least 2 states for pairwise fidelities")
    amps = np.stack([s.amplitudes for s in states])
    return FidelityHistogram.from_fidelities(_pair_fidelities(amps, max_pairs, seed))


def js_divergence(p: FidelityHistogram, q: FidelityHistogram) -> float:
    """Jensen-Shannon divergence between two identically binned histograms.

    Uses log base 2; bins where both densities vanish contribute nothing, and
    the result is bounded in [0, 1].
    """
    if not np.array_equal(p.bin_edges, q.bin_edges):
        raise ValueError("histograms must share the same binning")

    def _kl(a: np.ndarray, b: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))

    m = 0.5 * (p.densities + q.densities)
    return 0.5 * _kl(p.densities, m) + 0.5 * _kl(q.densities, m)


@dataclass(frozen=True)
class DiversitySummary:
    js_vs_haar: float
    mean_fidelity: float
    closest_neighbor_fidelity: float

    def to_dict(self) -> dict:
        return {
            "js_vs_haar": self.js_vs_haar,
            "mean_fidelity": self.mean_fidelity,
            "closest_neighbor_fidelity": self.closest_neighbor_fidelity,
        }


def suite_diversity(
    encoder: EncoderSpec,
    num_qubits: int,
    suite_features: np.ndarray,
    num_haar_samples: int = DEFAULT_HAAR_SAMPLES,
    seed: int = 0,
    max_pairs: int = DEFAULT_MAX_PAIRS,
) -> tuple:
    """Diversity of an encoded suite against a Haar-random baseline.

    Returns (DiversitySummary, suite histogram, Haar histogram). The
    closest-neighbor figure is the mean over states of the maximum fidelity
    to any other state in the suite.
    """
    feats = np.asarray(suite_features, dtype=np.float64)
    if feats.shape[0] < 2:
        raise ValueError("suite must contain at least 2 inputs")
    amps = encode_batch(encoder, feats, num_qubits)

    fids = _pair_fidelities(amps, max_pairs, seed)
    suite_hist = FidelityHistogram.from_fidelities(fids)

    haar_amps = np.stack(
        [haar_random_state(num_qubits, seed * 100003 + i).amplitudes for i in range(num_haar_samples)]
    )
    haar_hist = FidelityHistogram.from_fidelities(
        _pair_fidelities(haar_amps, max_pairs, seed + 1)
    )

    gram = np.abs(amps @ amps.conj().T) ** 2
    np.fill_diagonal(gram, -np.inf)
    closest = float(gram.max(axis=1).mean())

    summary = DiversitySummary(
        js_vs_haar=js_divergence(suite_hist, haar_hist),
        mean_fidelity=float(fids.mean()),
        closest_neighbor_fidelity=closest,
    )
    return summary, suite_hist, haar_hist
