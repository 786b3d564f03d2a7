"""Abnormal-input generation: uniform random perturbation plus FGSM and JSMA
driven by the simulator's input gradients. All outputs stay in [0, 1]^d."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gradients import input_grad, score_input_grads
from .qnn import LabeledDataset, QnnModel, forward

__all__ = [
    "AttackConfig",
    "random_perturb",
    "fgsm",
    "jsma",
    "attack_suite",
    "save_attack_suite",
]

ATTACK_KINDS = ("random", "fgsm", "jsma")


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "fgsm"  # "random" | "fgsm" | "jsma"
    epsilon: float = 64.0 / 255.0  # L-inf budget for random / fgsm
    theta: float = 1.0  # jsma per-feature step
    gamma: float = 0.1  # jsma max fraction of features modified
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not (0 <= self.gamma <= 1):
            raise ValueError("gamma must be in (0, 1]")


def random_perturb(x, epsilon: float, seed: int) -> np.ndarray:
    """x + U(-eps, eps) noise per feature, clipped back to [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-epsilon, epsilon, size=x.shape)
    return np.clip(x + noise, 0.0, 1.0)


def _predicted(model: QnnModel, x: np.ndarray) -> int:
    _, scores = forward(model, x)
    return int(np.argmax(scores))


def fgsm(model: QnnModel, x, label: int, epsilon: float):
    """Single-step sign-gradient attack; returns (x', success flag)."""
    x = np.asarray(x, dtype=np.float64)
    if epsilon == 0.0:
        adv = x.copy()
    else:
        grad = input_grad(model, x, label)
        adv = np.clip(x + epsilon * np.sign(grad), 0.0, 1.0)
    return adv, _predicted(model, adv) != label


def jsma(model: QnnModel, x, label: int, theta: float = 1.0, gamma: float = 0.1):
    """Saliency-guided sparse attack; returns (x', success flag).

    Repeatedly bumps (by +theta, clipped to 1) the untouched feature whose
    gradient most favors the runner-up class over the true class, until the
    prediction flips or ceil(gamma * d) features have been modified.
    """
    x = np.asarray(x, dtype=np.float64)
    adv = x.copy()
    budget = math.ceil(gamma * x.size)
    touched: set = set()
    while len(touched) < budget:
        _, scores = forward(model, adv)
        if int(np.argmax(scores)) != label:
            break
        order = np.argsort(scores)[::-1]
        target = int(order[0]) if int(order[0]) != label else int(order[1])
        grads = score_input_grads(model, adv)
        saliency = grads[target] - grads[label]
        saliency[list(touched)] = -np.inf
        best = int(np.argmax(saliency))
        if saliency[best] <= 0:
            break
        adv[best] = min(1.0, adv[best] + theta)
        touched.add(best)
    return adv, _predicted(model, adv) != label


def attack_suite(model: QnnModel, data: LabeledDataset, config: AttackConfig):
    """Attack every row of a dataset; returns (adversarial dataset, asr)."""
    adv_rows = np.empty_like(data.features)
    successes = 0
    for i in range(len(data)):
        x, label = data.features[i], int(data.labels[i])
        if config.kind == "random":
            adv = random_perturb(x, config.epsilon, config.seed + i)
            ok = _predicted(model, adv) != label
        elif config.kind == "fgsm":
            adv, ok = fgsm(model, x, label, config.epsilon)
        else:
            adv, ok = jsma(model, x, label, config.theta, config.gamma)
        adv_rows[i] = adv
        successes += int(ok)
    asr = successes / len(data) if len(data) else 0.0
    return LabeledDataset(adv_rows, data.labels.copy(), data.class_names), asr


def save_attack_suite(
    adv: LabeledDataset,
    config: AttackConfig,
    source_digest: str,
    csv_path,
    provenance_path,
    asr: Optional[float] = None,
) -> None:
    from .datasets import save_csv

    save_csv(adv, csv_path)
    doc = {
        "kind": config.kind,
        "epsilon": config.epsilon,
        "theta": config.theta,
        "gamma": config.gamma,
        "seed": config.seed,
        "source_digest": source_digest,
        "asr": asr,
    }
    with open(provenance_path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
