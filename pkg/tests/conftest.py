import numpy as np
import pytest

from statecov.datasets import gaussian_blobs, synthetic_grid_digits
from statecov.qnn import AnsatzSpec, EncoderSpec, TrainConfig, build_model, train


@pytest.fixture(scope="session")
def toy4_train_data():
    return gaussian_blobs(num_classes=2, samples_per_class=50, num_features=4, spread=0.12, seed=1)


@pytest.fixture(scope="session")
def toy4_model(toy4_train_data):
    model = build_model(
        EncoderSpec("angle", 4), AnsatzSpec("layered", 2, "linear"), 4, 2, seed=0
    )
    trained, history = train(
        model, toy4_train_data, TrainConfig(epochs=40, learning_rate=0.1, optimizer="adam", seed=0)
    )
    assert history["train_accuracy"] >= 0.95
    return trained


@pytest.fixture(scope="session")
def grid6_train_data():
    return synthetic_grid_digits(samples_per_class=40, grid=8, noise=0.3, seed=1)


@pytest.fixture(scope="session")
def grid6_model(grid6_train_data):
    model = build_model(
        EncoderSpec("amplitude", 64), AnsatzSpec("layered", 2, "linear"), 6, 2, seed=0
    )
    trained, history = train(
        model, grid6_train_data, TrainConfig(epochs=15, learning_rate=0.1, optimizer="adam", seed=0)
    )
    assert history["train_accuracy"] >= 0.9
    return trained


def dense_gate_matrix(op, params, q):
    """Independent 2^q x 2^q matrix for one gate, built entrywise from the
    gate's action on basis states."""
    theta = None if op.param_slot is None else float(params[op.param_slot])
    kind = op.kind.value
    if kind in ("rx", "crx"):
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        u = np.array([[c, -1j * s], [-1j * s, c]])
    elif kind in ("ry", "cry"):
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        u = np.array([[c, -s], [s, c]], dtype=complex)
    elif kind in ("rz", "crz"):
        u = np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    elif kind == "h":
        u = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    elif kind in ("x", "cnot"):
        u = np.array([[0, 1], [1, 0]], dtype=complex)
    elif kind == "cz":
        u = np.diag([1.0, -1.0]).astype(complex)
    else:
        raise ValueError(kind)

    dim = 2**q
    mat = np.zeros((dim, dim), dtype=complex)
    tbit = q - 1 - op.target
    for col in range(dim):
        if op.control is not None and not (col >> (q - 1 - op.control)) & 1:
            mat[col, col] = 1.0
            continue
        b = (col >> tbit) & 1
        for bp in (0, 1):
            row = (col & ~(1 << tbit)) | (bp << tbit)
            mat[row, col] += u[bp, b]
    return mat


def dense_circuit_matrix(circuit, params):
    dim = 2**circuit.num_qubits
    mat = np.eye(dim, dtype=complex)
    for op in circuit.gates:
        mat = dense_gate_matrix(op, params, circuit.num_qubits) @ mat
    return mat


def random_circuit(rng, q, num_gates=12):
    """Random circuit mixing all supported gate kinds."""
    from statecov.sim import CircuitSpec, Gate, GateOp

    singles = [Gate.RX, Gate.RY, Gate.RZ, Gate.H, Gate.X]
    doubles = [Gate.CNOT, Gate.CZ, Gate.CRX, Gate.CRY, Gate.CRZ]
    gates = []
    slot = 0
    for _ in range(num_gates):
        if q > 1 and rng.random() < 0.4:
            kind = doubles[rng.integers(len(doubles))]
            ctrl, tgt = rng.choice(q, size=2, replace=False)
            if kind in (Gate.CRX, Gate.CRY, Gate.CRZ):
                gates.append(GateOp(kind, target=int(tgt), control=int(ctrl), param_slot=slot))
                slot += 1
            else:
                gates.append(GateOp(kind, target=int(tgt), control=int(ctrl)))
        else:
            kind = singles[rng.integers(len(singles))]
            tgt = int(rng.integers(q))
            if kind in (Gate.RX, Gate.RY, Gate.RZ):
                gates.append(GateOp(kind, target=tgt, param_slot=slot))
                slot += 1
            else:
                gates.append(GateOp(kind, target=tgt))
    circuit = CircuitSpec(q, tuple(gates), slot)
    params = rng.uniform(-np.pi, np.pi, size=slot)
    return circuit, params


def brute_force_coverage(profile, config, pvs):
    """From-scratch, loop-based recomputation of the three criteria."""
    from statecov.coverage import resolve_boundaries

    lb, ub = resolve_boundaries(profile, config)
    s_count = profile.num_states
    k = config.k_cells
    eps = config.epsilon_degenerate
    cells = set()
    corners = set()
    tops = set()
    for pv in pvs:
        pv = np.asarray(pv, dtype=float)
        for s in range(s_count):
            p = pv[s]
            if p < lb[s]:
                corners.add((s, "low"))
            elif p > ub[s]:
                corners.add((s, "high"))
            else:
                width = ub[s] - lb[s]
                if width < eps:
                    if abs(p - lb[s]) <= eps:
                        cells.add((s, 0))
                else:
                    cell = int((p - lb[s]) // (width / k))
                    cells.add((s, min(cell, k - 1)))
        order = sorted(range(s_count), key=lambda i: (-pv[i], i))
        tops.update(order[: config.top_k])
    return {
        "ksc": 100.0 * len(cells) / (k * s_count),
        "scc": 100.0 * len(corners) / (2 * s_count),
        "tsc": 100.0 * len(tops) / s_count,
        "cells": cells,
        "corners": corners,
        "tops": tops,
    }


def random_profile_and_suite(rng, q, suite_size):
    """A profile from random simplex vectors plus a random evaluation suite."""
    from statecov.coverage import profile_from_samples

    dim = 2**q
    train = rng.dirichlet(np.ones(dim), size=rng.integers(5, 25))
    prof = profile_from_samples(train)
    # mix of in-distribution and fresh random vectors so corners get hit
    suite = rng.dirichlet(np.ones(dim), size=suite_size)
    return prof, suite
