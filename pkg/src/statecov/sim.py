"""Exact statevector simulation of parameterized quantum circuits.

Basis-state ordering is big-endian: qubit 0 is the most significant bit of
the basis index. All public operations are pure functions; inputs are never
modified in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Gate",
    "GateOp",
    "CircuitSpec",
    "Statevector",
    "ProbVector",
    "SimulationError",
    "apply_circuit",
    "apply_circuit_batch",
    "exact_probabilities",
    "sample_probabilities",
    "fidelity",
    "haar_random_state",
]

NORM_ATOL = 1e-10


class SimulationError(ValueError):
    """Raised on malformed circuits or dimension mismatches."""


class Gate(str, Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    H = "h"
    X = "x"
    CNOT = "cnot"
    CZ = "cz"
    CRX = "crx"
    CRY = "cry"
    CRZ = "crz"


ROTATION_GATES = frozenset({Gate.RX, Gate.RY, Gate.RZ, Gate.CRX, Gate.CRY, Gate.CRZ})
CONTROLLED_GATES = frozenset({Gate.CNOT, Gate.CZ, Gate.CRX, Gate.CRY, Gate.CRZ})


@dataclass(frozen=True)
class GateOp:
    """A single gate: one target qubit, optional control, optional parameter slot."""

    kind: Gate
    target: int
    control: Optional[int] = None
    param_slot: Optional[int] = None

    def __post_init__(self):
        if self.kind in ROTATION_GATES:
            if self.param_slot is None:
                raise SimulationError(f"{self.kind.value} gate requires a param_slot")
        elif self.param_slot is not None:
            raise SimulationError(f"{self.kind.value} gate takes no parameter")
        if self.kind in CONTROLLED_GATES:
            if self.control is None:
                raise SimulationError(f"{self.kind.value} gate requires a control qubit")
            if self.control == self.target:
                raise SimulationError("control and target qubits must be distinct")
        elif self.control is not None:
            raise SimulationError(f"{self.kind.value} gate takes no control qubit")


@dataclass(frozen=True)
class CircuitSpec:
    """An ordered gate program over a fixed number of qubits."""

    num_qubits: int
    gates: tuple
    num_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise SimulationError("num_qubits must be >= 1")
        for idx, g in enumerate(self.gates):
            for qubit in (g.target, g.control):
                if qubit is not None and not (0 <= qubit < self.num_qubits):
                    raise SimulationError(
                        f"gate {idx} ({g.kind.value}): qubit {qubit} out of range "
                        f"for {self.num_qubits} qubits"
                    )
            if g.param_slot is not None and not (0 <= g.param_slot < self.num_params):
                raise SimulationError(
                    f"gate {idx} ({g.kind.value}): param_slot {g.param_slot} out of "
                    f"range for {self.num_params} parameters"
                )


@dataclass(frozen=True)
class Statevector:
    """2^q complex amplitudes over the computational basis (qubit 0 = MSB)."""

    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        if self.num_qubits < 1:
            raise SimulationError("num_qubits must be >= 1")
        if amps.shape != (2**self.num_qubits,):
            raise SimulationError(
                f"expected {2**self.num_qubits} amplitudes, got {amps.shape}"
            )

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        amps = np.zeros(2**num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amps: Sequence[complex]) -> "Statevector":
        amps = np.asarray(amps, dtype=np.complex128)
        q = int(round(np.log2(amps.size)))
        return cls(q, amps)


@dataclass(frozen=True)
class ProbVector:
    """Distribution over the 2^q basis states.

    shots is None for exact distributions; a positive integer marks a
    finite-sample estimate (entries are then counts / shots).
    """

    probs: np.ndarray = field(repr=False)
    shots: Optional[int] = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")

    @property
    def exact(self) -> bool:
        return self.shots is None


def _rotation_matrix(kind: Gate, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    if kind in (Gate.RX, Gate.CRX):
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind in (Gate.RY, Gate.CRY):
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    # RZ / CRZ
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def _gate_matrix(op: GateOp, params: np.ndarray) -> np.ndarray:
    """2x2 matrix applied to the target (conditioned on the control, if any)."""
    if op.kind in ROTATION_GATES:
        return _rotation_matrix(op.kind, float(params[op.param_slot]))
    if op.kind == Gate.H:
        return _H
    if op.kind in (Gate.X, Gate.CNOT):
        return _X
    # CZ
    return np.array([[1, 0], [0, -1]], dtype=np.complex128)


def _apply_gate_batch(batch: np.ndarray, op: GateOp, params: np.ndarray, q: int) -> None:
    """Apply one gate in place to a (n, 2^q) batch of statevectors."""
    mat = _gate_matrix(op, params)
    stride = 1 << (q - 1 - op.target)
    idx = np.arange(batch.shape[1])
    mask0 = (idx & stride) == 0
    if op.control is not None:
        cstride = 1 << (q - 1 - op.control)
        mask0 &= (idx & cstride) != 0
    i0 = idx[mask0]
    i1 = i0 + stride
    a0 = batch[:, i0]
    a1 = batch[:, i1]
    batch[:, i0] = mat[0, 0] * a0 + mat[0, 1] * a1
    batch[:, i1] = mat[1, 0] * a0 + mat[1, 1] * a1


def apply_circuit_batch(
    states: np.ndarray, circuit: CircuitSpec, params: Sequence[float]
) -> np.ndarray:
    """Evolve a (n, 2^q) batch of amplitude rows through the circuit.

    Linear in each row; rows need not be normalized. Returns a new array.
    """
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.num_params,):
        raise SimulationError(
            f"expected {circuit.num_params} parameters, got {params.shape}"
        )
    q = circuit.num_qubits
    batch = np.array(states, dtype=np.complex128)
    if batch.ndim != 2 or batch.shape[1] != 2**q:
        raise SimulationError(
            f"batch shape {batch.shape} incompatible with {q}-qubit circuit"
        )
    for op in circuit.gates:
        _apply_gate_batch(batch, op, params, q)
    return batch


def apply_circuit(
    state: Statevector, circuit: CircuitSpec, params: Sequence[float]
) -> Statevector:
    """Evolve a statevector through the circuit; the input is not modified."""
    if state.num_qubits != circuit.num_qubits:
        raise SimulationError(
            f"state has {state.num_qubits} qubits, circuit expects {circuit.num_qubits}"
        )
    out = apply_circuit_batch(state.amplitudes[None, :], circuit, params)[0]
    return Statevector(state.num_qubits, out)


def adjoint_circuit(circuit: CircuitSpec) -> tuple:
    """Return (circuit', sign mask) whose application undoes the original.

    The adjoint reverses gate order and negates rotation angles; all other
    gate kinds used here are self-inverse. The returned sign vector maps the
    original parameter array to the one the adjoint expects.
    """
    signs = np.ones(circuit.num_params)
    for op in circuit.gates:
        if op.param_slot is not None:
            signs[op.param_slot] = -1.0
    rev = CircuitSpec(circuit.num_qubits, tuple(reversed(circuit.gates)), circuit.num_params)
    return rev, signs


def exact_probabilities(state: Statevector) -> ProbVector:
    """Born-rule probabilities |amplitude|^2 of each basis state."""
    return ProbVector(np.abs(state.amplitudes) ** 2, shots=None)


def sample_probabilities(state: Statevector, shots: int, rng_seed: int) -> ProbVector:
    """Finite-shot estimate of the measurement distribution.

    Draws a single multinomial sample of the given size; deterministic for a
    fixed seed.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = exact_probabilities(state).probs
    p = p / p.sum()
    rng = np.random.default_rng(rng_seed)
    counts = rng.multinomial(shots, p)
    return ProbVector(counts / shots, shots=shots)


def fidelity(a: Statevector, b: Statevector) -> float:
    """Squared inner product |<a|b>|^2 of two pure states."""
    if a.num_qubits != b.num_qubits:
        raise SimulationError(
            f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}"
        )
    return float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def haar_random_state(num_qubits: int, rng_seed: int) -> Statevector:
    """A state drawn uniformly from the Haar measure on pure states.

    Normalizing a vector of i.i.d. standard complex Gaussians is exactly
    Haar-uniform on the sphere of unit vectors.
    """
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    rng = np.random.default_rng(rng_seed)
    dim = 2**num_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return Statevector(num_qubits, v / np.linalg.norm(v))
