"""Dense statevector simulation of small parameterized quantum circuits.

Amplitude ordering: basis index b is read with qubit 0 as the most
significant bit, so the basis state |q0 q1 ... q_{n-1}> sits at index
sum(q_k << (n-1-k)).  Global phase is never normalized away; every
observable quantity exposed here is phase-invariant.

All operations are pure functions of their inputs.  StateVector, Gate and
Circuit are immutable values and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 12

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_H_MATRIX = np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex)

_ANGLE_COUNTS = {"RX": 1, "RY": 1, "RZ": 1, "U1": 1, "ROT3": 3, "H": 0, "CNOT": 0, "CZ": 0}
_TWO_QUBIT_KINDS = ("CNOT", "CZ")


@dataclass(frozen=True)
class Angle:
    """One gate angle: a trainable parameter slot, a per-sample feature slot, or a constant."""

    kind: str  # "param" | "feature" | "const"
    index: int = 0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("param", "feature", "const"):
            raise ValueError(f"unknown angle kind {self.kind!r}")
        if self.kind != "const" and self.index < 0:
            raise ValueError("angle slot index must be non-negative")

    @staticmethod
    def param(index: int) -> "Angle":
        return Angle("param", index=int(index))

    @staticmethod
    def feature(index: int) -> "Angle":
        return Angle("feature", index=int(index))

    @staticmethod
    def const(value: float) -> "Angle":
        return Angle("const", value=float(value))


def _as_angle(value) -> Angle:
    return value if isinstance(value, Angle) else Angle.const(value)


@dataclass(frozen=True)
class Gate:
    """A single circuit element.

    ROT3 carries exactly three angles (phi, theta, omega) and implements
    RZ(omega) RY(theta) RZ(phi); RX/RY/RZ/U1 carry one angle; H/CNOT/CZ none.
    U1 applies a fixed phase and is never trainable, so its angle may not be
    bound to a parameter slot.
    """

    kind: str
    target: int
    control: int | None = None
    angles: tuple[Angle, ...] = ()

    def __post_init__(self):
        if self.kind not in _ANGLE_COUNTS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        expected = _ANGLE_COUNTS[self.kind]
        if len(self.angles) != expected:
            raise ValueError(f"{self.kind} takes {expected} angle(s), got {len(self.angles)}")
        if (self.control is not None) != (self.kind in _TWO_QUBIT_KINDS):
            raise ValueError(f"{self.kind}: control qubit is only valid for CNOT/CZ")
        if self.control is not None and self.control == self.target:
            raise ValueError("control and target must differ")
        if self.target < 0 or (self.control is not None and self.control < 0):
            raise ValueError("qubit indices must be non-negative")
        if self.kind == "U1" and any(a.kind == "param" for a in self.angles):
            raise ValueError("U1 is a fixed phase gate; its angle cannot be a parameter slot")

    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)


def rx(target: int, angle) -> Gate:
    return Gate("RX", target, angles=(_as_angle(angle),))


def ry(target: int, angle) -> Gate:
    return Gate("RY", target, angles=(_as_angle(angle),))


def rz(target: int, angle) -> Gate:
    return Gate("RZ", target, angles=(_as_angle(angle),))


def u1(target: int, angle) -> Gate:
    return Gate("U1", target, angles=(_as_angle(angle),))


def rot3(target: int, phi, theta, omega) -> Gate:
    return Gate("ROT3", target, angles=(_as_angle(phi), _as_angle(theta), _as_angle(omega)))


def h(target: int) -> Gate:
    return Gate("H", target)


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", target, control=control)


def cz(control: int, target: int) -> Gate:
    return Gate("CZ", target, control=control)


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list with parameter-slot and feature-slot bindings.

    Evaluation is deterministic: identical (params, features, input state)
    produce bit-identical output amplitudes.
    """

    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int
    n_features: int = 0

    def __post_init__(self):
        if not (1 <= self.n_qubits <= MAX_QUBITS):
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        if self.n_params < 0 or self.n_features < 0:
            raise ValueError("slot counts must be non-negative")
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            for q in gate.qubits():
                if q >= self.n_qubits:
                    raise ValueError(f"gate {gate.kind} touches qubit {q}, circuit has {self.n_qubits}")
            for angle in gate.angles:
                if angle.kind == "param" and angle.index >= self.n_params:
                    raise ValueError(f"parameter slot {angle.index} out of range ({self.n_params} slots)")
                if angle.kind == "feature" and angle.index >= self.n_features:
                    raise ValueError(f"feature slot {angle.index} out of range ({self.n_features} slots)")

    def param_occurrences(self) -> list[list[tuple[int, int]]]:
        """Per parameter slot, the (gate_index, angle_index) positions that read it."""
        occ: list[list[tuple[int, int]]] = [[] for _ in range(self.n_params)]
        for gi, gate in enumerate(self.gates):
            for ai, angle in enumerate(gate.angles):
                if angle.kind == "param":
                    occ[angle.index].append((gi, ai))
        return occ

    @property
    def has_shared_params(self) -> bool:
        return any(len(positions) > 1 for positions in self.param_occurrences())


@dataclass(frozen=True)
class StateVector:
    """2^n complex amplitudes of an n-qubit pure state (unit norm)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not (1 <= self.n_qubits <= MAX_QUBITS):
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def zero_state(n_qubits: int) -> StateVector:
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def basis_state(n_qubits: int, bits) -> StateVector:
    """Computational basis state from an integer index or a bitstring like "1011"."""
    if isinstance(bits, str):
        if len(bits) != n_qubits or any(b not in "01" for b in bits):
            raise ValueError(f"expected a {n_qubits}-bit string, got {bits!r}")
        index = int(bits, 2)
    else:
        index = int(bits)
    if not (0 <= index < (1 << n_qubits)):
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


# --- gate application engine -------------------------------------------------
#
# The engine works on batches of amplitude rows (B, 2^n).  Single-state
# entry points wrap a batch of one so both paths share the same arithmetic.


def _matrix2(a, b, c, d) -> np.ndarray:
    """Assemble a (..., 2, 2) matrix from entries that may be scalars or (B,) arrays."""
    a, b, c, d = np.broadcast_arrays(
        np.asarray(a, dtype=complex), np.asarray(b, dtype=complex),
        np.asarray(c, dtype=complex), np.asarray(d, dtype=complex),
    )
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def gate_matrix(kind: str, angles=()) -> np.ndarray:
    """2x2 matrix of a single-qubit gate; angle entries may be scalars or (B,) arrays."""
    if kind == "H":
        return _H_MATRIX
    if kind == "RX":
        (theta,) = angles
        half = np.asarray(theta, dtype=float) / 2.0
        c, s = np.cos(half), np.sin(half)
        return _matrix2(c, -1j * s, -1j * s, c)
    if kind == "RY":
        (theta,) = angles
        half = np.asarray(theta, dtype=float) / 2.0
        c, s = np.cos(half), np.sin(half)
        return _matrix2(c, -s, s, c)
    if kind == "RZ":
        (theta,) = angles
        phase = np.exp(-0.5j * np.asarray(theta, dtype=float))
        return _matrix2(phase, 0.0, 0.0, np.conj(phase))
    if kind == "U1":
        (lam,) = angles
        phase = np.exp(1j * np.asarray(lam, dtype=float))
        return _matrix2(np.ones_like(phase), 0.0, 0.0, phase)
    if kind == "ROT3":
        phi, theta, omega = (np.asarray(a, dtype=float) for a in angles)
        c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
        return _matrix2(
            np.exp(-0.5j * (phi + omega)) * c,
            -np.exp(0.5j * (phi - omega)) * s,
            np.exp(-0.5j * (phi - omega)) * s,
            np.exp(0.5j * (phi + omega)) * c,
        )
    raise ValueError(f"{kind} has no single-qubit matrix")


def _apply_single_qubit(amps: np.ndarray, mat: np.ndarray, target: int, n: int) -> np.ndarray:
    batch = amps.shape[0]
    pre, post = 1 << target, 1 << (n - 1 - target)
    psi = amps.reshape(batch, pre, 2, post)
    if mat.ndim == 2:
        out = np.einsum("xy,bpyq->bpxq", mat, psi)
    else:
        out = np.einsum("bxy,bpyq->bpxq", mat, psi)
    return out.reshape(batch, 1 << n)


def _apply_gate_amps(amps: np.ndarray, gate: Gate, angles, n: int) -> np.ndarray:
    if gate.kind == "CNOT":
        idx = np.arange(1 << n)
        cmask = 1 << (n - 1 - gate.control)
        tmask = 1 << (n - 1 - gate.target)
        perm = np.where(idx & cmask, idx ^ tmask, idx)
        return amps[:, perm]
    if gate.kind == "CZ":
        idx = np.arange(1 << n)
        m1 = 1 << (n - 1 - gate.control)
        m2 = 1 << (n - 1 - gate.target)
        sign = np.where((idx & m1 != 0) & (idx & m2 != 0), -1.0, 1.0)
        return amps * sign
    return _apply_single_qubit(amps, gate_matrix(gate.kind, angles), gate.target, n)


def apply_gate(state: StateVector, gate: Gate, angles: Sequence[float] = ()) -> StateVector:
    """Apply one gate with fully resolved angles; norm is preserved within 1e-10."""
    expected = _ANGLE_COUNTS[gate.kind]
    if len(angles) != expected:
        raise ValueError(f"{gate.kind} takes {expected} angle(s), got {len(angles)}")
    for q in gate.qubits():
        if q >= state.n_qubits:
            raise ValueError(f"qubit {q} out of range for {state.n_qubits}-qubit state")
    amps = _apply_gate_amps(state.amplitudes[np.newaxis, :], gate, tuple(float(a) for a in angles), state.n_qubits)
    return StateVector(state.n_qubits, amps[0])


def _resolve_single(gate: Gate, params: np.ndarray, features: np.ndarray) -> tuple[float, ...]:
    out = []
    for angle in gate.angles:
        if angle.kind == "const":
            out.append(angle.value)
        elif angle.kind == "param":
            out.append(float(params[angle.index]))
        else:
            out.append(float(features[angle.index]))
    return tuple(out)


def run_circuit(
    circuit: Circuit,
    params: Sequence[float],
    input_state: StateVector,
    features: Sequence[float] = (),
    angle_offsets: dict[tuple[int, int], float] | None = None,
) -> StateVector:
    """Left-to-right application of all gates with slots resolved from `params`/`features`.

    `angle_offsets` maps (gate_index, angle_index) to an additive shift of the
    resolved angle; it exists for occurrence-level parameter-shift evaluation.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got shape {params.shape}")
    features = np.asarray(features, dtype=float)
    if features.shape != (circuit.n_features,):
        raise ValueError(f"expected {circuit.n_features} features, got shape {features.shape}")
    if input_state.n_qubits != circuit.n_qubits:
        raise ValueError("input state qubit count does not match circuit")

    amps = input_state.amplitudes[np.newaxis, :]
    for gi, gate in enumerate(circuit.gates):
        angles = _resolve_single(gate, params, features)
        if angle_offsets:
            angles = tuple(a + angle_offsets.get((gi, ai), 0.0) for ai, a in enumerate(angles))
        amps = _apply_gate_amps(amps, gate, angles, circuit.n_qubits)
    return StateVector(circuit.n_qubits, amps[0])


def run_circuit_batch(
    circuit: Circuit,
    params: Sequence[float],
    features: np.ndarray,
    initial_amplitudes: np.ndarray | None = None,
) -> np.ndarray:
    """Run one circuit on a batch of feature rows, starting from |0...0> per row.

    Returns raw (B, 2^n) amplitudes.  Trainable parameters are shared across
    the batch; only feature slots vary per row.  This is the performance path
    behind dataset-level losses; it shares the gate engine with run_circuit.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got shape {params.shape}")
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != circuit.n_features:
        raise ValueError(f"expected feature rows of width {circuit.n_features}, got shape {features.shape}")
    batch = features.shape[0]
    dim = 1 << circuit.n_qubits
    if initial_amplitudes is None:
        amps = np.zeros((batch, dim), dtype=complex)
        amps[:, 0] = 1.0
    else:
        amps = np.array(initial_amplitudes, dtype=complex)
        if amps.shape == (dim,):
            amps = np.tile(amps, (batch, 1))
        if amps.shape != (batch, dim):
            raise ValueError(f"initial amplitudes shape {amps.shape} does not match ({batch}, {dim})")

    for gate in circuit.gates:
        angles = []
        for angle in gate.angles:
            if angle.kind == "const":
                angles.append(angle.value)
            elif angle.kind == "param":
                angles.append(float(params[angle.index]))
            else:
                angles.append(features[:, angle.index])
        amps = _apply_gate_amps(amps, gate, tuple(angles), circuit.n_qubits)
    return amps


def expect_z(state: StateVector, qubit: int) -> float:
    """Exact Pauli-Z expectation on one qubit (no sampling); always in [-1, 1]."""
    if not (0 <= qubit < state.n_qubits):
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")
    value = float(expect_z_batch(state.amplitudes[np.newaxis, :], qubit)[0])
    return value


def expect_z_batch(amps: np.ndarray, qubit: int) -> np.ndarray:
    """Pauli-Z expectations for a (B, 2^n) amplitude batch."""
    dim = amps.shape[1]
    n = dim.bit_length() - 1
    if not (0 <= qubit < n):
        raise ValueError(f"qubit {qubit} out of range for {n}-qubit batch")
    idx = np.arange(dim)
    signs = 1.0 - 2.0 * ((idx >> (n - 1 - qubit)) & 1)
    values = (np.abs(amps) ** 2 * signs).sum(axis=1)
    return np.clip(values, -1.0, 1.0)
