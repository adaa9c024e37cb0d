"""The two reference classifier circuits, their feature encodings, and decision rules.

parity4: four qubits, an RX feature map writing each input bit as a 0/pi
rotation, then three variational layers of per-qubit three-angle rotations
followed by a layer-specific CNOT set (layer l entangles qubit q with
qubit (q + l) mod 4), 36 trainable angles total.  Measurement is Z on
qubit 2.

tabular8: eight qubits, two repetitions of [H on every qubit, RY feature
rotations, a CZ ring, per-qubit three-angle rotations], 48 trainable
angles.  Measurement is Z on qubit 0.  Raw features are min/max rescaled
to [-pi, pi]; constant features map to angle 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .simulator import (
    Angle,
    Circuit,
    StateVector,
    cnot,
    cz,
    expect_z,
    h,
    rot3,
    run_circuit,
    rx,
    ry,
    zero_state,
)

PARITY4 = "parity4"
TABULAR8 = "tabular8"


@dataclass(frozen=True)
class ModelSpec:
    """Fixed shape of a classifier model plus its decision threshold."""

    name: str
    n_qubits: int
    n_layers: int
    n_params: int
    measure_qubit: int
    threshold: float = 0.0


PARITY4_SPEC = ModelSpec(PARITY4, n_qubits=4, n_layers=3, n_params=36, measure_qubit=2)
TABULAR8_SPEC = ModelSpec(TABULAR8, n_qubits=8, n_layers=2, n_params=48, measure_qubit=0)

_SPECS = {PARITY4: PARITY4_SPEC, TABULAR8: TABULAR8_SPEC}


@dataclass(frozen=True)
class EncodedSample:
    """A raw feature row together with its rotation angles and binary label."""

    raw: np.ndarray
    angles: np.ndarray
    label: int

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        angles = np.asarray(self.angles, dtype=float)
        if raw.shape != angles.shape:
            raise ValueError("raw features and angles must have the same length")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        raw.setflags(write=False)
        angles.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "angles", angles)


@dataclass(frozen=True)
class Model:
    spec: ModelSpec
    circuit: Circuit


def build_parity_circuit() -> Circuit:
    gates = [rx(q, Angle.feature(q)) for q in range(4)]
    slot = 0
    for layer in range(1, 4):
        for q in range(4):
            gates.append(rot3(q, Angle.param(slot), Angle.param(slot + 1), Angle.param(slot + 2)))
            slot += 3
        for q in range(4):
            gates.append(cnot(q, (q + layer) % 4))
    return Circuit(4, tuple(gates), n_params=slot, n_features=4)


def build_tabular_circuit() -> Circuit:
    gates = []
    slot = 0
    for _rep in range(2):
        for q in range(8):
            gates.append(h(q))
        for q in range(8):
            gates.append(ry(q, Angle.feature(q)))
        for q in range(8):
            gates.append(cz(q, (q + 1) % 8))
        for q in range(8):
            gates.append(rot3(q, Angle.param(slot), Angle.param(slot + 1), Angle.param(slot + 2)))
            slot += 3
    return Circuit(8, tuple(gates), n_params=slot, n_features=8)


def build_model(name: str, threshold: float = 0.0) -> Model:
    if name not in _SPECS:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(_SPECS)}")
    spec = replace(_SPECS[name], threshold=float(threshold))
    circuit = build_parity_circuit() if name == PARITY4 else build_tabular_circuit()
    return Model(spec, circuit)


def parity_label(bits) -> int:
    """XOR of a 4-bit input, given as a string like "1011" or a sequence of 0/1."""
    values = [int(b) for b in bits]
    if len(values) != 4:
        raise ValueError(f"expected exactly 4 bits, got {len(values)}")
    if any(v not in (0, 1) for v in values):
        raise ValueError(f"bits must be 0 or 1, got {values}")
    out = 0
    for v in values:
        out ^= v
    return out


def encode(spec: ModelSpec, raw, stats: tuple | None = None, label: int = 0) -> EncodedSample:
    """Map a raw feature row to rotation angles in [-pi, pi].

    parity4 expects binary features and maps bit b to angle b*pi.  tabular8
    needs `stats` = (per-feature min, per-feature max) and rescales each
    feature affinely onto [-pi, pi]; a constant feature (min == max) maps
    to 0.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (spec.n_qubits,):
        raise ValueError(f"{spec.name} expects {spec.n_qubits} features, got shape {raw.shape}")
    if spec.name == PARITY4:
        if any(v not in (0.0, 1.0) for v in raw):
            raise ValueError(f"{spec.name} expects binary features, got {raw}")
        angles = raw * math.pi
    else:
        if stats is None:
            raise ValueError(f"{spec.name} encoding needs per-feature min/max stats")
        lo = np.asarray(stats[0], dtype=float)
        hi = np.asarray(stats[1], dtype=float)
        if lo.shape != raw.shape or hi.shape != raw.shape:
            raise ValueError("feature stats do not match the feature count")
        span = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            scaled = np.where(span > 0, -math.pi + 2.0 * math.pi * (raw - lo) / span, 0.0)
        angles = np.clip(scaled, -math.pi, math.pi)
    return EncodedSample(raw=raw, angles=angles, label=int(label))


def encode_dataset(spec: ModelSpec, dataset) -> list[EncodedSample]:
    """Encode every row of a dataset (anything with features/labels/feature_min/feature_max)."""
    stats = (dataset.feature_min, dataset.feature_max)
    return [
        encode(spec, row, stats, label=int(y))
        for row, y in zip(dataset.features, dataset.labels)
    ]


def classify(model: Model, params, sample: EncodedSample) -> int:
    """Threshold the measured Z expectation: label 0 when <Z> <= threshold, else 1."""
    state = run_circuit(model.circuit, params, zero_state(model.spec.n_qubits), sample.angles)
    z = expect_z(state, model.spec.measure_qubit)
    return 0 if z <= model.spec.threshold else 1


def state_prep_cost(circuit: Circuit, params, target: StateVector, features=()) -> float:
    """Population outside |0...0> after applying the circuit to the target state.

    Equals 1 - |<0...0| V(params) |target>|^2, i.e. the squared trace
    distance of the evolved state from the all-zeros projector; 0 means the
    circuit maps the target exactly onto |0...0>.
    """
    if target.n_qubits != circuit.n_qubits:
        raise ValueError("target state qubit count does not match circuit")
    out = run_circuit(circuit, params, target, features)
    overlap = abs(out.amplitudes[0]) ** 2
    return float(min(1.0, max(0.0, 1.0 - overlap)))
