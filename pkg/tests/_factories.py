"""Shared builders for randomized circuit tests."""

from __future__ import annotations

import numpy as np

from vqckit.simulator import Angle, Circuit, Gate, cnot, cz, h, rot3, rx, ry, rz, u1

_ROTATIONS = ("RX", "RY", "RZ")


def random_circuit(rng: np.random.Generator, n_qubits: int, depth: int, max_params: int = 20) -> Circuit:
    """Random circuit over the full gate palette with at most `max_params` slots.

    Rotation angles are parameter slots while the budget lasts, constants
    afterwards; U1 angles are always constant.  Always contains at least one
    parameterized gate.
    """
    gates: list[Gate] = []
    slot = 0

    def next_angle():
        nonlocal slot
        if slot < max_params:
            angle = Angle.param(slot)
            slot += 1
            return angle
        return Angle.const(rng.uniform(0, 2 * np.pi))

    for _ in range(depth):
        kind = rng.choice(["rot", "rot", "rot", "rot3", "h", "u1", "two"])
        q = int(rng.integers(n_qubits))
        if kind == "rot":
            which = _ROTATIONS[int(rng.integers(3))]
            maker = {"RX": rx, "RY": ry, "RZ": rz}[which]
            gates.append(maker(q, next_angle()))
        elif kind == "rot3":
            gates.append(rot3(q, next_angle(), next_angle(), next_angle()))
        elif kind == "h":
            gates.append(h(q))
        elif kind == "u1":
            gates.append(u1(q, Angle.const(rng.uniform(0, 2 * np.pi))))
        else:
            if n_qubits < 2:
                gates.append(ry(q, next_angle()))
                continue
            q2 = int(rng.integers(n_qubits - 1))
            if q2 >= q:
                q2 += 1
            gates.append(cnot(q, q2) if rng.random() < 0.5 else cz(q, q2))
    if slot == 0:
        gates.append(ry(int(rng.integers(n_qubits)), Angle.param(0)))
        slot = 1
    return Circuit(n_qubits, tuple(gates), n_params=slot)


def inverse_gate_sequence(gates_and_angles):
    """Inverse of a resolved gate sequence: reversed order, negated angles.

    ROT3(phi, theta, omega) inverts to ROT3(-omega, -theta, -phi); the
    remaining rotations negate their single angle; H/CNOT/CZ are self-inverse.
    """
    inverse = []
    for gate, angles in reversed(gates_and_angles):
        if gate.kind == "ROT3":
            phi, theta, omega = angles
            inverse.append((gate, (-omega, -theta, -phi)))
        elif gate.kind in ("RX", "RY", "RZ", "U1"):
            inverse.append((gate, (-angles[0],)))
        else:
            inverse.append((gate, ()))
    return inverse
