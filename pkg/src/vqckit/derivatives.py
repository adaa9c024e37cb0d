"""Analytic derivatives of circuit expectations and of the squared classification loss.

Gradients use the exact shift rule for Pauli-generated rotations: entry j is
half the difference of the expectation evaluated at theta_j +/- pi/2 (two
circuit runs per parameter).  Hessians use the four-term double shift for
off-diagonal entries and the collapsed pi-shift form on the diagonal, so a
P-parameter Hessian costs 2P(P-1) + 2P + 1 circuit runs.

A slot that feeds several gates is differentiated occurrence by occurrence
and summed (product rule); the paper-style circuits built in `models` never
share slots, in which case the slot-level and occurrence-level rules agree.

Central finite differences (`fd_gradient`/`fd_hessian`, truncation O(h^2))
are provided as an independent oracle and never share code with the shift
rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .simulator import Angle, Circuit, StateVector, cnot, expect_z, run_circuit, ry, rz, zero_state

HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class ExpectationFn:
    """Z expectation on one qubit of a circuit run on a fixed encoded input.

    Calling it at a parameter vector returns a value in [-1, 1].  `features`
    holds the per-sample feature-map angles; `input_state` defaults to
    |0...0>.
    """

    circuit: Circuit
    features: tuple[float, ...] = ()
    measure_qubit: int = 0
    input_state: StateVector | None = None

    def __call__(self, params) -> float:
        state = self.input_state if self.input_state is not None else zero_state(self.circuit.n_qubits)
        out = run_circuit(self.circuit, params, state, self.features)
        return expect_z(out, self.measure_qubit)

    def occurrence_counts(self) -> list[int]:
        return [len(positions) for positions in self.circuit.param_occurrences()]

    def eval_shifted(self, params, shifts: Sequence[tuple[int, int, float]]) -> float:
        """Evaluate with angle shifts applied to individual slot occurrences.

        `shifts` entries are (slot, occurrence_index, delta).
        """
        occurrences = self.circuit.param_occurrences()
        offsets: dict[tuple[int, int], float] = {}
        for slot, k, delta in shifts:
            position = occurrences[slot][k]
            offsets[position] = offsets.get(position, 0.0) + delta
        state = self.input_state if self.input_state is not None else zero_state(self.circuit.n_qubits)
        out = run_circuit(self.circuit, params, state, self.features, angle_offsets=offsets)
        return expect_z(out, self.measure_qubit)


def _occurrence_counts(f, n_params: int) -> list[int]:
    counts_fn = getattr(f, "occurrence_counts", None)
    if counts_fn is None:
        return [1] * n_params
    counts = list(counts_fn())
    if len(counts) != n_params:
        raise ValueError(f"parameter count mismatch: vector has {n_params}, function reports {len(counts)}")
    return counts


def _eval_shifted(f, params: np.ndarray, shifts) -> float:
    eval_fn = getattr(f, "eval_shifted", None)
    if eval_fn is not None:
        return float(eval_fn(params, shifts))
    # Plain callables carry no occurrence structure; shift the slot directly.
    shifted = params.copy()
    for slot, _k, delta in shifts:
        shifted[slot] += delta
    return float(f(shifted))


def shift_gradient(f, params) -> np.ndarray:
    """Exact shift-rule gradient of a circuit expectation: 2 runs per occurrence."""
    params = np.asarray(params, dtype=float)
    n_params = params.size
    counts = _occurrence_counts(f, n_params)
    grad = np.zeros(n_params)
    for j in range(n_params):
        total = 0.0
        for k in range(counts[j]):
            plus = _eval_shifted(f, params, [(j, k, +HALF_PI)])
            minus = _eval_shifted(f, params, [(j, k, -HALF_PI)])
            total += 0.5 * (plus - minus)
        grad[j] = total
    return grad


def _four_term(f, params, i, k, j, m) -> float:
    pp = _eval_shifted(f, params, [(i, k, +HALF_PI), (j, m, +HALF_PI)])
    pm = _eval_shifted(f, params, [(i, k, +HALF_PI), (j, m, -HALF_PI)])
    mp = _eval_shifted(f, params, [(i, k, -HALF_PI), (j, m, +HALF_PI)])
    mm = _eval_shifted(f, params, [(i, k, -HALF_PI), (j, m, -HALF_PI)])
    return 0.25 * (pp - pm - mp + mm)


def shift_hessian(f, params) -> np.ndarray:
    """Double-shift Hessian of a circuit expectation; symmetric by construction.

    The diagonal substitutes i = j into the double-shift formula, collapsing
    to (f(theta_j + pi) - 2 f(theta) + f(theta_j - pi)) / 4 and sharing one
    central evaluation across all diagonal entries.
    """
    params = np.asarray(params, dtype=float)
    n_params = params.size
    hessian = np.zeros((n_params, n_params))
    if n_params == 0:
        return hessian
    counts = _occurrence_counts(f, n_params)
    center = _eval_shifted(f, params, [])
    for j in range(n_params):
        acc = 0.0
        for k in range(counts[j]):
            up = _eval_shifted(f, params, [(j, k, +math.pi)])
            down = _eval_shifted(f, params, [(j, k, -math.pi)])
            acc += 0.25 * (up - 2.0 * center + down)
        for k in range(counts[j]):
            for m in range(k + 1, counts[j]):
                acc += 2.0 * _four_term(f, params, j, k, j, m)
        hessian[j, j] = acc
    for i in range(n_params):
        for j in range(i + 1, n_params):
            acc = 0.0
            for k in range(counts[i]):
                for m in range(counts[j]):
                    acc += _four_term(f, params, i, k, j, m)
            hessian[i, j] = acc
            hessian[j, i] = acc
    return hessian


# --- squared loss over labelled samples ---------------------------------------
#
# Predictions are rescaled to p = (1 + <Z>) / 2 so each sample loss
# (y - p)^2 lies in [0, 1] with labels in {0, 1}; the loss derivatives stay
# the literal chain-rule factors c' = -2(y - p), c'' = 2.


def prediction(f, params) -> float:
    return 0.5 * (1.0 + float(f(np.asarray(params, dtype=float))))


def loss_value(f, params, label) -> float:
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    p = prediction(f, params)
    return (label - p) ** 2


def _check_batch(fns, labels):
    if len(fns) == 0:
        raise ValueError("dataset is empty")
    if len(fns) != len(labels):
        raise ValueError(f"{len(fns)} expectation functions vs {len(labels)} labels")
    for label in labels:
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label!r}")


def loss_gradient(fns: Sequence, labels: Sequence[int], params) -> np.ndarray:
    """Gradient of the mean squared loss over (function, label) pairs."""
    _check_batch(fns, labels)
    params = np.asarray(params, dtype=float)
    per_sample = []
    for f, y in zip(fns, labels):
        p = prediction(f, params)
        grad_p = 0.5 * shift_gradient(f, params)
        per_sample.append(-2.0 * (y - p) * grad_p)
    return np.mean(per_sample, axis=0)


def loss_hessian(fns: Sequence, labels: Sequence[int], params) -> np.ndarray:
    """Hessian of the mean squared loss, assembled by applying the chain rule twice.

    Per sample: H = H_p * c'(p) + (grad_p)(grad_p)^T * c''(p) with
    c' = -2(y - p) and c'' = 2, then averaged with equal weights in index
    order so results are bit-reproducible.
    """
    _check_batch(fns, labels)
    params = np.asarray(params, dtype=float)
    per_sample = []
    for f, y in zip(fns, labels):
        p = prediction(f, params)
        grad_p = 0.5 * shift_gradient(f, params)
        hess_p = 0.5 * shift_hessian(f, params)
        per_sample.append(hess_p * (-2.0 * (y - p)) + 2.0 * np.outer(grad_p, grad_p))
    return np.mean(per_sample, axis=0)


# --- finite-difference oracle --------------------------------------------------


def fd_gradient(f: Callable, params, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient, truncation error O(h^2)."""
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    params = np.asarray(params, dtype=float)
    grad = np.zeros(params.size)
    for j in range(params.size):
        plus = params.copy()
        plus[j] += h
        minus = params.copy()
        minus[j] -= h
        grad[j] = (float(f(plus)) - float(f(minus))) / (2.0 * h)
    return grad


def fd_hessian(f: Callable, params, h: float = 1e-5) -> np.ndarray:
    """Central-difference Hessian, truncation error O(h^2)."""
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    params = np.asarray(params, dtype=float)
    n_params = params.size
    hessian = np.zeros((n_params, n_params))
    if n_params == 0:
        return hessian
    center = float(f(params.copy()))
    for j in range(n_params):
        plus = params.copy()
        plus[j] += h
        minus = params.copy()
        minus[j] -= h
        hessian[j, j] = (float(f(plus)) - 2.0 * center + float(f(minus))) / (h * h)
    for i in range(n_params):
        for j in range(i + 1, n_params):
            value = 0.0
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                point = params.copy()
                point[i] += si * h
                point[j] += sj * h
                value += si * sj * float(f(point))
            hessian[i, j] = value / (4.0 * h * h)
            hessian[j, i] = hessian[i, j]
    return hessian


# --- barren-plateau variance scan ----------------------------------------------


def _scan_ansatz(n_qubits: int, layers: int) -> Circuit:
    """Hardware-efficient ansatz for the variance scan: RY+RZ per qubit, CNOT ring."""
    gates = []
    slot = 0
    for _layer in range(layers):
        for q in range(n_qubits):
            gates.append(ry(q, Angle.param(slot)))
            slot += 1
        for q in range(n_qubits):
            gates.append(rz(q, Angle.param(slot)))
            slot += 1
        if n_qubits >= 2:
            for q in range(n_qubits - 1):
                gates.append(cnot(q, q + 1))
            if n_qubits > 2:
                gates.append(cnot(n_qubits - 1, 0))
    return Circuit(n_qubits, tuple(gates), n_params=slot)


def gradient_variance_scan(
    qubit_counts: Sequence[int],
    layers: int = 4,
    samples: int = 200,
    seed: int = 0,
) -> dict[int, float]:
    """Empirical variance of the first gradient entry over random parameter draws.

    For each qubit count a fixed RY/RZ + CNOT-ring ansatz is built and
    `samples` parameter vectors are drawn uniformly from [0, 2*pi); the
    reported number is the variance of d<Z_0>/d(theta_1).  At least ~100
    samples are needed for a stable estimate.
    """
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    if layers < 1:
        raise ValueError(f"layers must be positive, got {layers}")
    for n in qubit_counts:
        if not (1 <= n <= 10):
            raise ValueError(f"qubit count {n} exceeds the scan resource bound (1..10)")
    rng = np.random.default_rng(seed)
    out: dict[int, float] = {}
    for n in qubit_counts:
        circuit = _scan_ansatz(n, layers)
        f = ExpectationFn(circuit, (), measure_qubit=0)
        grads = np.empty(samples)
        for s in range(samples):
            theta = rng.uniform(0.0, 2.0 * math.pi, circuit.n_params)
            plus = theta.copy()
            plus[0] += HALF_PI
            minus = theta.copy()
            minus[0] -= HALF_PI
            grads[s] = 0.5 * (f(plus) - f(minus))
        out[n] = float(np.var(grads))
    return out
