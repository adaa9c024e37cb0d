"""Full-batch gradient-descent training and the adaptive Hessian learning-rate schedule.

Both trainers operate on a loss problem: any object exposing `n_params`,
`cost(params)`, `gradient(params)` and `hessian(params)`.  ClassifierLoss
wraps a (model, dataset) pair with batched circuit evaluation; synthetic
problems can be injected directly, which is how the schedule's escape
behavior is exercised in tests.

The adaptive schedule walks a strictly decreasing learning-rate set.  When
the cost change stays below `plateau_tol` for `patience` consecutive steps
the next smaller rate takes over; plateauing at the smallest rate triggers
a Hessian verdict: fewer than `neg_eig_threshold` eigenvalues below
`-neg_eig_cut` means converged, otherwise the rate is reset to the largest
value so the next steps overshoot out of the trap (at most `max_restarts`
times).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .derivatives import HALF_PI, ExpectationFn, loss_value  # noqa: F401  (loss_value re-exported for callers)
from .models import Model, ModelSpec, encode_dataset
from .simulator import _apply_gate_amps, expect_z_batch, run_circuit_batch
from .spectral import eig_symmetric

TWO_PI = 2.0 * math.pi

VERDICT_CONVERGED = "converged"
VERDICT_STUCK = "stuck"


class TrainingDivergedError(RuntimeError):
    """Raised when the training cost becomes non-finite."""


@dataclass(frozen=True)
class GDConfig:
    learning_rate: float = 0.5
    max_iters: int = 100
    seed: int = 0
    init_range: tuple[float, float] = (0.0, TWO_PI)
    log_spectrum_every: int = 0  # 0 disables spectrum logging

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.log_spectrum_every < 0:
            raise ValueError("log_spectrum_every must be non-negative")


@dataclass(frozen=True)
class AHLRConfig:
    lr_set: tuple[float, ...] = (0.5, 0.25, 0.1, 0.05, 0.01)
    patience: int = 5
    plateau_tol: float = 1e-4
    neg_eig_cut: float = 1e-6
    neg_eig_threshold: int = 2
    max_restarts: int = 3
    max_iters: int = 100
    seed: int = 0
    init_range: tuple[float, float] = (0.0, TWO_PI)
    log_spectrum_every: int = 0

    def __post_init__(self):
        if len(self.lr_set) == 0:
            raise ValueError("lr_set must not be empty")
        if any(lr <= 0 for lr in self.lr_set):
            raise ValueError("learning rates must be positive")
        if any(a <= b for a, b in zip(self.lr_set, self.lr_set[1:])):
            raise ValueError(f"lr_set must be strictly decreasing, got {self.lr_set}")
        if self.patience < 1:
            raise ValueError(f"patience must be at least 1, got {self.patience}")
        if self.plateau_tol <= 0 or self.neg_eig_cut <= 0:
            raise ValueError("tolerances must be positive")
        if self.neg_eig_threshold < 0 or self.max_restarts < 0:
            raise ValueError("counts must be non-negative")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.log_spectrum_every < 0:
            raise ValueError("log_spectrum_every must be non-negative")


@dataclass
class TraceRecord:
    """One training iteration: cost and learning rate recorded before the update."""

    iteration: int
    cost: float
    learning_rate: float
    params: np.ndarray
    spectrum: tuple[float, ...] | None = None
    restarts: int = 0


@dataclass
class TraceEvent:
    iteration: int
    kind: str  # "lr_decrease" | "restart" | "verdict"
    value: float | str = 0.0


@dataclass
class TrainingTrace:
    records: list[TraceRecord] = field(default_factory=list)
    events: list[TraceEvent] = field(default_factory=list)
    verdict: str | None = None
    trained_params: np.ndarray | None = None

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    @property
    def learning_rates(self) -> np.ndarray:
        return np.array([r.learning_rate for r in self.records])

    def events_of(self, kind: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == kind]

    def spectra(self) -> list[tuple[int, tuple[float, ...]]]:
        return [(r.iteration, r.spectrum) for r in self.records if r.spectrum is not None]


def init_params(spec: ModelSpec, seed: int, init_range: tuple[float, float] = (0.0, TWO_PI)) -> np.ndarray:
    """Seeded uniform draw of the model's parameter vector from [lo, hi)."""
    return _draw_params(spec.n_params, seed, init_range)


def _draw_params(n_params: int, seed: int, init_range: tuple[float, float]) -> np.ndarray:
    lo, hi = init_range
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, n_params)


def gd_step(params, grad, learning_rate: float) -> np.ndarray:
    """One gradient-descent update: theta' = theta - eta * grad, no angle wrapping."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape:
        raise ValueError(f"parameter shape {params.shape} does not match gradient {grad.shape}")
    return params - learning_rate * grad


class _ShiftEvaluator:
    """Batched circuit evaluation with gate-angle shifts, reusing circuit prefixes.

    Shift-rule derivatives re-run the circuit with one or two gate angles
    nudged; every gate before the earliest nudged one evolves identically,
    so the forward pass caches the state entering each parameterized gate
    and shifted evaluations replay only the suffix.  Suffix arithmetic is
    identical to a full run, so results are bit-equal to unshifted-prefix
    full evaluations.
    """

    def __init__(self, circuit, params: np.ndarray, features: np.ndarray, measure_qubit: int):
        self.circuit = circuit
        self.measure_qubit = measure_qubit
        self._plan = []
        for gate in circuit.gates:
            resolved = []
            for angle in gate.angles:
                if angle.kind == "const":
                    resolved.append(angle.value)
                elif angle.kind == "param":
                    resolved.append(float(params[angle.index]))
                else:
                    resolved.append(features[:, angle.index])
            self._plan.append(tuple(resolved))
        self._slot_site = {}
        for slot, positions in enumerate(circuit.param_occurrences()):
            self._slot_site[slot] = positions[0] if positions else None
        checkpoint_gates = {site[0] for site in self._slot_site.values() if site is not None}

        batch = features.shape[0]
        amps = np.zeros((batch, 1 << circuit.n_qubits), dtype=complex)
        amps[:, 0] = 1.0
        self._checkpoints = {}
        for gi, gate in enumerate(circuit.gates):
            if gi in checkpoint_gates:
                self._checkpoints[gi] = amps
            amps = _apply_gate_amps(amps, gate, self._plan[gi], circuit.n_qubits)
        self.central = expect_z_batch(amps, measure_qubit)

    def shifted(self, shifts: dict[int, float]) -> np.ndarray:
        """Expectations with `shifts` = {slot: delta} added to the resolved angles."""
        overrides: dict[int, list] = {}
        for slot, delta in shifts.items():
            site = self._slot_site[slot]
            if site is None:  # slot feeds no gate; shifting it changes nothing
                continue
            gi, ai = site
            angles = overrides.setdefault(gi, list(self._plan[gi]))
            angles[ai] = angles[ai] + delta
        if not overrides:
            return self.central
        start = min(overrides)
        amps = self._checkpoints[start]
        for gi in range(start, len(self.circuit.gates)):
            angles = overrides.get(gi)
            plan = tuple(angles) if angles is not None else self._plan[gi]
            amps = _apply_gate_amps(amps, self.circuit.gates[gi], plan, self.circuit.n_qubits)
        return expect_z_batch(amps, self.measure_qubit)


class ClassifierLoss:
    """Mean squared loss of a model over an encoded dataset, with batched evaluation.

    Predictions are p = (1 + <Z>)/2 against labels in {0, 1}.  Gradients and
    Hessians use the same shift rules as the per-sample reference functions
    in `derivatives`; all samples are evaluated in one batched circuit run
    per shifted parameter vector, and sample averages reduce in index order
    so results are bit-reproducible.
    """

    def __init__(self, model: Model, dataset):
        if model.circuit.has_shared_params:
            raise ValueError("batched loss assumes each parameter slot feeds a single gate")
        self.model = model
        samples = encode_dataset(model.spec, dataset)
        self._features = np.stack([s.angles for s in samples])
        self._labels = np.array([s.label for s in samples], dtype=float)
        self.n_params = model.circuit.n_params
        self.n_samples = len(samples)

    def expectation_fns(self) -> tuple[list[ExpectationFn], np.ndarray]:
        """Per-sample reference expectation functions (unbatched path)."""
        fns = [
            ExpectationFn(self.model.circuit, tuple(row), self.model.spec.measure_qubit)
            for row in self._features
        ]
        return fns, self._labels.astype(int)

    def expectations(self, params) -> np.ndarray:
        amps = run_circuit_batch(self.model.circuit, params, self._features)
        return expect_z_batch(amps, self.model.spec.measure_qubit)

    def _evaluator(self, params) -> _ShiftEvaluator:
        return _ShiftEvaluator(
            self.model.circuit, np.asarray(params, dtype=float), self._features,
            self.model.spec.measure_qubit,
        )

    def cost(self, params) -> float:
        p = 0.5 * (1.0 + self.expectations(params))
        return float(np.mean((self._labels - p) ** 2))

    def _z_jacobian(self, ev: _ShiftEvaluator) -> np.ndarray:
        """(P, S) matrix of d<Z>/d(theta_j) per sample via the shift rule."""
        jac = np.empty((self.n_params, self.n_samples))
        for j in range(self.n_params):
            jac[j] = 0.5 * (ev.shifted({j: +HALF_PI}) - ev.shifted({j: -HALF_PI}))
        return jac

    def gradient(self, params) -> np.ndarray:
        ev = self._evaluator(params)
        p = 0.5 * (1.0 + ev.central)
        grad_p = 0.5 * self._z_jacobian(ev)
        coeff = -2.0 * (self._labels - p)
        return (grad_p * coeff).mean(axis=1)

    def hessian(self, params) -> np.ndarray:
        ev = self._evaluator(params)
        z = ev.central
        p = 0.5 * (1.0 + z)
        grad_p = 0.5 * self._z_jacobian(ev)

        hess_z = np.empty((self.n_params, self.n_params, self.n_samples))
        for j in range(self.n_params):
            up = ev.shifted({j: +math.pi})
            down = ev.shifted({j: -math.pi})
            hess_z[j, j] = 0.25 * (up - 2.0 * z + down)
        for i in range(self.n_params):
            for j in range(i + 1, self.n_params):
                value = (
                    ev.shifted({i: +HALF_PI, j: +HALF_PI})
                    - ev.shifted({i: +HALF_PI, j: -HALF_PI})
                    - ev.shifted({i: -HALF_PI, j: +HALF_PI})
                    + ev.shifted({i: -HALF_PI, j: -HALF_PI})
                )
                hess_z[i, j] = 0.25 * value
                hess_z[j, i] = hess_z[i, j]

        coeff = -2.0 * (self._labels - p)
        chain = (hess_z * 0.5 * coeff).mean(axis=2)
        outer = 2.0 * np.einsum("is,js->ij", grad_p, grad_p) / self.n_samples
        return chain + outer

    def accuracy(self, params) -> float:
        z = self.expectations(params)
        predicted = np.where(z <= self.model.spec.threshold, 0.0, 1.0)
        return float(np.mean(predicted == self._labels))


def _sorted_spectrum(problem, params) -> tuple[float, ...]:
    spectrum = eig_symmetric(problem.hessian(params))
    return tuple(float(v) for v in spectrum.eigenvalues)


def _checked_cost(problem, params, iteration: int) -> float:
    cost = float(problem.cost(params))
    if not math.isfinite(cost):
        raise TrainingDivergedError(f"cost became non-finite at iteration {iteration}: {cost!r}")
    return cost


def train_gd(problem, config: GDConfig, start_params=None) -> TrainingTrace:
    """Fixed-rate gradient descent for `max_iters` full-batch steps.

    Cost is recorded before each update so iteration 0 logs the initial
    loss.  With `log_spectrum_every` = k > 0 the loss Hessian spectrum is
    recorded every k iterations and at the final iteration.
    """
    if start_params is None:
        params = _draw_params(problem.n_params, config.seed, config.init_range)
    else:
        params = np.asarray(start_params, dtype=float).copy()
    trace = TrainingTrace()
    k = config.log_spectrum_every
    for t in range(config.max_iters):
        cost = _checked_cost(problem, params, t)
        spectrum = None
        if k > 0 and (t % k == 0 or t == config.max_iters - 1):
            spectrum = _sorted_spectrum(problem, params)
        trace.records.append(
            TraceRecord(t, cost, config.learning_rate, params.copy(), spectrum, restarts=0)
        )
        grad = problem.gradient(params)
        params = gd_step(params, grad, config.learning_rate)
    trace.trained_params = params
    return trace


def train_ahlr(problem, config: AHLRConfig, start_params=None) -> TrainingTrace:
    """Gradient descent under the adaptive Hessian learning-rate schedule.

    Emits an `lr_decrease` event whenever the plateau rule advances to the
    next smaller rate, a `restart` event when the Hessian verdict at the
    smallest rate reports too many negative eigenvalues, and a `verdict`
    event ("converged" or "stuck") when training stops before `max_iters`.
    """
    if start_params is None:
        params = _draw_params(problem.n_params, config.seed, config.init_range)
    else:
        params = np.asarray(start_params, dtype=float).copy()
    trace = TrainingTrace()
    lr_index = 0
    streak = 0
    restarts = 0
    previous_cost = None
    k = config.log_spectrum_every

    for t in range(config.max_iters):
        cost = _checked_cost(problem, params, t)
        spectrum = None
        if k > 0 and (t % k == 0 or t == config.max_iters - 1):
            spectrum = _sorted_spectrum(problem, params)

        if previous_cost is not None and abs(cost - previous_cost) < config.plateau_tol:
            streak += 1
        elif previous_cost is not None:
            streak = 0
        previous_cost = cost

        stop = False
        if streak >= config.patience:
            if lr_index + 1 < len(config.lr_set):
                lr_index += 1
                streak = 0
                trace.events.append(TraceEvent(t, "lr_decrease", config.lr_set[lr_index]))
            else:
                spectrum = _sorted_spectrum(problem, params)
                negatives = sum(1 for v in spectrum if v < -config.neg_eig_cut)
                if negatives < config.neg_eig_threshold:
                    trace.verdict = VERDICT_CONVERGED
                    trace.events.append(TraceEvent(t, "verdict", VERDICT_CONVERGED))
                    stop = True
                elif restarts < config.max_restarts:
                    restarts += 1
                    lr_index = 0
                    streak = 0
                    trace.events.append(TraceEvent(t, "restart", config.lr_set[0]))
                else:
                    trace.verdict = VERDICT_STUCK
                    trace.events.append(TraceEvent(t, "verdict", VERDICT_STUCK))
                    stop = True

        trace.records.append(
            TraceRecord(t, cost, config.lr_set[lr_index], params.copy(), spectrum, restarts)
        )
        if stop:
            break
        grad = problem.gradient(params)
        params = gd_step(params, grad, config.lr_set[lr_index])

    trace.trained_params = params
    return trace
