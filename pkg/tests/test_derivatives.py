"""Shift-rule derivative tests against closed forms and finite differences."""

import math

import numpy as np
import pytest

from vqckit.derivatives import (
    ExpectationFn,
    fd_gradient,
    fd_hessian,
    gradient_variance_scan,
    loss_gradient,
    loss_hessian,
    loss_value,
    shift_gradient,
    shift_hessian,
)
from vqckit.models import build_parity_circuit, encode, PARITY4_SPEC
from vqckit.simulator import Angle, Circuit, cnot, ry, rz, zero_state

from _factories import random_circuit


def single_ry():
    circuit = Circuit(1, (ry(0, Angle.param(0)),), n_params=1)
    return ExpectationFn(circuit, (), 0)


def parity_fns():
    circuit = build_parity_circuit()
    fns = []
    labels = []
    for index in range(16):
        bits = [(index >> s) & 1 for s in (3, 2, 1, 0)]
        sample = encode(PARITY4_SPEC, [float(b) for b in bits], label=sum(bits) % 2)
        fns.append(ExpectationFn(circuit, tuple(sample.angles), PARITY4_SPEC.measure_qubit))
        labels.append(sample.label)
    return fns, labels


class CountingFn:
    """Plain-callable wrapper that counts evaluations (hides occurrence structure)."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def __call__(self, params):
        self.calls += 1
        return self.inner(params)


class TestShiftGradient:
    def test_ry_at_zero(self):
        np.testing.assert_array_equal(shift_gradient(single_ry(), [0.0]), [0.0])

    def test_ry_closed_form(self):
        grad = shift_gradient(single_ry(), [0.7])
        assert grad[0] == pytest.approx(-math.sin(0.7), abs=1e-12)

    def test_matches_finite_differences_on_random_circuits(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            circuit = random_circuit(rng, n, int(rng.integers(3, 14)), max_params=8)
            f = ExpectationFn(circuit, (), int(rng.integers(n)))
            params = rng.uniform(0, 2 * math.pi, circuit.n_params)
            np.testing.assert_allclose(
                shift_gradient(f, params), fd_gradient(f, params, 1e-5), atol=1e-6
            )

    def test_shared_slot_uses_product_rule(self):
        # One slot feeding two rotations; finite differences see the true partial.
        circuit = Circuit(
            2, (ry(0, Angle.param(0)), cnot(0, 1), ry(1, Angle.param(0))), n_params=1
        )
        f = ExpectationFn(circuit, (), 1)
        params = np.array([0.9])
        np.testing.assert_allclose(
            shift_gradient(f, params), fd_gradient(f, params, 1e-5), atol=1e-6
        )

    def test_evaluation_budget_exactly_2p(self):
        rng = np.random.default_rng(1)
        circuit = random_circuit(rng, 3, 10, max_params=6)
        counted = CountingFn(ExpectationFn(circuit, (), 0))
        params = rng.uniform(0, 2 * math.pi, circuit.n_params)
        shift_gradient(counted, params)
        assert counted.calls == 2 * circuit.n_params


class TestShiftHessian:
    def test_ry_at_zero(self):
        hessian = shift_hessian(single_ry(), [0.0])
        np.testing.assert_allclose(hessian, [[-1.0]], atol=1e-12)

    def test_symmetric_by_construction(self):
        rng = np.random.default_rng(9)
        circuit = random_circuit(rng, 3, 12, max_params=6)
        f = ExpectationFn(circuit, (), 0)
        params = rng.uniform(0, 2 * math.pi, circuit.n_params)
        hessian = shift_hessian(f, params)
        assert np.array_equal(hessian, hessian.T)

    def test_matches_fd_of_shift_gradient(self):
        rng = np.random.default_rng(31)
        circuit = random_circuit(rng, 4, 10, max_params=6)
        f = ExpectationFn(circuit, (), 1)
        params = rng.uniform(0, 2 * math.pi, circuit.n_params)
        hessian = shift_hessian(f, params)
        h = 1e-5
        oracle = np.empty_like(hessian)
        for j in range(circuit.n_params):
            plus = params.copy()
            plus[j] += h
            minus = params.copy()
            minus[j] -= h
            oracle[:, j] = (shift_gradient(f, plus) - shift_gradient(f, minus)) / (2 * h)
        np.testing.assert_allclose(hessian, oracle, atol=1e-5)

    def test_shared_slot_hessian_matches_fd(self):
        circuit = Circuit(
            2, (ry(0, Angle.param(0)), cnot(0, 1), ry(1, Angle.param(0)), rz(1, Angle.param(1))),
            n_params=2,
        )
        f = ExpectationFn(circuit, (), 1)
        params = np.array([0.8, 1.3])
        np.testing.assert_allclose(
            shift_hessian(f, params), fd_hessian(f, params, 1e-4), atol=1e-5
        )

    def test_evaluation_budget(self):
        rng = np.random.default_rng(2)
        circuit = random_circuit(rng, 3, 12, max_params=7)
        counted = CountingFn(ExpectationFn(circuit, (), 0))
        params = rng.uniform(0, 2 * math.pi, circuit.n_params)
        shift_hessian(counted, params)
        p = circuit.n_params
        assert counted.calls == 2 * p * (p - 1) + 2 * p + 1

    def test_zero_parameters(self):
        circuit = Circuit(1, (ry(0, Angle.const(0.4)),), n_params=0)
        f = ExpectationFn(circuit, (), 0)
        assert shift_hessian(f, []).shape == (0, 0)
        assert shift_gradient(f, []).shape == (0,)


class TestLossValue:
    def test_perfect_prediction(self):
        constant = lambda params: 1.0  # noqa: E731
        assert loss_value(constant, np.zeros(0), 1) == 0.0

    def test_maximal_error(self):
        constant = lambda params: -1.0  # noqa: E731
        assert loss_value(constant, np.zeros(0), 1) == 1.0

    def test_midpoint(self):
        constant = lambda params: 0.0  # noqa: E731
        assert loss_value(constant, np.zeros(0), 0) == 0.25

    def test_label_validation(self):
        with pytest.raises(ValueError):
            loss_value(lambda p: 0.0, np.zeros(0), 2)


class TestLossGradient:
    def test_zero_at_perfect_fit(self):
        f = single_ry()
        # theta = 0 gives <Z> = 1, p = 1 == label
        np.testing.assert_array_equal(loss_gradient([f], [1], [0.0]), [0.0])

    def test_matches_fd_of_mean_loss(self):
        fns, labels = parity_fns()
        rng = np.random.default_rng(4)
        params = rng.uniform(0, 2 * math.pi, 36)

        def mean_loss(theta):
            return float(np.mean([(y - 0.5 * (1 + f(theta))) ** 2 for f, y in zip(fns, labels)]))

        np.testing.assert_allclose(
            loss_gradient(fns, labels, params), fd_gradient(mean_loss, params, 1e-5), atol=1e-6
        )

    def test_duplication_invariance(self):
        fns, labels = parity_fns()
        fns, labels = fns[:4], labels[:4]
        rng = np.random.default_rng(8)
        params = rng.uniform(0, 2 * math.pi, 36)
        once = loss_gradient(fns, labels, params)
        twice = loss_gradient(fns + fns, labels + labels, params)
        np.testing.assert_allclose(once, twice, atol=1e-15)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            loss_gradient([], [], np.zeros(3))


class TestLossHessian:
    def test_single_ry_at_perfect_fit(self):
        hessian = loss_hessian([single_ry()], [1], [0.0])
        np.testing.assert_allclose(hessian, [[0.0]], atol=1e-12)

    def test_symmetry(self):
        fns, labels = parity_fns()
        rng = np.random.default_rng(12)
        params = rng.uniform(0, 2 * math.pi, 36)
        hessian = loss_hessian(fns[:3], labels[:3], params)
        assert np.max(np.abs(hessian - hessian.T)) < 1e-10

    def test_matches_fd_of_loss_gradient(self):
        fns, labels = parity_fns()
        fns, labels = fns[:5], labels[:5]
        rng = np.random.default_rng(14)
        params = rng.uniform(0, 2 * math.pi, 36)
        hessian = loss_hessian(fns, labels, params)
        h = 1e-4
        oracle = np.empty_like(hessian)
        for j in (0, 7, 18, 35):  # spot columns, full FD is expensive
            plus = params.copy()
            plus[j] += h
            minus = params.copy()
            minus[j] -= h
            oracle_col = (loss_gradient(fns, labels, plus) - loss_gradient(fns, labels, minus)) / (2 * h)
            np.testing.assert_allclose(hessian[:, j], oracle_col, atol=1e-4)

    def test_two_term_assembly_exact(self):
        # Independent re-assembly from the shift primitives must agree exactly.
        fns, labels = parity_fns()
        fns, labels = fns[:4], labels[:4]
        rng = np.random.default_rng(21)
        params = rng.uniform(0, 2 * math.pi, 36)
        per_sample = []
        for f, y in zip(fns, labels):
            p = 0.5 * (1.0 + f(params))
            grad_p = 0.5 * shift_gradient(f, params)
            hess_p = 0.5 * shift_hessian(f, params)
            per_sample.append(hess_p * (-2.0 * (y - p)) + 2.0 * np.outer(grad_p, grad_p))
        assembled = np.mean(per_sample, axis=0)
        assert np.array_equal(loss_hessian(fns, labels, params), assembled)


class TestFiniteDifferences:
    def test_quadratic_surrogate(self):
        square = lambda theta: float(theta[0] ** 2)  # noqa: E731
        theta = np.array([0.37])
        assert fd_gradient(square, theta, 1e-5)[0] == pytest.approx(2 * 0.37, abs=1e-8)
        assert fd_hessian(square, theta, 1e-4)[0, 0] == pytest.approx(2.0, abs=1e-6)

    def test_closed_form_ry(self):
        grad = fd_gradient(single_ry(), [0.7], 1e-5)
        assert grad[0] == pytest.approx(-math.sin(0.7), abs=1e-6)

    def test_empty_parameter_vector(self):
        assert fd_gradient(lambda p: 1.0, []).shape == (0,)
        assert fd_hessian(lambda p: 1.0, []).shape == (0, 0)

    def test_nonpositive_step_rejected(self):
        with pytest.raises(ValueError):
            fd_gradient(lambda p: 0.0, [0.0], h=0.0)
        with pytest.raises(ValueError):
            fd_hessian(lambda p: 0.0, [0.0], h=-1e-5)


class TestVarianceScan:
    def test_single_qubit_matches_analytic_variance(self):
        out = gradient_variance_scan([1], layers=1, samples=500, seed=3)
        assert out[1] == pytest.approx(0.5, abs=0.1)

    def test_variance_shrinks_with_qubit_count(self):
        out = gradient_variance_scan([2, 6], layers=4, samples=200, seed=19)
        assert out[6] < out[2]

    def test_zero_samples_rejected(self):
        with pytest.raises(ValueError):
            gradient_variance_scan([2], layers=2, samples=0, seed=0)

    def test_resource_bound(self):
        with pytest.raises(ValueError):
            gradient_variance_scan([11], layers=2, samples=100, seed=0)
