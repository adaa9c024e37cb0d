"""Model circuit construction, encoding, classification and state-prep cost tests."""

import math

import numpy as np
import pytest

from vqckit.models import (
    PARITY4_SPEC,
    TABULAR8_SPEC,
    build_model,
    build_parity_circuit,
    build_tabular_circuit,
    classify,
    encode,
    encode_dataset,
    parity_label,
    state_prep_cost,
)
from vqckit.datasets import gen_parity_dataset
from vqckit.simulator import Angle, Circuit, basis_state, expect_z, ry, run_circuit, zero_state


class TestParityCircuit:
    def test_parameter_slot_count(self):
        assert build_parity_circuit().n_params == 36

    def test_fixed_two_qubit_gate_count(self):
        circuit = build_parity_circuit()
        assert sum(1 for g in circuit.gates if g.kind == "CNOT") == 12

    def test_cnot_structure_differs_per_layer(self):
        circuit = build_parity_circuit()
        layers = []
        current = []
        for gate in circuit.gates:
            if gate.kind == "CNOT":
                current.append((gate.control, gate.target))
                if len(current) == 4:
                    layers.append(tuple(sorted(current)))
                    current = []
        assert len(layers) == 3
        assert len(set(layers)) == 3

    def test_all_zero_parameters_leave_zero_input_fixed(self):
        model = build_model("parity4")
        state = run_circuit(model.circuit, np.zeros(36), zero_state(4), features=[0.0] * 4)
        z = expect_z(state, model.spec.measure_qubit)
        assert 0.5 * (1 + z) == 1.0

    def test_no_shared_slots(self):
        assert not build_parity_circuit().has_shared_params


class TestTabularCircuit:
    def test_parameter_slot_count(self):
        assert build_tabular_circuit().n_params == 48

    def test_qubit_count(self):
        assert build_tabular_circuit().n_qubits == 8

    def test_structure_counts(self):
        circuit = build_tabular_circuit()
        kinds = [g.kind for g in circuit.gates]
        assert kinds.count("H") == 16
        assert kinds.count("RY") == 16
        assert kinds.count("CZ") == 16
        assert kinds.count("ROT3") == 16

    def test_reference_state_reproducible(self):
        params = np.zeros(48)
        features = np.zeros(8)
        first = run_circuit(build_tabular_circuit(), params, zero_state(8), features)
        second = run_circuit(build_tabular_circuit(), params, zero_state(8), features)
        assert np.array_equal(first.amplitudes, second.amplitudes)


class TestParityLabel:
    def test_truth_table_matches_popcount(self):
        for index in range(16):
            bits = format(index, "04b")
            assert parity_label(bits) == bits.count("1") % 2

    def test_examples(self):
        assert parity_label("0000") == 0
        assert parity_label("0001") == 1
        assert parity_label("1011") == 1

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            parity_label("101")
        with pytest.raises(ValueError):
            parity_label("10110")

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            parity_label([0, 1, 2, 0])


class TestEncode:
    def test_parity_bits_to_angles(self):
        sample = encode(PARITY4_SPEC, [1.0, 0.0, 1.0, 1.0], label=1)
        np.testing.assert_array_equal(sample.angles, [math.pi, 0.0, math.pi, math.pi])

    def test_parity_rejects_non_binary(self):
        with pytest.raises(ValueError):
            encode(PARITY4_SPEC, [0.5, 0, 0, 0])

    def test_tabular_midpoint_maps_to_zero(self):
        lo = np.full(8, 10.0)
        hi = np.full(8, 30.0)
        sample = encode(TABULAR8_SPEC, np.full(8, 20.0), (lo, hi))
        np.testing.assert_allclose(sample.angles, np.zeros(8), atol=1e-15)

    def test_tabular_endpoints(self):
        lo = np.zeros(8)
        hi = np.ones(8)
        at_min = encode(TABULAR8_SPEC, np.zeros(8), (lo, hi))
        at_max = encode(TABULAR8_SPEC, np.ones(8), (lo, hi))
        np.testing.assert_allclose(at_min.angles, np.full(8, -math.pi), atol=1e-15)
        np.testing.assert_allclose(at_max.angles, np.full(8, math.pi), atol=1e-15)

    def test_constant_feature_maps_to_zero(self):
        lo = np.zeros(8)
        hi = np.zeros(8)
        sample = encode(TABULAR8_SPEC, np.zeros(8), (lo, hi))
        np.testing.assert_array_equal(sample.angles, np.zeros(8))

    def test_angle_range_invariant(self):
        rng = np.random.default_rng(2)
        values = rng.normal(50, 20, (40, 8))
        lo, hi = values.min(axis=0), values.max(axis=0)
        for row in values:
            sample = encode(TABULAR8_SPEC, row, (lo, hi))
            assert np.all(sample.angles >= -math.pi) and np.all(sample.angles <= math.pi)

    def test_encode_dataset_carries_labels(self):
        dataset = gen_parity_dataset()
        samples = encode_dataset(PARITY4_SPEC, dataset)
        assert [s.label for s in samples] == list(dataset.labels)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            encode(PARITY4_SPEC, [1.0, 0.0])


class TestClassify:
    def test_threshold_rule(self):
        model = build_model("parity4")
        sample = encode(PARITY4_SPEC, [0.0] * 4, label=0)
        # all-zero parameters give <Z2> = +1 on input 0000 -> label 1
        assert classify(model, np.zeros(36), sample) == 1

    def test_tie_goes_to_label_zero(self):
        # <Z> equal to the threshold must classify as 0 (tie broken by <=)
        rng = np.random.default_rng(3)
        sample = encode(PARITY4_SPEC, [0.0, 1.0, 1.0, 0.0], label=0)
        params = rng.uniform(0, 2 * math.pi, 36)
        model = build_model("parity4")
        state = run_circuit(model.circuit, params, zero_state(4), sample.angles)
        z = expect_z(state, model.spec.measure_qubit)
        tied = build_model("parity4", threshold=z)
        assert classify(tied, params, sample) == 0
        just_below = build_model("parity4", threshold=z - 1e-9)
        assert classify(just_below, params, sample) == 1

    def test_negative_and_positive_sides(self):
        model = build_model("parity4")
        assert (0 if -0.8 <= model.spec.threshold else 1) == 0
        assert (0 if 0.3 <= model.spec.threshold else 1) == 1

    def test_invariant_under_same_side_perturbation(self):
        rng = np.random.default_rng(6)
        model = build_model("parity4")
        sample = encode(PARITY4_SPEC, [1.0, 1.0, 0.0, 0.0], label=0)
        params = rng.uniform(0, 2 * math.pi, 36)
        state = run_circuit(model.circuit, params, zero_state(4), sample.angles)
        z = expect_z(state, model.spec.measure_qubit)
        label = classify(model, params, sample)
        # nudge parameters by much less than the margin to the threshold
        nudge = rng.uniform(-1e-4, 1e-4, 36) * abs(z)
        assert classify(model, params + nudge, sample) == label


class TestStatePrepCost:
    def test_identity_on_zero_target(self):
        circuit = Circuit(2, (), n_params=0)
        assert state_prep_cost(circuit, [], zero_state(2)) == 0.0

    def test_identity_on_orthogonal_target(self):
        circuit = Circuit(2, (), n_params=0)
        assert state_prep_cost(circuit, [], basis_state(2, "10")) == 1.0

    def test_ry_half_pi(self):
        circuit = Circuit(1, (ry(0, Angle.param(0)),), n_params=1)
        cost = state_prep_cost(circuit, [math.pi / 2], zero_state(1))
        assert cost == pytest.approx(0.5, abs=1e-12)

    def test_dimension_mismatch(self):
        circuit = Circuit(2, (), n_params=0)
        with pytest.raises(ValueError):
            state_prep_cost(circuit, [], zero_state(1))
