"""Circuit builders, count formulas, and the worked two-qubit examples."""

import json
import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_state
from qflex import (
    Bilinear,
    Constant,
    FixedValue,
    GateGeometry,
    PauliString,
    PureData,
    StateVector,
    ValidationError,
    acls_check,
    apply_ising_block,
    apply_rotation,
    apply_slots,
    build_ansatz,
    build_layer,
    cnot_generator,
    count_report,
    data_upload_block,
    entangler_block,
    fidelity,
    from_slots,
    ising_block,
    k_se,
    numerical_rank,
    rotation_block,
    weight_jacobian,
)
from qflex.ansatz import ACLS, PDR, AnsatzSpec, GateSlot, ansatz_from_json, ansatz_to_json, collapsed_coefficients
from qflex.clamaps import CLAMap, normal_sampler
from qflex.core import generator_matrix


class TestBlocks:
    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_rotation_block_layout(self, n):
        slots = rotation_block(n)
        assert len(slots) == 3 * n
        for qubit in range(1, n + 1):
            base = 3 * (qubit - 1)
            for offset, axis in enumerate(("X", "Y", "Z")):
                g = slots[base + offset].generator
                assert g.labels[qubit - 1] == axis
                assert g.support == (qubit,)

    @pytest.mark.parametrize("n,count", [(2, 3), (3, 9), (5, 30)])
    def test_entangler_block_count(self, n, count):
        assert len(entangler_block(n)) == count

    def test_entangler_pair_order(self):
        slots = entangler_block(3)
        pairs = [slot.generator.support for slot in slots]
        assert pairs == [(1, 2)] * 3 + [(1, 3)] * 3 + [(2, 3)] * 3
        axes = [slot.generator.labels[slot.generator.support[0] - 1] for slot in slots]
        assert axes == ["X", "Y", "Z"] * 3

    def test_entangler_needs_two_qubits(self):
        with pytest.raises(ValidationError):
            entangler_block(1)

    @pytest.mark.parametrize("n", [1, 6, 8])
    def test_data_upload_block(self, n):
        slots = data_upload_block(n)
        assert len(slots) == n
        for i, slot in enumerate(slots):
            assert slot.generator.labels[i] == "X"
            assert slot.alpha == PureData(i)


class TestBuildLayer:
    def test_pdr_layer_n6(self):
        layer = build_layer(PDR, 6, 6)
        assert len(layer) == 6 + 63
        thetas = [s for s in layer if isinstance(s.alpha, Constant)]
        assert len(thetas) == 63
        encoders = [s for s in layer if isinstance(s.alpha, PureData)]
        assert len(encoders) == 6
        # encoder acts on the state before the tunable block
        assert all(s.position < 6 for s in encoders)

    def test_acls_layer_n2_d6(self):
        layer = build_layer(ACLS, 2, 6)
        assert len(layer) == 18
        bilinears = [s for s in layer if isinstance(s.alpha, Bilinear)]
        assert len(bilinears) == 9
        cmap = from_slots(layer, d_inp=6)
        assert cmap.d_w_total == 9 * 6 + 9 == 63

    def test_acls_layer_n5_d8(self):
        assert len(build_layer(ACLS, 5, 8)) == 90

    def test_pdr_requires_matching_input_dim(self):
        with pytest.raises(ValidationError):
            build_layer(PDR, 4, 6)

    def test_layer_unitarity(self, rng):
        for kind, n, d_inp in ((PDR, 3, 3), (ACLS, 2, 5)):
            layer = build_layer(kind, n, d_inp)
            cmap = from_slots(layer, d_inp)
            w = rng.standard_normal(cmap.d_w_total)
            x = rng.uniform(-1, 1, d_inp)
            out = apply_slots(random_state(rng, n), layer, d_inp, w, x)
            assert abs(np.linalg.norm(out.amplitudes) - 1.0) <= 1e-11


class TestCountReport:
    @pytest.mark.parametrize("n,expected", [(2, 9), (5, 45), (6, 63)])
    def test_k_se_values(self, n, expected):
        assert k_se(n) == expected

    def test_hypersphere_configuration(self):
        acls = count_report(ACLS, 2, 6, 1)
        pdr = count_report(PDR, 6, 6, 1)
        assert acls.weights_per_layer == pdr.weights_per_layer == 63
        assert acls.gates_per_layer == 18
        assert pdr.gates_per_layer == 69
        assert acls.gates_per_layer / pdr.gates_per_layer == 18 / 69

    def test_eight_feature_configuration(self):
        acls = count_report(ACLS, 5, 8, 1)
        pdr = count_report(PDR, 8, 8, 1)
        assert acls.weights_per_layer / pdr.weights_per_layer == 3.75
        assert acls.gates_per_layer == 90
        assert pdr.gates_per_layer == 116
        assert abs(acls.gates_per_layer / pdr.gates_per_layer - 0.776) < 5e-4

    def test_fifteen_feature_configuration(self):
        acls = count_report(ACLS, 5, 15, 1)
        pdr = count_report(PDR, 15, 15, 1)
        assert acls.weights_per_layer / pdr.weights_per_layer == 2.0
        assert acls.gates_per_layer / pdr.gates_per_layer == 90 / 375 == 0.24

    @pytest.mark.parametrize("n", range(1, 17))
    def test_formulas_match_slot_lists(self, n):
        assert len(rotation_block(n)) + (len(entangler_block(n)) if n >= 2 else 0) == k_se(n)
        assert len(build_layer(ACLS, n, 3)) == count_report(ACLS, n, 3, 1).gates_per_layer
        assert len(build_layer(PDR, n, n)) == count_report(PDR, n, n, 1).gates_per_layer
        report = count_report(ACLS, n, 3, 4)
        assert report.total_gates == 4 * report.gates_per_layer
        assert report.readout_weights == n


class TestGeometry:
    def test_bias_block_is_rigid(self, rng):
        # the data-independent tunable block moves both states identically,
        # leaving every pairwise fidelity unchanged
        layer = build_layer(ACLS, 2, 4)
        bias = [s for s in layer if isinstance(s.alpha, Constant)]
        bias = [GateSlot(s.generator, s.alpha, i) for i, s in enumerate(bias)]
        cmap = from_slots(bias, 4, reindex=True)
        for _ in range(10):
            s1, s2 = random_state(rng, 2), random_state(rng, 2)
            before = fidelity(s1, s2)
            for _ in range(5):
                w = rng.uniform(-math.pi, math.pi, cmap.d_w_total)
                after = fidelity(
                    apply_slots(s1, bias, 4, w, np.zeros(4)),
                    apply_slots(s2, bias, 4, w, np.zeros(4)),
                )
                assert abs(after - before) <= 1e-12

    def test_acls_encoder_passes_rank_checks(self):
        layer = build_layer(ACLS, 2, 6)
        encoder = [s for s in layer if isinstance(s.alpha, Bilinear)]
        cmap = from_slots(encoder, 6, reindex=True)
        verdict = acls_check(
            cmap, normal_sampler(6), normal_sampler(cmap.d_w_total), 300, seed=9
        )
        assert verdict.complete_fraction >= 0.99
        assert verdict.selective_fraction >= 0.99
        assert verdict.classification is GateGeometry.LEARNABLE_DEFORMATION

    def test_entangler_adjoint_relation(self, rng):
        # the three Ising generators of one pair commute, so the adjoint
        # only needs the pair blocks replayed in reverse with negated angles
        for a, b in (("XX", "YY"), ("XX", "ZZ"), ("YY", "ZZ")):
            ma = generator_matrix(PauliString.from_str(a))
            mb = generator_matrix(PauliString.from_str(b))
            assert np.allclose(ma @ mb, mb @ ma)
        slots = entangler_block(3)
        bound = [GateSlot(s.generator, Constant(i), i) for i, s in enumerate(slots)]
        w = rng.uniform(-2, 2, len(bound))
        state = random_state(rng, 3)
        forward = apply_slots(state, bound, 0, w, np.zeros(0))
        inverse = [
            GateSlot(s.generator, Constant(len(bound) - 1 - i), i)
            for i, s in enumerate(reversed(bound))
        ]
        restored = apply_slots(forward, inverse, 0, -w, np.zeros(0))
        np.testing.assert_allclose(restored.amplitudes, state.amplitudes, atol=1e-12)


class TestIsingBlock:
    def test_zero_weights_is_identity(self, rng):
        s = random_state(rng, 2)
        out = apply_ising_block(s, 0.0, 0.0, 0.0)
        np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-15)

    def test_application_order_matches_product(self, rng):
        # oracle: S = expm((i/2) w1 XX) expm((i/2) w2 YY) expm((i/2) w3 ZZ)
        w1, w2, w3 = 0.7, -1.1, 0.4
        xx = generator_matrix(PauliString.from_str("XX"))
        yy = generator_matrix(PauliString.from_str("YY"))
        zz = generator_matrix(PauliString.from_str("ZZ"))
        product = (
            scipy.linalg.expm(0.5j * w1 * xx)
            @ scipy.linalg.expm(0.5j * w2 * yy)
            @ scipy.linalg.expm(0.5j * w3 * zz)
        )
        s = random_state(rng, 2)
        np.testing.assert_allclose(
            apply_ising_block(s, w1, w2, w3).amplitudes,
            product @ s.amplitudes,
            atol=1e-12,
        )

    def test_repeated_block_coefficients_add(self, rng):
        w = rng.uniform(-2, 2, 3)
        w_prime = rng.uniform(-2, 2, 3)
        twice = ising_block() + [
            GateSlot(s.generator, Constant(s.alpha.theta_index + 3), s.position + 3)
            for s in ising_block()
        ]
        gens, coeffs = collapsed_coefficients(
            twice, d_inp=0, w=np.concatenate([w, w_prime]), x=np.zeros(0)
        )
        assert len(gens) == 3
        single_gens, single = collapsed_coefficients(
            ising_block(), d_inp=0, w=w + w_prime, x=np.zeros(0)
        )
        np.testing.assert_array_equal(coeffs, single)
        by_label = {str(g): c for g, c in zip(gens, coeffs)}
        expected = dict(zip(("XX", "YY", "ZZ"), w + w_prime))
        for label, value in expected.items():
            assert by_label[label] == value


class TestCnotGenerator:
    def test_exponential_is_cnot_up_to_phase(self):
        matrix = generator_matrix(cnot_generator())
        unitary = scipy.linalg.expm(-0.5j * (math.pi / 2) * matrix)
        cnot = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        phase = unitary[0, 0]
        assert abs(abs(phase) - 1.0) <= 1e-12
        np.testing.assert_allclose(unitary / phase, cnot, atol=1e-12)

    def test_spectrum(self):
        # oracle: dense eigensolver on the Pauli-basis expansion
        eye, sx, sz = np.eye(2), np.array([[0, 1], [1, 0]]), np.diag([1.0, -1.0])
        dense = np.kron(eye, eye) - np.kron(eye, sx) - np.kron(sz, eye) + np.kron(sz, sx)
        oracle = np.linalg.eigvalsh(dense)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(generator_matrix(cnot_generator())), oracle, atol=1e-12
        )
        np.testing.assert_allclose(oracle, [0, 0, 0, 4], atol=1e-12)

    def test_fixed_term_does_not_add_tunable_rank(self, rng):
        base = from_slots(ising_block(), d_inp=0)
        with_gamma = CLAMap(
            base.generators + (cnot_generator(),),
            base.alphas + ((FixedValue(-math.pi / 2),),),
            d_inp=0,
        )
        x = np.zeros(0)
        assert numerical_rank(weight_jacobian(with_gamma, x)) == numerical_rank(
            weight_jacobian(base, x)
        )


class TestAnsatzSpec:
    def test_round_trip(self, rng):
        spec = build_ansatz(ACLS, 2, 5, 1, 2)
        doc = json.loads(json.dumps(ansatz_to_json(spec)))
        clone = ansatz_from_json(doc)
        assert clone.kind == spec.kind
        assert clone.layer_weight_widths == spec.layer_weight_widths
        w = rng.standard_normal(spec.layer_weight_widths[0])
        x = rng.uniform(-1, 1, 5)
        s = random_state(rng, 2)
        np.testing.assert_allclose(
            apply_slots(s, clone.layers[0], 5, w, x).amplitudes,
            apply_slots(s, spec.layers[0], 5, w, x).amplitudes,
            atol=1e-14,
        )

    def test_counts_validated(self):
        layer = build_layer(ACLS, 2, 3)
        with pytest.raises(Exception):
            AnsatzSpec(2, 3, 1, 1, ACLS, layers=(tuple(layer[:-1]),))

    def test_qubit_partition_requires_divisibility(self):
        with pytest.raises(ValidationError):
            build_ansatz(ACLS, 5, 4, 2, 1)
