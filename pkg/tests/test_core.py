"""Statevector primitives against dense matrix-exponential oracles."""

import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_pauli, random_state
from qflex import (
    DenseHermitian,
    PauliString,
    ShapeError,
    StateVector,
    ValidationError,
    apply_rotation,
    eigendecompose,
    expectation,
    fidelity,
    fidelity_weight_derivative,
    fubini_study_distance,
)
from qflex.core import generator_matrix

SX = PauliString(("X",))
SZ = PauliString(("Z",))
ZERO = StateVector.basis_state(1)


def oracle_rotation(g, angle, amplitudes):
    """Dense-matrix route: expm((i/2) angle G) @ psi."""
    return scipy.linalg.expm(0.5j * angle * generator_matrix(g)) @ amplitudes


def encoded(x):
    return apply_rotation(ZERO, SX, x)


class TestStateVector:
    def test_basis_state(self):
        s = StateVector.basis_state(3, index=5)
        assert s.dim == 8
        assert s.amplitudes[5] == 1.0

    def test_norm_enforced(self):
        with pytest.raises(ValidationError):
            StateVector(1, np.array([1.0, 1.0]))

    def test_length_enforced(self):
        with pytest.raises(ShapeError):
            StateVector(2, np.array([1.0, 0.0]))

    def test_amplitudes_immutable(self):
        s = StateVector.basis_state(1)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0.0


class TestPauliString:
    def test_identity_rejected(self):
        with pytest.raises(ValidationError):
            PauliString(("I", "I"))

    def test_bad_label_rejected(self):
        with pytest.raises(ValidationError):
            PauliString(("X", "Q"))

    def test_support(self):
        assert PauliString(("I", "Y", "I", "Z")).support == (2, 4)


class TestApplyRotation:
    def test_zero_angle_is_identity(self, rng):
        for n in (1, 2, 3):
            s = random_state(rng, n)
            out = apply_rotation(s, random_pauli(rng, n), 0.0)
            np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-15)

    def test_x_pi_flips_basis_state(self):
        out = apply_rotation(ZERO, SX, math.pi)
        np.testing.assert_allclose(np.abs(out.amplitudes), [0.0, 1.0], atol=1e-15)

    def test_x_rotation_fidelity_grid(self):
        # 5x5 grid: fidelity of two X-encoded states must equal cos^2((x-x')/2),
        # checked against the 2x2 matrix-exponential oracle
        grid = np.linspace(-math.pi, math.pi, 5, endpoint=False) + math.pi / 5
        for x in grid:
            for xp in grid:
                s1 = apply_rotation(ZERO, SX, x)
                s2_oracle = oracle_rotation(SX, xp, ZERO.amplitudes)
                overlap = np.vdot(s1.amplitudes, s2_oracle)
                assert abs(abs(overlap) ** 2 - math.cos((x - xp) / 2) ** 2) < 1e-12
                assert fidelity(s1, encoded(xp)) == pytest.approx(
                    math.cos((x - xp) / 2) ** 2, abs=1e-12
                )

    def test_matches_dense_exponential(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 4))
            s = random_state(rng, n)
            g = random_pauli(rng, n)
            angle = rng.uniform(-6, 6)
            np.testing.assert_allclose(
                apply_rotation(s, g, angle).amplitudes,
                oracle_rotation(g, angle, s.amplitudes),
                atol=1e-12,
            )

    def test_dense_generator_matches_exponential(self, rng):
        matrix = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        matrix = matrix + matrix.conj().T
        g = DenseHermitian(matrix=matrix, support=(1, 3))
        s = random_state(rng, 3)
        got = apply_rotation(s, g, 0.813).amplitudes
        want = scipy.linalg.expm(0.5j * 0.813 * generator_matrix(g, 3)) @ s.amplitudes
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_input_state_unmodified(self, rng):
        s = random_state(rng, 2)
        before = s.amplitudes.copy()
        apply_rotation(s, random_pauli(rng, 2), 1.0)
        np.testing.assert_array_equal(s.amplitudes, before)

    def test_unitarity_random(self, rng):
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 4))
            s = random_state(rng, n)
            out = apply_rotation(s, random_pauli(rng, n), rng.uniform(-8, 8))
            worst = max(worst, abs(np.linalg.norm(out.amplitudes) - 1.0))
        assert worst <= 1e-12

    def test_group_property(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 4))
            s = random_state(rng, n)
            g = random_pauli(rng, n)
            a, b = rng.uniform(-3, 3, size=2)
            via_two = apply_rotation(apply_rotation(s, g, a), g, b)
            direct = apply_rotation(s, g, a + b)
            np.testing.assert_allclose(via_two.amplitudes, direct.amplitudes, atol=1e-12)

    def test_shared_rotation_is_isometry(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 4))
            s1, s2 = random_state(rng, n), random_state(rng, n)
            g = random_pauli(rng, n)
            angle = rng.uniform(-4, 4)
            before = fidelity(s1, s2)
            after = fidelity(apply_rotation(s1, g, angle), apply_rotation(s2, g, angle))
            assert abs(after - before) <= 1e-12

    def test_sign_convention_invariance(self):
        # flipping the sign of every rotation angle leaves the two-state
        # fidelity of the 1D circuit unchanged
        for x1, x2, w in ((1.0, 0.5, 2.0), (-2.2, 0.7, -1.3), (3.0, -3.0, 0.4)):
            plus = fidelity(
                apply_rotation(encoded(x1), SZ, w * x1),
                apply_rotation(encoded(x2), SZ, w * x2),
            )
            minus = fidelity(
                apply_rotation(apply_rotation(ZERO, SX, -x1), SZ, -w * x1),
                apply_rotation(apply_rotation(ZERO, SX, -x2), SZ, -w * x2),
            )
            assert abs(plus - minus) <= 1e-12

    def test_errors(self, rng):
        s = random_state(rng, 2)
        with pytest.raises(ShapeError):
            apply_rotation(s, PauliString(("X",)), 1.0)
        with pytest.raises(ShapeError):
            apply_rotation(s, DenseHermitian(np.eye(2), support=(3,)), 1.0)
        with pytest.raises(ValidationError):
            apply_rotation(s, PauliString(("X", "I")), math.inf)
        with pytest.raises(ValidationError):
            DenseHermitian(np.array([[0.0, 1.0], [0.0, 0.0]]), support=(1,))


class TestFidelity:
    def test_self_fidelity(self, rng):
        s = random_state(rng, 2)
        assert fidelity(s, s) == pytest.approx(1.0, abs=1e-14)

    def test_orthogonal_states(self):
        assert fidelity(StateVector.basis_state(1, 0), StateVector.basis_state(1, 1)) == 0.0

    def test_symmetry(self, rng):
        s1, s2 = random_state(rng, 3), random_state(rng, 3)
        assert fidelity(s1, s2) == pytest.approx(fidelity(s2, s1), abs=1e-15)

    def test_one_dim_circuit_value(self):
        # oracle: the closed form of the X-encode / coupled-Z-rotate circuit
        x1, x2, w = 1.0, 0.5, 2.0
        expected = (
            math.cos(w * (x1 - x2) / 2) ** 2 * math.cos((x1 - x2) / 2) ** 2
            + math.sin(w * (x1 - x2) / 2) ** 2 * math.cos((x1 + x2) / 2) ** 2
        )
        got = fidelity(
            apply_rotation(encoded(x1), SZ, w * x1),
            apply_rotation(encoded(x2), SZ, w * x2),
        )
        assert got == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ShapeError):
            fidelity(random_state(rng, 1), random_state(rng, 2))


class TestFubiniStudy:
    def test_zero_distance(self, rng):
        s = random_state(rng, 2)
        assert fubini_study_distance(s, s) == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal_distance(self):
        d = fubini_study_distance(StateVector.basis_state(1, 0), StateVector.basis_state(1, 1))
        assert d == pytest.approx(math.pi / 2, abs=1e-14)

    def test_monotone_in_fidelity(self):
        def state_with_fidelity(f):
            theta = math.acos(math.sqrt(f))
            return StateVector(1, np.array([math.cos(theta), math.sin(theta)]))

        distances = [
            fubini_study_distance(ZERO, state_with_fidelity(f)) for f in (0.9, 0.5, 0.1)
        ]
        assert distances[0] < distances[1] < distances[2]


class TestExpectation:
    def test_basis_states(self):
        assert expectation(StateVector.basis_state(1, 0), SZ) == pytest.approx(1.0)
        assert expectation(StateVector.basis_state(1, 1), SZ) == pytest.approx(-1.0)

    def test_x_rotated_z_expectation(self):
        # oracle: 2x2 exponential gives <Z> = cos(x)
        for x in (math.pi / 2, 0.3, -1.9):
            amps = oracle_rotation(SX, x, ZERO.amplitudes)
            oracle = float(np.real(np.vdot(amps, np.diag([1, -1]) @ amps)))
            assert expectation(encoded(x), SZ) == pytest.approx(oracle, abs=1e-12)
            assert expectation(encoded(x), SZ) == pytest.approx(math.cos(x), abs=1e-12)

    def test_length_mismatch(self, rng):
        with pytest.raises(ShapeError):
            expectation(random_state(rng, 2), SZ)


class TestEigendecompose:
    def test_sigma_z(self):
        system = eigendecompose(SZ)
        np.testing.assert_allclose(sorted(system.eigenvalues), [-1.0, 1.0], atol=1e-14)

    def test_xx(self):
        system = eigendecompose(PauliString(("X", "X")))
        oracle = np.linalg.eigvalsh(np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]))
        np.testing.assert_allclose(np.sort(system.eigenvalues), oracle, atol=1e-12)
        np.testing.assert_allclose(np.sort(system.eigenvalues), [-1, -1, 1, 1], atol=1e-12)

    def test_cnot_generator_spectrum(self):
        from qflex import cnot_generator

        matrix = generator_matrix(cnot_generator())
        oracle = np.linalg.eigvalsh(matrix)
        system = eigendecompose(cnot_generator())
        np.testing.assert_allclose(np.sort(system.eigenvalues), oracle, atol=1e-12)
        np.testing.assert_allclose(np.sort(system.eigenvalues), [0, 0, 0, 4], atol=1e-12)

    def test_reconstruction_and_orthonormality(self, rng):
        g = random_pauli(rng, 3)
        system = eigendecompose(g)
        v = system.eigenvectors
        np.testing.assert_allclose(v.conj().T @ v, np.eye(8), atol=1e-10)
        np.testing.assert_allclose(
            (v * system.eigenvalues) @ v.conj().T, generator_matrix(g), atol=1e-10
        )


class TestFidelityWeightDerivative:
    def test_single_eigenvector_support_is_flat(self):
        # psi2 = |0> lies in a single eigenspace of Z, so the angle cannot
        # move the fidelity
        psi1 = encoded(1.3)
        psi2 = StateVector.basis_state(1, 0)
        assert fidelity_weight_derivative(psi1, psi2, SZ, 0.8, 1.7) == pytest.approx(
            0.0, abs=1e-14
        )

    def test_one_dim_circuit_value(self):
        x1, x2, w = 1.0, 0.5, 0.7
        expected = (
            -(x1 - x2) / 2 * math.sin(w * (x1 - x2)) * math.sin(x1) * math.sin(x2)
        )
        got = fidelity_weight_derivative(
            encoded(x1), encoded(x2), SZ, w * (x1 - x2), x1 - x2
        )
        assert got == pytest.approx(expected, abs=1e-12)

    def test_matches_finite_differences(self, rng):
        step = 1e-5
        for _ in range(100):
            n = int(rng.integers(1, 4))
            psi1, psi2 = random_state(rng, n), random_state(rng, n)
            g = random_pauli(rng, n)
            delta_alpha = rng.uniform(-3, 3)
            slope = rng.uniform(-2, 2)
            got = fidelity_weight_derivative(psi1, psi2, g, delta_alpha, slope)

            def fid_at(w):
                rotated = apply_rotation(psi2, g, delta_alpha + slope * w)
                return fidelity(psi1, rotated)

            fd = (fid_at(step) - fid_at(-step)) / (2 * step)
            assert abs(got - fd) <= max(1e-6, 1e-5 * abs(fd))
