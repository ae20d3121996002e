"""Coefficient maps, Jacobians, rank checks, and the 1D closed forms."""

import json
import math

import numpy as np
import pytest

from conftest import random_pauli
from qflex import (
    Bilinear,
    CLAMap,
    Constant,
    FixedValue,
    GateGeometry,
    PauliString,
    PureData,
    ShapeError,
    StateVector,
    ValidationError,
    acls_check,
    apply_rotation,
    bilinear_map,
    closed_form_derivative_1d,
    closed_form_fidelity_1d,
    constant_map,
    data_jacobian,
    diagonal_bilinear_map,
    eval_coefficients,
    fidelity,
    numerical_rank,
    pure_data_map,
    selective_direction_count,
    weight_jacobian,
)
from qflex.clamaps import (
    cla_map_from_json,
    cla_map_to_json,
    normal_sampler,
    uniform_sampler,
)


def paulis(*texts):
    return tuple(PauliString.from_str(t) for t in texts)


GENS3 = paulis("XI", "YI", "ZI")


class TestEvalCoefficients:
    def test_constant_map_returns_thetas(self):
        cmap = constant_map(GENS3)
        theta = np.array([0.3, -0.7, 2.2])
        np.testing.assert_array_equal(eval_coefficients(cmap, theta, np.zeros(0)), theta)

    def test_basis_weight_vectors_pick_inputs(self):
        cmap = bilinear_map(GENS3, d_inp=3)
        w = np.eye(3).reshape(-1)
        x = np.array([0.4, -1.1, 0.9])
        np.testing.assert_allclose(eval_coefficients(cmap, w, x), x, atol=1e-15)

    def test_dot_product(self):
        cmap = bilinear_map(paulis("XI"), d_inp=2)
        got = eval_coefficients(cmap, np.array([0.3, -0.5]), np.array([1.0, 2.0]))
        np.testing.assert_allclose(got, [-0.7], atol=1e-15)

    def test_length_mismatch(self):
        cmap = bilinear_map(GENS3, d_inp=3)
        with pytest.raises(ShapeError):
            eval_coefficients(cmap, np.zeros(2), np.zeros(3))
        with pytest.raises(ShapeError):
            eval_coefficients(cmap, np.zeros(9), np.zeros(4))

    def test_bilinearity(self, rng):
        cmap = bilinear_map(GENS3, d_inp=4)
        w1, w2 = rng.standard_normal((2, cmap.d_w_total))
        x1, x2 = rng.standard_normal((2, 4))
        a, b = 0.37, -1.42
        lhs = eval_coefficients(cmap, a * w1 + b * w2, x1)
        rhs = a * eval_coefficients(cmap, w1, x1) + b * eval_coefficients(cmap, w2, x1)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        lhs = eval_coefficients(cmap, w1, a * x1 + b * x2)
        rhs = a * eval_coefficients(cmap, w1, x1) + b * eval_coefficients(cmap, w1, x2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestJacobians:
    def test_pure_data_weight_jacobian_is_zero(self):
        cmap = pure_data_map(paulis("XII", "IXI", "IIX"), d_inp=3)
        jac = weight_jacobian(cmap, np.array([1.0, 2.0, 3.0]))
        assert jac.shape == (3, 0)
        assert numerical_rank(jac) == 0

    def test_diagonal_bilinear_weight_jacobian(self, rng):
        cmap = diagonal_bilinear_map(GENS3)
        x = rng.standard_normal(3)
        np.testing.assert_allclose(weight_jacobian(cmap, x), np.diag(x), atol=1e-15)

    def test_full_bilinear_zero_input(self):
        cmap = bilinear_map(GENS3, d_inp=3)
        jac = weight_jacobian(cmap, np.zeros(3))
        assert not jac.any()
        assert numerical_rank(jac) == 0

    def test_constant_data_jacobian_is_zero(self):
        cmap = constant_map(GENS3, d_inp=2)
        assert not data_jacobian(cmap, np.zeros(3)).any()

    def test_pure_data_repeats_reach_full_rank(self):
        gens = paulis("XII", "IXI", "IIX", "YII", "IYI", "IIY")
        cmap = pure_data_map(gens, d_inp=3)
        jac = data_jacobian(cmap, np.zeros(0))
        assert numerical_rank(jac) == 3

    def test_diagonal_bilinear_data_jacobian(self, rng):
        cmap = diagonal_bilinear_map(GENS3)
        w = rng.standard_normal(3)
        np.testing.assert_allclose(data_jacobian(cmap, w), np.diag(w), atol=1e-15)

    def test_match_finite_differences(self, rng):
        step = 1e-6
        for _ in range(100):
            n = int(rng.integers(1, 4))
            d_inp = int(rng.integers(1, 5))
            k = int(rng.integers(1, min(6, 4**n)))
            gens, seen = [], set()
            while len(gens) < k:
                g = random_pauli(rng, n)
                if g.labels not in seen:
                    seen.add(g.labels)
                    gens.append(g)
            variant = rng.integers(0, 3)
            if variant == 0:
                cmap = constant_map(gens, d_inp=d_inp)
            elif variant == 1:
                cmap = bilinear_map(gens, d_inp=d_inp)
            else:
                alphas = [
                    Bilinear(j // 2) if j % 2 == 0 else Constant(j // 2)
                    for j in range(k)
                ]
                cmap = CLAMap(tuple(gens), tuple(alphas), d_inp)
            w = rng.standard_normal(cmap.d_w_total)
            x = rng.standard_normal(d_inp)
            jac_w = weight_jacobian(cmap, x)
            jac_x = data_jacobian(cmap, w)
            for i in range(cmap.d_w_total):
                up, down = w.copy(), w.copy()
                up[i] += step
                down[i] -= step
                fd = (
                    eval_coefficients(cmap, up, x) - eval_coefficients(cmap, down, x)
                ) / (2 * step)
                np.testing.assert_allclose(fd, jac_w[:, i], atol=1e-8)
            for i in range(d_inp):
                up, down = x.copy(), x.copy()
                up[i] += step
                down[i] -= step
                fd = (
                    eval_coefficients(cmap, w, up) - eval_coefficients(cmap, w, down)
                ) / (2 * step)
                np.testing.assert_allclose(fd, jac_x[:, i], atol=1e-8)


class TestNumericalRank:
    def test_zero_matrix(self):
        assert numerical_rank(np.zeros((4, 3))) == 0

    def test_identity(self):
        assert numerical_rank(np.eye(3)) == 3

    def test_tiny_singular_value_dropped(self):
        # oracle: the singular values of a diagonal matrix are its
        # absolute entries, so 1e-20 sits far below max(3,3)*eps*2
        matrix = np.diag([1.0, 1e-20, 2.0])
        assert numerical_rank(matrix) == 2
        assert numerical_rank(matrix, abs_tol=1e-30) == 3

    def test_rank_drops_by_one_per_zero_component(self, rng):
        cmap = diagonal_bilinear_map(paulis("XIII", "IXII", "IIXI", "IIIX"))
        x = rng.uniform(0.5, 1.5, size=4)
        assert numerical_rank(weight_jacobian(cmap, x)) == 4
        x[2] = 0.0
        assert numerical_rank(weight_jacobian(cmap, x)) == 3

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            numerical_rank(np.array([[np.nan, 0.0]]))


class TestACLSCheck:
    def test_constant_only_is_rigid_rotation(self):
        cmap = constant_map(GENS3, d_inp=2)
        verdict = acls_check(
            cmap, uniform_sampler(2), normal_sampler(cmap.d_w_total), 200, seed=5
        )
        assert verdict.complete_fraction == 1.0
        assert verdict.selective_fraction == 0.0
        assert verdict.classification is GateGeometry.LEARNABLE_RIGID_ROTATION

    def test_pure_data_is_fixed_deformation(self):
        cmap = pure_data_map(GENS3, d_inp=3)
        verdict = acls_check(
            cmap, uniform_sampler(3), normal_sampler(0), 200, seed=5
        )
        assert verdict.complete_fraction == 0.0
        assert verdict.selective_fraction == 1.0
        assert verdict.classification is GateGeometry.FIXED_DEFORMATION

    def test_bilinear_is_learnable_deformation(self):
        cmap = bilinear_map(GENS3, d_inp=3)
        verdict = acls_check(
            cmap, normal_sampler(3), normal_sampler(cmap.d_w_total), 500, seed=5
        )
        assert verdict.complete_fraction >= 0.999
        assert verdict.selective_fraction >= 0.999
        assert verdict.classification is GateGeometry.LEARNABLE_DEFORMATION

    def test_fixed_gates_only(self):
        cmap = CLAMap(GENS3, tuple(FixedValue(0.5) for _ in GENS3), d_inp=2)
        verdict = acls_check(cmap, uniform_sampler(2), normal_sampler(0), 50, seed=5)
        assert verdict.classification is GateGeometry.FIXED

    def test_deterministic(self):
        cmap = bilinear_map(GENS3, d_inp=3)
        kwargs = dict(
            x_sampler=normal_sampler(3),
            w_sampler=normal_sampler(cmap.d_w_total),
            n_samples=100,
            seed=77,
        )
        assert acls_check(cmap, **kwargs) == acls_check(cmap, **kwargs)

    def test_empty_sample_rejected(self):
        cmap = constant_map(GENS3)
        with pytest.raises(ValidationError):
            acls_check(cmap, normal_sampler(0), normal_sampler(3), 0, seed=1)


class TestSelectiveDirections:
    def test_pure_data_encoder_counts_qubits(self):
        gens = paulis("XII", "IXI", "IIX")
        assert selective_direction_count(pure_data_map(gens, 3)) == 3

    def test_all_axes_hit_the_cap(self):
        gens = paulis("XI", "YI", "ZI", "IX", "IY", "IZ")
        assert selective_direction_count(bilinear_map(gens, 4)) == 6

    def test_constant_directions_do_not_count(self):
        cmap = constant_map(GENS3, d_inp=2)
        assert selective_direction_count(cmap) == 0


class TestClosedForms:
    def test_zero_second_input_freezes_derivative(self):
        for x1 in np.linspace(-math.pi, math.pi, 9):
            for w in np.linspace(-3, 3, 9):
                assert closed_form_derivative_1d(x1, 0.0, w) == 0.0

    def test_zero_weight_reduces_to_encoding_overlap(self):
        for x1, x2 in ((0.4, -1.0), (2.0, 2.5), (-3.0, 0.1)):
            expected = math.cos((x1 - x2) / 2) ** 2
            assert closed_form_fidelity_1d(x1, x2, 0.0) == pytest.approx(expected, abs=1e-15)

    def test_grid_matches_simulator(self):
        sx, sz = PauliString(("X",)), PauliString(("Z",))
        zero = StateVector.basis_state(1)
        for x1 in np.linspace(-math.pi, math.pi, 5):
            for x2 in np.linspace(-math.pi, math.pi, 5):
                for w in np.linspace(-3, 3, 5):
                    s1 = apply_rotation(apply_rotation(zero, sx, x1), sz, w * x1)
                    s2 = apply_rotation(apply_rotation(zero, sx, x2), sz, w * x2)
                    assert fidelity(s1, s2) == pytest.approx(
                        closed_form_fidelity_1d(x1, x2, w), abs=1e-12
                    )


class TestValidation:
    def test_duplicate_generators_rejected(self):
        with pytest.raises(ValidationError):
            constant_map(paulis("XI", "XI"))

    def test_repetition_needs_divisibility(self):
        with pytest.raises(ValidationError):
            pure_data_map(GENS3, d_inp=2)

    def test_direction_budget_enforced(self):
        from qflex import DenseHermitian

        # four pairwise non-proportional Hermitians on one qubit exceed the
        # 4^1 - 1 = 3 independent directions
        mats = (
            np.array([[0, 1], [1, 0]]),
            np.array([[1, 0], [0, -1]]),
            np.array([[0, -1j], [1j, 0]]),
            np.array([[1, 1], [1, -1]]),
        )
        gens = tuple(DenseHermitian(m.astype(complex), support=(1,)) for m in mats)
        with pytest.raises(ValidationError):
            constant_map(gens)

    def test_theta_ordinals_must_be_contiguous(self):
        with pytest.raises(ValidationError):
            CLAMap(GENS3, (Constant(0), Constant(2), Constant(3)), d_inp=0)


class TestSerialization:
    def test_round_trip(self, rng):
        gens = paulis("XZ", "YI")
        cmap = CLAMap(
            gens,
            ((Bilinear(0, input_indices=(1, 2)), Constant(0)), (PureData(0), FixedValue(-0.5))),
            d_inp=3,
        )
        doc = cla_map_to_json(cmap)
        clone = cla_map_from_json(json.loads(json.dumps(doc)))
        assert clone.d_w_total == cmap.d_w_total
        w = rng.standard_normal(cmap.d_w_total)
        x = rng.standard_normal(3)
        np.testing.assert_allclose(
            eval_coefficients(clone, w, x), eval_coefficients(cmap, w, x), atol=1e-15
        )
        np.testing.assert_allclose(weight_jacobian(clone, x), weight_jacobian(cmap, x))
