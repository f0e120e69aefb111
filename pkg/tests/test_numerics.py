import numpy as np
import pytest

from ncjulia import (
    DimensionError,
    PreconditionError,
    SingularMatrixError,
    extrapolate_limit,
    haar_unitary,
    hermitian_part_max_eig,
    hermitian_part_min_eig,
    is_self_adjoint,
    matrix_from_json,
    matrix_to_json,
    min_norm_solve,
    nearest_unitary,
    numerical_rank,
    operator_norm,
)
from ncjulia.errors import ParseError

from conftest import random_matrix


class TestOperatorNorm:
    def test_identity(self):
        assert operator_norm(np.eye(2)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert operator_norm(np.diag([0.5, -0.3])) == pytest.approx(0.5)

    def test_nilpotent(self):
        assert operator_norm([[0, 2], [0, 0]]) == pytest.approx(2.0)

    def test_empty_and_zero(self):
        assert operator_norm(np.zeros((0, 3))) == 0.0
        assert operator_norm(np.zeros((2, 2))) == 0.0

    def test_rejects_nan(self):
        with pytest.raises(PreconditionError):
            operator_norm([[np.nan, 0], [0, 1]])

    def test_unitary_invariance_and_submultiplicativity(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 6))
            m = random_matrix(rng, n)
            u = haar_unitary(n, rng)
            v = haar_unitary(n, rng)
            assert operator_norm(u @ m @ v) == pytest.approx(operator_norm(m), abs=1e-12)
            b = random_matrix(rng, n)
            assert operator_norm(m @ b) <= operator_norm(m) * operator_norm(b) + 1e-12


class TestHermitianPartEigs:
    def test_already_hermitian(self):
        assert hermitian_part_min_eig(np.diag([-1.0, -2.0])) == pytest.approx(-2.0)

    def test_skew(self):
        assert hermitian_part_min_eig([[0, 1], [-1, 0]]) == pytest.approx(0.0)

    def test_derived_2x2(self):
        # hand oracle: herm([[-1,1],[1,-1]]) has char poly (l+1)^2 - 1, eigs {0, -2}
        assert hermitian_part_min_eig([[-1, 1], [1, -1]]) == pytest.approx(-2.0)

    def test_max_is_minus_min_of_negation(self, rng):
        m = random_matrix(rng, 4)
        assert hermitian_part_max_eig(m) == pytest.approx(-hermitian_part_min_eig(-m))

    def test_non_square(self):
        with pytest.raises(DimensionError):
            hermitian_part_min_eig(np.zeros((2, 3)))


class TestIsSelfAdjoint:
    def test_real_diagonal(self):
        assert is_self_adjoint(np.diag([1.0, -1.0]), 1e-12)

    def test_imaginary_offdiagonal(self):
        assert not is_self_adjoint([[0, 1j], [1j, 0]], 1e-12)

    def test_zero(self):
        assert is_self_adjoint(np.zeros((3, 3)), 1e-12)

    def test_non_square(self):
        with pytest.raises(DimensionError):
            is_self_adjoint(np.zeros((2, 3)))


class TestMinNormSolve:
    def test_rank_one_consistent(self):
        # hand oracle: row space of [[.5,.5],[.5,.5]] is span{(1,1)}, and
        # (1,1)/sqrt(2) maps to (1,1)/sqrt(2); minimum-norm solution is itself
        m = np.array([[0.5, 0.5], [0.5, 0.5]])
        b = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
        out = min_norm_solve(m, b)
        np.testing.assert_allclose(out.solution, b, atol=1e-14)
        assert out.residual_norm <= 1e-14
        assert out.consistent

    def test_zero_zero(self):
        out = min_norm_solve(np.zeros((2, 2)), np.zeros((2, 1)))
        np.testing.assert_allclose(out.solution, 0, atol=1e-15)
        assert out.residual_norm == 0.0
        assert out.consistent

    def test_inconsistent(self):
        out = min_norm_solve(np.zeros((2, 2)), np.array([[1.0], [0.0]]))
        np.testing.assert_allclose(out.solution, 0, atol=1e-15)
        assert out.residual_norm == pytest.approx(1.0)
        assert not out.consistent

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            min_norm_solve(np.zeros((2, 2)), np.zeros((3, 1)))

    def test_solution_orthogonal_to_kernel(self, rng):
        for _ in range(30):
            p, q = int(rng.integers(2, 6)), int(rng.integers(2, 6))
            r = int(rng.integers(1, min(p, q)))
            m = random_matrix(rng, p, r) @ random_matrix(rng, r, q)
            b = random_matrix(rng, p, 1)
            out = min_norm_solve(m, b)
            _, _, vh = np.linalg.svd(m)
            kernel = vh.conj().T[:, r:]
            for k in range(kernel.shape[1]):
                assert abs(kernel[:, k].conj() @ out.solution[:, 0]) <= 1e-10


class TestNearestUnitary:
    def test_unitary_fixed(self, rng):
        u = haar_unitary(4, rng)
        np.testing.assert_allclose(nearest_unitary(u), u, atol=1e-12)

    def test_positive_scalar_stripped(self):
        np.testing.assert_allclose(nearest_unitary(2.0 * np.eye(3)), np.eye(3), atol=1e-14)

    def test_positive_diagonal_stripped(self):
        np.testing.assert_allclose(nearest_unitary(np.diag([3.0, 0.5])), np.eye(2), atol=1e-14)

    def test_rank_deficient(self):
        with pytest.raises(SingularMatrixError) as err:
            nearest_unitary(np.diag([1.0, 0.0]))
        assert err.value.smallest_singular_value == pytest.approx(0.0)

    def test_output_unitary(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 6))
            u = nearest_unitary(random_matrix(rng, n) + 2 * np.eye(n))
            assert operator_norm(u.conj().T @ u - np.eye(n)) <= 1e-12


class TestNumericalRank:
    def test_dependent_triple(self):
        e1 = np.array([1.0, 0, 0])
        e2 = np.array([0, 1.0, 0])
        assert numerical_rank([e1, e2, e1 + e2]) == 2

    def test_zero_vector(self):
        assert numerical_rank([np.zeros(3)]) == 0
        assert numerical_rank([]) == 0

    def test_tolerance_collapses_near_duplicates(self):
        v1 = np.array([1.0, 1.0])
        v2 = np.array([1.0, 1.0 + 1e-14])
        assert numerical_rank([v1, v2], tol=1e-10) == 1


class TestExtrapolateLimit:
    def test_constant(self):
        res = extrapolate_limit([(0.1, 3.0), (0.05, 3.0)])
        assert res.value == pytest.approx(3.0)
        assert res.increments == (0.0,)

    def test_first_order_annihilated(self):
        res = extrapolate_limit([(0.1, 1.1), (0.05, 1.05)])
        assert complex(res.value.reshape(())) == pytest.approx(1.0)

    def test_second_order_residual(self):
        # algebra: 2 (t/2)^2 - t^2 = -t^2 / 2
        t = 0.2
        res = extrapolate_limit([(t, t**2), (t / 2, (t / 2) ** 2)])
        assert complex(res.value.reshape(())) == pytest.approx(-(t**2) / 2)

    def test_linear_matrix_recovery(self, rng):
        a = random_matrix(rng, 3)
        b = random_matrix(rng, 3)
        samples = [(t, a + t * b) for t in (0.4, 0.2, 0.1, 0.05)]
        res = extrapolate_limit(samples)
        np.testing.assert_allclose(res.value, a, atol=1e-14)

    def test_too_few_samples(self):
        with pytest.raises(PreconditionError):
            extrapolate_limit([(0.1, 1.0)])

    def test_non_geometric_spacing(self):
        with pytest.raises(PreconditionError):
            extrapolate_limit([(0.1, 1.0), (0.03, 1.0)])

    def test_increasing_t_rejected(self):
        with pytest.raises(PreconditionError):
            extrapolate_limit([(0.05, 1.0), (0.1, 1.0)])


class TestMatrixJson:
    def test_round_trip(self, rng):
        m = random_matrix(rng, 3, 2)
        np.testing.assert_array_equal(matrix_from_json(matrix_to_json(m)), m)

    def test_malformed(self):
        with pytest.raises(ParseError):
            matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0]]})
        with pytest.raises(ParseError):
            matrix_from_json([1, 2, 3])
