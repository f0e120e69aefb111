import numpy as np
import pytest

from ncjulia import (
    DimensionError,
    MatrixTuple,
    NcFunctionHandle,
    PreconditionError,
    Realization,
    direct_sum,
    eval_delta,
    eval_phi,
    eval_phi_neumann,
    eval_u,
    get_fixture,
    in_G_delta,
    model_residual,
    operator_norm,
    perturb_realization,
    polydisk_delta,
    random_interior_point,
    random_realization,
    realization_from_json,
    realization_to_json,
    similarity,
)
from ncjulia.errors import ParseError
from ncjulia.realization import NearSingularResolventWarning

from conftest import near_identity, random_tuple


@pytest.fixture
def h1():
    return get_fixture("example-h1").handle


def scalars(*zs):
    return MatrixTuple.from_scalars(zs)


class TestRealizationType:
    def test_isometry_enforced(self, rng):
        r = random_realization(2, 2, seed=1)
        bad = r.D + 0.05 * np.ones_like(r.D)
        with pytest.raises(PreconditionError):
            Realization(dim_E=2, J=2, A=r.A, B=r.B, C=r.C, D=bad)

    def test_shapes_enforced(self):
        with pytest.raises(DimensionError):
            Realization(dim_E=1, J=2, A=np.zeros((1, 1)), B=np.zeros((1, 2)),
                        C=np.zeros((3, 1)), D=np.zeros((2, 2)))

    def test_handle_requires_matching_J(self):
        r = random_realization(1, 3, seed=0)
        with pytest.raises(DimensionError):
            NcFunctionHandle(realization=r, delta=polydisk_delta(2))


class TestTensorLayout:
    def test_kronecker_order_pinned(self, rng):
        """E slowest, then C^J, then C^n fastest.

        Applies the two operator factors to a reshaped (m, J, n) tensor with
        explicit index contractions and compares against the Kronecker
        matrices used in evaluation.
        """
        m, j, n, d = 2, 2, 2, 2
        r = random_realization(m, j, seed=3)
        delta = polydisk_delta(d)
        x = random_tuple(rng, d, n)
        big = eval_delta(delta, x)

        v = rng.standard_normal(m * j * n) + 1j * rng.standard_normal(m * j * n)
        tensor = v.reshape(m, j, n)

        # (I_m kron Delta): act on (j, n) as a (Jn) x (Jn) matrix, e untouched
        big_t = big.reshape(j, n, j, n)
        step1 = np.einsum("JiKl,eKl->eJi", big_t, tensor)
        # (D kron I_n): act on (e, j) as an (mJ) x (mJ) matrix, i untouched
        d_t = np.asarray(r.D).reshape(m, j, m, j)
        step2 = np.einsum("eJfK,fKi->eJi", d_t, step1)

        op = np.kron(r.D, np.eye(n)) @ np.kron(np.eye(m), big)
        np.testing.assert_allclose(op @ v, step2.reshape(-1), atol=1e-12)


class TestExampleEvaluation:
    def test_u_at_origin_is_C(self, h1):
        u = eval_u(h1, scalars(0.0, 0.0))
        np.testing.assert_allclose(u, h1.realization.C, atol=1e-14)

    def test_u_norm_one_along_diagonal(self, h1):
        # D C = 0 for this colligation, so u(r, r) = C for every r
        for r in (0.1, 0.5, 0.9):
            u = eval_u(h1, scalars(r, r))
            assert operator_norm(u) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_phi_at_origin_is_A(self, h1):
        assert eval_phi(h1, scalars(0.0, 0.0))[0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_phi_derived_value(self, h1):
        # hand 2x2 solve: phi(0.5, 0.3) = 5/12
        assert eval_phi(h1, scalars(0.5, 0.3))[0, 0] == pytest.approx(5.0 / 12.0, abs=1e-12)

    def test_equal_arguments_collapse(self, h1, rng):
        z = 0.7 * near_identity(rng, 3, 0.2)
        z /= max(1.0, 1.1 * np.linalg.norm(z, 2))
        x = MatrixTuple((z, z))
        np.testing.assert_allclose(eval_phi(h1, x), z, atol=1e-10)

    def test_interior_precondition(self, h1):
        with pytest.raises(PreconditionError):
            eval_u(h1, scalars(1.0, 0.0))
        with pytest.raises(PreconditionError):
            eval_phi(h1, scalars(1.5, 0.0))

    def test_near_singular_warning(self, h1):
        r = 1.0 - 1e-13
        with pytest.warns(NearSingularResolventWarning):
            eval_u(h1, scalars(r, r))


class TestNeumann:
    def test_exact_at_origin(self, h1):
        res = eval_phi_neumann(h1, scalars(0.0, 0.0), terms=0)
        assert res.value[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert res.contraction_factor == 0.0

    def test_agreement_within_bound(self, h1, rng):
        for _ in range(20):
            x = random_tuple(rng, 2, 2, max_norm=0.9)
            direct = eval_phi(h1, x)
            res = eval_phi_neumann(h1, x, terms=200)
            assert operator_norm(direct - res.value) <= res.truncation_bound + 1e-10

    def test_agreement_with_larger_model_space(self, rng):
        # dim_E > 1 exercises the full Kronecker layout in both paths
        delta = polydisk_delta(2)
        for k in range(10):
            r = random_realization(3, 2, seed=600 + k)
            handle = NcFunctionHandle(realization=r, delta=delta)
            x = random_tuple(rng, 2, 2, max_norm=0.85)
            direct = eval_phi(handle, x)
            res = eval_phi_neumann(handle, x, terms=250)
            assert operator_norm(direct - res.value) <= res.truncation_bound + 1e-10

    def test_partial_sums_match_series_formula(self, h1, rng):
        # independent series: phi_K = (Z1+Z2)/2
        #   + (Z1-Z2) [sum_{k=0}^{K-1} 2^-k (Z1+Z2)^k] (Z1-Z2) / 4
        x = random_tuple(rng, 2, 2, max_norm=0.9)
        z1, z2 = x.components
        splus, sminus = z1 + z2, z1 - z2
        for K in (1, 2, 5):
            inner = np.zeros_like(z1)
            power = np.eye(2, dtype=complex)
            for k in range(K):
                inner += 2.0**-k * power
                power = power @ splus
            series = 0.5 * splus + 0.25 * sminus @ inner @ sminus
            res = eval_phi_neumann(h1, x, terms=K)
            np.testing.assert_allclose(res.value, series, atol=1e-12)

    def test_inapplicable_when_not_contracting(self, h1):
        broken = perturb_realization(h1.realization, eps=2.5, seed=0)
        handle = NcFunctionHandle(realization=broken, delta=h1.delta)
        with pytest.raises(PreconditionError):
            eval_phi_neumann(handle, scalars(0.9, 0.9), terms=10)


class TestModelResidual:
    def test_at_origin(self, h1):
        assert model_residual(h1, scalars(0.0, 0.0), scalars(0.0, 0.0)) <= 1e-14

    def test_random_pairs_small(self, rng):
        delta = polydisk_delta(2)
        for k in range(50):
            r = random_realization(int(rng.integers(1, 3)), 2, seed=100 + k)
            handle = NcFunctionHandle(realization=r, delta=delta)
            n = int(rng.integers(1, 3))
            x = random_interior_point(delta, n, rng)
            y = random_interior_point(delta, n, rng)
            assert model_residual(handle, x, y) <= 1e-10

    def test_perturbed_colligation_fails(self, h1):
        broken = perturb_realization(h1.realization, eps=0.05, seed=4)
        handle = NcFunctionHandle(realization=broken, delta=h1.delta)
        assert model_residual(handle, scalars(0.5, 0.3), scalars(0.5, 0.3)) > 1e-3

    def test_norm_chain_bound(self, rng):
        # ||u(x)||^2 <= ||I - phi* phi|| / (1 - ||delta||^2) up to tolerance
        delta = polydisk_delta(2)
        for k in range(20):
            r = random_realization(1, 2, seed=300 + k)
            handle = NcFunctionHandle(realization=r, delta=delta)
            x = random_interior_point(delta, 2, rng)
            u = eval_u(handle, x)
            phi = eval_phi(handle, x)
            nrm = operator_norm(eval_delta(delta, x))
            bound = operator_norm(np.eye(2) - phi.conj().T @ phi) / (1 - nrm**2)
            assert operator_norm(u) ** 2 <= bound + 1e-8


class TestRandomRealization:
    def test_isometry_defect(self):
        for seed in range(10):
            r = random_realization(2, 3, seed=seed)
            assert r.isometry_defect <= 1e-12

    def test_determinism(self):
        a = random_realization(2, 2, seed=42)
        b = random_realization(2, 2, seed=42)
        np.testing.assert_array_equal(a.colligation, b.colligation)

    def test_schur_bound_on_sweep(self, rng):
        delta = polydisk_delta(2)
        r = random_realization(2, 2, seed=11)
        handle = NcFunctionHandle(realization=r, delta=delta)
        for _ in range(100):
            x = random_interior_point(delta, int(rng.integers(1, 3)), rng)
            assert operator_norm(eval_phi(handle, x)) <= 1.0 + 1e-9


class TestNcAxioms:
    def test_direct_sum(self, rng):
        delta = polydisk_delta(2)
        r = random_realization(1, 2, seed=8)
        handle = NcFunctionHandle(realization=r, delta=delta)
        for _ in range(20):
            x = random_interior_point(delta, 2, rng)
            y = random_interior_point(delta, 2, rng)
            joint = eval_phi(handle, direct_sum(x, y))
            split = np.zeros_like(joint)
            split[:2, :2] = eval_phi(handle, x)
            split[2:, 2:] = eval_phi(handle, y)
            assert operator_norm(joint - split) <= 1e-8

    def test_similarity(self, rng):
        delta = polydisk_delta(2)
        r = random_realization(1, 2, seed=9)
        handle = NcFunctionHandle(realization=r, delta=delta)
        done = 0
        while done < 20:
            x = random_interior_point(delta, 2, rng, margin=0.3)
            s = near_identity(rng, 2, 0.1)
            xs = similarity(x, s)
            if not in_G_delta(delta, xs):
                continue
            lhs = eval_phi(handle, xs)
            rhs = np.linalg.solve(s, eval_phi(handle, x) @ s)
            assert operator_norm(lhs - rhs) <= 1e-8
            done += 1


class TestJson:
    def test_round_trip(self):
        r = random_realization(2, 2, seed=17)
        again = realization_from_json(realization_to_json(r))
        np.testing.assert_allclose(again.colligation, r.colligation, atol=1e-16)

    def test_non_isometric_rejected(self):
        r = random_realization(1, 2, seed=18)
        broken = perturb_realization(r, eps=0.1, seed=1)
        with pytest.raises(PreconditionError):
            realization_from_json(realization_to_json(broken))

    def test_malformed(self):
        with pytest.raises(ParseError):
            realization_from_json({"dim_E": 1})
