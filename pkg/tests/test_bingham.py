import numpy as np
import pytest
from scipy import integrate

from close_subspaces.bingham import (
    BinghamParams,
    SamplerStallError,
    bingham_chain,
    chain_diagnostics,
    log_density_unnorm,
    sample_bingham,
    sample_vector_bingham,
)
from close_subspaces.stiefel import check_orthonormal, subspace_sq_distance, uniform_stiefel


def random_sym(rng, M, scale=1.0):
    G = rng.standard_normal((M, M))
    return scale * (G + G.T)


def circle_ks(A, n, seed):
    """KS distance between sampled angles and the quadrature CDF of exp(x^T A x) on the circle."""
    S = bingham_chain(BinghamParams(A), 1, np.eye(2)[:, :1], n, np.random.default_rng(seed))
    phi = np.sort(np.mod(np.arctan2(S[:, 1, 0], S[:, 0, 0]), 2 * np.pi))
    grid = np.linspace(0.0, 2 * np.pi, 20001)
    x = np.stack([np.cos(grid), np.sin(grid)])
    dens = np.exp(np.einsum("in,ij,jn->n", x, A, x))
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    F = np.interp(phi, grid, cdf / cdf[-1])
    i = np.arange(1, n + 1)
    return max(np.max(i / n - F), np.max(F - (i - 1) / n))


class TestParams:
    def test_symmetrized_and_frozen(self):
        p = BinghamParams(np.array([[1.0, 2.0], [2.0, 0.0]]))
        assert p.M == 2
        with pytest.raises(ValueError):
            p.A[0, 0] = 5.0

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            BinghamParams(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestLogDensity:
    def test_zero_matrix(self, rng):
        H = uniform_stiefel(5, 2, rng)
        assert log_density_unnorm(H, BinghamParams(np.zeros((5, 5)))) == 0.0

    def test_identity(self, rng):
        H = uniform_stiefel(6, 3, rng)
        assert log_density_unnorm(H, BinghamParams(np.eye(6))) == pytest.approx(3.0, abs=1e-12)

    def test_concentrated_at_its_own_subspace(self, rng):
        H = uniform_stiefel(8, 2, rng)
        assert log_density_unnorm(H, BinghamParams(40.0 * H @ H.T)) == pytest.approx(80.0, abs=1e-10)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="M="):
            log_density_unnorm(uniform_stiefel(4, 2, rng), BinghamParams(np.eye(5)))

    def test_right_invariance(self, rng):
        for _ in range(20):
            p = BinghamParams(random_sym(rng, 6, 5.0))
            H, Q = uniform_stiefel(6, 3, rng), uniform_stiefel(3, 3, rng)
            assert log_density_unnorm(H @ Q, p) == pytest.approx(log_density_unnorm(H, p), abs=1e-9)

    def test_column_sign_flips(self, rng):
        p = BinghamParams(random_sym(rng, 5, 3.0))
        H = sample_bingham(p, 3, uniform_stiefel(5, 3, rng), rng)
        for signs in ([1, -1, 1], [-1, -1, 1], [-1, -1, -1]):
            assert log_density_unnorm(H * signs, p) == pytest.approx(log_density_unnorm(H, p), abs=1e-12)


class TestSampler:
    def test_uniform_sphere_moment(self):
        g = np.random.default_rng(7)
        S = bingham_chain(BinghamParams(np.zeros((3, 3))), 1, np.eye(3)[:, :1], 100_000, g)
        P = np.einsum("nmr,nkr->mk", S, S) / len(S)
        np.testing.assert_allclose(P, np.eye(3) / 3, atol=0.01)

    def test_high_concentration(self):
        g = np.random.default_rng(8)
        u = np.array([1.0, 2.0, -2.0, 0.5]) / np.sqrt(9.25)
        S = bingham_chain(BinghamParams(200.0 * np.outer(u, u)), 1, np.eye(4)[:, :1], 10_000, g)
        assert np.mean(np.abs(S[:, :, 0] @ u)) > 0.99

    def test_circle_exactness_other_shape(self):
        A = np.array([[1.0, 2.0], [2.0, -3.0]])
        assert circle_ks(A, 50_000, seed=21) < 0.01

    def test_matrix_moment_against_quadrature(self):
        # M=3, R=2: the normal n of span(H) has density exp(-n^T A n), so
        # E[H H^T] = I - E[n n^T]; diagonal below from 2-D quadrature
        expected = np.diag([0.84727077, 0.7101716, 0.44255763])
        g = np.random.default_rng(9)
        p = BinghamParams(np.diag([2.0, 0.0, -1.5]))
        S = bingham_chain(p, 2, np.eye(3)[:, :2], 40_000, g)
        P = np.einsum("nmr,nkr->mk", S, S) / len(S)
        np.testing.assert_allclose(P, expected, atol=0.015)

    def test_transition_chains_like_batch(self):
        p = BinghamParams(random_sym(np.random.default_rng(0), 5, 2.0))
        H0 = np.eye(5)[:, :2]
        a = bingham_chain(p, 2, H0, 5, np.random.default_rng(3))
        g = np.random.default_rng(3)
        H = H0
        for i in range(5):
            H = sample_bingham(p, 2, H, g)
            np.testing.assert_array_equal(H, a[i])

    def test_orthonormal_output(self, rng):
        for M, R in [(2, 1), (3, 3), (8, 2), (8, 7)]:
            p = BinghamParams(random_sym(rng, M, 10.0))
            H = uniform_stiefel(M, R, rng)
            for _ in range(30):
                H = sample_bingham(p, R, H, rng, inner_sweeps=2)
                check_orthonormal(H)

    def test_extreme_concentration(self, rng):
        H = uniform_stiefel(8, 2, rng)
        p = BinghamParams(2e30 * H @ H.T)
        G = uniform_stiefel(8, 2, rng)
        for _ in range(3):
            G = sample_bingham(p, 2, G, rng)
            check_orthonormal(G)
        assert subspace_sq_distance(G, H) < 1e-12

    def test_errors(self, rng):
        p = BinghamParams(np.eye(4))
        with pytest.raises(ValueError, match="inner_sweeps"):
            sample_bingham(p, 2, np.eye(4)[:, :2], rng, inner_sweeps=0)
        with pytest.raises(ValueError, match="shape"):
            sample_bingham(p, 2, np.eye(5)[:, :2], rng)

    def test_stall_is_raised(self):
        g = np.random.default_rng(1)
        B = np.diag([500.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        with pytest.raises(SamplerStallError):
            for _ in range(1000):
                sample_vector_bingham(B, g, max_proposals=1)


class TestDiagnostics:
    def test_constant_sequence_flagged(self):
        H = np.eye(3)[:, :1]
        d = chain_diagnostics([H] * 50)
        assert d.degenerate
        assert np.isnan(d.autocorr[1])

    def test_independent_draws(self):
        g = np.random.default_rng(4)
        S = bingham_chain(BinghamParams(np.zeros((4, 4))), 1, np.eye(4)[:, :1], 10_000, g)
        d = chain_diagnostics(S)
        assert not d.degenerate
        assert d.autocorr[0] == pytest.approx(1.0)
        assert abs(d.autocorr[1]) < 0.05

    def test_running_mean_trace(self, rng):
        p = BinghamParams(random_sym(rng, 5))
        S = bingham_chain(p, 2, np.eye(5)[:, :2], 200, rng)
        d = chain_diagnostics(S, reference=p)
        np.testing.assert_allclose(np.trace(d.running_projector_mean, axis1=1, axis2=2), 2.0, atol=1e-12)
        np.testing.assert_allclose(d.statistic[5], log_density_unnorm(S[5], p), atol=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            chain_diagnostics([])
