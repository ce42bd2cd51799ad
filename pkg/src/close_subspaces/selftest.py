"""Fast invariant checks at tiny dimensions, run by ``close-subspaces selftest``."""

from __future__ import annotations

import numpy as np
from scipy import special

from .bingham import BinghamParams, bingham_chain, log_density_unnorm, sample_bingham
from .estimators import imap_estimate, svd_estimate
from .model import (
    ScenarioConfig,
    conditional_bingham_params,
    generate_data,
    log_joint_posterior,
    make_close_basis,
    make_truth,
)
from .stiefel import principal_angles, principal_subspace, subspace_sq_distance, uniform_stiefel


def _distance_identity(rng):
    U, V = uniform_stiefel(5, 2, rng), uniform_stiefel(5, 2, rng)
    return abs(subspace_sq_distance(U, V) - np.sum(np.sin(principal_angles(U, V)) ** 2)) < 1e-9


def _planted_angles(rng):
    H1 = uniform_stiefel(6, 2, rng)
    H2 = make_close_basis(H1, [10.0, 25.0], rng)
    return np.allclose(np.rad2deg(principal_angles(H1, H2)), [10.0, 25.0], atol=1e-6)


def _principal_subspace_shift(rng):
    G = rng.standard_normal((5, 5))
    A = G + G.T
    return subspace_sq_distance(principal_subspace(A, 2), principal_subspace(A + 3.0 * np.eye(5), 2)) < 1e-8


def _sampler_orthonormal(rng):
    G = rng.standard_normal((5, 5))
    p = BinghamParams(3.0 * (G + G.T))
    H = uniform_stiefel(5, 2, rng)
    for _ in range(20):
        H = sample_bingham(p, 2, H, rng)
    return np.max(np.abs(H.T @ H - np.eye(2))) < 1e-10


def _sampler_circle_mean(rng):
    # angle density exp(4 cos 2phi): E[cos^2 phi] = (1 + I1(4)/I0(4)) / 2
    S = bingham_chain(BinghamParams(np.diag([4.0, -4.0])), 1, np.eye(2)[:, :1], 4000, rng)
    expected = 0.5 * (1.0 + special.i1(4.0) / special.i0(4.0))
    return abs(np.mean(S[:, 0, 0] ** 2) - expected) < 0.02


def _kernel_right_invariance(rng):
    G = rng.standard_normal((4, 4))
    p = BinghamParams(G + G.T)
    H = uniform_stiefel(4, 2, rng)
    Q = uniform_stiefel(2, 2, rng)
    return abs(log_density_unnorm(H @ Q, p) - log_density_unnorm(H, p)) < 1e-9


def _conditional_ratio(rng):
    cfg = ScenarioConfig(M=5, R=2, T=4, snr_db=3.0, kappa=[7.0], true_angles=[5.0, 20.0])
    data = generate_data(cfg, make_truth(cfg, rng), rng)
    H1 = uniform_stiefel(5, 2, rng)
    U, V = uniform_stiefel(5, 2, rng), uniform_stiefel(5, 2, rng)
    p = conditional_bingham_params(data, 1, [H1, None])
    lhs = log_joint_posterior([H1, U], data) - log_joint_posterior([H1, V], data)
    rhs = log_density_unnorm(U, p) - log_density_unnorm(V, p)
    return abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def _imap_monotone(rng):
    cfg = ScenarioConfig(M=6, R=2, T=5, snr_db=0.0, kappa=[20.0], true_angles=[10.0, 30.0], n_imap=20)
    data = generate_data(cfg, make_truth(cfg, rng), rng)
    tr = imap_estimate(data).trace
    return bool(np.all(np.diff(tr) >= -1e-9))


def _noise_free_svd(rng):
    H = uniform_stiefel(6, 2, rng)
    X = H @ rng.standard_normal((2, 4))
    return subspace_sq_distance(svd_estimate(X, 2), H) < 1e-9


CHECKS = [
    ("distance equals sum of sin^2 of principal angles", _distance_identity),
    ("planted principal angles are recovered", _planted_angles),
    ("principal subspace ignores eigenvalue shifts", _principal_subspace_shift),
    ("Bingham sampler output stays orthonormal", _sampler_orthonormal),
    ("Bingham sampler moment on the circle", _sampler_circle_mean),
    ("Bingham kernel depends only on the subspace", _kernel_right_invariance),
    ("conditional density ratio matches joint", _conditional_ratio),
    ("iMAP log-posterior is non-decreasing", _imap_monotone),
    ("SVD recovers a noise-free subspace", _noise_free_svd),
]


def run_selftest(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, check in CHECKS:
        passed = bool(check(rng))
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
