"""Observation model ``X_k = H_k S_k + N_k`` and its posterior densities.

``H_1`` is uniform on the Stiefel manifold and each ``H_k`` given ``H_{k-1}``
is Bingham with parameter ``kappa_k H_{k-1} H_{k-1}^T``. Marginalizing the
flat-prior coordinates ``S_k`` leaves, up to an additive constant,

    log p(H | X) = sum_k ||X_k^T H_k||_F^2 / (2 sigma^2)
                 + sum_{k>=2} kappa_k ||H_{k-1}^T H_k||_F^2 .
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .bingham import BinghamParams
from .stiefel import check_orthonormal, complement_basis, uniform_stiefel


@dataclass
class ScenarioConfig:
    """Everything needed to simulate one experiment point.

    ``kappa`` holds ``K - 1`` coupling strengths; ``kappa[i]`` ties subspace
    ``i`` to subspace ``i + 1`` (0-based). ``true_angles`` are in degrees.
    """

    M: int = 8
    R: int = 2
    T: int = 6
    K: int = 2
    snr_db: float = 0.0
    kappa: list[float] = field(default_factory=lambda: [40.0])
    true_angles: list[float] = field(default_factory=lambda: [10.0, 25.0])
    n_burn: int = 10
    n_keep: int = 200
    n_imap: int = 50
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.kappa, (int, float)):
            self.kappa = [float(self.kappa)] * (self.K - 1)
        self.kappa = [float(k) for k in self.kappa]
        self.true_angles = [float(a) for a in self.true_angles]
        self.validate()

    def validate(self) -> None:
        def bad(name, why):
            raise ValueError(f"ScenarioConfig.{name}: {why}")

        for name in ("M", "R", "T", "K", "n_burn", "n_keep", "n_imap", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                bad(name, f"expected an integer, got {v!r}")
        if self.M < 1:
            bad("M", "must be positive")
        if not 1 <= self.R <= self.M:
            bad("R", f"must satisfy 1 <= R <= M={self.M}")
        if self.T < 1:
            bad("T", "must be positive")
        if self.K < 2:
            bad("K", "need at least two subspaces")
        if len(self.kappa) != self.K - 1:
            bad("kappa", f"needs K-1={self.K - 1} entries, got {len(self.kappa)}")
        if any(not k >= 0 for k in self.kappa):
            bad("kappa", "entries must be non-negative")
        if len(self.true_angles) != self.R:
            bad("true_angles", f"needs R={self.R} entries, got {len(self.true_angles)}")
        if any(not 0.0 <= a <= 90.0 for a in self.true_angles):
            bad("true_angles", "each angle must lie in [0, 90] degrees")
        if self.n_burn < 0:
            bad("n_burn", "must be non-negative")
        if self.n_keep < 1 or self.n_imap < 1:
            bad("n_keep" if self.n_keep < 1 else "n_imap", "must be positive")
        if not 0 <= self.seed < 2**64:
            bad("seed", "must be an unsigned 64-bit integer")
        if not np.isfinite(self.snr_db):
            bad("snr_db", "must be finite")

    @property
    def sigma2(self) -> float:
        return sigma2_from_snr(self.snr_db, self.M, self.R)

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "ScenarioConfig":
        d = self.to_dict()
        d.update(changes)
        return ScenarioConfig(**d)


@dataclass
class DataSet:
    """Observed matrices plus the bases that generated them."""

    X: list[np.ndarray]
    H_true: list[np.ndarray]
    sigma2: float
    config: ScenarioConfig

    def __post_init__(self):
        c = self.config
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if len(self.X) != c.K or len(self.H_true) != c.K:
            raise ValueError(f"expected K={c.K} observation and truth matrices")
        for k, (X, H) in enumerate(zip(self.X, self.H_true)):
            if np.shape(X) != (c.M, c.T):
                raise ValueError(f"X[{k}] has shape {np.shape(X)}, expected {(c.M, c.T)}")
            if np.shape(H) != (c.M, c.R):
                raise ValueError(f"H_true[{k}] has shape {np.shape(H)}, expected {(c.M, c.R)}")

    @property
    def K(self) -> int:
        return len(self.X)


def sigma2_from_snr(snr_db: float, M: int, R: int) -> float:
    """Noise variance with ``SNR = R / (M sigma^2)`` expressed in dB."""
    return R / (M * 10.0 ** (snr_db / 10.0))


def make_close_basis(H1, angles_deg, rng: np.random.Generator) -> np.ndarray:
    """Basis whose principal angles to ``H1`` are exactly ``angles_deg``.

    Column ``r`` of ``H1`` is rotated by ``angles_deg[r]`` toward a random
    unit direction of ``span(H1)^⊥``; the R directions are mutually
    orthonormal, so ``H1^T H2 = diag(cos theta_r)``.
    """
    H1 = check_orthonormal(H1)
    M, R = H1.shape
    theta = np.deg2rad(np.asarray(angles_deg, dtype=float))
    if theta.shape != (R,):
        raise ValueError(f"need {R} angles, got {theta.size}")
    if np.any(theta < 0) or np.any(theta > np.pi / 2 + 1e-12):
        raise ValueError("angles must lie in [0, 90] degrees")
    if not np.any(theta):
        return H1.copy()
    if M < 2 * R:
        raise ValueError(f"need M >= 2R to plant nonzero angles (M={M}, R={R})")
    N = complement_basis(H1)
    G = rng.standard_normal((N.shape[1], R))
    W = N @ np.linalg.qr(G)[0]
    H2 = H1 * np.cos(theta) + W * np.sin(theta)
    # one re-orthonormalization pass so H2^T H2 = I to rounding
    U, _, Vt = np.linalg.svd(H2, full_matrices=False)
    return U @ Vt


def generate_data(config: ScenarioConfig, H_true, rng: np.random.Generator) -> DataSet:
    """Draw ``X_k = H_k S_k + N_k`` with standard normal ``S_k`` and ``N(0, sigma^2)`` noise."""
    if len(H_true) != config.K:
        raise ValueError(f"need K={config.K} true bases, got {len(H_true)}")
    sigma2 = config.sigma2
    sd = np.sqrt(sigma2)
    X, Hs = [], []
    for H in H_true:
        H = check_orthonormal(H)
        if H.shape != (config.M, config.R):
            raise ValueError(f"true basis shape {H.shape} != {(config.M, config.R)}")
        S = rng.standard_normal((config.R, config.T))
        N = sd * rng.standard_normal((config.M, config.T))
        X.append(H @ S + N)
        Hs.append(H)
    return DataSet(X, Hs, sigma2, config)


def make_truth(config: ScenarioConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Uniform ``H_1`` then a chain of bases, each at ``true_angles`` from its predecessor."""
    H = [uniform_stiefel(config.M, config.R, rng)]
    for _ in range(config.K - 1):
        H.append(make_close_basis(H[-1], config.true_angles, rng))
    return H


def _check_bases(H, data: DataSet) -> list[np.ndarray]:
    if len(H) != data.K:
        raise ValueError(f"need {data.K} bases, got {len(H)}")
    out = []
    for k, Hk in enumerate(H):
        Hk = check_orthonormal(Hk)
        if Hk.shape != data.H_true[k].shape:
            raise ValueError(f"basis {k} has shape {Hk.shape}, expected {data.H_true[k].shape}")
        out.append(Hk)
    return out


def log_joint_posterior(H, data: DataSet) -> float:
    """Log of the joint posterior of all ``H_k`` up to an additive constant."""
    H = _check_bases(H, data)
    c = 0.5 / data.sigma2
    val = sum(c * float(np.sum((X.T @ Hk) ** 2)) for X, Hk in zip(data.X, H))
    for i, kap in enumerate(data.config.kappa):
        val += kap * float(np.sum((H[i].T @ H[i + 1]) ** 2))
    return val


def conditional_bingham_params(data: DataSet, k: int, neighbors) -> BinghamParams:
    """Bingham parameter of ``H_k`` given the rest (``k`` is 0-based).

    ``neighbors`` maps chain positions to bases; pass a dict ``{j: H_j}`` or a
    full list of K bases (entry ``k`` is ignored). Only ``k - 1`` and
    ``k + 1`` contribute.
    """
    K = data.K
    if not 0 <= k < K:
        raise IndexError(f"subspace index {k} out of range for K={K}")
    nb = neighbors if isinstance(neighbors, dict) else dict(enumerate(neighbors))
    X = data.X[k]
    A = (0.5 / data.sigma2) * (X @ X.T)
    kappa = data.config.kappa
    for j, kap in ((k - 1, kappa[k - 1] if k >= 1 else 0.0), (k + 1, kappa[k] if k < K - 1 else 0.0)):
        if 0 <= j < K:
            if j not in nb:
                raise ValueError(f"missing neighbor basis {j} for subspace {k}")
            Hj = np.asarray(nb[j], dtype=float)
            if Hj.shape != data.H_true[j].shape:
                raise ValueError(f"neighbor {j} has shape {Hj.shape}")
            A = A + kap * (Hj @ Hj.T)
    return BinghamParams(0.5 * (A + A.T))


def regularized_criterion(H1, H2, data: DataSet, mu: float) -> float:
    """Concentrated criterion of the penalized ML problem, in its maximized form.

    ``J = tr(X1^T P1 X1)/(2 s2) + tr(X2^T P2 X2)/(2 s2) + 2 mu tr(H2^T P1 H2)``
    with ``P_k = H_k H_k^T``.
    """
    if data.K != 2:
        raise ValueError("the regularized criterion is defined for K = 2")
    H1, H2 = _check_bases([H1, H2], data)
    c = 0.5 / data.sigma2
    X1, X2 = data.X
    P1, P2 = H1 @ H1.T, H2 @ H2.T
    return (
        c * np.trace(X1.T @ P1 @ X1)
        + c * np.trace(X2.T @ P2 @ X2)
        + 2.0 * mu * np.trace(H2.T @ P1 @ H2)
    )


def penalized_neg_log_likelihood(H1, H2, data: DataSet, mu: float) -> float:
    """``-log p(X | H, S*) + mu ||P1 - P2||_F^2`` at the least-squares ``S* = H^T X``."""
    if data.K != 2:
        raise ValueError("the penalized likelihood is defined for K = 2")
    H1, H2 = _check_bases([H1, H2], data)
    val = 0.0
    for X, H in zip(data.X, (H1, H2)):
        resid = X - H @ (H.T @ X)
        val += float(np.sum(resid**2)) / (2.0 * data.sigma2)
    return val + mu * float(np.sum((H1 @ H1.T - H2 @ H2.T) ** 2))
