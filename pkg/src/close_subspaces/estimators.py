"""Subspace estimators: per-set SVD, Gibbs-sampler MMSD, and iterative MAP.

All three handle a chain of ``K >= 2`` observation sets. Bayesian methods
start from the SVD estimates and update the subspaces in descending order
``K, K-1, ..., 1`` on every iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bingham import MAX_PROPOSALS, _column_sweep
from .model import DataSet, log_joint_posterior
from .stiefel import DegenerateSubspaceWarning, check_orthonormal, principal_subspace

METHODS = ("svd", "gibbs", "imap")


@dataclass
class EstimateResult:
    """Estimated bases ``H_hat[k]`` for every subspace plus per-method bookkeeping.

    For ``imap`` the ``trace`` holds the log-posterior after each of the
    ``n_imap`` iterations; for ``gibbs`` it is the number of kept samples.
    """

    H_hat: list[np.ndarray]
    method: str
    trace: object = None
    n_iter: int = 0
    samples: list[np.ndarray] | None = field(default=None, repr=False)


def svd_estimate(X, R: int) -> np.ndarray:
    """``R`` dominant left singular vectors of ``X``.

    When ``rank(X) < R`` the missing directions are an arbitrary orthonormal
    completion and a :class:`DegenerateSubspaceWarning` is raised.
    """
    X = np.asarray(X, dtype=float)
    M = X.shape[0]
    if not 1 <= R <= M:
        raise ValueError(f"R={R} must satisfy 1 <= R <= M={M}")
    U, s, _ = np.linalg.svd(X, full_matrices=True)
    tol = (s[0] if s.size else 0.0) * max(X.shape) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    if rank < R:
        warnings.warn(
            f"data has rank {rank} < R={R}; completing the basis arbitrarily",
            DegenerateSubspaceWarning,
            stacklevel=2,
        )
    return U[:, :R].copy()


def mmsd_aggregate(samples, R: int) -> np.ndarray:
    """Principal R-subspace of the average projector ``mean(H H^T)``."""
    S = np.asarray(samples, dtype=float)
    if S.ndim != 3 or S.shape[0] == 0:
        raise ValueError("need a non-empty sequence of (M, R) bases")
    P = np.einsum("nmr,nkr->mk", S, S) / S.shape[0]
    return principal_subspace(P, R)


def _initial_bases(data: DataSet) -> list[np.ndarray]:
    R = data.config.R
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSubspaceWarning)
        return [svd_estimate(X, R) for X in data.X]


class _Conditionals:
    """Caches the data part ``X_k X_k^T / (2 sigma^2)`` of every conditional."""

    def __init__(self, data: DataSet):
        c = 0.5 / data.sigma2
        self.base = [c * (X @ X.T) for X in data.X]
        self.kappa = list(data.config.kappa)
        self.K = data.K

    def matrix(self, k: int, H: list[np.ndarray]) -> np.ndarray:
        A = self.base[k].copy()
        if k > 0 and self.kappa[k - 1]:
            A += self.kappa[k - 1] * (H[k - 1] @ H[k - 1].T)
        if k < self.K - 1 and self.kappa[k]:
            A += self.kappa[k] * (H[k + 1] @ H[k + 1].T)
        return 0.5 * (A + A.T)


def gibbs_estimate(
    data: DataSet,
    rng: np.random.Generator,
    inner_sweeps: int = 1,
    keep_samples: bool = False,
    init=None,
) -> EstimateResult:
    """MMSD estimate from a Gibbs sampler over the Bingham full conditionals.

    Runs ``n_burn + n_keep`` sweeps; every sweep redraws ``H_K, ..., H_1`` from
    their conditionals, each conditioned on the latest neighbors. The kept
    projectors are averaged and each average is reduced to its principal
    R-subspace.
    """
    cfg = data.config
    if inner_sweeps < 1:
        raise ValueError("inner_sweeps must be >= 1")
    H = [h.copy() for h in (init if init is not None else _initial_bases(data))]
    for h in H:
        check_orthonormal(h)
    cond = _Conditionals(data)
    M = cfg.M
    proj_sum = [np.zeros((M, M)) for _ in range(data.K)]
    kept = [] if keep_samples else None
    for n in range(cfg.n_burn + cfg.n_keep):
        for k in reversed(range(data.K)):
            A = cond.matrix(k, H)
            for _ in range(inner_sweeps):
                _column_sweep(A, H[k], rng, MAX_PROPOSALS)
        if n >= cfg.n_burn:
            for k in range(data.K):
                proj_sum[k] += H[k] @ H[k].T
            if keep_samples:
                kept.append(np.stack(H))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSubspaceWarning)
        H_hat = [principal_subspace(P / cfg.n_keep, cfg.R) for P in proj_sum]
    samples = None
    if keep_samples:
        chains = np.stack(kept)
        samples = [chains[:, k] for k in range(data.K)]
    return EstimateResult(H_hat, "gibbs", trace=cfg.n_keep, n_iter=cfg.n_burn + cfg.n_keep, samples=samples)


def imap_estimate(data: DataSet, init=None, tol: float = 1e-10, patience: int = 3) -> EstimateResult:
    """Iterative MAP: alternately replace each ``H_k`` by its conditional mode.

    The mode of a Bingham law is the principal R-subspace of its parameter,
    so every update can only raise the joint posterior. Iteration stops after
    ``n_imap`` sweeps, or earlier once the gain stays below
    ``tol * max(1, |log-posterior|)`` for ``patience`` consecutive sweeps; the
    trace is then padded with the converged value so it always has
    ``n_imap`` entries. ``n_iter`` records the sweeps actually run.
    """
    cfg = data.config
    H = [h.copy() for h in (init if init is not None else _initial_bases(data))]
    cond = _Conditionals(data)
    trace = []
    quiet = 0
    for n in range(cfg.n_imap):
        for k in reversed(range(data.K)):
            H[k] = principal_subspace(cond.matrix(k, H), cfg.R, warn=False)
        trace.append(log_joint_posterior(H, data))
        if n > 0:
            gain = trace[-1] - trace[-2]
            quiet = quiet + 1 if gain < tol * max(1.0, abs(trace[-1])) else 0
            if quiet >= patience:
                break
    n_iter = len(trace)
    trace.extend([trace[-1]] * (cfg.n_imap - n_iter))
    return EstimateResult(H, "imap", trace=np.array(trace), n_iter=n_iter)


def estimate(method: str, data: DataSet, rng: np.random.Generator | None = None) -> EstimateResult:
    """Dispatch by method tag (``svd``, ``gibbs`` or ``imap``)."""
    if method == "svd":
        return EstimateResult([svd_estimate(X, data.config.R) for X in data.X], "svd")
    if method == "gibbs":
        if rng is None:
            raise ValueError("the Gibbs estimator needs a random generator")
        return gibbs_estimate(data, rng)
    if method == "imap":
        return imap_estimate(data)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
