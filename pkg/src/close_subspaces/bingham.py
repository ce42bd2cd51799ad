"""Matrix Bingham distribution on the Stiefel manifold.

The density is ``p(H) ∝ etr(H^T A H)`` for symmetric ``A``. The normalizing
constant is never evaluated; sampling only needs density ratios.

Sampling is column-wise Gibbs. Given the other ``R - 1`` columns, column
``j`` lives on the unit sphere of the ``(M - R + 1)``-dimensional orthogonal
complement ``N`` of the others, where it is vector-Bingham with parameter
``N^T A N``. That vector draw is exact rejection sampling from an angular
central Gaussian envelope (Kent, Ganeiber & Mardia, 2013), whose acceptance
rate stays bounded however concentrated ``A`` is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .stiefel import check_orthonormal, check_symmetric

MAX_PROPOSALS = 10**6
_BATCH = 8


class SamplerStallError(RuntimeError):
    """Rejection sampler exceeded its proposal budget."""


@dataclass(frozen=True)
class BinghamParams:
    """Symmetric parameter matrix ``A`` of a Bingham law ``∝ etr(H^T A H)``."""

    A: np.ndarray

    def __post_init__(self):
        A = check_symmetric(self.A)
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def M(self) -> int:
        return self.A.shape[0]


def log_density_unnorm(H, params: BinghamParams) -> float:
    """``tr(H^T A H)``, the log of the unnormalized Bingham density."""
    H = check_orthonormal(H)
    if H.shape[0] != params.M:
        raise ValueError(f"basis has M={H.shape[0]} but parameters have M={params.M}")
    return float(np.sum(H * (params.A @ H)))


def _envelope_b(lam: np.ndarray) -> float:
    """Root in [1, q] of ``sum(1 / (b + 2 lam)) = 1``.

    The left side is convex and decreasing, so Newton from ``b = 1`` climbs
    monotonically to the root. Any ``b`` in (0, q] yields a valid bound;
    the root only maximizes the acceptance rate.
    """
    q = lam.size
    two_lam = [2.0 * v for v in lam.tolist()]
    b = 1.0
    for _ in range(100):
        r = [1.0 / (b + t) for t in two_lam]
        f = sum(r) - 1.0
        if f <= 0.0:
            break
        step = f / sum(v * v for v in r)
        b += step
        if step <= 1e-9 * b:
            break
    return min(b, float(q))


@dataclass
class _VectorEnvelope:
    """ACG envelope for ``exp(-z^T diag(lam) z)`` on the sphere, ``min(lam) = 0``."""

    lam: np.ndarray
    inv_sd: np.ndarray = field(init=False)
    omega: np.ndarray = field(init=False)
    log_bound: float = field(init=False)

    def __post_init__(self):
        q = self.lam.size
        b = _envelope_b(self.lam)
        self.omega = 1.0 + 2.0 * self.lam / b
        self.inv_sd = 1.0 / np.sqrt(self.omega)
        self.log_bound = -0.5 * (q - b) + 0.5 * q * np.log(q / b)

    def draw(self, rng: np.random.Generator, max_proposals: int) -> np.ndarray:
        q = self.lam.size
        tried = 0
        while tried < max_proposals:
            n = min(_BATCH, max_proposals - tried)
            y = rng.standard_normal((n, q)) * self.inv_sd
            z2 = y * y
            z2 /= z2.sum(axis=1, keepdims=True)
            log_acc = (
                -(z2 @ self.lam) + 0.5 * q * np.log(z2 @ self.omega) - self.log_bound
            )
            log_u = np.log(rng.random(n))
            hit = np.flatnonzero(log_u < log_acc)
            if hit.size:
                y = y[hit[0]]
                return y / np.sqrt(y @ y)
            tried += n
        raise SamplerStallError(f"no proposal accepted after {max_proposals} tries")


def sample_vector_bingham(
    B: np.ndarray, rng: np.random.Generator, max_proposals: int = MAX_PROPOSALS
) -> np.ndarray:
    """One exact draw of a unit vector ``y`` with density ``∝ exp(y^T B y)``."""
    q = B.shape[0]
    if q == 1:
        return np.array([1.0 if rng.random() < 0.5 else -1.0])
    beta, E = _eigh(B)
    env = _VectorEnvelope(beta[-1] - beta)
    return E @ env.draw(rng, max_proposals)


def _eigh(B):
    w, E, info = lapack.dsyevd(B)
    if info != 0:
        raise np.linalg.LinAlgError(f"symmetric eigensolver failed (info={info})")
    return w, E


def _complement(others: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span(others)^⊥`` via Householder QR."""
    M, k = others.shape
    if k == 0:
        return np.eye(M)
    qr, tau, _, info = lapack.dgeqrf(others)
    full = np.zeros((M, M), order="F")
    full[:, :k] = qr
    Q, _, info2 = lapack.dorgqr(full, tau)
    if info or info2:
        raise np.linalg.LinAlgError("QR factorization failed")
    return Q[:, k:]


def _column_sweep(A, H, rng, max_proposals):
    M, R = H.shape
    cols = np.arange(R)
    for j in range(R):
        N = _complement(H[:, cols != j])
        y = sample_vector_bingham(N.T @ A @ N, rng, max_proposals)
        x = N @ y
        H[:, j] = x / np.sqrt(x @ x)
    return H


def sample_bingham(
    params: BinghamParams,
    R: int,
    init,
    rng: np.random.Generator,
    inner_sweeps: int = 1,
    max_proposals: int = MAX_PROPOSALS,
) -> np.ndarray:
    """One MCMC transition that leaves ``Bingham(A)`` on ``V_R(R^M)`` invariant.

    Each of the ``inner_sweeps`` sweeps redraws every column exactly from its
    full conditional, starting from ``init``. For ``R = 1`` the transition is
    an independent exact draw.

    Raises
    ------
    SamplerStallError
        If a single column draw needs more than ``max_proposals`` proposals.
    """
    H = check_orthonormal(init).copy()
    if H.shape != (params.M, R):
        raise ValueError(f"init has shape {H.shape}, expected {(params.M, R)}")
    if inner_sweeps < 1:
        raise ValueError("inner_sweeps must be >= 1")
    for _ in range(inner_sweeps):
        _column_sweep(params.A, H, rng, max_proposals)
    return H


def bingham_chain(
    params: BinghamParams,
    R: int,
    init,
    n_draws: int,
    rng: np.random.Generator,
    inner_sweeps: int = 1,
) -> np.ndarray:
    """Run ``n_draws`` chained transitions; returns an ``(n_draws, M, R)`` array.

    For ``R = 1`` the eigendecomposition and envelope are built once and
    reused, which makes long runs of independent draws cheap.
    """
    H = check_orthonormal(init).copy()
    if H.shape != (params.M, R):
        raise ValueError(f"init has shape {H.shape}, expected {(params.M, R)}")
    out = np.empty((n_draws, params.M, R))
    if R == 1 and params.M > 1:
        beta, E = _eigh(np.array(params.A))
        env = _VectorEnvelope(beta[-1] - beta)
        for i in range(n_draws):
            out[i, :, 0] = E @ env.draw(rng, MAX_PROPOSALS)
        return out
    for i in range(n_draws):
        for _ in range(inner_sweeps):
            _column_sweep(params.A, H, rng, MAX_PROPOSALS)
        out[i] = H
    return out


@dataclass
class ChainDiagnostics:
    """Mixing summary for a sequence of bases."""

    statistic: np.ndarray
    autocorr: np.ndarray
    running_projector_mean: np.ndarray
    degenerate: bool


def chain_diagnostics(samples, reference=None, max_lag: int = 20) -> ChainDiagnostics:
    """Autocorrelation of ``tr(H^T A H)`` and running mean of ``H H^T``.

    Parameters
    ----------
    samples : sequence of (M, R) arrays
    reference : BinghamParams or array, optional
        Matrix ``A`` of the scalar statistic. Defaults to ``e_1 e_1^T`` so the
        statistic stays informative for the uniform law, where ``A = 0``.
    max_lag : int
        Largest lag reported; ``autocorr[0] == 1``.

    A zero-variance statistic gives NaN autocorrelations and ``degenerate=True``.
    """
    S = np.asarray(samples, dtype=float)
    if S.ndim != 3 or S.shape[0] == 0:
        raise ValueError("need a non-empty sequence of (M, R) bases")
    n, M, _ = S.shape
    if reference is None:
        A = np.zeros((M, M))
        A[0, 0] = 1.0
    else:
        A = reference.A if isinstance(reference, BinghamParams) else np.asarray(reference)
    stat = np.einsum("nmr,mk,nkr->n", S, A, S)
    P = np.einsum("nmr,nkr->nmk", S, S)
    running = np.cumsum(P, axis=0) / np.arange(1, n + 1)[:, None, None]

    lags = min(max_lag, n - 1)
    c = stat - stat.mean()
    var = float(c @ c) / n
    degenerate = var <= 1e-14 * max(1.0, float(np.mean(stat**2)))
    if degenerate:
        acf = np.full(lags + 1, np.nan)
    else:
        acf = np.array([float(c[: n - h] @ c[h:]) / (n * var) for h in range(lags + 1)])
    return ChainDiagnostics(stat, acf, running, bool(degenerate))
