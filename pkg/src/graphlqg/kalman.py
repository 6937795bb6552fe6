"""Per-node Kalman synthesis on the lifted system.

Each node ``i`` runs an ordinary one-step predictor for the whole lifted
state using only its admissible measurements ``E_i x_e + D_e_i w``.  Delayed
register rows are noise-free, so innovation covariances are singular; gains
use an eigen-based pseudo-inverse instead of regularisation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .lifting import LiftedSystem, selector
from .linalg import (NotStabilizingError, pinv_psd, spectral_radius,
                     stationary_covariance, symmetrize)
from .series import MatrixSeries
from .sysmodel import BlockSystem, adjacency_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiccatiResult:
    P: np.ndarray
    K: np.ndarray
    iterations: int
    residual: float
    converged: bool


def _riccati_step(A, C, Q, R, S, P):
    AP = A @ P
    cross = AP @ C.T + S
    Sinv = pinv_psd(C @ P @ C.T + R)
    K = cross @ Sinv
    P_next = symmetrize(AP @ A.T + Q - K @ cross.T)
    return P_next, K


def riccati_iterate(A, C, Q, R, S=None, tol: float = 1e-11, max_iter: int = 10_000,
                    P0=None) -> RiccatiResult:
    """Iterate the filtering Riccati map to its fixed point.

    ``P+ = A P A^T + Q - (A P C^T + S)(C P C^T + R)^+ (A P C^T + S)^T``,
    started from ``P0`` (default ``Q``).  Non-convergence is reported through
    ``converged=False``; non-finite iterates raise ``FloatingPointError``.
    """
    A, C, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, C, Q, R))
    if S is None:
        S = np.zeros((A.shape[0], C.shape[0]))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    P = symmetrize(Q.copy() if P0 is None else np.asarray(P0, dtype=float))
    residual = np.inf
    for it in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            P_next, _ = _riccati_step(A, C, Q, R, S, P)
        if not np.all(np.isfinite(P_next)):
            raise FloatingPointError(f"Riccati iterate became non-finite at step {it}")
        residual = float(np.max(np.abs(P_next - P)))
        P = P_next
        if residual < tol:
            break
    converged = residual < tol
    if not converged:
        logger.warning("Riccati iteration stopped after %d steps, residual %.3g", max_iter, residual)
    K = (A @ P @ C.T + S) @ pinv_psd(C @ P @ C.T + R)
    return RiccatiResult(P, K, it, residual, converged)


def kalman_gain_sequence(A, C, Q, R, S, horizon: int, P0=None):
    """Time-varying predictor gains ``K(0..horizon-1)`` and covariances ``P(0..horizon)``.

    The default start ``P(0) = 0`` matches a plant initialised at rest.
    """
    P = np.zeros_like(A) if P0 is None else np.asarray(P0, dtype=float)
    gains, covs = [], [P]
    for _ in range(horizon):
        P, K = _riccati_step(A, C, Q, R, S, P)
        gains.append(K)
        covs.append(P)
    return gains, covs


def node_noise_terms(L: LiftedSystem, i: int):
    """``(Q, R, S)`` for node ``i``: process, measurement and cross covariance."""
    W = L.base.covariance(L.n_w)
    Be, De = L.B_e, L.D_e[i]
    return Be @ W @ Be.T, De @ W @ De.T, Be @ W @ De.T


@dataclass(frozen=True, eq=False)
class FilterRealization:
    """Node ``i`` estimator ``(A_e - K_i E_i, K_i, Gamma_i, 0)``."""

    node: int
    F: np.ndarray
    G_in: np.ndarray
    H: np.ndarray
    E: np.ndarray
    pairs: tuple
    riccati: RiccatiResult
    spectral_radius: float

    @property
    def K(self) -> np.ndarray:
        return self.G_in

    @property
    def order(self) -> int:
        return self.F.shape[0]

    @property
    def stable(self) -> bool:
        return self.spectral_radius < 1.0


def synthesize_node_filter(L: LiftedSystem, i: int, tol: float = 1e-11,
                           max_iter: int = 10_000) -> FilterRealization:
    E = L.E[i]
    Q, R, S = node_noise_terms(L, i)
    res = riccati_iterate(L.A_e, E, Q, R, S, tol=tol, max_iter=max_iter)
    F = L.A_e - res.K @ E
    rho = spectral_radius(F)
    if rho >= 1.0:
        logger.warning("node %d filter is not stabilizing (spectral radius %.4g)", i, rho)
    return FilterRealization(i, F, res.K, selector(L, i), E, L.pairs[i], res, rho)


def synthesize_filters(L: LiftedSystem, tol: float = 1e-11, max_iter: int = 10_000,
                       order=None) -> list:
    """Solve the ``N`` node problems independently; ``order`` only affects scheduling."""
    order = range(L.N) if order is None else order
    out = {i: synthesize_node_filter(L, i, tol, max_iter) for i in order}
    return [out[i] for i in range(L.N)]


def node_impulse_response(f: FilterRealization, L: LiftedSystem, horizon: int) -> np.ndarray:
    """Row block ``l_i(0..horizon)`` of the estimator in terms of ``y(t-1-s)``."""
    base = L.base
    Ms = np.empty((horizon + 1, f.H.shape[0], f.G_in.shape[1]))
    cur = f.H.copy()
    for s in range(horizon + 1):
        Ms[s] = cur @ f.G_in
        cur = cur @ f.F
    out = np.zeros((horizon + 1, f.H.shape[0], base.p))
    for (j, k), rows in zip(f.pairs, L.pair_rows(f.node)):
        if k - 1 > horizon:
            continue
        cols = base.output_slice(j)
        out[k - 1:, :, cols] += Ms[: horizon + 2 - k, :, rows]
    return out


def assemble_estimator(filters, L: LiftedSystem, horizon: int) -> MatrixSeries:
    """Stack the node responses into ``L(lambda)`` acting on ``y(t-1-s)``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if len(filters) != L.N:
        raise ValueError(f"expected {L.N} filters, got {len(filters)}")
    rows = [node_impulse_response(f, L, horizon) for f in sorted(filters, key=lambda f: f.node)]
    coeffs = np.concatenate(rows, axis=1)
    base = L.base
    return MatrixSeries(coeffs, base.state_dims, base.output_dims, adjacency_of(base))


def filter_error_covariance(f: FilterRealization, L: LiftedSystem, tol: float = 1e-12):
    """Stationary error covariance of node ``f.node``'s filter and its cost.

    Raises :class:`NotStabilizingError` when ``F`` is not Schur stable.
    """
    W = L.base.covariance(L.n_w)
    root = np.linalg.cholesky(W)
    G = (L.B_e - f.G_in @ L.D_e[f.node]) @ root
    Sigma = stationary_covariance(f.F, G, tol=tol)
    return Sigma, float(np.trace(f.H @ Sigma @ f.H.T))


def centralized_kalman(sys: BlockSystem, tol: float = 1e-11) -> RiccatiResult:
    """Predictor with access to every output, the information lower bound."""
    W = sys.covariance(sys.m)
    return riccati_iterate(sys.A, sys.C, sys.B @ W @ sys.B.T, sys.D @ W @ sys.D.T,
                           sys.B @ W @ sys.D.T, tol=tol)


def centralized_node_costs(sys: BlockSystem, tol: float = 1e-11) -> np.ndarray:
    P = centralized_kalman(sys, tol).P
    return np.array([np.trace(P[sys.state_slice(i), sys.state_slice(i)]) for i in range(sys.N)])


__all__ = [
    "RiccatiResult", "FilterRealization", "NotStabilizingError", "riccati_iterate",
    "kalman_gain_sequence", "synthesize_node_filter", "synthesize_filters",
    "assemble_estimator", "filter_error_covariance", "centralized_kalman",
    "centralized_node_costs", "node_impulse_response", "node_noise_terms",
]
