"""Small numerical helpers shared across modules."""
from __future__ import annotations

import numpy as np

PINV_RTOL = 1e-10


class NotStabilizingError(RuntimeError):
    """Raised when a closed-loop matrix has spectral radius >= 1."""


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def pinv_psd(M: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Pseudo-inverse of a symmetric PSD matrix with relative rank cutoff."""
    if M.size == 0:
        return M.T.copy()
    return np.linalg.pinv(symmetrize(M), rtol=rtol, hermitian=True)


def spectral_radius(F: np.ndarray) -> float:
    if F.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(F))))


def stationary_covariance(F: np.ndarray, G: np.ndarray, tol: float = 1e-12,
                          max_iter: int = 200) -> np.ndarray:
    """Fixed point of ``S = F S F^T + G G^T`` by doubling iterations.

    Each pass squares the transition, so ``k`` passes sum ``2^k`` terms of
    the series; ``tol`` bounds the last increment relative to ``max(1, |S|)``.
    """
    rho = spectral_radius(F)
    if rho >= 1.0:
        raise NotStabilizingError(f"spectral radius {rho:.6g} >= 1")
    S = G @ G.T
    Fk = F.copy()
    for _ in range(max_iter):
        inc = Fk @ S @ Fk.T
        S = symmetrize(S + inc)
        Fk = Fk @ Fk
        if np.max(np.abs(inc)) <= tol * max(1.0, np.max(np.abs(S))):
            return S
    raise RuntimeError("stationary covariance iteration did not converge")
