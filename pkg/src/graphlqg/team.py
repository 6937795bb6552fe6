"""Weighted distributed estimation as a team problem.

Node ``i`` keeps its own copy of the lifted state estimate, so the team
state is the block-diagonal ``X = diag(x_e, ..., x_e)`` and node ``i``'s data
sit in block ``i`` of ``Y = C X + D Wn`` with ``Wn = diag(w, ..., w)``.  An
``N x N`` weight ``W`` couples the nodes through the cost
``sum_ij W_ij E[(x_i - xc_i)^T (x_j - xc_j)]``.  The recursion below
propagates ``Sigma_W = E[Xt W Xt^T]`` and is exact because the admissible
set (column ``i`` of the estimate driven by column ``i`` of the data) is
closed under left multiplication.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .lifting import LiftedSystem, selector
from .linalg import pinv_psd, symmetrize
from .simkit import DEFAULT_SEED, delayed_measurements, draw_noise, simulate_plant
from .sysmodel import ProblemSpec, dualize

logger = logging.getLogger(__name__)

STATIONARY_TOL = 1e-9
MAX_STEPS = 5_000


@dataclass(frozen=True, eq=False)
class TeamWeight:
    """Symmetric positive definite ``N x N`` inter-node weight."""

    W: np.ndarray

    def __post_init__(self):
        W = np.array(np.atleast_2d(self.W), dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("team weight must be square")
        if not np.all(np.isfinite(W)):
            raise ValueError("team weight has non-finite entries")
        if not np.allclose(W, W.T, atol=1e-12):
            raise ValueError("team weight must be symmetric")
        if np.linalg.eigvalsh(W).min() <= 0:
            raise ValueError("team weight must be positive definite")
        W = symmetrize(W)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @classmethod
    def identity(cls, N: int) -> "TeamWeight":
        return cls(np.eye(N))


@dataclass(frozen=True, eq=False)
class TeamLift:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    noise_weight: np.ndarray
    weight: TeamWeight
    n_e: int
    row_dims: tuple
    selectors: tuple
    pairs: tuple

    @property
    def N(self) -> int:
        return self.weight.N

    def state_slice(self, i: int) -> slice:
        return slice(i * self.n_e, (i + 1) * self.n_e)

    def row_slice(self, i: int) -> slice:
        start = sum(self.row_dims[:i])
        return slice(start, start + self.row_dims[i])


@dataclass(frozen=True, eq=False)
class TeamMoment:
    """``Sigma_W(t) = E[Xt W Xt^T]``; block ``(i, j)`` is ``W_ij E[xt_i xt_j^T]`` for diagonal ``W``."""

    Sigma: np.ndarray
    n_e: int

    def block(self, i: int, j: int) -> np.ndarray:
        a, b = i * self.n_e, j * self.n_e
        return self.Sigma[a:a + self.n_e, b:b + self.n_e]


@dataclass(frozen=True, eq=False)
class TeamGainSchedule:
    gains: np.ndarray          # (T, N n_e, sum r_i)
    moments: np.ndarray        # (T + 1, N n_e, N n_e)
    residuals: np.ndarray      # max-abs gain change, one entry per step after the first
    stationary: bool
    tol: float

    @property
    def horizon(self) -> int:
        return self.gains.shape[0]

    @property
    def stationary_gain(self) -> np.ndarray:
        return self.gains[-1]

    def moment(self, t: int, n_e: int) -> TeamMoment:
        return TeamMoment(self.moments[t], n_e)

    def to_dir(self, path) -> None:
        """One CSV per step plus a JSON summary of the stationary gain."""
        os.makedirs(path, exist_ok=True)
        for t, K in enumerate(self.gains):
            np.savetxt(os.path.join(path, f"gain_{t:04d}.csv"), K, delimiter=",", fmt="%.17g")
        summary = {
            "horizon": self.horizon, "stationary": self.stationary, "tol": self.tol,
            "final_residual": float(self.residuals[-1]) if len(self.residuals) else None,
            "stationary_gain": self.stationary_gain.tolist(),
        }
        with open(os.path.join(path, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2)


def static_team_gain(Sxy, Syy) -> np.ndarray:
    """Optimal static team map ``K = Sxy Syy^+``."""
    Sxy = np.atleast_2d(np.asarray(Sxy, dtype=float))
    Syy = np.atleast_2d(np.asarray(Syy, dtype=float))
    if not (np.all(np.isfinite(Sxy)) and np.all(np.isfinite(Syy))):
        raise ValueError("moments contain NaN or inf")
    return Sxy @ pinv_psd(Syy)


def build_team_lift(L: LiftedSystem, weight) -> TeamLift:
    W = weight if isinstance(weight, TeamWeight) else TeamWeight(weight)
    if W.N != L.N:
        raise ValueError(f"weight is {W.N}x{W.N} but the system has {L.N} nodes")
    N = L.N
    Sw = L.base.covariance(L.n_w)
    return TeamLift(
        A=block_diag(*([L.A_e] * N)),
        B=block_diag(*([L.B_e] * N)),
        C=block_diag(*L.E),
        D=np.vstack([np.hstack([L.D_e[i] if j == i else np.zeros((L.E[i].shape[0], L.n_w))
                                for j in range(N)]) for i in range(N)]),
        noise_weight=np.kron(W.W, Sw),
        weight=W,
        n_e=L.n_e,
        row_dims=tuple(E.shape[0] for E in L.E),
        selectors=tuple(selector(L, i) for i in range(N)),
        pairs=tuple(L.pairs),
    )


def team_filter_iterate(team: TeamLift, T: int | None = None,
                        tol: float = STATIONARY_TOL) -> TeamGainSchedule:
    """Time-varying team gains from ``Sigma_W(0) = 0``.

    With ``T=None`` the recursion runs until the gain change drops below
    ``tol`` (at most ``MAX_STEPS`` steps).  Divergence stops the recursion
    early and leaves ``stationary=False``.
    """
    A, B, C, D, Wh = team.A, team.B, team.C, team.D, team.noise_weight
    steps = MAX_STEPS if T is None else int(T)
    if steps < 1:
        raise ValueError("T must be at least 1")
    Sigma = np.zeros_like(A)
    BWB, BWD, DWD = B @ Wh @ B.T, B @ Wh @ D.T, D @ Wh @ D.T
    gains, moments, residuals = [], [Sigma], []
    stationary = False
    for t in range(steps):
        Syy = C @ Sigma @ C.T + DWD
        Sxy = A @ Sigma @ C.T + BWD
        K = static_team_gain(Sxy, Syy)
        F = A - K @ C
        Sigma = symmetrize(F @ Sigma @ F.T + BWB - K @ BWD.T - BWD @ K.T + K @ DWD @ K.T)
        if not np.all(np.isfinite(Sigma)):
            logger.warning("team recursion diverged at step %d", t)
            break
        if gains:
            residuals.append(float(np.max(np.abs(K - gains[-1]))))
        gains.append(K)
        moments.append(Sigma)
        stationary = bool(residuals) and residuals[-1] < tol
        if stationary and T is None:
            break
    if T is None and not stationary:
        logger.warning("team gains not stationary after %d steps", steps)
    return TeamGainSchedule(np.array(gains), np.array(moments), np.array(residuals),
                            stationary, tol)


def _gamma_row(team: TeamLift) -> np.ndarray:
    dims = {G.shape[0] for G in team.selectors}
    if len(dims) != 1:
        raise ValueError("team cost needs equal node state dimensions")
    return np.hstack(team.selectors)


def team_cost(team: TeamLift, Sigma: np.ndarray) -> float:
    """``sum_ij W_ij E[(x_i - xc_i)^T (x_j - xc_j)]`` from a moment ``Sigma_W``."""
    G = _gamma_row(team)
    return float(np.trace(G @ Sigma @ G.T))


def combine_estimates(Xhat: np.ndarray, L_or_team) -> list:
    """``xc_i = sum_j Gamma_j Xhat_ji`` for every node ``i``.

    ``Xhat`` is ``(N n_e, N)`` for scalar-column estimates or
    ``(..., N n_e, N)`` for batches.
    """
    if isinstance(L_or_team, TeamLift):
        sels, n_e = L_or_team.selectors, L_or_team.n_e
    else:
        sels = tuple(selector(L_or_team, i) for i in range(L_or_team.N))
        n_e = L_or_team.n_e
    N = len(sels)
    Xhat = np.asarray(Xhat, dtype=float)
    if Xhat.shape[-2:] != (N * n_e, N):
        raise ValueError(f"expected trailing shape {(N * n_e, N)}, got {Xhat.shape[-2:]}")
    out = []
    for i in range(N):
        acc = 0.0
        for j in range(N):
            acc = acc + Xhat[..., j * n_e:(j + 1) * n_e, i] @ sels[j].T
        out.append(acc)
    return out


@dataclass(frozen=True, eq=False)
class TeamTrajectory:
    estimates: np.ndarray      # (trials, T, N n_e, N) team estimate Xhat(t)
    innovations: np.ndarray    # (trials, T, sum r_i, N)
    combined: list             # per node (trials, T, n_i)
    states: np.ndarray         # (trials, T, n) true base states
    extra: dict = field(default_factory=dict)


def run_team(sys, team: TeamLift, schedule: TeamGainSchedule, y: np.ndarray):
    """Team estimates ``Xhat(t)`` and innovations from base outputs ``y`` of shape ``(trials, T, p)``.

    Gains beyond the schedule's horizon reuse its last (stationary) gain.
    """
    trials, horizon, _ = y.shape
    N, n_e = team.N, team.n_e
    Y = np.zeros((trials, horizon, sum(team.row_dims), N))
    for i in range(N):
        Y[:, :, team.row_slice(i), i] = delayed_measurements(sys, team.pairs[i], y)
    Xh = np.zeros((trials, N * n_e, N))
    est = np.empty((trials, horizon, N * n_e, N))
    innov = np.empty_like(Y)
    for t in range(horizon):
        K = schedule.gains[min(t, schedule.horizon - 1)]
        est[:, t] = Xh
        innov[:, t] = Y[:, t] - team.C @ Xh
        Xh = team.A @ Xh + K @ innov[:, t]
    return est, innov


def simulate_team(sys, team: TeamLift, schedule: TeamGainSchedule, horizon: int, trials: int,
                  seed: int = DEFAULT_SEED) -> TeamTrajectory:
    """Run the team estimator on sampled plant trajectories."""
    w = draw_noise(seed, trials, horizon, sys.m, sys.covariance(sys.m))
    x, y = simulate_plant(sys, w)
    est, innov = run_team(sys, team, schedule, y)
    return TeamTrajectory(est, innov, combine_estimates(est, team), x, {"noise": w})


def psd_sqrt(W) -> np.ndarray:
    """Symmetric square root via the eigendecomposition."""
    W = symmetrize(np.asarray(W, dtype=float))
    vals, vecs = np.linalg.eigh(W)
    if vals.min() < -1e-12 * max(1.0, abs(vals).max()):
        raise ValueError("matrix is not positive semidefinite")
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def correlated_to_weighted(p: ProblemSpec) -> ProblemSpec:
    """Feedforward control under ``w ~ N(0, W)`` as weighted estimation on the dual.

    Writing the disturbance as ``W^{1/2} w`` with white ``w`` and transposing
    moves the root onto the dual's estimation error, so the dual problem
    estimates ``x`` under the error weight ``W^{1/2} W^{1/2} = W``.
    """
    if p.kind != "correlated_feedback":
        raise ValueError(f"expected a correlated_feedback problem, got {p.kind!r}")
    W = np.asarray(p.weight, dtype=float)
    if W.shape != (p.system.n, p.system.n):
        raise ValueError("disturbance covariance must be n x n")
    plant = p.system.replace(noise_cov=None)
    return ProblemSpec("weighted_estimation", dualize(plant), weight=W,
                       horizon=p.horizon, tol=p.tol)


def scaled_dual(p: ProblemSpec):
    """Absorb a block-diagonal root into the dual's coordinates.

    With ``R = W^{1/2}`` block-diagonal, the change of state ``x' = R x`` on
    the dual keeps every sparsity pattern and turns the ``W``-weighted
    problem into an unweighted one: ``A' = R A R^{-1}``, ``B' = R B``,
    ``C' = C R^{-1}``.  Returns ``(estimation ProblemSpec, R)``.
    """
    q = correlated_to_weighted(p) if p.kind == "correlated_feedback" else p
    if q.kind != "weighted_estimation":
        raise ValueError("expected a weighted_estimation or correlated_feedback problem")
    sys = q.system
    R = psd_sqrt(q.weight)
    for i in range(sys.N):
        for j in range(sys.N):
            if i != j and np.any(R[sys.state_slice(i), sys.state_slice(j)] != 0):
                raise ValueError("weight root is not block-diagonal; use the weighted problem directly")
    Ri = np.linalg.inv(R)
    moved = sys.replace(A=R @ sys.A @ Ri, B=R @ sys.B, C=sys.C @ Ri)
    return ProblemSpec("estimation", moved, horizon=q.horizon, tol=q.tol), R


__all__ = [
    "TeamWeight", "TeamLift", "TeamMoment", "TeamGainSchedule", "TeamTrajectory",
    "static_team_gain", "build_team_lift", "team_filter_iterate", "team_cost",
    "combine_estimates", "run_team", "simulate_team", "psd_sqrt", "correlated_to_weighted", "scaled_dual",
]
