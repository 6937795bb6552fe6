"""Estimator-style front end over the synthesis pipeline.

``fit`` takes a :class:`~graphlqg.sysmodel.BlockSystem` in place of a data
matrix; ``predict``/``transform`` take signal histories shaped ``(T, dim)``
or ``(batch, T, dim)``.  Fitted attributes end in an underscore, and
``get_params``/``set_params``/``clone`` come from scikit-learn.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .duality import synthesize_controller
from .kalman import assemble_estimator, filter_error_covariance, synthesize_filters
from .lifting import lift
from .simkit import feedforward_inputs, node_estimates
from .sysmodel import BlockSystem, validate
from .team import build_team_lift, combine_estimates, run_team, team_cost, team_filter_iterate


def check_system(sys, role: str | None = None) -> BlockSystem:
    """Reject anything that is not a valid :class:`BlockSystem` for ``role``."""
    if not isinstance(sys, BlockSystem):
        raise TypeError(f"expected a BlockSystem, got {type(sys).__name__}")
    problems = validate(sys, role)
    if problems:
        raise ValueError("invalid system: " + "; ".join(problems))
    return sys


def check_signal(X, dim: int, name: str = "signal") -> tuple[np.ndarray, bool]:
    """Return ``(batch, T, dim)`` float data and whether the input was unbatched."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = check_array(X, ensure_min_samples=1)[None]
    elif X.ndim == 3:
        check_array(X.reshape(-1, X.shape[-1]))
    else:
        raise ValueError(f"{name} must be 2-D (T, dim) or 3-D (batch, T, dim)")
    if X.shape[-1] != dim:
        raise ValueError(f"{name} has {X.shape[-1]} columns, expected {dim}")
    return X, single


class DistributedKalmanEstimator(BaseEstimator):
    """One stationary Kalman predictor per node on the lifted system."""

    def __init__(self, memory=None, tol: float = 1e-11, max_iter: int = 10_000, horizon: int = 60):
        self.memory = memory
        self.tol = tol
        self.max_iter = max_iter
        self.horizon = horizon

    def fit(self, system, y=None):
        sys = check_system(system, "estimation")
        self.system_ = sys
        self.lift_ = lift(sys, self.memory)
        self.filters_ = synthesize_filters(self.lift_, tol=self.tol, max_iter=self.max_iter)
        self.node_costs_ = np.array([filter_error_covariance(f, self.lift_)[1] for f in self.filters_])
        self.coefficients_ = assemble_estimator(self.filters_, self.lift_, self.horizon)
        self.n_features_in_ = sys.p
        return self

    def predict(self, Y):
        """State estimates ``xhat(t)`` from outputs ``y(0..t-1)``."""
        check_is_fitted(self, "filters_")
        Y, single = check_signal(Y, self.system_.p, "Y")
        est, _ = node_estimates(self.system_, self.filters_, Y)
        return est[0] if single else est

    def score(self, Y, X):
        """Negative mean squared state error per step."""
        X, _ = check_signal(X, self.system_.n, "X")
        err = self.predict(Y).reshape(X.shape) - X
        return -float(np.mean(np.sum(err ** 2, axis=-1)))


class TeamEstimator(BaseEstimator):
    """Team estimator minimising an ``N x N`` inter-node weighted error."""

    def __init__(self, weight=None, memory=None, horizon=None, tol: float = 1e-9):
        self.weight = weight
        self.memory = memory
        self.horizon = horizon
        self.tol = tol

    def fit(self, system, y=None):
        sys = check_system(system, "estimation")
        W = np.eye(sys.N) if self.weight is None else self.weight
        self.system_ = sys
        self.lift_ = lift(sys, self.memory)
        self.team_ = build_team_lift(self.lift_, W)
        self.schedule_ = team_filter_iterate(self.team_, self.horizon, self.tol)
        self.cost_ = team_cost(self.team_, self.schedule_.moments[-1])
        self.n_features_in_ = sys.p
        return self

    def predict(self, Y):
        """Combined per-node estimates ``xc_i(t)`` stacked into ``(T, n)``."""
        check_is_fitted(self, "schedule_")
        Y, single = check_signal(Y, self.system_.p, "Y")
        est, _ = run_team(self.system_, self.team_, self.schedule_, Y)
        out = np.concatenate(combine_estimates(est, self.team_), axis=-1)
        return out[0] if single else out


class DistributedController(BaseEstimator):
    """Feedforward controller obtained from the dual estimation problem."""

    def __init__(self, memory=None, tol: float = 1e-11, max_iter: int = 10_000, horizon: int = 60):
        self.memory = memory
        self.tol = tol
        self.max_iter = max_iter
        self.horizon = horizon

    def fit(self, plant, y=None):
        sys = check_system(plant, "control")
        self.plant_ = sys
        self.controller_, self.dual_filters_ = synthesize_controller(
            sys, self.memory, tol=self.tol, max_iter=self.max_iter)
        self.coefficients_ = self.controller_.impulse_response(self.horizon)
        self.n_features_in_ = sys.n
        return self

    def transform(self, Wd):
        """Inputs ``u(t)`` from disturbance history ``w(0..t-1)``."""
        check_is_fitted(self, "controller_")
        Wd, single = check_signal(Wd, self.plant_.n, "disturbance")
        u = feedforward_inputs(self.controller_, Wd)
        return u[0] if single else u

    predict = transform


__all__ = ["DistributedKalmanEstimator", "TeamEstimator", "DistributedController",
           "check_system", "check_signal"]
