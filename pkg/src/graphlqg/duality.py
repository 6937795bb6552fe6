"""Estimation/control duality over graphs.

Sign conventions: state feedback ``u = K(q^-1) x`` and feedforward
``u(t) = -G(q^-1) w(t-1)``.  The optimal feedforward controller of a control
plant is the transposed optimal estimator of the dual plant,
``g(s) = l(s)^T``, and it splits into ``N`` controllers, one per
disturbance channel ``w_i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import series as ser
from .kalman import FilterRealization, synthesize_filters
from .lifting import LiftedSystem, lift
from .series import MatrixSeries
from .sysmodel import BlockSystem, ProblemSpec, adjacency_of, dualize


def _law_of(G: MatrixSeries, law):
    law = G.law if law is None else law
    if law is None:
        raise ValueError("a sparsity law is required (attach one to the series or pass law=)")
    if not ser.membership(G, law, 0.0):
        raise ValueError("series violates the sparsity law")
    return law


def _A_lambda(A, dims, horizon, law) -> MatrixSeries:
    c = np.zeros((horizon + 1, A.shape[0], A.shape[1]))
    if horizon >= 1:
        c[1] = A
    try:
        return MatrixSeries(c, dims, dims, law)
    except ValueError as exc:
        raise ValueError("A does not respect the sparsity law") from exc


def feedback_to_feedforward(K: MatrixSeries, A, B, law=None) -> MatrixSeries:
    """``G = -K (I - A lambda - B K lambda)^{-1}``."""
    law = _law_of(K, law)
    K = K.with_law(law)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n_dims = K.col_dims
    H1 = _A_lambda(A, n_dims, K.horizon, law) + K.left_multiply(B, row_dims=n_dims).shift(1)
    return -ser.feedback_inverse(K, H1)


def feedforward_to_feedback(G: MatrixSeries, A, B, law=None) -> MatrixSeries:
    """``K = -G (I - B lambda G)^{-1} (I - A lambda)``.

    This is the inverse of :func:`feedback_to_feedforward` under
    ``u(t) = -G w(t-1)``; written for ``-G`` it reads
    ``G (I + B lambda G)^{-1} (I - A lambda)``.
    """
    law = _law_of(G, law)
    G = G.with_law(law)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n_dims = G.col_dims
    H1 = G.left_multiply(B, row_dims=n_dims).shift(1)
    X = ser.feedback_inverse(G, H1)
    I_minus_A = ser.identity(n_dims, G.horizon, law) - _A_lambda(A, n_dims, G.horizon, law)
    return -ser.multiply(X, I_minus_A)


@dataclass(frozen=True, eq=False)
class NodeController:
    """Controller driven by ``w_i``: ``z+ = A_e^T z + E_i^T v + Gamma_i^T w_i``, ``v = -K_i^T z``.

    Component ``(j, k)`` of ``v`` feeds ``u_j`` after ``k - 1`` steps.
    """

    node: int
    A_T: np.ndarray
    E_T: np.ndarray
    Gamma_T: np.ndarray
    K_T: np.ndarray
    pairs: tuple
    pair_rows: tuple

    @property
    def closed_loop(self) -> np.ndarray:
        return self.A_T - self.E_T @ self.K_T

    @property
    def output(self) -> np.ndarray:
        return -self.K_T


@dataclass(frozen=True, eq=False)
class ControllerRealization:
    """Sum of ``N`` node controllers for the primal control plant."""

    plant: BlockSystem
    nodes: tuple
    dual_lift: LiftedSystem

    @property
    def max_delay(self) -> int:
        return max(k for nc in self.nodes for _, k in nc.pairs) - 1

    def impulse_response(self, horizon: int) -> MatrixSeries:
        """Feedforward coefficients ``g(0..horizon)`` with ``u(t) = -sum g(s) w(t-1-s)``."""
        P = self.plant
        g = np.zeros((horizon + 1, P.m, P.n))
        for nc in self.nodes:
            cols = P.state_slice(nc.node)
            resp = np.empty((horizon + 1, nc.K_T.shape[0], nc.Gamma_T.shape[1]))
            cur = nc.Gamma_T.copy()
            Fc = nc.closed_loop
            for s in range(horizon + 1):
                resp[s] = nc.output @ cur
                cur = Fc @ cur
            for (j, k), rows in zip(nc.pairs, nc.pair_rows):
                if k - 1 > horizon:
                    continue
                g[k - 1:, P.input_slice(j), cols] -= resp[: horizon + 2 - k, rows, :]
        return MatrixSeries(g, P.input_dims, P.state_dims, adjacency_of(P))


def dual_estimator_to_controller(filters, L: LiftedSystem) -> ControllerRealization:
    """Transpose node filters designed for the dual plant into node controllers."""
    if len(filters) != L.N:
        raise ValueError(f"expected {L.N} filters, got {len(filters)}")
    nodes = []
    for f in sorted(filters, key=lambda f: f.node):
        if f.F.shape != L.A_e.shape or f.E.shape != L.E[f.node].shape:
            raise ValueError(f"filter for node {f.node} does not match the lift dimensions")
        nodes.append(NodeController(
            node=f.node, A_T=L.A_e.T.copy(), E_T=f.E.T.copy(), Gamma_T=f.H.T.copy(),
            K_T=f.G_in.T.copy(), pairs=f.pairs, pair_rows=tuple(L.pair_rows(f.node)),
        ))
    return ControllerRealization(dualize(L.base), tuple(nodes), L)


def synthesize_controller(plant: BlockSystem, memory: int | None = None, tol: float = 1e-11,
                          max_iter: int = 10_000):
    """Optimal distributed feedforward controller via the dual estimation problem.

    Returns ``(controller, dual_filters)``.
    """
    L = lift(dualize(plant), memory)
    filters = synthesize_filters(L, tol=tol, max_iter=max_iter)
    return dual_estimator_to_controller(filters, L), filters


def dual_problem(p: ProblemSpec) -> ProblemSpec:
    """Map an estimation problem to the feedforward problem on the dual plant and back."""
    swap = {"estimation": "feedforward", "feedforward": "estimation"}
    if p.kind not in swap:
        raise ValueError(f"dual_problem supports estimation and feedforward, not {p.kind!r}")
    return ProblemSpec(swap[p.kind], dualize(p.system), weight=p.weight,
                       horizon=p.horizon, tol=p.tol)


__all__ = [
    "feedback_to_feedforward", "feedforward_to_feedback", "NodeController",
    "ControllerRealization", "dual_estimator_to_controller", "synthesize_controller",
    "dual_problem", "FilterRealization",
]
