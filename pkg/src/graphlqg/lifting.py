"""Lift a plant with delayed information into a standard filtering problem.

The lifted state stacks the plant state with ``M`` shift-register stages of
past outputs::

    x_e(t) = (x(t), y(t-1), ..., y(t-M))

Node ``i`` reads the pair ``(j, k)`` -- output ``y_j(t - k + 1)`` -- whenever
``k - 1 >= delay(i, j)``.  Lag ``k = 1`` is the live measurement
``C_jj x_j + D_j w``; lag ``k >= 2`` reads register stage ``k - 1`` exactly.
Lags run over ``1 .. M + 1`` so ``M`` stages reach every delay up to ``M``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphnet import delay_matrix, max_finite_delay
from .sysmodel import BlockSystem, adjacency_of


@dataclass(frozen=True, eq=False)
class LiftedSystem:
    base: BlockSystem
    memory: int
    A_e: np.ndarray
    B_e: np.ndarray
    delays: np.ndarray
    pairs: tuple
    E: tuple
    D_e: tuple
    layout: dict

    @property
    def N(self) -> int:
        return self.base.N

    @property
    def n_e(self) -> int:
        return self.A_e.shape[0]

    @property
    def n_w(self) -> int:
        return self.B_e.shape[1]

    def register_slice(self, j: int, stage: int) -> slice:
        """Index range of ``y_j(t - stage)`` inside ``x_e(t)``."""
        return self.layout[f"y{j + 1}[t-{stage}]"]

    def pair_rows(self, i: int) -> list:
        """Row ranges of each pair inside ``E_i``."""
        out, r = [], 0
        for j, k in self.pairs[i]:
            p_j = self.base.output_dims[j]
            out.append(slice(r, r + p_j))
            r += p_j
        return out

    def layout_manifest(self) -> dict:
        return {name: [s.start, s.stop] for name, s in self.layout.items()}


def default_memory(sys: BlockSystem) -> int:
    return max(1, max_finite_delay(adjacency_of(sys)))


def lift(sys: BlockSystem, memory: int | None = None) -> LiftedSystem:
    """Build the extended system with ``memory`` register stages.

    Raises ``ValueError`` when ``memory`` is smaller than the largest finite
    delay, since some admissible measurement would then be unreachable.
    """
    adj = adjacency_of(sys)
    delays = delay_matrix(adj)
    need = max_finite_delay(adj)
    M = default_memory(sys) if memory is None else int(memory)
    if M < 1:
        raise ValueError("memory must be at least 1")
    if M < need:
        raise ValueError(f"memory {M} cannot represent delays up to {need}")

    n, p, m, N = sys.n, sys.p, sys.m, sys.N
    n_e = n + M * p
    layout = {}
    for i in range(N):
        layout[f"x{i + 1}"] = sys.state_slice(i)
    for k in range(1, M + 1):
        base = n + (k - 1) * p
        for j in range(N):
            s = sys.output_slice(j)
            layout[f"y{j + 1}[t-{k}]"] = slice(base + s.start, base + s.stop)

    A_e = np.zeros((n_e, n_e))
    A_e[:n, :n] = sys.A
    A_e[n:n + p, :n] = sys.C
    for k in range(2, M + 1):
        A_e[n + (k - 1) * p:n + k * p, n + (k - 2) * p:n + (k - 1) * p] = np.eye(p)
    B_e = np.zeros((n_e, m))
    B_e[:n] = sys.B
    B_e[n:n + p] = sys.D

    pairs, Es, Des = [], [], []
    for i in range(N):
        node_pairs, rows, drows = [], [], []
        for k in range(1, M + 2):
            for j in range(N):
                if np.isfinite(delays[i, j]) and k - 1 >= delays[i, j]:
                    node_pairs.append((j, k))
                    p_j = sys.output_dims[j]
                    row = np.zeros((p_j, n_e))
                    drow = np.zeros((p_j, m))
                    if k == 1:
                        row[:, sys.state_slice(j)] = sys.C_block(j)
                        drow[:] = sys.D_row(j)
                    else:
                        row[:, layout[f"y{j + 1}[t-{k - 1}]"]] = np.eye(p_j)
                    rows.append(row)
                    drows.append(drow)
        pairs.append(tuple(node_pairs))
        Es.append(np.vstack(rows))
        Des.append(np.vstack(drows))

    for arr in (A_e, B_e, *Es, *Des):
        arr.setflags(write=False)
    return LiftedSystem(sys, M, A_e, B_e, delays, tuple(pairs), tuple(Es), tuple(Des), layout)


def _check_node(L: LiftedSystem, i: int):
    if not (0 <= i < L.N):
        raise IndexError(f"node index {i} out of range for {L.N} nodes")


def measurement_map(L: LiftedSystem, i: int):
    """Return ``(E_i, D_e_i, pairs_i)`` for node ``i``.

    Pairs are ordered by lag first, then source node, mirroring the stacked
    delayed-measurement vector.
    """
    _check_node(L, i)
    return L.E[i], L.D_e[i], L.pairs[i]


def selector(L: LiftedSystem, i: int) -> np.ndarray:
    """``Gamma_i`` with ``Gamma_i @ x_e == x_i``."""
    _check_node(L, i)
    G = np.zeros((L.base.state_dims[i], L.n_e))
    G[:, L.base.state_slice(i)] = np.eye(L.base.state_dims[i])
    return G
