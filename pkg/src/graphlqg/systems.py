"""Ready-made plants: the three-node chain and cycle, scalar cases, random draws."""
from __future__ import annotations

import numpy as np

from .graphnet import AdjacencyMatrix, chain, cycle
from .sysmodel import BlockSystem


def _independent_noise(A_blocks, C_blocks, proc_gain=1.0, meas_gain=1.0) -> BlockSystem:
    """Estimation plant where node ``i`` owns process noise and measurement noise.

    ``w_i = (process_i, measurement_i)``, so ``B_ii = [g I, 0]`` and
    ``D_ii = [0, r I]``.
    """
    N = len(C_blocks)
    C_blocks = [np.atleast_2d(np.asarray(c, dtype=float)) for c in C_blocks]
    n_dims = [c.shape[1] for c in C_blocks]
    p_dims = [c.shape[0] for c in C_blocks]
    B_blocks = [np.hstack([proc_gain * np.eye(n_dims[i]), np.zeros((n_dims[i], p_dims[i]))])
                for i in range(N)]
    m_dims = [n_dims[i] + p_dims[i] for i in range(N)]
    D = np.zeros((sum(p_dims), sum(m_dims)))
    r = c = 0
    for i in range(N):
        D[r:r + p_dims[i], c + n_dims[i]:c + m_dims[i]] = meas_gain * np.eye(p_dims[i])
        r += p_dims[i]
        c += m_dims[i]
    return BlockSystem.from_blocks(A_blocks, B_blocks, C_blocks, D)


def _scalar_blocks(adj: AdjacencyMatrix, diag: float, off: float):
    N = adj.N
    return [[(diag if i == j else off) if adj.entries[i, j] else None for j in range(N)]
            for i in range(N)]


def chain_system(diag: float = 0.4, off: float = 0.2, N: int = 3) -> BlockSystem:
    """Scalar nodes on the directed chain with unit process and measurement noise."""
    return _independent_noise(_scalar_blocks(chain(N), diag, off), [[[1.0]]] * N)


def cycle_system(diag: float = 0.4, off: float = 0.2, N: int = 3) -> BlockSystem:
    """The chain closed by the edge from node 1 into node N."""
    return _independent_noise(_scalar_blocks(cycle(N), diag, off), [[[1.0]]] * N)


def scalar_system(a: float = 0.5, q: float = 1.0, r: float = 1.0) -> BlockSystem:
    """Single node ``x+ = a x + sqrt(q) w1``, ``y = x + sqrt(r) w2``."""
    return _independent_noise([[a]], [[[1.0]]], np.sqrt(q), np.sqrt(r))


def random_A(rng: np.random.Generator, adj: AdjacencyMatrix, state_dims, rho: float = 0.8) -> np.ndarray:
    """Random matrix with block support ``adj`` scaled to spectral radius ``rho``."""
    n = sum(state_dims)
    off = np.concatenate([[0], np.cumsum(state_dims)])
    A = np.zeros((n, n))
    for i in range(adj.N):
        for j in range(adj.N):
            if adj.entries[i, j]:
                A[off[i]:off[i + 1], off[j]:off[j + 1]] = rng.standard_normal((state_dims[i], state_dims[j]))
    radius = np.max(np.abs(np.linalg.eigvals(A)))
    if radius > 0:
        A *= rho / radius
    return A


def _blocks(A, dims):
    off = np.concatenate([[0], np.cumsum(dims)])
    N = len(dims)
    return [[A[off[i]:off[i + 1], off[j]:off[j + 1]] for j in range(N)] for i in range(N)]


def random_estimation_system(rng: np.random.Generator, adj: AdjacencyMatrix, state_dims=None,
                             output_dims=None, rho: float = 0.8, meas_gain: float = 1.0) -> BlockSystem:
    """Random estimation plant with per-node process and measurement noise."""
    N = adj.N
    state_dims = [1] * N if state_dims is None else list(state_dims)
    output_dims = [1] * N if output_dims is None else list(output_dims)
    A = random_A(rng, adj, state_dims, rho)
    C_blocks = []
    for i in range(N):
        Ci = rng.standard_normal((output_dims[i], state_dims[i]))
        while np.linalg.matrix_rank(Ci) < output_dims[i]:
            Ci = rng.standard_normal((output_dims[i], state_dims[i]))
        C_blocks.append(Ci)
    return _independent_noise(_blocks(A, state_dims), C_blocks, meas_gain=meas_gain)


def random_control_system(rng: np.random.Generator, adj: AdjacencyMatrix, state_dims=None,
                          input_dims=None, rho: float = 0.8, input_weight: float = 1.0) -> BlockSystem:
    """Random control plant with ``z_i = (x_i, r u_i)``, so ``C_ii = [I; 0]`` and ``D_ii = [0; r I]``."""
    N = adj.N
    state_dims = [1] * N if state_dims is None else list(state_dims)
    input_dims = [1] * N if input_dims is None else list(input_dims)
    A = random_A(rng, adj, state_dims, rho)
    B_blocks, C_blocks = [], []
    for i in range(N):
        Bi = rng.standard_normal((state_dims[i], input_dims[i]))
        while np.linalg.matrix_rank(Bi) < input_dims[i]:
            Bi = rng.standard_normal((state_dims[i], input_dims[i]))
        B_blocks.append(Bi)
        C_blocks.append(np.vstack([np.eye(state_dims[i]), np.zeros((input_dims[i], state_dims[i]))]))
    p_dims = [state_dims[i] + input_dims[i] for i in range(N)]
    D = np.zeros((sum(p_dims), sum(input_dims)))
    r = c = 0
    for i in range(N):
        D[r + state_dims[i]:r + p_dims[i], c:c + input_dims[i]] = input_weight * np.eye(input_dims[i])
        r += p_dims[i]
        c += input_dims[i]
    return BlockSystem.from_blocks(_blocks(A, state_dims), B_blocks, C_blocks, D)


def random_spd(rng: np.random.Generator, n: int, floor: float = 0.2) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return M @ M.T / n + floor * np.eye(n)
