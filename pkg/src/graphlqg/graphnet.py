"""Adjacency-matrix arithmetic for interconnection graphs.

Entry ``(i, j)`` of an adjacency matrix counts the edges from node ``j`` to
node ``i``.  Every node carries at least one loop, so information that has
reached a node stays there: ``[A^s]_ij != 0`` implies ``[A^(s+1)]_ij != 0``.

Node indices are 0-based throughout the Python API.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Saturation cap for integer powers; only zero/nonzero matters downstream.
POWER_CAP = 2**31 - 1

#: Marker used in delay matrices for node pairs that never exchange information.
UNREACHABLE = np.inf


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """Square nonnegative integer matrix with at least one loop per node."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"adjacency matrix must be square and nonempty, got shape {arr.shape}")
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("adjacency entries must be integers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("adjacency entries must be nonnegative")
        if np.any(np.diag(arr) < 1):
            raise ValueError("every node needs at least one loop (diagonal entries >= 1)")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_edges(cls, arr, force_loops: bool = True) -> "AdjacencyMatrix":
        """Build from any integer-like matrix, optionally forcing diagonal loops."""
        arr = np.array(arr, dtype=np.int64)
        if force_loops and arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
            arr = arr.copy()
            idx = np.arange(arr.shape[0])
            arr[idx, idx] = np.maximum(arr[idx, idx], 1)
        return cls(arr)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AdjacencyMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"AdjacencyMatrix({self.entries.tolist()})"

    def to_csv(self, path) -> None:
        np.savetxt(path, self.entries, fmt="%d", delimiter=",")

    @classmethod
    def from_csv(cls, path) -> "AdjacencyMatrix":
        return cls(np.loadtxt(Path(path), delimiter=",", dtype=np.int64, ndmin=2))


def power(A: AdjacencyMatrix, s: int) -> np.ndarray:
    """Return ``A^s`` as an int64 array, saturating at :data:`POWER_CAP`.

    Entries are nonnegative, so float products are exact below 2**53 and any
    value that rounds is far above the cap.
    """
    if s < 0:
        raise ValueError("power must be nonnegative")
    base = A.entries.astype(np.float64)
    out = np.eye(A.N)
    for _ in range(int(s)):
        out = np.minimum(out @ base, POWER_CAP)
    return out.astype(np.int64)


def powers(A: AdjacencyMatrix, smax: int) -> np.ndarray:
    """Stack ``A^0 .. A^smax`` into an array of shape ``(smax + 1, N, N)``."""
    base = A.entries.astype(np.float64)
    out = np.empty((smax + 1, A.N, A.N), dtype=np.int64)
    cur = np.eye(A.N)
    for s in range(smax + 1):
        out[s] = cur
        cur = np.minimum(cur @ base, POWER_CAP)
    return out


def pattern(A: AdjacencyMatrix, s: int) -> np.ndarray:
    """Boolean mask of the nonzero entries of ``A^s``."""
    return power(A, s) != 0


def patterns(A: AdjacencyMatrix, smax: int) -> np.ndarray:
    """Boolean masks for lags ``0 .. smax``; shape ``(smax + 1, N, N)``."""
    return powers(A, smax) != 0


def delay_matrix(A: AdjacencyMatrix) -> np.ndarray:
    """Minimal lag at which node ``j`` can influence node ``i``.

    Returns a float array holding integer delays and :data:`UNREACHABLE`
    (``inf``) where no path exists.  Lags beyond ``N - 1`` never add support.
    """
    N = A.N
    out = np.full((N, N), UNREACHABLE)
    for s, mask in enumerate(patterns(A, N - 1)):
        out[np.isinf(out) & mask] = s
    return out


def max_finite_delay(A: AdjacencyMatrix) -> int:
    d = delay_matrix(A)
    return int(d[np.isfinite(d)].max())


def transpose_graph(A: AdjacencyMatrix) -> AdjacencyMatrix:
    """Adjacency matrix of the graph with every arrow reversed."""
    return AdjacencyMatrix(A.entries.T.copy())


def chain(N: int = 3) -> AdjacencyMatrix:
    """Directed chain where node ``i + 1`` feeds node ``i``."""
    return AdjacencyMatrix(np.eye(N, dtype=np.int64) + np.eye(N, k=1, dtype=np.int64))


def cycle(N: int = 3) -> AdjacencyMatrix:
    """Chain closed by an edge from node 0 into the last node."""
    arr = np.array(chain(N).entries)
    if N > 1:
        arr[N - 1, 0] = 1
    return AdjacencyMatrix(arr)
