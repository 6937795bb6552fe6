"""Interconnected plants over a graph.

A :class:`BlockSystem` holds ``(A, B, C, D)`` with ``A`` partitioned into
``N x N`` blocks and ``B``, ``C`` block diagonal.  The same data plays two
roles:

* estimation plant: ``x+ = A x + B w``, ``y = C x + D w``, ``w ~ N(0, noise_cov)``;
  the target is the full state ``x``.
* control plant: ``x+ = A x + B u + w``, ``z = C x + D u``; the disturbance
  enters every state directly.

:func:`dualize` maps one role to the other.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphnet import AdjacencyMatrix
from .series import MatrixSeries

RANK_RTOL = 1e-10

ESTIMATION_KINDS = ("estimation", "weighted_estimation")
CONTROL_KINDS = ("state_feedback", "feedforward", "correlated_feedback")
KINDS = ("state_feedback", "feedforward", "estimation", "weighted_estimation", "correlated_feedback")


def _offsets(dims):
    return np.concatenate([[0], np.cumsum(dims)]).astype(int)


def block_diag_mask(row_dims, col_dims) -> np.ndarray:
    rows = np.repeat(np.arange(len(row_dims)), row_dims)
    cols = np.repeat(np.arange(len(col_dims)), col_dims)
    return rows[:, None] == cols[None, :]


@dataclass(frozen=True, eq=False)
class BlockSystem:
    """Interconnected plant with per-node state, input and output dimensions.

    ``state_dims[i]``, ``input_dims[i]``, ``output_dims[i]`` give ``n_i``,
    ``m_i``, ``p_i``.  ``noise_cov=None`` means identity disturbance covariance.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_dims: tuple
    input_dims: tuple
    output_dims: tuple
    noise_cov: np.ndarray | None = field(default=None)

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            arr = np.array(np.atleast_2d(getattr(self, name)), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("state_dims", "input_dims", "output_dims"):
            object.__setattr__(self, name, tuple(int(d) for d in getattr(self, name)))
        if self.noise_cov is not None:
            cov = np.array(np.atleast_2d(self.noise_cov), dtype=float)
            cov.setflags(write=False)
            object.__setattr__(self, "noise_cov", cov)
        if not (len(self.state_dims) == len(self.input_dims) == len(self.output_dims)):
            raise ValueError("per-node dimension lists must have equal length")
        n, m, p = self.n, self.m, self.p
        expected = {"A": (n, n), "B": (n, m), "C": (p, n), "D": (p, m)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @classmethod
    def from_blocks(cls, A_blocks, B_blocks, C_blocks, D, noise_cov=None) -> "BlockSystem":
        """Assemble from nested ``A_blocks[i][j]`` and per-node ``B``/``C`` blocks."""
        B_blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in B_blocks]
        C_blocks = [np.atleast_2d(np.asarray(c, dtype=float)) for c in C_blocks]
        N = len(B_blocks)
        n_dims = [b.shape[0] for b in B_blocks]
        m_dims = [b.shape[1] for b in B_blocks]
        p_dims = [c.shape[0] for c in C_blocks]
        A = np.zeros((sum(n_dims), sum(n_dims)))
        no = _offsets(n_dims)
        for i in range(N):
            for j in range(N):
                blk = A_blocks[i][j]
                if blk is None:
                    continue
                A[no[i]:no[i + 1], no[j]:no[j + 1]] = np.atleast_2d(blk)
        B = _block_diag(B_blocks)
        C = _block_diag(C_blocks)
        return cls(A, B, C, D, n_dims, m_dims, p_dims, noise_cov)

    @property
    def N(self) -> int:
        return len(self.state_dims)

    @property
    def n(self) -> int:
        return sum(self.state_dims)

    @property
    def m(self) -> int:
        return sum(self.input_dims)

    @property
    def p(self) -> int:
        return sum(self.output_dims)

    def state_slice(self, i: int) -> slice:
        o = _offsets(self.state_dims)
        return slice(o[i], o[i + 1])

    def input_slice(self, i: int) -> slice:
        o = _offsets(self.input_dims)
        return slice(o[i], o[i + 1])

    def output_slice(self, i: int) -> slice:
        o = _offsets(self.output_dims)
        return slice(o[i], o[i + 1])

    def A_block(self, i, j):
        return self.A[self.state_slice(i), self.state_slice(j)]

    def B_block(self, i):
        return self.B[self.state_slice(i), self.input_slice(i)]

    def C_block(self, i):
        return self.C[self.output_slice(i), self.state_slice(i)]

    def D_row(self, i):
        return self.D[self.output_slice(i)]

    def covariance(self, dim: int) -> np.ndarray:
        """Disturbance covariance, defaulting to ``I_dim``."""
        if self.noise_cov is None:
            return np.eye(dim)
        if self.noise_cov.shape != (dim, dim):
            raise ValueError(f"noise_cov has shape {self.noise_cov.shape}, expected {(dim, dim)}")
        return np.array(self.noise_cov)

    def replace(self, **changes) -> "BlockSystem":
        kw = dict(A=self.A, B=self.B, C=self.C, D=self.D, state_dims=self.state_dims,
                  input_dims=self.input_dims, output_dims=self.output_dims,
                  noise_cov=self.noise_cov)
        kw.update(changes)
        return BlockSystem(**kw)


def _block_diag(blocks):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def _rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s >= RANK_RTOL * s[0])) if s[0] > 0 else 0


def validate(sys: BlockSystem, role: str | None = None) -> list[str]:
    """List violated invariants; an empty list means the system is valid.

    ``role`` selects the rank assumption: ``"control"`` checks that each
    ``B_ii`` has full column rank, ``"estimation"`` that each ``C_ii`` has
    full row rank, ``None`` checks both.
    """
    problems = []
    if role not in (None, "control", "estimation"):
        raise ValueError(f"unknown role {role!r}")
    for name, M in (("A", sys.A), ("B", sys.B), ("C", sys.C), ("D", sys.D)):
        if not np.all(np.isfinite(M)):
            problems.append(f"{name} contains non-finite entries")
    off_B = ~block_diag_mask(sys.state_dims, sys.input_dims)
    if np.any(sys.B[off_B] != 0):
        problems.append("B is not block diagonal")
    off_C = ~block_diag_mask(sys.output_dims, sys.state_dims)
    if np.any(sys.C[off_C] != 0):
        problems.append("C is not block diagonal")
    for i in range(sys.N):
        if role in (None, "control"):
            Bi = sys.B_block(i)
            if _rank(Bi) < Bi.shape[1]:
                problems.append(f"B_{i + 1}{i + 1} ({Bi.shape[0]}x{Bi.shape[1]}) lacks full column rank")
        if role in (None, "estimation"):
            Ci = sys.C_block(i)
            if _rank(Ci) < Ci.shape[0]:
                problems.append(f"C_{i + 1}{i + 1} ({Ci.shape[0]}x{Ci.shape[1]}) lacks full row rank")
    if sys.noise_cov is not None:
        cov = sys.noise_cov
        if cov.shape[0] != cov.shape[1]:
            problems.append("noise_cov is not square")
        elif not np.allclose(cov, cov.T, atol=1e-12):
            problems.append("noise_cov is not symmetric")
        elif np.linalg.eigvalsh(cov).min() <= 0:
            problems.append("noise_cov is not positive definite")
    return problems


def adjacency_of(sys: BlockSystem) -> AdjacencyMatrix:
    """Graph with an arrow ``j -> i`` whenever ``A_ij`` has a nonzero entry."""
    N = sys.N
    arr = np.zeros((N, N), dtype=np.int64)
    for i in range(N):
        for j in range(N):
            if np.any(np.abs(sys.A_block(i, j)) > 0):
                arr[i, j] = 1
    return AdjacencyMatrix.from_edges(arr, force_loops=True)


def impulse_response(sys: BlockSystem, horizon: int) -> MatrixSeries:
    """Coefficients ``D, CB, CAB, ...`` of ``C (qI - A)^{-1} B + D``.

    The graph law is attached when the response respects it, which requires a
    block-diagonal ``D``; otherwise the series is returned without a law.
    """
    coeffs = np.zeros((horizon + 1, sys.p, sys.m))
    coeffs[0] = sys.D
    AkB = sys.B.copy()
    for t in range(1, horizon + 1):
        coeffs[t] = sys.C @ AkB
        AkB = sys.A @ AkB
    law = adjacency_of(sys)
    G = MatrixSeries(coeffs, sys.output_dims, sys.input_dims)
    try:
        return G.with_law(law)
    except ValueError:
        return G


def state_response(sys: BlockSystem, horizon: int) -> np.ndarray:
    """``h(t) = A^{t-1} B`` for ``t >= 1`` (``h(0) = 0``): disturbance to state."""
    out = np.zeros((horizon + 1, sys.n, sys.m))
    AkB = sys.B.copy()
    for t in range(1, horizon + 1):
        out[t] = AkB
        AkB = sys.A @ AkB
    return out


def dualize(sys: BlockSystem) -> BlockSystem:
    """Swap ``(A, B, C, D) -> (A^T, C^T, B^T, D^T)``; arrows of the graph reverse."""
    return BlockSystem(
        sys.A.T, sys.C.T, sys.B.T, sys.D.T,
        state_dims=sys.state_dims, input_dims=sys.output_dims, output_dims=sys.input_dims,
        noise_cov=None,
    )


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A problem kind paired with its plant and optional weight.

    ``weight`` is the error weight for ``weighted_estimation`` and the
    disturbance covariance for ``correlated_feedback``.
    """

    kind: str
    system: BlockSystem
    weight: np.ndarray | None = None
    horizon: int = 60
    tol: float = 1e-11

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}; expected one of {KINDS}")
        if self.weight is not None:
            W = np.array(np.atleast_2d(self.weight), dtype=float)
            if W.shape[0] != W.shape[1] or not np.allclose(W, W.T, atol=1e-12):
                raise ValueError("weight must be symmetric")
            if np.linalg.eigvalsh(W).min() <= 0:
                raise ValueError("weight must be positive definite")
            W.setflags(write=False)
            object.__setattr__(self, "weight", W)
        if self.kind in ("weighted_estimation", "correlated_feedback") and self.weight is None:
            raise ValueError(f"kind {self.kind!r} requires a weight")

    @property
    def role(self) -> str:
        return "estimation" if self.kind in ESTIMATION_KINDS else "control"

    def diagnostics(self) -> list[str]:
        """Role-aware validation including the identity-noise rule for unweighted kinds."""
        out = validate(self.system, self.role)
        if self.kind in ("state_feedback", "feedforward", "estimation") and self.system.noise_cov is not None:
            if not np.allclose(self.system.noise_cov, np.eye(len(self.system.noise_cov))):
                out.append(f"kind {self.kind!r} requires identity disturbance covariance")
        if self.kind == "correlated_feedback" and self.weight.shape != (self.system.n, self.system.n):
            out.append("correlated_feedback weight must be n x n")
        return out
