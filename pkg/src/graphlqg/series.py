"""Truncated block-partitioned matrix power series with a sparsity law.

A :class:`MatrixSeries` stores the coefficients ``g(0), ..., g(T)`` of a
causal generating function ``sum_t g(t) lambda^t``.  When a law (an
adjacency matrix) is attached, block ``(i, j)`` of ``g(t)`` is held at exact
zero wherever ``[A^t]_ij == 0``; every arithmetic operation re-applies the
mask so closure checks never see floating-point dust.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphnet import AdjacencyMatrix, patterns, transpose_graph


class LawMismatchError(ValueError):
    """Raised when two operands carry different sparsity laws."""


def expand_mask(block_mask: np.ndarray, row_dims, col_dims) -> np.ndarray:
    """Blow up an ``(..., N, N)`` block mask to entry level."""
    rows = np.repeat(np.arange(len(row_dims)), row_dims)
    cols = np.repeat(np.arange(len(col_dims)), col_dims)
    return block_mask[..., rows[:, None], cols[None, :]]


def law_mask(law: AdjacencyMatrix, horizon: int, row_dims, col_dims) -> np.ndarray:
    """Entry-level support mask of ``S_law`` for lags ``0 .. horizon``."""
    return expand_mask(patterns(law, horizon), row_dims, col_dims)


@dataclass(frozen=True, eq=False)
class MatrixSeries:
    """Coefficients ``g(0..T)`` with row/column block partitions.

    ``coeffs`` has shape ``(T + 1, sum(row_dims), sum(col_dims))``.
    """

    coeffs: np.ndarray
    row_dims: tuple
    col_dims: tuple
    law: AdjacencyMatrix | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3:
            raise ValueError(f"coeffs must be 3-D (lags, rows, cols), got shape {c.shape}")
        row_dims = tuple(int(d) for d in self.row_dims)
        col_dims = tuple(int(d) for d in self.col_dims)
        if sum(row_dims) != c.shape[1] or sum(col_dims) != c.shape[2]:
            raise ValueError(
                f"partitions {row_dims} x {col_dims} do not match coefficient shape {c.shape[1:]}"
            )
        if any(d < 0 for d in row_dims + col_dims):
            raise ValueError("block dimensions must be nonnegative")
        if self.law is not None:
            if self.law.N != len(row_dims) or self.law.N != len(col_dims):
                raise ValueError(
                    f"law has {self.law.N} nodes but partitions have "
                    f"{len(row_dims)} x {len(col_dims)} blocks"
                )
            forbidden = ~law_mask(self.law, c.shape[0] - 1, row_dims, col_dims)
            if np.any(c[forbidden] != 0):
                raise ValueError("coefficients violate the attached sparsity law")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "row_dims", row_dims)
        object.__setattr__(self, "col_dims", col_dims)

    @property
    def horizon(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[1:]

    def __getitem__(self, t):
        return self.coeffs[t]

    def block(self, t: int, i: int, j: int) -> np.ndarray:
        r0 = sum(self.row_dims[:i])
        c0 = sum(self.col_dims[:j])
        return self.coeffs[t, r0:r0 + self.row_dims[i], c0:c0 + self.col_dims[j]]

    def truncate(self, horizon: int) -> "MatrixSeries":
        if horizon > self.horizon:
            raise ValueError("cannot extend a series by truncation")
        return MatrixSeries(self.coeffs[: horizon + 1], self.row_dims, self.col_dims, self.law)

    def with_law(self, law: AdjacencyMatrix | None) -> "MatrixSeries":
        return MatrixSeries(self.coeffs, self.row_dims, self.col_dims, law)

    def _binary_law(self, other):
        return _common_law(self.law, other.law)

    def __add__(self, other: "MatrixSeries") -> "MatrixSeries":
        if self.row_dims != other.row_dims or self.col_dims != other.col_dims:
            raise ValueError("partition mismatch in series addition")
        T = min(self.horizon, other.horizon)
        return masked(self.coeffs[: T + 1] + other.coeffs[: T + 1],
                      self.row_dims, self.col_dims, self._binary_law(other))

    def __neg__(self) -> "MatrixSeries":
        return MatrixSeries(-self.coeffs, self.row_dims, self.col_dims, self.law)

    def __sub__(self, other: "MatrixSeries") -> "MatrixSeries":
        return self + (-other)

    def __matmul__(self, other: "MatrixSeries") -> "MatrixSeries":
        return multiply(self, other)

    def scale(self, c: float) -> "MatrixSeries":
        return MatrixSeries(c * self.coeffs, self.row_dims, self.col_dims, self.law)

    def shift(self, k: int = 1) -> "MatrixSeries":
        """Multiply by ``lambda^k`` keeping the horizon fixed."""
        c = np.zeros_like(self.coeffs)
        if k <= self.horizon:
            c[k:] = self.coeffs[: self.horizon + 1 - k]
        return masked(c, self.row_dims, self.col_dims, self.law)

    def left_multiply(self, M: np.ndarray, row_dims=None) -> "MatrixSeries":
        """Constant matrix times series, result keeps the law."""
        row_dims = self.row_dims if row_dims is None else row_dims
        return masked(np.einsum("ab,tbc->tac", M, self.coeffs), row_dims, self.col_dims, self.law)

    def to_dir(self, path) -> None:
        """Write one CSV per lag plus ``manifest.json``."""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        files = []
        for t, g in enumerate(self.coeffs):
            name = f"lag_{t:04d}.csv"
            np.savetxt(path / name, g, delimiter=",", fmt="%.17g")
            files.append(name)
        manifest = {
            "horizon": self.horizon,
            "shape": list(self.shape),
            "row_dims": list(self.row_dims),
            "col_dims": list(self.col_dims),
            "law": None if self.law is None else self.law.entries.tolist(),
            "files": files,
        }
        (path / "manifest.json").write_text(json.dumps(manifest, indent=2))

    @classmethod
    def from_dir(cls, path) -> "MatrixSeries":
        path = Path(path)
        manifest = json.loads((path / "manifest.json").read_text())
        rows, cols = manifest["shape"]
        coeffs = np.stack([
            np.loadtxt(path / f, delimiter=",", ndmin=2).reshape(rows, cols)
            for f in manifest["files"]
        ])
        law = None if manifest["law"] is None else AdjacencyMatrix(manifest["law"])
        return cls(coeffs, manifest["row_dims"], manifest["col_dims"], law)


def _common_law(a, b):
    if a is None:
        return b
    if b is None or a == b:
        return a
    raise LawMismatchError(f"operands carry different laws: {a} vs {b}")


def masked(coeffs, row_dims, col_dims, law) -> MatrixSeries:
    """Build a series after zeroing every block the law forbids."""
    coeffs = np.array(coeffs, dtype=float)
    if law is not None:
        coeffs[~law_mask(law, coeffs.shape[0] - 1, row_dims, col_dims)] = 0.0
    return MatrixSeries(coeffs, row_dims, col_dims, law)


def identity(dims, horizon: int, law: AdjacencyMatrix | None = None) -> MatrixSeries:
    n = sum(dims)
    c = np.zeros((horizon + 1, n, n))
    c[0] = np.eye(n)
    return MatrixSeries(c, dims, dims, law)


def zeros(row_dims, col_dims, horizon: int, law: AdjacencyMatrix | None = None) -> MatrixSeries:
    return MatrixSeries(np.zeros((horizon + 1, sum(row_dims), sum(col_dims))), row_dims, col_dims, law)


def polynomial(terms: dict, row_dims, col_dims, horizon: int,
               law: AdjacencyMatrix | None = None) -> MatrixSeries:
    """Series with the given ``{lag: matrix}`` coefficients, zero elsewhere."""
    c = np.zeros((horizon + 1, sum(row_dims), sum(col_dims)))
    for t, M in terms.items():
        if t <= horizon:
            c[t] = M
    return masked(c, row_dims, col_dims, law)


def multiply(G1: MatrixSeries, G2: MatrixSeries) -> MatrixSeries:
    """Cauchy product ``g3(t) = sum_s g1(s) g2(t - s)`` truncated at the shorter horizon."""
    if G1.col_dims != G2.row_dims:
        raise ValueError(f"inner partitions differ: {G1.col_dims} vs {G2.row_dims}")
    law = _common_law(G1.law, G2.law)
    T = min(G1.horizon, G2.horizon)
    a, b = G1.coeffs[: T + 1], G2.coeffs[: T + 1]
    out = np.zeros((T + 1, a.shape[1], b.shape[2]))
    for t in range(T + 1):
        out[t] = np.einsum("sij,sjk->ik", a[: t + 1], b[t::-1])
    return masked(out, G1.row_dims, G2.col_dims, law)


def feedback_inverse(H2: MatrixSeries, H1: MatrixSeries) -> MatrixSeries:
    """Evaluate ``H2 (I - H1)^{-1}`` for a strictly causal square ``H1``.

    Uses ``g(t) = h2(t) + sum_{s=1..t} g(t - s) h1(s)``.
    """
    if H1.row_dims != H1.col_dims:
        raise ValueError("H1 must be square with matching partitions")
    if H2.col_dims != H1.row_dims:
        raise ValueError(f"partition mismatch: {H2.col_dims} vs {H1.row_dims}")
    if np.any(H1.coeffs[0] != 0):
        raise ValueError("H1 must be strictly causal (h1(0) == 0)")
    law = _common_law(H1.law, H2.law)
    T = min(H1.horizon, H2.horizon)
    h1, h2 = H1.coeffs, H2.coeffs
    mask = None if law is None else law_mask(law, T, H2.row_dims, H2.col_dims)
    out = np.zeros((T + 1,) + H2.shape)
    for t in range(T + 1):
        acc = h2[t].copy()
        if t:
            acc += np.einsum("sij,sjk->ik", out[t - 1::-1], h1[1: t + 1])
        if mask is not None:
            acc[~mask[t]] = 0.0
        out[t] = acc
    return MatrixSeries(out, H2.row_dims, H2.col_dims, law)


def transpose(G: MatrixSeries) -> MatrixSeries:
    """Coefficientwise transpose; the law follows the reversed graph."""
    law = None if G.law is None else transpose_graph(G.law)
    return MatrixSeries(np.transpose(G.coeffs, (0, 2, 1)), G.col_dims, G.row_dims, law)


def membership(G: MatrixSeries, A: AdjacencyMatrix, tol: float = 0.0) -> bool:
    """True when every block forbidden by ``A`` has max-abs entry ``<= tol``."""
    if A.N != len(G.row_dims) or A.N != len(G.col_dims):
        raise ValueError("partition count does not match the adjacency matrix")
    forbidden = ~law_mask(A, G.horizon, G.row_dims, G.col_dims)
    if not forbidden.any():
        return True
    return bool(np.max(np.abs(G.coeffs[forbidden])) <= tol)


def norm(G: MatrixSeries) -> float:
    """``sqrt(sum_t ||g(t)||_F^2)``."""
    return float(np.sqrt(np.sum(G.coeffs ** 2)))
