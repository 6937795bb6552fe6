"""Monte-Carlo simulation, analytic costs and least-squares oracles.

The oracles solve the finite-horizon structured problems directly from the
plant's impulse responses, with no lifting and no Riccati recursion, and so
serve as independent references for the synthesis modules.

Random streams: trial ``k`` of a run with seed ``s`` draws from
``numpy.random.default_rng(SeedSequence(s).spawn(trials)[k])``, i.e. the
child sequence with spawn key ``(k,)``.  Results are bit-identical for a
given seed and do not depend on how trials are batched.
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .graphnet import AdjacencyMatrix, patterns
from .linalg import spectral_radius, stationary_covariance, symmetrize
from .series import MatrixSeries, expand_mask
from .sysmodel import BlockSystem, adjacency_of

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20_240_917
COND_LIMIT = 1e12


@dataclass(frozen=True)
class SimReport:
    trials: int
    horizon: int
    node_costs: tuple
    total_cost: float
    stderr: float
    node_stderr: tuple
    seed: int
    diverged: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_table(self) -> str:
        lines = [f"{'node':>6} {'mean cost':>14} {'std err':>12}"]
        for i, (c, s) in enumerate(zip(self.node_costs, self.node_stderr)):
            lines.append(f"{i + 1:>6} {c:>14.6f} {s:>12.6f}")
        lines.append(f"{'total':>6} {self.total_cost:>14.6f} {self.stderr:>12.6f}")
        lines.append(f"trials={self.trials} horizon={self.horizon} seed={self.seed}"
                     + (" DIVERGED" if self.diverged else ""))
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class OracleSolution:
    """Optimal finite-horizon coefficients with masked entries held at zero."""

    coeffs: MatrixSeries
    cost: float
    node_costs: np.ndarray | None
    residual: float
    well_conditioned: bool


# --- random streams ---------------------------------------------------------

def draw_noise(seed: int, trials: int, horizon: int, dim: int, cov=None) -> np.ndarray:
    """Gaussian disturbances of shape ``(trials, horizon, dim)``."""
    children = np.random.SeedSequence(seed).spawn(trials)
    out = np.empty((trials, horizon, dim))
    for k, child in enumerate(children):
        out[k] = np.random.default_rng(child).standard_normal((horizon, dim))
    if cov is not None:
        out = out @ np.linalg.cholesky(np.asarray(cov, dtype=float)).T
    return out


# --- simulation -------------------------------------------------------------

def simulate_plant(sys: BlockSystem, w: np.ndarray):
    """Run ``x+ = A x + B w``, ``y = C x + D w`` from rest for every trial."""
    trials, T, _ = w.shape
    x = np.zeros((trials, T, sys.n))
    y = np.empty((trials, T, sys.p))
    cur = np.zeros((trials, sys.n))
    for t in range(T):
        x[:, t] = cur
        y[:, t] = cur @ sys.C.T + w[:, t] @ sys.D.T
        cur = cur @ sys.A.T + w[:, t] @ sys.B.T
    return x, y


def delayed_measurements(sys: BlockSystem, pairs, y: np.ndarray) -> np.ndarray:
    """Stack ``y_j(t - k + 1)`` for each admissible pair, zero before time 0."""
    trials, T, _ = y.shape
    cols = []
    for j, k in pairs:
        yj = y[:, :, sys.output_slice(j)]
        shifted = np.zeros_like(yj)
        if k - 1 < T:
            shifted[:, k - 1:] = yj[:, : T - k + 1]
        cols.append(shifted)
    return np.concatenate(cols, axis=2)


def run_filter(F, K, H, E, ye: np.ndarray):
    """Drive ``xh+ = F xh + K ye`` from zero; return ``(H xh, ye - E xh)`` per step."""
    trials, T, _ = ye.shape
    est = np.empty((trials, T, H.shape[0]))
    innov = np.empty_like(ye)
    xh = np.zeros((trials, F.shape[0]))
    for t in range(T):
        est[:, t] = xh @ H.T
        innov[:, t] = ye[:, t] - xh @ E.T
        xh = xh @ F.T + ye[:, t] @ K.T
    return est, innov


def _report(per_step: np.ndarray, horizon: int, seed: int, diverged: bool) -> SimReport:
    # per_step: (trials, steps, nodes); burn-in discards the first half
    kept = per_step[:, horizon // 2:]
    per_trial = kept.mean(axis=1)
    trials = per_trial.shape[0]
    totals = per_trial.sum(axis=1)
    ddof = 1 if trials > 1 else 0
    node_se = per_trial.std(axis=0, ddof=ddof) / np.sqrt(trials)
    diverged = diverged or not np.all(np.isfinite(per_trial))
    return SimReport(
        trials=trials, horizon=horizon,
        node_costs=tuple(float(c) for c in per_trial.mean(axis=0)),
        total_cost=float(totals.mean()),
        stderr=float(totals.std(ddof=ddof) / np.sqrt(trials)),
        node_stderr=tuple(float(s) for s in node_se),
        seed=seed, diverged=bool(diverged),
    )


def simulate_estimator(sys: BlockSystem, filters, L, horizon: int, trials: int,
                       seed: int = DEFAULT_SEED, return_innovations: bool = False):
    """Empirical ``E||x_i(t) - xhat_i(t)||^2`` of the node filters.

    Measurements are rebuilt from the base plant's output history, so the
    lifted model is not used on the plant side.
    """
    if horizon < 1 or trials < 1:
        raise ValueError("horizon and trials must be positive")
    w = draw_noise(seed, trials, horizon, sys.m, sys.covariance(sys.m))
    x, y = simulate_plant(sys, w)
    per_step = np.empty((trials, horizon, sys.N))
    with np.errstate(over="ignore", invalid="ignore"):
        est, innovations = node_estimates(sys, filters, y)
        for i in range(sys.N):
            per_step[:, :, i] = np.sum((x - est)[:, :, sys.state_slice(i)] ** 2, axis=2)
    diverged = any(spectral_radius(f.F) >= 1.0 for f in filters)
    report = _report(per_step, horizon, seed, diverged)
    return (report, innovations) if return_innovations else report


def feedforward_inputs(controller, w: np.ndarray) -> np.ndarray:
    """Inputs ``u(t)`` of the node controllers for disturbances ``w`` of shape ``(trials, T, n)``."""
    P = controller.plant
    trials, T, _ = w.shape
    u = np.zeros((trials, T, P.m))
    for nc in controller.nodes:
        z = np.zeros((trials, nc.A_T.shape[0]))
        wi = w[:, :, P.state_slice(nc.node)]
        for t in range(T):
            v = z @ nc.output.T
            for (j, k), rows in zip(nc.pairs, nc.pair_rows):
                if t + k - 1 < T:
                    u[:, t + k - 1, P.input_slice(j)] += v[:, rows]
            z = z @ nc.A_T.T + v @ nc.E_T.T + wi[:, t] @ nc.Gamma_T.T
    return u


def simulate_closed_loop(plant: BlockSystem, controller, horizon: int, trials: int,
                         seed: int = DEFAULT_SEED) -> SimReport:
    """Empirical ``E||z_i(t)||^2`` with ``u = sum_i u_i`` from the node controllers.

    The disturbance ``w ~ N(0, noise_cov)`` enters every state directly.
    """
    if horizon < 1 or trials < 1:
        raise ValueError("horizon and trials must be positive")
    P = plant
    if controller.plant.n != P.n or controller.plant.m != P.m:
        raise ValueError("controller dimensions do not match the plant")
    w = draw_noise(seed, trials, horizon, P.n, P.covariance(P.n))
    per_step = np.empty((trials, horizon, P.N))
    with np.errstate(over="ignore", invalid="ignore"):
        u = feedforward_inputs(controller, w)
        x = np.zeros((trials, P.n))
        for t in range(horizon):
            z = x @ P.C.T + u[:, t] @ P.D.T
            for i in range(P.N):
                per_step[:, t, i] = np.sum(z[:, P.output_slice(i)] ** 2, axis=1)
            x = x @ P.A.T + u[:, t] @ P.B.T + w[:, t]
    diverged = any(spectral_radius(nc.closed_loop) >= 1.0 for nc in controller.nodes)
    return _report(per_step, horizon, seed, diverged)


def node_estimates(sys: BlockSystem, filters, y: np.ndarray):
    """Per-node state estimates ``(trials, T, n)`` and innovations from outputs ``y``."""
    est = np.zeros(y.shape[:2] + (sys.n,))
    innovations = []
    for f in filters:
        e, innov = run_filter(f.F, f.G_in, f.H, f.E, delayed_measurements(sys, f.pairs, y))
        est[:, :, sys.state_slice(f.node)] = e
        innovations.append(innov)
    return est, innovations


def innovation_autocorrelation(innov: np.ndarray, cov: np.ndarray, lags=range(1, 6),
                               start: int | None = None, rtol: float = 1e-9):
    """Normalised lag correlations of whitened innovations.

    ``innov`` is ``(trials, T, r)``; ``cov`` the innovation covariance used to
    whiten (directions with negligible variance are dropped).  Only times
    ``t >= start`` (default ``T // 2``) enter.  Returns ``(corr, samples)``
    with ``corr[l]`` the ``r' x r'`` sample correlation at lag ``lags[l]``.
    """
    trials, T, _ = innov.shape
    start = T // 2 if start is None else start
    vals, vecs = np.linalg.eigh(symmetrize(np.asarray(cov, dtype=float)))
    keep = vals > rtol * max(vals.max(), 1e-300)
    Wh = vecs[:, keep] / np.sqrt(vals[keep])
    v = innov @ Wh
    lags = list(lags)
    if start < max(lags):
        raise ValueError("start must be at least the largest lag")
    cur = v[:, start:].reshape(-1, v.shape[2])
    samples = cur.shape[0]
    corr = np.empty((len(lags), v.shape[2], v.shape[2]))
    for idx, l in enumerate(lags):
        past = v[:, start - l:T - l].reshape(-1, v.shape[2])
        corr[idx] = cur.T @ past / samples
    return corr, samples


def analytic_cost(F, G, H, tol: float = 1e-12) -> float:
    """Stationary ``trace(H S H^T)`` with ``S = F S F^T + G G^T``."""
    S = stationary_covariance(np.asarray(F, float), np.asarray(G, float), tol=tol)
    H = np.asarray(H, float)
    return float(np.trace(H @ S @ H.T))


def filter_analytic_cost(f, L) -> float:
    """Stationary error cost of a node filter through :func:`analytic_cost`."""
    root = np.linalg.cholesky(L.base.covariance(L.n_w))
    return analytic_cost(f.F, (L.B_e - f.G_in @ L.D_e[f.node]) @ root, f.H)


# --- least-squares oracles --------------------------------------------------

def _psd_root(W):
    vals, vecs = np.linalg.eigh(W)
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def _is_diagonal(M) -> bool:
    return np.count_nonzero(M - np.diag(np.diag(M))) == 0


def _solve_normal(Phi: np.ndarray, target: np.ndarray):
    """Solve ``Phi^T Phi theta = Phi^T target``; fall back to a pseudo-inverse."""
    if Phi.shape[1] == 0:
        return np.zeros(0), 0.0, True
    N = Phi.T @ Phi
    rhs = Phi.T @ target
    cond = np.linalg.cond(N)
    ok = bool(np.isfinite(cond) and cond < COND_LIMIT)
    if ok:
        theta = np.linalg.solve(N, rhs)
    else:
        warnings.warn(f"normal matrix ill-conditioned (cond={cond:.3g}); using pseudo-inverse",
                      RuntimeWarning, stacklevel=3)
        theta = np.linalg.pinv(N, rtol=1e-12, hermitian=True) @ rhs
    scale = max(np.linalg.norm(rhs), 1e-300)
    return theta, float(np.linalg.norm(N @ theta - rhs) / scale), ok


def _lag_mask(adj, horizon, row_dims, col_dims, mask):
    if mask is not None:
        m = np.asarray(mask, dtype=bool)
        if m.ndim == 2:
            m = np.broadcast_to(m, (horizon,) + m.shape)
        return expand_mask(m[:horizon], row_dims, col_dims)
    return expand_mask(patterns(adj, horizon - 1), row_dims, col_dims)


def estimation_oracle_design(sys: BlockSystem, horizon: int):
    """Targets ``h_x(r)`` and regressors ``h_y(k)`` for ``r = 1..T``, ``k = 0..T-1``."""
    T = horizon
    hx = np.zeros((T + 1, sys.n, sys.m))
    hy = np.zeros((T, sys.p, sys.m))
    hy[0] = sys.D
    AkB = sys.B.copy()
    for r in range(1, T + 1):
        hx[r] = AkB
        if r < T:
            hy[r] = sys.C @ AkB
        AkB = sys.A @ AkB
    return hx, hy


def structured_ls_oracle(sys: BlockSystem, adjacency: AdjacencyMatrix | None = None,
                         weight=None, horizon: int = 60, mask=None) -> OracleSolution:
    """Best structured estimator ``xhat(t) = sum_{s<T} l(s) y(t-1-s)`` at horizon ``T``.

    Minimises ``sum_{r=1..T} Tr(W e(r) S e(r)^T)`` with
    ``e(r) = h_x(r) - sum_s l(s) h_y(r-1-s)``, ``S`` the disturbance covariance
    and ``W`` the error weight (identity when ``None``).  This is exactly the
    weighted error of the optimal estimate of ``x(T)`` for a plant started at
    rest.  ``mask`` overrides the adjacency-derived block support (shape
    ``(T, N, N)`` or ``(N, N)``).
    """
    T = int(horizon)
    if T < 1:
        raise ValueError("horizon must be at least 1")
    adj = adjacency_of(sys) if adjacency is None else adjacency
    n, p, m = sys.n, sys.p, sys.m
    W = np.eye(n) if weight is None else np.asarray(weight, dtype=float)
    if W.shape != (n, n):
        raise ValueError(f"weight must be {n}x{n}")
    Rw = np.linalg.cholesky(sys.covariance(m))
    free = _lag_mask(adj, T, sys.state_dims, sys.output_dims, mask)  # (T, n, p)

    hx, hy = estimation_oracle_design(sys, T)
    hyR = hy @ Rw                                       # (T, p, m)
    tgt = hx[1:] @ Rw                                   # (T, n, m): r = 1..T
    # Base regressor: rows (r, c), columns (b, s); value hyR[r-1-s][b, c].
    Phi_row = np.zeros((T, m, p, T))
    for s in range(T):
        Phi_row[s:, :, :, s] = np.transpose(hyR[: T - s], (0, 2, 1))
    Phi_row = Phi_row.reshape(T * m, p * T)

    theta = np.zeros((n, p, T))
    resid, ok = 0.0, True
    if _is_diagonal(W):
        row_costs = np.zeros(n)
        for a in range(n):
            cols = free[:, a, :].T.reshape(-1)          # (b, s) ordering
            th, res, good = _solve_normal(Phi_row[:, cols], tgt[:, a, :].reshape(-1))
            vec = np.zeros(p * T)
            vec[cols] = th
            theta[a] = vec.reshape(p, T)
            e = tgt[:, a, :].reshape(-1) - Phi_row @ vec
            row_costs[a] = W[a, a] * float(e @ e)
            resid, ok = max(resid, res), ok and good
        cost = float(row_costs.sum())
        node_costs = np.array([row_costs[sys.state_slice(i)].sum() for i in range(sys.N)])
    else:
        V = _psd_root(W)
        Phi = np.kron(V, Phi_row)                       # rows (q, r, c); cols (a, b, s)
        cols = np.transpose(free, (1, 2, 0)).reshape(-1)
        target = np.einsum("qa,rac->qrc", V, tgt).reshape(-1)
        th, resid, ok = _solve_normal(Phi[:, cols], target)
        vec = np.zeros(n * p * T)
        vec[cols] = th
        theta = vec.reshape(n, p, T)
        e = target - Phi @ vec
        cost = float(e @ e)
        node_costs = None

    coeffs = np.transpose(theta, (2, 0, 1))
    series = MatrixSeries(coeffs, sys.state_dims, sys.output_dims,
                          adj if mask is None else None)
    return OracleSolution(series, cost, node_costs, resid, ok)


def feedforward_oracle_design(plant: BlockSystem, horizon: int):
    """Targets ``C A^{r-1}`` (``r = 1..T``) and responses ``P_u(k)`` (``k = 0..T-1``)."""
    T = horizon
    tz = np.zeros((T + 1, plant.p, plant.n))
    pu = np.zeros((T, plant.p, plant.m))
    pu[0] = plant.D
    CAk = plant.C.copy()
    for r in range(1, T + 1):
        tz[r] = CAk
        if r < T:
            pu[r] = CAk @ plant.B
        CAk = CAk @ plant.A
    return tz, pu


def feedforward_ls_oracle(plant: BlockSystem, adjacency: AdjacencyMatrix | None = None,
                          noise_weight=None, horizon: int = 60) -> OracleSolution:
    """Best structured feedforward law ``u(t) = -sum_{s<T} g(s) w(t-1-s)`` at horizon ``T``.

    The disturbance ``w ~ N(0, noise_weight)`` enters the state directly.
    Minimises ``sum_{r=1..T} Tr(e(r) W e(r)^T)`` with
    ``e(r) = C A^{r-1} - sum_s P_u(r-1-s) g(s)``.  Node costs are reported per
    output block ``z_i`` when ``W`` is diagonal.
    """
    T = int(horizon)
    adj = adjacency_of(plant) if adjacency is None else adjacency
    n, p, m = plant.n, plant.p, plant.m
    W = np.eye(n) if noise_weight is None else np.asarray(noise_weight, dtype=float)
    if W.shape != (n, n):
        raise ValueError(f"noise weight must be {n}x{n}")
    free = expand_mask(patterns(adj, T - 1), plant.input_dims, plant.state_dims)  # (T, m, n)
    tz, pu = feedforward_oracle_design(plant, T)
    tgt = tz[1:]                                        # (T, p, n)
    # Base regressor for one disturbance column: rows (r, q), columns (a, s).
    Phi_col = np.zeros((T, p, m, T))
    for s in range(T):
        Phi_col[s:, :, :, s] = pu[: T - s]
    Phi_col = Phi_col.reshape(T * p, m * T)

    theta = np.zeros((m, n, T))  # g(s)[a, b] at theta[a, b, s]
    resid, ok = 0.0, True
    if _is_diagonal(W):
        z_costs = np.zeros(p)
        for b in range(n):
            cols = free[:, :, b].T.reshape(-1)          # (a, s) ordering
            th, res, good = _solve_normal(Phi_col[:, cols], tgt[:, :, b].reshape(-1))
            vec = np.zeros(m * T)
            vec[cols] = th
            theta[:, b, :] = vec.reshape(m, T)
            e = (tgt[:, :, b].reshape(-1) - Phi_col @ vec).reshape(T, p)
            z_costs += W[b, b] * np.sum(e ** 2, axis=0)
            resid, ok = max(resid, res), ok and good
        cost = float(z_costs.sum())
        node_costs = np.array([z_costs[plant.output_slice(i)].sum() for i in range(plant.N)])
    else:
        R = _psd_root(W)
        Phi = np.kron(R.T, Phi_col)                     # rows (c, r, q); cols (b, a, s)
        cols = np.transpose(free, (2, 1, 0)).reshape(-1)
        target = np.einsum("rqb,bc->crq", tgt, R).reshape(-1)
        th, resid, ok = _solve_normal(Phi[:, cols], target)
        vec = np.zeros(n * m * T)
        vec[cols] = th
        theta = np.transpose(vec.reshape(n, m, T), (1, 0, 2))
        e = target - Phi @ vec
        cost = float(e @ e)
        node_costs = None

    coeffs = np.transpose(theta, (2, 0, 1))
    series = MatrixSeries(coeffs, plant.input_dims, plant.state_dims, adj)
    return OracleSolution(series, cost, node_costs, resid, ok)


def estimator_series_cost(sys: BlockSystem, l: MatrixSeries, weight=None, horizon: int | None = None):
    """Finite-horizon weighted error of an estimator series; per-node costs when unweighted."""
    T = l.horizon + 1 if horizon is None else horizon
    hx, hy = estimation_oracle_design(sys, T)
    Rw = np.linalg.cholesky(sys.covariance(sys.m))
    W = np.eye(sys.n) if weight is None else np.asarray(weight, float)
    total, nodes = 0.0, np.zeros(sys.N)
    for r in range(1, T + 1):
        e = hx[r].copy()
        for s in range(min(r, l.horizon + 1)):
            e -= l.coeffs[s] @ hy[r - 1 - s]
        e = e @ Rw
        total += float(np.trace(e.T @ W @ e))
        for i in range(sys.N):
            nodes[i] += float(np.sum(e[sys.state_slice(i)] ** 2))
    return total, nodes


def feedforward_series_cost(plant: BlockSystem, g: MatrixSeries, noise_weight=None,
                            horizon: int | None = None):
    """Finite-horizon cost of ``u(t) = -sum g(s) w(t-1-s)``; per-node ``z_i`` costs."""
    T = g.horizon + 1 if horizon is None else horizon
    tz, pu = feedforward_oracle_design(plant, T)
    W = np.eye(plant.n) if noise_weight is None else np.asarray(noise_weight, float)
    R = _psd_root(W)
    total, nodes = 0.0, np.zeros(plant.N)
    for r in range(1, T + 1):
        e = tz[r].copy()
        for s in range(min(r, g.horizon + 1)):
            e -= pu[r - 1 - s] @ g.coeffs[s]
        e = e @ R
        total += float(np.sum(e ** 2))
        for i in range(plant.N):
            nodes[i] += float(np.sum(e[plant.output_slice(i)] ** 2))
    return total, nodes
