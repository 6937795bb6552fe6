"""Command-line front end: ``graphlqg {validate,synthesize,verify,simulate}``.

System description files are single JSON documents::

    {
      "N": 3,
      "dims": {"state": [1, 1, 1], "input": [2, 2, 2], "output": [1, 1, 1]},
      "kind": "estimation",
      "A.1.1": [[0.4]], "A.2.1": [[0.2]], ...,
      "B.1": [[1.0, 0.0]], ..., "C.1": [[1.0]], ...,
      "D": [[...]],
      "W": [[...]], "noise_cov": [[...]],
      "options": {"horizon": 60, "tol": 1e-11, "memory": null, "seed": 20240917, "trials": 2000}
    }

Node names are 1-based.  ``A.i.j`` is the influence of node ``j`` on node
``i``; missing off-diagonal blocks are zero.  Exit codes: 0 ok, 1 validation
or suite failure, 2 parse error or missing artifacts, 3 numerical
non-convergence.  ``GRAPHLQG_THREADS`` caps BLAS threads.
"""
from __future__ import annotations

import os

if "GRAPHLQG_THREADS" in os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["GRAPHLQG_THREADS"])

import argparse
import json
import re
import sys as _sys
from pathlib import Path

import numpy as np

from . import series as ser
from .duality import (ControllerRealization, NodeController, dual_estimator_to_controller,
                      feedback_to_feedforward, feedforward_to_feedback)
from .graphnet import delay_matrix
from .kalman import (FilterRealization, RiccatiResult, assemble_estimator, centralized_node_costs,
                     filter_error_covariance, node_noise_terms, synthesize_filters)
from .lifting import lift
from .linalg import NotStabilizingError, spectral_radius
from .simkit import (DEFAULT_SEED, _report, draw_noise, innovation_autocorrelation,
                     simulate_closed_loop, simulate_estimator, simulate_plant, structured_ls_oracle)
from .sysmodel import KINDS, BlockSystem, ProblemSpec, adjacency_of, dualize
from .team import (TeamGainSchedule, build_team_lift, combine_estimates, run_team, team_cost,
                   team_filter_iterate)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3

OPTION_DEFAULTS = {
    "horizon": 60, "tol": 1e-11, "memory": None, "seed": DEFAULT_SEED,
    "trials": 2000, "sim_horizon": 200, "oracle_horizon": 120, "samples": 50,
}
TOP_KEYS = {"N", "dims", "kind", "D", "W", "noise_cov", "options"}
BLOCK_KEY = re.compile(r"^(A)\.(\d+)\.(\d+)$|^([BC])\.(\d+)$")


class ParseError(ValueError):
    pass


class ArtifactError(ValueError):
    pass


# --- system description files ------------------------------------------------

def _matrix(value, shape, name) -> np.ndarray:
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name}: not a numeric matrix") from exc
    if M.ndim != 2 or M.shape != tuple(shape):
        raise ParseError(f"{name}: expected shape {tuple(shape)}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ParseError(f"{name}: non-finite entries")
    return M


def parse_description(doc: dict):
    """Turn a decoded description into ``(ProblemSpec, options)``."""
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    for key in doc:
        if key not in TOP_KEYS and not BLOCK_KEY.match(key):
            raise ParseError(f"unknown key {key!r}")
    for key in ("N", "dims", "D"):
        if key not in doc:
            raise ParseError(f"missing key {key!r}")
    N = doc["N"]
    if not isinstance(N, int) or N < 1:
        raise ParseError("N must be a positive integer")
    dims = doc["dims"]
    if not isinstance(dims, dict) or set(dims) != {"state", "input", "output"}:
        raise ParseError("dims must have exactly the keys state, input, output")
    for k, v in dims.items():
        if not (isinstance(v, list) and len(v) == N and all(isinstance(d, int) and d >= 1 for d in v)):
            raise ParseError(f"dims.{k} must list {N} positive integers")
    nd, md, pd = dims["state"], dims["input"], dims["output"]
    A_blocks = [[None] * N for _ in range(N)]
    B_blocks, C_blocks = [None] * N, [None] * N
    for key, val in doc.items():
        m = BLOCK_KEY.match(key)
        if not m:
            continue
        if m.group(1):
            i, j = int(m.group(2)) - 1, int(m.group(3)) - 1
            if not (0 <= i < N and 0 <= j < N):
                raise ParseError(f"{key}: node index out of range")
            A_blocks[i][j] = _matrix(val, (nd[i], nd[j]), key)
        else:
            i = int(m.group(5)) - 1
            if not 0 <= i < N:
                raise ParseError(f"{key}: node index out of range")
            if m.group(4) == "B":
                B_blocks[i] = _matrix(val, (nd[i], md[i]), key)
            else:
                C_blocks[i] = _matrix(val, (pd[i], nd[i]), key)
    for i in range(N):
        if A_blocks[i][i] is None:
            raise ParseError(f"missing key 'A.{i + 1}.{i + 1}'")
        if B_blocks[i] is None:
            raise ParseError(f"missing key 'B.{i + 1}'")
        if C_blocks[i] is None:
            raise ParseError(f"missing key 'C.{i + 1}'")
    D = _matrix(doc["D"], (sum(pd), sum(md)), "D")
    noise_cov = None
    if doc.get("noise_cov") is not None:
        noise_cov = _matrix(doc["noise_cov"], (len(doc["noise_cov"]),) * 2, "noise_cov")
    kind = doc.get("kind", "estimation")
    if kind not in KINDS:
        raise ParseError(f"kind must be one of {KINDS}")
    W = None if doc.get("W") is None else _matrix(doc["W"], (len(doc["W"]),) * 2, "W")
    options = dict(OPTION_DEFAULTS)
    for k, v in (doc.get("options") or {}).items():
        if k not in OPTION_DEFAULTS:
            raise ParseError(f"unknown option {k!r}")
        options[k] = v
    try:
        sysm = BlockSystem.from_blocks(A_blocks, B_blocks, C_blocks, D, noise_cov)
        # team weights are N x N and live in options space, not on the problem
        spec_weight = W if kind in ("weighted_estimation", "correlated_feedback") else None
        spec = ProblemSpec(kind, sysm, weight=spec_weight, horizon=int(options["horizon"]),
                           tol=float(options["tol"]))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    options["W"] = W
    return spec, options


def load_description(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_description(doc)


def describe(sys: BlockSystem, kind: str = "estimation", W=None, options=None) -> dict:
    """Inverse of :func:`parse_description`: a JSON-ready description of ``sys``."""
    doc = {"N": sys.N, "dims": {"state": list(sys.state_dims), "input": list(sys.input_dims),
                                "output": list(sys.output_dims)}, "kind": kind}
    for i in range(sys.N):
        for j in range(sys.N):
            blk = sys.A_block(i, j)
            if i == j or np.any(blk != 0):
                doc[f"A.{i + 1}.{j + 1}"] = blk.tolist()
    for i in range(sys.N):
        doc[f"B.{i + 1}"] = sys.B_block(i).tolist()
    for i in range(sys.N):
        doc[f"C.{i + 1}"] = sys.C_block(i).tolist()
    doc["D"] = sys.D.tolist()
    if sys.noise_cov is not None:
        doc["noise_cov"] = np.asarray(sys.noise_cov).tolist()
    if W is not None:
        doc["W"] = np.asarray(W).tolist()
    if options:
        doc["options"] = dict(options)
    return doc


def write_description(doc: dict, path) -> None:
    """One top-level key per line, which keeps block matrices readable."""
    body = ",\n".join(f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in doc.items())
    Path(path).write_text("{\n" + body + "\n}\n")


# --- artifact io --------------------------------------------------------------

def _arr(M):
    return np.asarray(M).tolist()


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ArtifactError(f"missing artifact {path}") from exc
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _filter_doc(f: FilterRealization) -> dict:
    r = f.riccati
    return {"node": f.node + 1, "F": _arr(f.F), "K": _arr(f.G_in), "H": _arr(f.H), "E": _arr(f.E),
            "P": _arr(r.P), "pairs": [[j + 1, k] for j, k in f.pairs],
            "iterations": r.iterations, "residual": r.residual, "converged": r.converged,
            "spectral_radius": f.spectral_radius}


def _filter_from_doc(d: dict) -> FilterRealization:
    F, K = np.array(d["F"], float), np.array(d["K"], float)
    r = RiccatiResult(np.array(d["P"], float), K, d["iterations"], d["residual"], d["converged"])
    return FilterRealization(d["node"] - 1, F, K, np.array(d["H"], float), np.array(d["E"], float),
                             tuple((j - 1, k) for j, k in d["pairs"]), r, spectral_radius(F))


def _controller_doc(nc: NodeController) -> dict:
    return {"node": nc.node + 1, "A_T": _arr(nc.A_T), "E_T": _arr(nc.E_T),
            "Gamma_T": _arr(nc.Gamma_T), "K_T": _arr(nc.K_T),
            "pairs": [[j + 1, k] for j, k in nc.pairs],
            "spectral_radius": spectral_radius(nc.closed_loop)}


def _controller_from_doc(d: dict, pair_rows) -> NodeController:
    return NodeController(d["node"] - 1, np.array(d["A_T"], float), np.array(d["E_T"], float),
                          np.array(d["Gamma_T"], float), np.array(d["K_T"], float),
                          tuple((j - 1, k) for j, k in d["pairs"]), tuple(pair_rows))


def _delay_table(sys) -> list:
    Dm = delay_matrix(adjacency_of(sys))
    return [[None if np.isinf(v) else int(v) for v in row] for row in Dm]


# --- commands -----------------------------------------------------------------

def cmd_validate(args) -> int:
    spec, opts = load_description(args.path)
    problems = spec.diagnostics()
    if opts["W"] is not None and spec.kind == "estimation" and opts["W"].shape != (spec.system.N,) * 2:
        problems.append("team weight W must be N x N")
    for msg in problems:
        print(msg)
    if problems:
        return EXIT_FAIL
    print(f"ok: {spec.kind} system with N={spec.system.N}, n={spec.system.n}")
    return EXIT_OK


def _synthesize_estimator(sys, opts, out: Path, manifest: dict) -> bool:
    L = lift(sys, opts["memory"])
    filters = synthesize_filters(L, tol=float(opts["tol"]))
    for f in filters:
        _write_json(out / f"filter_{f.node + 1}.json", _filter_doc(f))
    series = assemble_estimator(filters, L, int(opts["horizon"]))
    series.to_dir(out / "series")
    costs = []
    for f in filters:
        try:
            costs.append(filter_error_covariance(f, L)[1])
        except NotStabilizingError:
            costs.append(None)
    _write_json(out / "costs.json", {"node_costs": costs})
    manifest.update(memory=L.memory, layout=L.layout_manifest(),
                    membership=bool(ser.membership(series, adjacency_of(sys))),
                    nodes=[{"node": f.node + 1, "iterations": f.riccati.iterations,
                            "residual": f.riccati.residual, "converged": f.riccati.converged,
                            "stable": f.stable} for f in filters])
    return all(f.riccati.converged and f.stable for f in filters)


def _synthesize_controller(sys, opts, out: Path, manifest: dict) -> bool:
    L = lift(dualize(sys), opts["memory"])
    filters = synthesize_filters(L, tol=float(opts["tol"]))
    ctrl = dual_estimator_to_controller(filters, L)
    for nc in ctrl.nodes:
        _write_json(out / f"controller_{nc.node + 1}.json", _controller_doc(nc))
    g = ctrl.impulse_response(int(opts["horizon"]))
    g.to_dir(out / "series")
    costs = []
    for f in filters:
        try:
            costs.append(filter_error_covariance(f, L)[1])
        except NotStabilizingError:
            costs.append(None)
    _write_json(out / "costs.json", {"dual_node_costs": costs})
    manifest.update(memory=L.memory, membership=bool(ser.membership(g, adjacency_of(sys))),
                    nodes=[{"node": f.node + 1, "iterations": f.riccati.iterations,
                            "residual": f.riccati.residual, "converged": f.riccati.converged,
                            "stable": f.stable} for f in filters])
    return all(f.riccati.converged and f.stable for f in filters)


def _synthesize_team(sys, opts, out: Path, manifest: dict) -> bool:
    W = opts["W"]
    if W is None:
        raise ParseError("team mode requires a weight W in the system file")
    L = lift(sys, opts["memory"])
    try:
        team = build_team_lift(L, W)
    except ValueError as exc:
        raise ParseError(f"team weight: {exc}") from exc
    sched = team_filter_iterate(team, None)
    sched.to_dir(out / "gains")
    cost = team_cost(team, sched.moments[-1]) if len({G.shape[0] for G in team.selectors}) == 1 else None
    _write_json(out / "costs.json", {"team_cost": cost})
    manifest.update(memory=L.memory, steps=sched.horizon, stationary=sched.stationary,
                    final_residual=float(sched.residuals[-1]) if len(sched.residuals) else None,
                    W=_arr(W))
    return sched.stationary


def cmd_synthesize(args) -> int:
    spec, opts = load_description(args.path)
    problems = spec.diagnostics()
    if problems:
        for msg in problems:
            print(msg)
        return EXIT_FAIL
    wanted = "control" if args.mode == "controller" else "estimation"
    if spec.role != wanted:
        print(f"mode {args.mode!r} needs a {wanted} problem, the file describes {spec.kind!r}")
        return EXIT_FAIL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sysm = spec.system
    manifest = {"mode": args.mode, "kind": spec.kind, "tol": float(opts["tol"]),
                "horizon": int(opts["horizon"]), "system": describe(sysm, spec.kind, opts["W"])}
    _write_json(out / "delays.json", {"delays": _delay_table(sysm)})
    builders = {"estimator": _synthesize_estimator, "controller": _synthesize_controller,
                "team": _synthesize_team}
    ok = builders[args.mode](sysm, opts, out, manifest)
    manifest["complete"] = bool(ok)
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {args.mode} artifacts to {out}" + ("" if ok else " (non-convergence flagged)"))
    return EXIT_OK if ok else EXIT_NUMERIC


def _load_artifacts(path: Path):
    manifest = _read_json(path / "manifest.json")
    try:
        spec, opts = parse_description(manifest["system"])
    except (KeyError, ParseError) as exc:
        raise ArtifactError(f"manifest system description unusable: {exc}") from exc
    return manifest, spec, opts


def cmd_simulate(args) -> int:
    spec, opts = load_description(args.path)
    art = Path(args.with_dir)
    manifest, _, _ = _load_artifacts(art)
    sysm = spec.system
    trials = int(args.trials if args.trials is not None else opts["trials"])
    seed = int(args.seed if args.seed is not None else opts["seed"])
    T = int(opts["sim_horizon"])
    mode = manifest["mode"]
    memory = manifest["memory"]
    if mode == "estimator":
        L = lift(sysm, memory)
        filters = [_filter_from_doc(_read_json(art / f"filter_{i + 1}.json")) for i in range(sysm.N)]
        for f in filters:
            if f.F.shape != L.A_e.shape or f.E.shape != L.E[f.node].shape:
                print(f"filter {f.node + 1} dimensions do not match the system")
                return EXIT_FAIL
        report = simulate_estimator(sysm, filters, L, T, trials, seed)
    elif mode == "controller":
        L = lift(dualize(sysm), memory)
        nodes = []
        for i in range(sysm.N):
            nc = _controller_from_doc(_read_json(art / f"controller_{i + 1}.json"), L.pair_rows(i))
            if nc.A_T.shape != L.A_e.T.shape or nc.E_T.shape != L.E[i].T.shape:
                print(f"controller {i + 1} dimensions do not match the system")
                return EXIT_FAIL
            nodes.append(nc)
        report = simulate_closed_loop(sysm, ControllerRealization(sysm, tuple(nodes), L), T, trials, seed)
    else:
        report = _simulate_team_artifacts(sysm, manifest, art, T, trials, seed)
        if report is None:
            return EXIT_FAIL
    out = Path(args.out) if args.out else art
    out.mkdir(parents=True, exist_ok=True)
    report.to_json(out / "report.json")
    (out / "report.txt").write_text(report.to_table() + "\n")
    print(report.to_table())
    return EXIT_NUMERIC if report.diverged else EXIT_OK


def _simulate_team_artifacts(sysm, manifest, art: Path, T, trials, seed):
    L = lift(sysm, manifest["memory"])
    team = build_team_lift(L, np.array(manifest["W"], float))
    steps = manifest["steps"]
    gains = []
    for t in range(steps):
        p = art / "gains" / f"gain_{t:04d}.csv"
        if not p.exists():
            raise ArtifactError(f"missing artifact {p}")
        gains.append(np.atleast_2d(np.loadtxt(p, delimiter=",")))
    if gains[0].shape != (team.A.shape[0], team.C.shape[0]):
        print("team gain dimensions do not match the system")
        return None
    sched = TeamGainSchedule(np.array(gains), np.zeros((1,) + team.A.shape), np.zeros(0),
                             manifest["stationary"], 0.0)
    w = draw_noise(seed, trials, T, sysm.m, sysm.covariance(sysm.m))
    x, y = simulate_plant(sysm, w)
    est, _ = run_team(sysm, team, sched, y)
    comb = combine_estimates(est, team)
    per_step = np.stack([np.sum((x[:, :, sysm.state_slice(i)] - comb[i]) ** 2, axis=2)
                         for i in range(sysm.N)], axis=2)
    return _report(per_step, T, seed, not manifest["stationary"])


# --- verify suites ------------------------------------------------------------

def _line(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def _random_law_series(rng, law, dims, horizon):
    c = rng.standard_normal((horizon + 1, sum(dims), sum(dims)))
    return ser.masked(c, dims, dims, law)


def _suite_closure(spec, opts, rng) -> bool:
    sysm = spec.system
    law, dims = adjacency_of(sysm), sysm.state_dims
    T = min(int(opts["horizon"]), 10)
    bad = 0
    for _ in range(int(opts["samples"])):
        G1 = _random_law_series(rng, law, dims, T)
        G2 = _random_law_series(rng, law, dims, T)
        H1 = G2.shift(1)
        prod, inv = ser.multiply(G1, G2), ser.feedback_inverse(G1, H1)
        bad += not (ser.membership(prod, law) and ser.membership(inv, law))
    return _line("closure", bad == 0, f"{bad} violations in {opts['samples']} pairs (exact zeros)")


def _estimation_view(spec):
    return spec.system if spec.role == "estimation" else dualize(spec.system)


def _suite_duality(spec, opts, rng) -> bool:
    est_sys = _estimation_view(spec)
    plant = dualize(est_sys)
    T = int(opts["horizon"])
    L = lift(est_sys, opts["memory"])
    filters = synthesize_filters(L, tol=float(opts["tol"]))
    l = assemble_estimator(filters, L, T)
    g = dual_estimator_to_controller(filters, L).impulse_response(T)
    err = float(np.max(np.abs(g.coeffs - np.transpose(l.coeffs, (0, 2, 1)))))
    ok = _line("duality g(s) = l(s)^T", err <= 1e-8, f"max error {err:.3e} (tol 1e-8)")
    law = adjacency_of(plant)
    Th = min(T, 20)
    decay = 0.6 ** np.arange(Th + 1)[:, None, None]
    K = ser.masked(0.3 * rng.standard_normal((Th + 1, plant.m, plant.n)) * decay,
                   plant.input_dims, plant.state_dims, law)
    back = feedforward_to_feedback(feedback_to_feedforward(K, plant.A, plant.B), plant.A, plant.B)
    rt = float(np.max(np.abs(back.coeffs[:Th - 1] - K.coeffs[:Th - 1])))
    return _line("bijection K->G->K", rt <= 1e-10, f"max error {rt:.3e} (tol 1e-10)") and ok


def _suite_optimality(spec, opts, rng) -> bool:
    est_sys = _estimation_view(spec)
    L = lift(est_sys, opts["memory"])
    filters = synthesize_filters(L, tol=float(opts["tol"]))
    kal = np.array([filter_error_covariance(f, L)[1] for f in filters])
    orc = structured_ls_oracle(est_sys, horizon=int(opts["oracle_horizon"])).node_costs
    rel = float(np.max(np.abs(kal - orc) / orc))
    ok = _line("kalman vs oracle", rel <= 1e-6, f"max relative delta {rel:.3e} (tol 1e-6)")
    cen = centralized_node_costs(est_sys)
    gap = float(np.min(kal - cen))
    return _line("centralized bound", gap >= -1e-9, f"min gap {gap:.3e}") and ok


def _suite_whiteness(spec, opts, rng) -> bool:
    est_sys = _estimation_view(spec)
    L = lift(est_sys, opts["memory"])
    filters = synthesize_filters(L, tol=float(opts["tol"]))
    _, innovs = simulate_estimator(est_sys, filters, L, int(opts["sim_horizon"]), int(opts["trials"]),
                                   int(opts["seed"]), return_innovations=True)
    ok = True
    for f, nu in zip(filters, innovs):
        _, R, _ = node_noise_terms(L, f.node)
        corr, n = innovation_autocorrelation(nu, f.E @ f.riccati.P @ f.E.T + R)
        worst, bound = float(np.max(np.abs(corr))), 4 / np.sqrt(n)
        ok = _line(f"whiteness node {f.node + 1}", worst <= bound,
                   f"max |corr| lags 1..5 {worst:.4f} (bound {bound:.4f})") and ok
    return ok


SUITES = {"closure": _suite_closure, "duality": _suite_duality,
          "optimality": _suite_optimality, "whiteness": _suite_whiteness}


def cmd_verify(args) -> int:
    spec, opts = load_description(args.path)
    if args.seed is not None:
        opts["seed"] = args.seed
    if args.trials is not None:
        opts["trials"] = args.trials
    rng = np.random.default_rng(int(opts["seed"]))
    ok = SUITES[args.suite](spec, opts, rng)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphlqg", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="check a system description")
    v.add_argument("path")
    s = sub.add_parser("synthesize", help="synthesize filters, controllers or team gains")
    s.add_argument("path")
    s.add_argument("--mode", choices=["estimator", "controller", "team"], default="estimator")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None, help="accepted for uniformity; synthesis is deterministic")
    f = sub.add_parser("verify", help="run a property suite")
    f.add_argument("path")
    f.add_argument("--suite", choices=sorted(SUITES), required=True)
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--trials", type=int, default=None)
    m = sub.add_parser("simulate", help="Monte-Carlo run of synthesized artifacts")
    m.add_argument("path")
    m.add_argument("--with", dest="with_dir", required=True)
    m.add_argument("--trials", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--out", default=None)
    return p


COMMANDS = {"validate": cmd_validate, "synthesize": cmd_synthesize,
            "verify": cmd_verify, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ArtifactError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_PARSE
    except (FloatingPointError, NotStabilizingError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
