import numpy as np
import pytest
from scipy.linalg import solve_discrete_lyapunov

from graphlqg import series as ser
from graphlqg.duality import synthesize_controller
from graphlqg.graphnet import AdjacencyMatrix
from graphlqg.kalman import assemble_estimator, filter_error_covariance, riccati_iterate, synthesize_filters
from graphlqg.lifting import lift
from graphlqg.linalg import NotStabilizingError
from graphlqg.simkit import (analytic_cost, draw_noise, estimator_series_cost, feedforward_inputs,
                             feedforward_ls_oracle, feedforward_series_cost, filter_analytic_cost,
                             innovation_autocorrelation, simulate_closed_loop, simulate_estimator,
                             simulate_plant, structured_ls_oracle)
from graphlqg.sysmodel import BlockSystem, dualize
from graphlqg.systems import chain_system, scalar_system

from conftest import control_instance, estimation_instance


def test_analytic_cost_examples():
    assert analytic_cost([[0.0]], [[1.0]], [[1.0]]) == pytest.approx(1.0)
    assert analytic_cost([[0.5]], [[1.0]], [[1.0]]) == pytest.approx(4 / 3, rel=1e-12)
    with pytest.raises(NotStabilizingError):
        analytic_cost([[1.5]], [[1.0]], [[1.0]])


def test_filter_analytic_cost_matches_riccati():
    L = lift(chain_system())
    for f in synthesize_filters(L):
        assert filter_analytic_cost(f, L) == pytest.approx(filter_error_covariance(f, L)[1], rel=1e-9)


def test_noise_reproducible_and_covariance():
    a = draw_noise(5, 3, 10, 2)
    assert np.array_equal(a, draw_noise(5, 3, 10, 2))
    assert not np.array_equal(a, draw_noise(6, 3, 10, 2))
    # trial k does not depend on how many trials are drawn
    assert np.array_equal(draw_noise(5, 5, 10, 2)[:3], a)
    C = np.array([[2.0, 0.5], [0.5, 1.0]])
    w = draw_noise(1, 2000, 50, 2, C).reshape(-1, 2)
    assert np.allclose(w.T @ w / len(w), C, atol=0.05)


def test_simulate_estimator_reproducible_and_scalar():
    s = scalar_system()
    L = lift(s)
    filters = synthesize_filters(L)
    r1 = simulate_estimator(s, filters, L, 200, 2000, seed=4)
    r2 = simulate_estimator(s, filters, L, 200, 2000, seed=4)
    assert r1 == r2
    P = filter_error_covariance(filters[0], L)[1]
    assert abs(r1.total_cost - P) <= 3 * r1.stderr
    assert "total" in r1.to_table() and r1.to_dict()["trials"] == 2000
    with pytest.raises(ValueError):
        simulate_estimator(s, filters, L, 0, 10)


def test_chain_cost_close_to_analytic():
    s = chain_system()
    L = lift(s)
    filters = synthesize_filters(L)
    rep = simulate_estimator(s, filters, L, 200, 3000, seed=2)
    ref = sum(filter_error_covariance(f, L)[1] for f in filters)
    assert abs(rep.total_cost - ref) <= 0.02 * ref


def test_zero_input_matches_lyapunov():
    p = control_instance(2, "chain")
    ctrl, _ = synthesize_controller(p)
    zero = type(ctrl)(ctrl.plant, tuple(type(nc)(**{**nc.__dict__, "K_T": 0 * nc.K_T}) for nc in ctrl.nodes),
                      ctrl.dual_lift)
    rep = simulate_closed_loop(p, zero, 200, 3000, seed=1)
    S = solve_discrete_lyapunov(p.A, p.covariance(p.n))
    ref = float(np.trace(p.C @ S @ p.C.T))
    assert abs(rep.total_cost - ref) <= 4 * rep.stderr


def test_feedforward_inputs_match_series():
    p = control_instance(8, "cycle")
    ctrl, _ = synthesize_controller(p)
    w = np.random.default_rng(0).standard_normal((2, 15, p.n))
    u = feedforward_inputs(ctrl, w)
    g = ctrl.impulse_response(15).coeffs
    ref = np.zeros_like(u)
    for t in range(15):
        for s in range(t):
            ref[:, t] -= w[:, t - 1 - s] @ g[s].T
    assert np.allclose(u, ref, atol=1e-12)


def test_closed_loop_matches_series_cost():
    p = control_instance(3, "chain")
    ctrl, _ = synthesize_controller(p)
    rep = simulate_closed_loop(p, ctrl, 200, 4000, seed=9)
    ref, _ = feedforward_series_cost(p, ctrl.impulse_response(150))
    assert abs(rep.total_cost - ref) <= 4 * rep.stderr


def test_oracle_unconstrained_matches_centralized():
    s = estimation_instance(1, "chain")
    o = structured_ls_oracle(s, horizon=120, mask=np.ones((3, 3), bool))
    Sw = s.covariance(s.m)
    R = riccati_iterate(s.A, s.C, s.B @ Sw @ s.B.T, s.D @ Sw @ s.D.T, s.B @ Sw @ s.D.T)
    assert abs(o.cost - np.trace(R.P)) <= 1e-4 * o.cost
    assert o.well_conditioned
    # any graph-structured estimator does no better
    assert structured_ls_oracle(s, horizon=120).cost >= o.cost - 1e-9
    full = structured_ls_oracle(s, adjacency=AdjacencyMatrix.from_edges(np.ones((3, 3))), horizon=120)
    assert full.cost >= o.cost - 1e-9


def test_oracle_fully_masked_is_zero():
    s = chain_system()
    o = structured_ls_oracle(s, horizon=10, mask=np.zeros((3, 3), bool))
    assert np.all(o.coeffs.coeffs == 0)
    total, _ = estimator_series_cost(s, o.coeffs, horizon=10)
    assert o.cost == pytest.approx(total)


def test_oracle_perturbation_probe(rng):
    s = estimation_instance(3, "cycle")
    o = structured_ls_oracle(s, horizon=30)
    base, _ = estimator_series_cost(s, o.coeffs, horizon=30)
    assert base == pytest.approx(o.cost, rel=1e-10)
    for _ in range(5):
        d = ser.masked(1e-3 * rng.standard_normal(o.coeffs.coeffs.shape), s.state_dims,
                       s.output_dims, o.coeffs.law)
        worse, _ = estimator_series_cost(s, o.coeffs + d, horizon=30)
        assert worse >= base - 1e-12


def test_kalman_matches_oracle_nodes():
    s = estimation_instance(6, "chain")
    L = lift(s)
    filters = synthesize_filters(L)
    o = structured_ls_oracle(s, horizon=120)
    costs = np.array([filter_error_covariance(f, L)[1] for f in filters])
    assert np.allclose(costs, o.node_costs, rtol=1e-6)
    l = assemble_estimator(filters, L, 20)
    assert np.max(np.abs(l.coeffs - o.coeffs.coeffs[:21])) <= 1e-8


def test_feedforward_oracle_is_dual_estimation_oracle():
    p = control_instance(4, "cycle")
    ff = feedforward_ls_oracle(p, horizon=40)
    est = structured_ls_oracle(dualize(p), horizon=40)
    assert abs(ff.cost - est.cost) <= 1e-8 * est.cost
    assert np.max(np.abs(ff.coeffs.coeffs - np.transpose(est.coeffs.coeffs, (0, 2, 1)))) <= 1e-8


def test_innovation_autocorrelation_white_and_colored():
    rng = np.random.default_rng(0)
    e = rng.standard_normal((500, 40, 2))
    corr, samples = innovation_autocorrelation(e, np.eye(2))
    assert samples == 500 * 20 and np.max(np.abs(corr)) < 4 / np.sqrt(samples)
    ar = np.zeros_like(e)
    for t in range(1, 40):
        ar[:, t] = 0.5 * ar[:, t - 1] + e[:, t]
    corr, _ = innovation_autocorrelation(ar, np.eye(2) / 0.75)
    assert corr[0, 0, 0] > 0.4
    with pytest.raises(ValueError):
        innovation_autocorrelation(e, np.eye(2), start=2)


def test_simulate_plant_shapes():
    s = BlockSystem([[0.5]], [[1.0, 0.0]], [[1.0]], [[0.0, 1.0]], (1,), (2,), (1,))
    x, y = simulate_plant(s, np.ones((1, 3, 2)))
    assert np.allclose(x[0, :, 0], [0.0, 1.0, 1.5]) and np.allclose(y[0, :, 0], [1.0, 2.0, 2.5])
