import numpy as np
import pytest

from graphlqg import series as ser
from graphlqg.duality import (dual_estimator_to_controller, dual_problem, feedback_to_feedforward,
                              feedforward_to_feedback, synthesize_controller)
from graphlqg.graphnet import chain, transpose_graph
from graphlqg.kalman import assemble_estimator, riccati_iterate, synthesize_filters
from graphlqg.lifting import lift
from graphlqg.simkit import feedforward_ls_oracle, structured_ls_oracle
from graphlqg.sysmodel import BlockSystem, ProblemSpec, adjacency_of, dualize
from graphlqg.systems import chain_system, scalar_system

from conftest import control_instance


def law_gain(rng, plant, T, scale=0.3):
    decay = 0.6 ** np.arange(T + 1)[:, None, None]
    c = scale * rng.standard_normal((T + 1, plant.m, plant.n)) * decay
    return ser.masked(c, plant.input_dims, plant.state_dims, adjacency_of(plant))


def scalar_plant(a):
    return BlockSystem([[a]], [[1.0]], [[1.0], [0.0]], [[0.0], [1.0]], (1,), (1,), (2,))


def test_zero_maps_to_zero():
    p = control_instance(0)
    Z = ser.zeros(p.input_dims, p.state_dims, 6, adjacency_of(p))
    assert np.all(feedback_to_feedforward(Z, p.A, p.B).coeffs == 0)
    assert np.all(feedforward_to_feedback(Z, p.A, p.B).coeffs == 0)


def test_scalar_closed_form_and_roundtrip():
    a, k, T = 0.5, -0.3, 12
    p = scalar_plant(a)
    K = ser.polynomial({0: [[k]]}, (1,), (1,), T, adjacency_of(p))
    G = feedback_to_feedforward(K, p.A, p.B)
    assert np.allclose(G.coeffs[:, 0, 0], -k * (a + k) ** np.arange(T + 1))
    back = feedforward_to_feedback(G, p.A, p.B)
    assert np.isclose(back.coeffs[0, 0, 0], k)
    assert np.max(np.abs(back.coeffs[1:T - 1])) < 1e-12


def test_structure_and_roundtrip_random_chain(rng):
    p = control_instance(4, "chain")
    K = law_gain(rng, p, 8)
    G = feedback_to_feedforward(K, p.A, p.B)
    assert ser.membership(G, chain(3))
    back = feedforward_to_feedback(G, p.A, p.B)
    assert np.max(np.abs(back.coeffs[:7] - K.coeffs[:7])) <= 1e-10


def test_law_violation_rejected(rng):
    p = control_instance(1)
    c = np.zeros((3, p.m, p.n))
    c[0, 2, 0] = 1.0
    with pytest.raises(ValueError):
        feedback_to_feedforward(ser.MatrixSeries(c, p.input_dims, p.state_dims), p.A, p.B,
                                law=adjacency_of(p))
    with pytest.raises(ValueError):
        feedback_to_feedforward(ser.MatrixSeries(c, p.input_dims, p.state_dims), p.A, p.B)


def test_controller_is_transposed_estimator():
    p = control_instance(7, "chain")
    ctrl, filters = synthesize_controller(p)
    g = ctrl.impulse_response(20)
    l = assemble_estimator(filters, ctrl.dual_lift, 20)
    assert np.max(np.abs(g.coeffs - np.transpose(l.coeffs, (0, 2, 1)))) <= 1e-10
    # u_2 never sees w_1 on the chain
    assert np.all(g.coeffs[:, p.input_slice(1), p.state_slice(0)] == 0)
    assert ser.membership(g, chain(3))


def test_controller_matches_feedforward_oracle():
    p = control_instance(11, "cycle")
    ctrl, _ = synthesize_controller(p)
    o = feedforward_ls_oracle(p, horizon=100)
    assert np.max(np.abs(o.coeffs.coeffs[:21] - ctrl.impulse_response(20).coeffs)) < 1e-9


def test_single_node_classical_duality():
    p = scalar_plant(0.9)
    ctrl, filters = synthesize_controller(p)
    (nc,) = ctrl.nodes
    assert np.allclose(nc.K_T, filters[0].K.T)
    d = dualize(p)
    W = np.eye(d.m)
    ref = riccati_iterate(d.A, d.C, d.B @ W @ d.B.T, d.D @ W @ d.D.T, d.B @ W @ d.D.T)
    assert np.isclose(filters[0].riccati.P[0, 0], ref.P[0, 0])


def test_dual_problem_involution_and_costs():
    s = chain_system()
    p = ProblemSpec("estimation", s)
    q = dual_problem(p)
    assert q.kind == "feedforward"
    assert adjacency_of(q.system) == transpose_graph(chain(3))
    back = dual_problem(q)
    assert back.kind == "estimation" and np.array_equal(back.system.A, s.A)
    est = structured_ls_oracle(s, horizon=40).cost
    ff = feedforward_ls_oracle(q.system, horizon=40).cost
    assert abs(est - ff) <= 1e-6 * est
    with pytest.raises(ValueError):
        dual_problem(ProblemSpec("weighted_estimation", s, weight=np.eye(3)))


def test_dimension_mismatch_rejected():
    L = lift(chain_system())
    filters = synthesize_filters(lift(scalar_system()))
    with pytest.raises(ValueError):
        dual_estimator_to_controller(filters, L)
