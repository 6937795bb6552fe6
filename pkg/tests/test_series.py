import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphlqg import series as ser
from graphlqg.graphnet import AdjacencyMatrix, chain, transpose_graph
from graphlqg.series import LawMismatchError, MatrixSeries

from conftest import random_adjacency


def rand_series(rng, law, dims, T, strict=False):
    c = rng.standard_normal((T + 1, sum(dims), sum(dims)))
    if strict:
        c[0] = 0
    return ser.masked(c, dims, dims, law)


def test_identity_is_neutral(rng):
    G = rand_series(rng, chain(3), (1, 2, 1), 5)
    I = ser.identity((1, 2, 1), 5, chain(3))
    assert np.array_equal(ser.multiply(G, I).coeffs, G.coeffs)
    assert np.array_equal((I @ G).coeffs, G.coeffs)


def test_chain_convolution_by_hand():
    law = chain(3)
    ones = ser.masked(np.ones((3, 3, 3)), (1, 1, 1), (1, 1, 1), law)
    g1 = ser.polynomial({0: ones.coeffs[0]}, (1, 1, 1), (1, 1, 1), 2, law)
    g2 = ser.masked(np.ones((3, 3, 3)), (1, 1, 1), (1, 1, 1), law)
    g3 = ser.multiply(g1, g2)
    assert g3.block(1, 0, 2)[0, 0] == 0.0
    assert g3.block(2, 0, 2)[0, 0] != 0.0


def test_product_matches_brute_force(rng):
    law = chain(3)
    G1, G2 = rand_series(rng, law, (1, 1, 1), 5), rand_series(rng, law, (1, 1, 1), 5)
    P = ser.multiply(G1, G2)
    for t in range(6):
        ref = sum(G1.coeffs[s] @ G2.coeffs[t - s] for s in range(t + 1))
        assert np.allclose(P.coeffs[t], ref)
    assert ser.membership(P, law)


def test_feedback_inverse_examples(rng):
    H2 = rand_series(rng, chain(3), (1, 1, 1), 4)
    Z = ser.zeros((1, 1, 1), (1, 1, 1), 4, chain(3))
    assert np.array_equal(ser.feedback_inverse(H2, Z).coeffs, H2.coeffs)
    a = 0.7
    geo = ser.feedback_inverse(ser.identity((1,), 10), ser.polynomial({1: [[a]]}, (1,), (1,), 10))
    assert np.allclose(geo.coeffs[:, 0, 0], a ** np.arange(11))


def test_feedback_inverse_matches_neumann_sum(rng):
    law, dims, T = chain(3), (2, 1, 1), 6
    H1, H2 = rand_series(rng, law, dims, T, strict=True), rand_series(rng, law, dims, T)
    out = ser.feedback_inverse(H2, H1)
    ref = np.zeros_like(H2.coeffs)
    term = H2
    for _ in range(T + 1):
        ref += term.coeffs
        term = ser.multiply(term, H1)
    assert np.allclose(out.coeffs, ref)
    assert ser.membership(out, law)


def test_feedback_inverse_rejects_direct_term(rng):
    H = rand_series(rng, chain(3), (1, 1, 1), 3)
    with pytest.raises(ValueError):
        ser.feedback_inverse(H, H)


def test_transpose_and_norm(rng):
    G = rand_series(rng, chain(3), (1, 2, 1), 4)
    Gt = ser.transpose(G)
    assert Gt.law == transpose_graph(chain(3))
    assert np.isclose(ser.norm(G), ser.norm(Gt))
    sym = MatrixSeries(np.array([[[1.0, 2.0], [2.0, 3.0]]]), (1, 1), (1, 1))
    assert np.array_equal(ser.transpose(sym).coeffs, sym.coeffs)


def test_norm_examples():
    assert ser.norm(ser.zeros((2,), (2,), 3)) == 0.0
    assert np.isclose(ser.norm(ser.identity((2,), 3)), np.sqrt(2))
    geo = MatrixSeries(0.5 ** np.arange(21)[:, None, None], (1,), (1,))
    assert abs(ser.norm(geo) - 1.154700) < 1e-6


def test_membership():
    law = chain(3)
    c = np.zeros((3, 3, 3))
    assert ser.membership(MatrixSeries(c, (1, 1, 1), (1, 1, 1)), law)
    c[1, 2, 0] = 1.0
    assert not ser.membership(MatrixSeries(c, (1, 1, 1), (1, 1, 1)), law)


def test_law_enforcement_and_errors(rng):
    c = np.zeros((2, 3, 3))
    c[1, 2, 0] = 1.0
    with pytest.raises(ValueError):
        MatrixSeries(c, (1, 1, 1), (1, 1, 1), chain(3))
    G = rand_series(rng, chain(3), (1, 1, 1), 3)
    H = rand_series(rng, transpose_graph(chain(3)), (1, 1, 1), 3)
    with pytest.raises(LawMismatchError):
        G + H
    with pytest.raises(ValueError):
        ser.multiply(G, rand_series(rng, None, (2, 1), 3))
    with pytest.raises(ValueError):
        MatrixSeries(np.zeros((2, 3, 3)), (1, 1), (1, 1, 1))


def test_arithmetic_and_shift(rng):
    law = chain(3)
    G = rand_series(rng, law, (1, 1, 1), 4)
    assert np.allclose((G - G).coeffs, 0)
    assert np.allclose(G.scale(2).coeffs, (G + G).coeffs)
    S = G.shift(2)
    assert np.array_equal(S.coeffs[2:], G.coeffs[:3])
    assert np.all(S.coeffs[:2] == 0)
    assert G.truncate(2).horizon == 2


def test_dir_roundtrip(tmp_path, rng):
    G = rand_series(rng, chain(3), (1, 2, 1), 3)
    G.to_dir(tmp_path / "g")
    back = MatrixSeries.from_dir(tmp_path / "g")
    assert np.array_equal(back.coeffs, G.coeffs)
    assert back.law == G.law and back.row_dims == G.row_dims


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 8), st.integers(0, 2**31 - 1))
def test_closure_property(N, T, seed):
    rng = np.random.default_rng(seed)
    law = random_adjacency(rng, N)
    dims = tuple(int(d) for d in rng.integers(1, 3, size=N))
    G1, G2 = rand_series(rng, law, dims, T), rand_series(rng, law, dims, T, strict=True)
    assert ser.membership(ser.multiply(G1, G2), law)
    assert ser.membership(ser.feedback_inverse(G1, G2), law)
    assert ser.membership(G1 + G2, law)


def test_unlawful_input_still_detected():
    law = AdjacencyMatrix(np.eye(2, dtype=int))
    G = MatrixSeries(np.ones((2, 2, 2)), (1, 1), (1, 1))
    assert not ser.membership(G, law)
    full = AdjacencyMatrix(np.ones((2, 2), dtype=int))
    # lag 0 follows A^0 = I even on a complete graph
    assert not ser.membership(G, full)
    c = np.ones((2, 2, 2))
    c[0] = np.eye(2)
    assert ser.membership(MatrixSeries(c, (1, 1), (1, 1)), full)
