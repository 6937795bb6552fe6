import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphlqg.graphnet import (POWER_CAP, AdjacencyMatrix, chain, cycle, delay_matrix,
                               max_finite_delay, pattern, patterns, power, transpose_graph)

INF = np.inf
CHAIN_A2 = [[1, 2, 1], [0, 1, 2], [0, 0, 1]]
CYCLE_A2 = [[1, 2, 1], [1, 1, 2], [2, 1, 1]]


def adjacency_strategy(max_n=8):
    return st.integers(1, max_n).flatmap(
        lambda n: arrays(np.int64, (n, n), elements=st.integers(0, 2))
    ).map(AdjacencyMatrix.from_edges)


def test_chain_and_cycle_powers():
    assert np.array_equal(power(chain(3), 2), CHAIN_A2)
    assert np.array_equal(power(cycle(3), 2), CYCLE_A2)
    assert np.array_equal(power(cycle(3), 0), np.eye(3))


def test_delay_tables():
    assert np.array_equal(delay_matrix(chain(3)), [[0, 1, 2], [INF, 0, 1], [INF, INF, 0]])
    assert np.array_equal(delay_matrix(cycle(3)), [[0, 1, 2], [2, 0, 1], [1, 2, 0]])
    ident = delay_matrix(AdjacencyMatrix(np.eye(3, dtype=int)))
    assert np.all(np.diag(ident) == 0)
    assert np.all(np.isinf(ident[~np.eye(3, dtype=bool)]))
    assert max_finite_delay(chain(3)) == 2


def test_patterns():
    assert np.array_equal(pattern(chain(3), 1), chain(3).entries != 0)
    assert np.array_equal(pattern(cycle(3), 0), np.eye(3, dtype=bool))
    assert pattern(cycle(3), 3).all()
    assert np.array_equal(patterns(chain(3), 2)[2], np.array(CHAIN_A2) != 0)


def test_transpose_graph():
    assert np.array_equal(transpose_graph(chain(3)).entries, chain(3).entries.T)
    sym = AdjacencyMatrix([[1, 1], [1, 1]])
    assert transpose_graph(sym) == sym


def _brute_delay(A):
    # breadth-first search over the edge list: j -> i when entries[i, j] > 0
    N = A.N
    out = np.full((N, N), INF)
    for j in range(N):
        dist, frontier = {j: 0}, [j]
        while frontier:
            nxt = []
            for u in frontier:
                for v in range(N):
                    if A.entries[v, u] and v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        for i, d in dist.items():
            out[i, j] = d
    return out


def test_cycle_transpose_delays_by_path_enumeration():
    A = cycle(3)
    assert np.array_equal(delay_matrix(transpose_graph(A)), _brute_delay(transpose_graph(A)))
    assert np.array_equal(delay_matrix(transpose_graph(A)), delay_matrix(A).T)


def test_validation_errors():
    with pytest.raises(ValueError):
        AdjacencyMatrix([[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        AdjacencyMatrix([[1, -1], [0, 1]])
    with pytest.raises(ValueError):
        AdjacencyMatrix([[1, 0, 0]])
    with pytest.raises(ValueError):
        AdjacencyMatrix([[1, 0.5], [0, 1]])
    with pytest.raises(ValueError):
        power(chain(2), -1)


def test_saturation():
    A = AdjacencyMatrix(np.full((3, 3), 2))
    P = power(A, 40)
    assert P.max() == POWER_CAP
    assert np.all(P > 0)


def test_csv_roundtrip(tmp_path):
    A = cycle(4)
    A.to_csv(tmp_path / "a.csv")
    assert AdjacencyMatrix.from_csv(tmp_path / "a.csv") == A
    assert hash(AdjacencyMatrix.from_csv(tmp_path / "a.csv")) == hash(A)


@settings(max_examples=60, deadline=None)
@given(adjacency_strategy())
def test_semiring_consistency(A):
    N = A.N
    P = patterns(A, 2 * N)
    for s, t in itertools.product(range(N + 1), repeat=2):
        composed = (P[s].astype(int) @ P[t].astype(int)) > 0
        assert np.all(P[s + t][composed])


@settings(max_examples=60, deadline=None)
@given(adjacency_strategy())
def test_delay_properties(A):
    D = delay_matrix(A)
    N = A.N
    assert np.all(np.diag(D) == 0)
    assert np.all(D[np.isfinite(D)] <= N - 1)
    assert np.array_equal(D, _brute_delay(A))
    for i, j, k in itertools.product(range(N), repeat=3):
        if np.isfinite(D[i, k]) and np.isfinite(D[k, j]):
            assert D[i, j] <= D[i, k] + D[k, j]
    P = patterns(A, N + 1)
    for s in range(N + 1):
        assert np.all(P[s + 1][P[s]])
        assert np.array_equal(P[s], D <= s)
    assert np.array_equal(delay_matrix(transpose_graph(A)), D.T)
