import numpy as np
import pytest

from graphlqg.lifting import default_memory, lift, measurement_map, selector
from graphlqg.sysmodel import BlockSystem
from graphlqg.systems import chain_system, scalar_system


def test_chain_extended_dynamics():
    s = chain_system()
    L = lift(s)
    assert L.memory == 2 == default_memory(s)
    expected = np.zeros((9, 9))
    expected[:3, :3] = s.A
    expected[3:6, :3] = np.eye(3)
    expected[6:9, 3:6] = np.eye(3)
    assert np.array_equal(L.A_e, expected)
    assert np.array_equal(L.B_e[:3], s.B) and np.array_equal(L.B_e[3:6], s.D)
    assert np.all(L.B_e[6:] == 0)
    assert L.register_slice(1, 2) == slice(7, 8)


def test_chain_pairs():
    L = lift(chain_system())
    one_based = [(j + 1, k) for j, k in L.pairs[0]]
    assert one_based == [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (3, 3)]
    assert [(j + 1, k) for j, k in L.pairs[2]] == [(3, 1), (3, 2), (3, 3)]
    E1, D1, _ = measurement_map(L, 0)
    assert E1.shape == (6, 9)
    # live row reads C_11 x_1 with direct noise; delayed rows are noise-free register reads
    assert E1[0, 0] == 1.0 and np.any(D1[0] != 0)
    assert np.all(D1[1:] == 0)
    assert E1[1, 3] == 1.0 and E1[2, 4] == 1.0 and E1[5, 8] == 1.0


def test_scalar_memory_one():
    s = scalar_system()
    L = lift(s, 1)
    assert np.array_equal(L.A_e, [[0.5, 0.0], [1.0, 0.0]])


def test_identity_graph_selects_own_rows():
    s = BlockSystem.from_blocks([[0.5, None], [None, 0.3]], [[[1.0, 0.0]], [[1.0, 0.0]]],
                                [[[1.0]], [[1.0]]], np.array([[0, 1, 0, 0], [0, 0, 0, 1.0]]))
    L = lift(s, 2)
    for i in range(2):
        assert {j for j, _ in L.pairs[i]} == {i}


def test_selectors():
    L = lift(chain_system())
    G = [selector(L, i) for i in range(3)]
    assert np.array_equal(G[0][:, :3], [[1, 0, 0]])
    assert np.all(G[0] @ G[1].T == 0)
    total = sum(g.T @ g for g in G)
    assert np.array_equal(total[:3, :3], np.eye(3)) and np.all(total[3:] == 0)
    with pytest.raises(IndexError):
        selector(L, 3)


def test_memory_errors():
    with pytest.raises(ValueError):
        lift(chain_system(), 1)
    with pytest.raises(ValueError):
        lift(scalar_system(), 0)
    assert lift(chain_system(), 4).n_e == 3 + 4 * 3


def test_layout_manifest():
    m = lift(chain_system()).layout_manifest()
    assert m["x1"] == [0, 1] and m["y3[t-2]"] == [8, 9]
