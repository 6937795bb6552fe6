import numpy as np
import pytest

from graphlqg.graphnet import AdjacencyMatrix, chain, cycle
from graphlqg.systems import random_control_system, random_estimation_system


def random_adjacency(rng, N, density=0.4):
    arr = (rng.random((N, N)) < density).astype(int)
    return AdjacencyMatrix.from_edges(arr)


def estimation_instance(seed, graph="chain", N=3, state_dims=None, output_dims=None, rho=0.8):
    rng = np.random.default_rng(seed)
    adj = {"chain": chain, "cycle": cycle}[graph](N)
    return random_estimation_system(rng, adj, state_dims, output_dims, rho=rho)


def control_instance(seed, graph="chain", N=3, state_dims=None, input_dims=None, rho=0.8):
    rng = np.random.default_rng(seed)
    adj = {"chain": chain, "cycle": cycle}[graph](N)
    return random_control_system(rng, adj, state_dims, input_dims, rho=rho)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
