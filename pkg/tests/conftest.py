"""Shared helpers for the test suite.

Most tests build tiny networks (6-12 nodes) so that hand calculations and
brute-force references stay readable. Randomized checks use explicit seed
loops; every draw goes through the package's own streams so failures
reproduce exactly.
"""

from __future__ import annotations

import numpy as np
import pytest

from plastinet.agent import AgentConfig, AgentParams, param_count, unflatten
from plastinet.dynamics import ActionSpaceSpec
from plastinet.graph import GraphState, TopologyConfig, init_graph
from plastinet.numerics import make_rng


def tiny_topology(
    n_total: int = 8,
    n_in: int = 2,
    n_out: int = 2,
    mu_conn: float = 0.5,
    sigma_conn: float = 0.0,
    self_loops: bool = True,
) -> TopologyConfig:
    return TopologyConfig(
        n_total=n_total,
        n_in=n_in,
        n_out=n_out,
        mu_conn=mu_conn,
        sigma_conn=sigma_conn,
        self_loops_allowed=self_loops,
    )


def tiny_config(**overrides) -> AgentConfig:
    """Small agent config; keyword overrides forward to AgentConfig."""
    kw = dict(
        topology=overrides.pop("topology", tiny_topology()),
        action_space=overrides.pop("action_space", ActionSpaceSpec.discrete(2)),
        dh=4,
        de=3,
        n_heads=2,
        d_head=3,
        gt_out=5,
        sp_hidden=4,
    )
    kw.update(overrides)
    return AgentConfig(**kw)


def random_params(cfg: AgentConfig, seed: int, scale: float = 0.3) -> AgentParams:
    """Random genome through the real unflatten path (float32 arrays)."""
    gen = np.random.default_rng(seed)
    return unflatten(gen.normal(0.0, scale, size=param_count(cfg)), cfg)


def random_graph(topo: TopologyConfig, seed: int, dh: int = 4, de: int = 3) -> GraphState:
    return init_graph(topo, make_rng(seed), dh=dh, de=de)


def assert_graphs_equal(a: GraphState, b: GraphState) -> None:
    assert np.array_equal(a.adjacency, b.adjacency)
    assert np.array_equal(a.node_states, b.node_states)
    assert np.array_equal(a.edge_states, b.edge_states)
    assert np.array_equal(a.activations, b.activations)
    assert np.array_equal(a.weights, b.weights)


def graphs_differ(a: GraphState, b: GraphState) -> bool:
    return (
        not np.array_equal(a.adjacency, b.adjacency)
        or not np.array_equal(a.node_states, b.node_states)
        or not np.array_equal(a.edge_states, b.edge_states)
    )


@pytest.fixture
def rng():
    return make_rng(1234)
