"""Genome layout, the composed step pipeline, and rollout semantics."""

import numpy as np
import pytest

from plastinet import agent as agent_mod
from plastinet import dynamics, edge_model, envs, node_model, structure
from plastinet.agent import (
    AgentConfig,
    agent_step,
    flatten,
    init_state,
    param_count,
    rollout,
    sp_param_count,
    unflatten,
    zeros_params,
)
from plastinet.dynamics import ActionSpaceSpec
from plastinet.errors import ConfigError
from plastinet.graph import TopologyConfig, init_graph
from plastinet.numerics import make_rng

from .conftest import (
    assert_graphs_equal,
    graphs_differ,
    random_params,
    tiny_config,
    tiny_topology,
)


def test_config_rejects_action_space_mismatch():
    with pytest.raises(ConfigError):
        AgentConfig(
            topology=tiny_topology(n_out=2), action_space=ActionSpaceSpec.discrete(3)
        )
    with pytest.raises(ConfigError):
        tiny_config(dh=0)
    with pytest.raises(ConfigError):
        tiny_config(sa_steps=-1)


def test_input_dims_arithmetic():
    cfg = tiny_config()
    assert cfg.d_node_in == 1 + cfg.dh + 6
    assert cfg.d_edge_in == cfg.de + 3


# ---------------------------------------------------------------------------
# Genome layout


def test_param_count_matches_flatten_length():
    for sp in (True, False):
        cfg = tiny_config(sp_enabled=sp)
        assert flatten(zeros_params(cfg)).shape == (param_count(cfg),)


def test_param_count_closed_form_default_architecture():
    # Independent arithmetic for the full-size architecture on each task.
    def expected(n_in, n_out, dh=8, de=4, heads=2, d_head=8, gt_out=16, sp_hidden=8):
        d_node_in = 1 + dh + 6
        d_edge_in = de + 3
        attn = heads * (3 * d_head * d_node_in + d_head * d_edge_in)
        attn += gt_out * heads * d_head + gt_out
        node_gru = 3 * dh * gt_out + 3 * dh * dh + 3 * dh
        edge_gru = 3 * de * (2 * dh + 3) + 3 * de * de + 3 * de
        sp = sp_hidden * 2 * dh + sp_hidden + sp_hidden + 1
        sp += sp_hidden * de + sp_hidden + sp_hidden + 1
        ou = n_in + n_in + n_in * (n_in + 1) // 2
        return attn + node_gru + edge_gru + sp + ou

    for env_kind, n_in, n_out in (("cartpole", 4, 2), ("foraging", 5, 3), ("acrobot", 6, 3)):
        cfg = AgentConfig(
            topology=TopologyConfig(n_total=32, n_in=n_in, n_out=n_out),
            action_space=ActionSpaceSpec.discrete(n_out),
        )
        assert param_count(cfg) == expected(n_in, n_out)
    # the two concrete sizes the desk-scale runs train
    assert param_count(
        AgentConfig(
            topology=TopologyConfig(n_total=32, n_in=5, n_out=3),
            action_space=ActionSpaceSpec.discrete(3),
        )
    ) == 2211


def test_sp_toggle_changes_count_by_exactly_the_two_heads():
    # Full-size architecture: genesis (8x16+8 + 8+1 = 145) and pruning
    # (8x4+8 + 8+1 = 49) make 194 parameters together.
    base = dict(
        topology=TopologyConfig(n_total=32, n_in=4, n_out=2),
        action_space=ActionSpaceSpec.discrete(2),
    )
    on = AgentConfig(sp_enabled=True, **base)
    off = AgentConfig(sp_enabled=False, **base)
    assert param_count(on) - param_count(off) == sp_param_count(on) == 194

    small_on, small_off = tiny_config(sp_enabled=True), tiny_config(sp_enabled=False)
    assert param_count(small_on) - param_count(small_off) == sp_param_count(small_on)


def test_flatten_unflatten_roundtrip_fuzz():
    cfg = tiny_config()
    n = param_count(cfg)
    gen = np.random.default_rng(0)
    for _ in range(1000):
        vec = gen.normal(0, 1, n)
        back = flatten(unflatten(vec, cfg))
        # float64 -> float32 -> float64: exactly the float32 rounding
        assert np.array_equal(back, vec.astype(np.float32).astype(np.float64))
        assert np.array_equal(flatten(unflatten(back, cfg)), back)  # idempotent


def test_unflatten_wrong_length_rejected():
    cfg = tiny_config()
    with pytest.raises(ValueError):
        unflatten(np.zeros(param_count(cfg) + 1), cfg)


def test_layout_positions_are_pinned():
    """Perturbing specific genome slots must hit the documented arrays."""
    cfg = tiny_config()
    base = np.zeros(param_count(cfg))

    v = base.copy()
    v[0] = 1.0  # very first slot: head 0 query row 0, input 0
    p = unflatten(v, cfg)
    assert p.gt.w_q[0][0, 0] == 1.0
    assert not p.gt.w_k.any()

    v = base.copy()
    v[-1] = 2.0  # very last slot: last entry of the OU noise triangle
    p = unflatten(v, cfg)
    do = cfg.topology.n_in
    assert p.ou.chol[do - 1, do - 1] == 2.0
    assert not p.ou.mu.any()

    # the slot right before the OU block is the pruning head's output bias
    v = base.copy()
    ou_size = do + do + do * (do + 1) // 2
    v[-(ou_size + 1)] = 3.0
    p = unflatten(v, cfg)
    assert p.sp.pruning.b2[0] == 3.0


def test_unflatten_sp_disabled_keeps_heads_zero_and_off():
    cfg = tiny_config(sp_enabled=False)
    vec = np.random.default_rng(1).normal(0, 1, param_count(cfg))
    p = unflatten(vec, cfg)
    assert p.sp.enabled is False
    assert not p.sp.genesis.w1.any() and not p.sp.pruning.w1.any()


# ---------------------------------------------------------------------------
# Step pipeline


def test_step_composition_matches_manual_pipeline():
    """agent_step == the five documented stages applied in order."""
    cfg = tiny_config()
    params = random_params(cfg, seed=7, scale=0.8)
    state = init_state(params, make_rng(8))
    obs = np.array([0.3, -0.6], dtype=np.float32)
    reward = 1.5

    action, new_state = agent_step(state, params, obs, reward, make_rng(9))

    g = state.graph.copy()
    v = dynamics.step_activations(g.activations, g.weights, obs)
    want_action = dynamics.decode_action(v, cfg.action_space)
    g.activations = v
    h = node_model.node_update(params.gt, params.node_gru, g)
    e = edge_model.edge_update(params.edge_gru, g, h, reward)
    g.node_states = h
    g.edge_states = e
    g.weights = edge_model.masked_weights(e, g.adjacency)
    g = structure.apply_structural_step(params.sp, g, make_rng(9))

    assert action == want_action
    assert_graphs_equal(new_state.graph, g)
    assert new_state.step_index == state.step_index + 1
    assert new_state.last_reward == reward


def test_frozen_step_only_moves_activations():
    cfg = tiny_config(frozen_graph=True)
    params = random_params(cfg, seed=10, scale=0.8)
    state = init_state(params, make_rng(11))
    obs = np.array([0.5, 0.5], dtype=np.float32)
    _, after = agent_step(state, params, obs, 1.0, make_rng(12))
    g0, g1 = state.graph, after.graph
    assert np.array_equal(g0.adjacency, g1.adjacency)
    assert np.array_equal(g0.node_states, g1.node_states)
    assert np.array_equal(g0.edge_states, g1.edge_states)
    assert np.array_equal(g0.weights, g1.weights)
    assert not np.array_equal(g0.activations, g1.activations)
    # ... but the develop override punches through the flag
    _, grown = agent_step(state, params, obs, 1.0, make_rng(12), develop=True)
    assert graphs_differ(g0, grown.graph)


def test_rng_consumed_only_by_structural_step():
    # Without structural plasticity a step is a deterministic function of
    # (state, params, obs, reward); the stream must stay untouched.
    cfg = tiny_config(sp_enabled=False)
    params = random_params(cfg, seed=13)
    state = init_state(params, make_rng(14))
    rng = make_rng(15)
    agent_step(state, params, np.zeros(2, dtype=np.float32), 0.0, rng)
    assert np.array_equal(rng.uniform(size=4), make_rng(15).uniform(size=4))


# ---------------------------------------------------------------------------
# Rollouts


def _foraging_cfg(**kw):
    topo = TopologyConfig(n_total=10, n_in=5, n_out=3, mu_conn=0.5)
    return tiny_config(topology=topo, action_space=ActionSpaceSpec.discrete(3), **kw)


def test_rollout_bit_exact_determinism():
    cfg = _foraging_cfg(sa_steps=10)
    params = random_params(cfg, seed=16, scale=0.5)
    a = rollout(params, "foraging", episodes=1, trials=2, seed=77)
    b = rollout(params, "foraging", episodes=1, trials=2, seed=77)
    assert a.fitness == b.fitness
    assert np.array_equal(a.per_trial_returns, b.per_trial_returns)
    assert np.array_equal(a.density_trajectory, b.density_trajectory)
    assert np.array_equal(a.weight_mean_trajectory, b.weight_mean_trajectory)
    c = rollout(params, "foraging", episodes=1, trials=2, seed=78)
    assert not np.array_equal(a.per_trial_returns, c.per_trial_returns)


def test_rollout_validates_topology_against_env():
    cfg = tiny_config()  # 2 inputs, 2 outputs: wrong for foraging
    params = random_params(cfg, seed=17)
    with pytest.raises(ConfigError):
        rollout(params, "foraging", episodes=1, trials=1, seed=0)
    with pytest.raises(ConfigError):
        rollout(params, "acrobot", episodes=1, trials=1, seed=0)
    with pytest.raises(ConfigError):
        rollout(params, "cartpole", episodes=0, trials=1, seed=0)


def test_frozen_rollout_keeps_graph_constant():
    """The ablated agent's graph never moves during environment steps."""
    cfg = _foraging_cfg(frozen_graph=True, sa_steps=20)
    params = random_params(cfg, seed=18, scale=0.5)

    seen = []
    rollout(
        params,
        "foraging",
        episodes=1,
        trials=1,
        seed=5,
        step_hook=lambda k, t, obs, a, r, done, state, env_state: seen.append(
            state.graph
        ),
    )
    first = seen[0]
    for g in seen[1:]:
        assert np.array_equal(g.adjacency, first.adjacency)
        assert np.array_equal(g.node_states, first.node_states)
        assert np.array_equal(g.edge_states, first.edge_states)
        assert np.array_equal(g.weights, first.weights)

    # ... yet the pre-experience phase did develop it: with the phase off,
    # the frozen graph is a different one (same seeds everywhere else).
    seen_no_sa = []
    rollout(
        params,
        "foraging",
        episodes=1,
        trials=1,
        seed=5,
        sa_enabled=False,
        step_hook=lambda k, t, obs, a, r, done, state, env_state: seen_no_sa.append(
            state.graph
        ),
    )
    assert graphs_differ(first, seen_no_sa[0])


def test_plastic_rollout_changes_graph():
    cfg = _foraging_cfg()
    params = random_params(cfg, seed=19, scale=0.5)
    seen = []
    rollout(
        params,
        "foraging",
        episodes=1,
        trials=1,
        seed=6,
        step_hook=lambda k, t, obs, a, r, done, state, env_state: seen.append(
            state.graph
        ),
    )
    assert graphs_differ(seen[0], seen[-1])


def test_sp_disabled_rollout_has_constant_adjacency():
    cfg = _foraging_cfg(sp_enabled=False)
    params = random_params(cfg, seed=20, scale=0.5)
    adjs = []
    rollout(
        params,
        "foraging",
        episodes=1,
        trials=1,
        seed=7,
        step_hook=lambda k, t, obs, a, r, done, state, env_state: adjs.append(
            state.graph.adjacency
        ),
    )
    for adj in adjs[1:]:
        assert np.array_equal(adj, adjs[0])


def test_reward_reaches_the_edge_rule_with_one_step_lag(monkeypatch):
    cfg = _foraging_cfg()
    params = random_params(cfg, seed=21, scale=0.5)

    fed_rewards = []
    real = edge_model.edge_update

    def spy(p, g, h_new, reward):
        fed_rewards.append(float(reward))
        return real(p, g, h_new, reward)

    monkeypatch.setattr(agent_mod.edge_model, "edge_update", spy)

    env_rewards = []
    rollout(
        params,
        "foraging",
        episodes=1,
        trials=1,
        seed=8,
        step_hook=lambda k, t, obs, a, r, done, state, env_state: env_rewards.append(r),
    )
    assert fed_rewards[0] == 0.0  # nothing has been paid out yet
    assert fed_rewards[1:] == env_rewards[:-1]  # exactly one step behind


def test_reward_carries_across_episode_boundary(monkeypatch):
    cfg = tiny_config(
        topology=TopologyConfig(n_total=8, n_in=4, n_out=2, mu_conn=0.5),
        action_space=ActionSpaceSpec.discrete(2),
    )
    params = random_params(cfg, seed=22, scale=0.5)

    fed = []
    real = edge_model.edge_update
    monkeypatch.setattr(
        agent_mod.edge_model,
        "edge_update",
        lambda p, g, h, r: (fed.append(float(r)), real(p, g, h, r))[1],
    )
    lengths = []
    env_rewards = []

    def hook(k, t, obs, a, r, done, state, env_state):
        env_rewards.append(r)
        if done:
            lengths.append(t + 1)

    rollout(params, "cartpole", episodes=2, trials=1, seed=9, step_hook=hook)
    # first step of episode 2 sees the final reward of episode 1, not zero
    first_of_ep2 = lengths[0]
    assert fed[first_of_ep2] == env_rewards[first_of_ep2 - 1] == 1.0


def test_numeric_blowup_prices_rollout_at_env_minimum():
    cfg = tiny_config(
        topology=TopologyConfig(n_total=12, n_in=6, n_out=3, mu_conn=0.8),
        action_space=ActionSpaceSpec.discrete(3),
    )
    params = random_params(cfg, seed=23)
    params.gt.w_q[0][0, 0] = np.nan  # poison the genome
    rep = rollout(params, "acrobot", episodes=2, trials=2, seed=10)
    assert rep.fitness == envs.Acrobot.spec.min_return == -500.0
    assert np.all(rep.per_trial_returns == -500.0)
    assert rep.density_trajectory.size == 0
    assert rep.final_density == 0.0


def test_trial_zero_trajectories_cover_every_env_step():
    cfg = _foraging_cfg()
    params = random_params(cfg, seed=24, scale=0.4)
    rep = rollout(params, "foraging", episodes=1, trials=2, seed=11)
    assert rep.density_trajectory.shape == (200,)
    assert rep.weight_mean_trajectory.shape == (200,)
    assert rep.weight_var_trajectory.shape == (200,)
    assert (rep.density_trajectory >= 0).all() and (rep.density_trajectory <= 1).all()
    assert rep.per_trial_returns.shape == (2, 1)
    assert rep.fitness == rep.per_trial_returns.mean()


def test_activations_stay_legal_through_a_lifetime():
    cfg = _foraging_cfg(sa_steps=15)
    params = random_params(cfg, seed=25, scale=1.5)

    def hook(k, t, obs, a, r, done, state, env_state):
        assert np.abs(state.graph.activations).max() <= 1.0
        assert np.abs(state.graph.node_states).max() <= 1.0
        assert np.abs(state.graph.edge_states).max() <= 1.0

    rollout(params, "foraging", episodes=1, trials=1, seed=12, step_hook=hook)


def test_init_state_uses_ou_mean():
    cfg = tiny_config()
    params = random_params(cfg, seed=26)
    st = init_state(params, make_rng(0))
    assert np.array_equal(st.ou_state, params.ou.mu)
    assert st.step_index == 0 and st.last_reward == 0.0
    # graph reproducible from the stream
    g2 = init_graph(cfg.topology, make_rng(0), dh=cfg.dh, de=cfg.de)
    assert_graphs_equal(st.graph, g2)
