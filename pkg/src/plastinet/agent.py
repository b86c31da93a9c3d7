"""Composes the model pieces into one canonical per-step pipeline.

Owns the flat genome layout (what the evolution strategy optimizes), the
agent state carried across an entire lifetime, and multi-episode rollouts.

Step pipeline, in order:
  1. activations <- recurrent update, inputs pinned to the observation
  2. action      <- decoded from the output-node activations
     (a frozen-graph agent stops here: nothing but activations may change)
  3. node states <- attention + node GRU, seeing the fresh activations
  4. edge states <- edge GRU over existing edges, fed the last reward
  5. weights     <- first edge-state channel, masked by adjacency
  6. adjacency   <- genesis/pruning step (when enabled), weights refreshed

Each stage sees the values produced by the stages before it within the
same step. The frozen-graph flag only applies to environment interaction;
the pre-experience phase always develops the graph (that phase is the
developmental program being ablated *after*).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics, edge_model, envs, node_model, structure
from .dynamics import ActionSpaceSpec
from .errors import ConfigError, NumericError
from .graph import GraphState, TopologyConfig, density, init_graph, weight_stats
from .gru import GruParams, gru_zeros
from .node_model import GtParams, gt_zeros
from .numerics import RngStream, make_rng
from .spontaneous import OuParams, ou_zeros, run_sa_phase
from .structure import SpParams, mlp_head_zeros

NODE_EXTRA_FEATURES = 7  # activation scalar + 6 structural features
EDGE_EXTRA_FEATURES = 3  # forward/backward adjacency bits + self flag


@dataclass(frozen=True)
class AgentConfig:
    topology: TopologyConfig
    action_space: ActionSpaceSpec
    dh: int = 8  # node state width
    de: int = 4  # edge state width
    n_heads: int = 2
    d_head: int = 8
    gt_out: int = 16  # attention output width = node GRU input
    sp_hidden: int = 8  # hidden width of both rewiring heads
    sp_enabled: bool = True
    frozen_graph: bool = False
    sa_steps: int = 0

    def __post_init__(self):
        if self.action_space.n != self.topology.n_out:
            raise ConfigError(
                f"action space wants {self.action_space.n} outputs, "
                f"topology has {self.topology.n_out}"
            )
        for name in ("dh", "de", "n_heads", "d_head", "gt_out", "sp_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.sa_steps < 0:
            raise ConfigError("sa_steps must be >= 0")

    @property
    def d_node_in(self) -> int:
        return 1 + self.dh + 6

    @property
    def d_edge_in(self) -> int:
        return self.de + 3


@dataclass
class AgentParams:
    cfg: AgentConfig
    gt: GtParams
    node_gru: GruParams
    edge_gru: GruParams
    sp: SpParams
    ou: OuParams


@dataclass
class AgentState:
    graph: GraphState
    ou_state: np.ndarray
    step_index: int = 0
    last_reward: float = 0.0


@dataclass
class FitnessReport:
    """Rollout outcome. fitness = mean over trials of mean episode return.

    The trajectory vectors track trial 0 only, one entry per environment
    step (the pre-experience phase is not included).
    """

    fitness: float
    per_episode_returns: np.ndarray  # (episodes,) mean across trials
    per_trial_returns: np.ndarray  # (trials, episodes)
    density_trajectory: np.ndarray
    weight_mean_trajectory: np.ndarray
    weight_var_trajectory: np.ndarray
    final_density: float  # mean across trials of end-of-life density


def zeros_params(cfg: AgentConfig) -> AgentParams:
    """All-zero genome; add/remove heads sit at probability 0.5."""
    return AgentParams(
        cfg=cfg,
        gt=gt_zeros(cfg.n_heads, cfg.d_head, cfg.d_node_in, cfg.d_edge_in, cfg.gt_out),
        node_gru=gru_zeros(cfg.gt_out, cfg.dh),
        edge_gru=gru_zeros(2 * cfg.dh + 3, cfg.de),
        sp=SpParams(
            genesis=mlp_head_zeros(2 * cfg.dh, cfg.sp_hidden),
            pruning=mlp_head_zeros(cfg.de, cfg.sp_hidden),
            enabled=cfg.sp_enabled,
        ),
        ou=ou_zeros(cfg.topology.n_in, cfg.sa_steps),
    )


def _param_arrays(p: AgentParams):
    """Yield every learnable array in the documented genome order.

    Order: attention heads (per head: q, k, v, edge projection), output
    mix + bias, node GRU (input, recurrent, bias; gate rows z|r|cand),
    edge GRU likewise, genesis head, pruning head (both only when
    structural plasticity is enabled), then OU mean, raw rates, and the
    lower triangle of the noise factor, row-major throughout.
    """
    cfg = p.cfg
    for h in range(cfg.n_heads):
        yield p.gt.w_q[h]
        yield p.gt.w_k[h]
        yield p.gt.w_v[h]
        yield p.gt.w_e[h]
    yield p.gt.w_o
    yield p.gt.b_o
    for gru in (p.node_gru, p.edge_gru):
        yield gru.w_x
        yield gru.w_h
        yield gru.b
    if cfg.sp_enabled:
        for head in (p.sp.genesis, p.sp.pruning):
            yield head.w1
            yield head.b1
            yield head.w2
            yield head.b2
    yield p.ou.mu
    yield p.ou.raw_alpha
    do = cfg.topology.n_in
    yield p.ou.chol[np.tril_indices(do)]


def _layout_shapes(cfg: AgentConfig):
    shapes = []
    for _ in range(cfg.n_heads):
        shapes += [
            (cfg.d_head, cfg.d_node_in),
            (cfg.d_head, cfg.d_node_in),
            (cfg.d_head, cfg.d_node_in),
            (cfg.d_head, cfg.d_edge_in),
        ]
    shapes += [(cfg.gt_out, cfg.n_heads * cfg.d_head), (cfg.gt_out,)]
    shapes += [(3 * cfg.dh, cfg.gt_out), (3 * cfg.dh, cfg.dh), (3 * cfg.dh,)]
    shapes += [(3 * cfg.de, 2 * cfg.dh + 3), (3 * cfg.de, cfg.de), (3 * cfg.de,)]
    if cfg.sp_enabled:
        for in_dim in (2 * cfg.dh, cfg.de):
            shapes += [
                (cfg.sp_hidden, in_dim),
                (cfg.sp_hidden,),
                (1, cfg.sp_hidden),
                (1,),
            ]
    do = cfg.topology.n_in
    shapes += [(do,), (do,), (do * (do + 1) // 2,)]
    return shapes


def param_count(cfg: AgentConfig) -> int:
    return sum(int(np.prod(s)) for s in _layout_shapes(cfg))


def sp_param_count(cfg: AgentConfig) -> int:
    """Genome size of the two rewiring heads together."""
    gen = cfg.sp_hidden * (2 * cfg.dh) + cfg.sp_hidden + cfg.sp_hidden + 1
    pru = cfg.sp_hidden * cfg.de + cfg.sp_hidden + cfg.sp_hidden + 1
    return gen + pru


def flatten(p: AgentParams) -> np.ndarray:
    """Genome as a float64 vector (the optimizer's native precision)."""
    return np.concatenate([np.ravel(a) for a in _param_arrays(p)]).astype(np.float64)


def _mlp_from(pieces) -> structure.MlpHead:
    w1, b1, w2, b2 = pieces
    return structure.MlpHead(w1=w1, b1=b1, w2=w2, b2=b2)


def unflatten(x: np.ndarray, cfg: AgentConfig) -> AgentParams:
    """Inverse of flatten; model arrays come back float32."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != param_count(cfg):
        raise ValueError(
            f"genome has {x.shape[0]} entries, config wants {param_count(cfg)}"
        )
    pieces = []
    pos = 0
    for shape in _layout_shapes(cfg):
        size = int(np.prod(shape))
        pieces.append(x[pos : pos + size].reshape(shape).astype(np.float32))
        pos += size
    it = iter(pieces)

    def take(k):
        return [next(it) for _ in range(k)]

    heads = [take(4) for _ in range(cfg.n_heads)]
    gt = GtParams(
        w_q=np.stack([h[0] for h in heads]),
        w_k=np.stack([h[1] for h in heads]),
        w_v=np.stack([h[2] for h in heads]),
        w_e=np.stack([h[3] for h in heads]),
        w_o=next(it),
        b_o=next(it),
    )
    node_gru = GruParams(*take(3))
    edge_gru = GruParams(*take(3))
    if cfg.sp_enabled:
        sp = SpParams(genesis=_mlp_from(take(4)), pruning=_mlp_from(take(4)), enabled=True)
    else:
        sp = SpParams(
            genesis=mlp_head_zeros(2 * cfg.dh, cfg.sp_hidden),
            pruning=mlp_head_zeros(cfg.de, cfg.sp_hidden),
            enabled=False,
        )
    do = cfg.topology.n_in
    mu, raw_alpha, tril = take(3)
    chol = np.zeros((do, do), dtype=np.float32)
    chol[np.tril_indices(do)] = tril
    ou = OuParams(mu=mu, raw_alpha=raw_alpha, chol=chol, sa_steps=cfg.sa_steps)
    return AgentParams(cfg=cfg, gt=gt, node_gru=node_gru, edge_gru=edge_gru, sp=sp, ou=ou)


def init_state(params: AgentParams, rng: RngStream) -> AgentState:
    cfg = params.cfg
    g = init_graph(cfg.topology, rng, dh=cfg.dh, de=cfg.de)
    return AgentState(
        graph=g,
        ou_state=params.ou.mu.astype(np.float32, copy=True),
        step_index=0,
        last_reward=0.0,
    )


def agent_step(
    state: AgentState,
    params: AgentParams,
    obs: np.ndarray,
    reward: float,
    rng: RngStream,
    develop: bool | None = None,
):
    """One full step; returns (action, new state).

    ``develop`` overrides the frozen-graph flag (the pre-experience phase
    passes True). ``reward`` is whatever the environment paid for the
    *previous* action — zero before any feedback exists.
    """
    if develop is None:
        develop = not params.cfg.frozen_graph
    g = state.graph
    v = dynamics.step_activations(g.activations, g.weights, obs)
    action = dynamics.decode_action(v, params.cfg.action_space)
    g = GraphState(
        adjacency=g.adjacency,
        node_states=g.node_states,
        edge_states=g.edge_states,
        activations=v,
        weights=g.weights,
        node_kind=g.node_kind,
        allowed=g.allowed,
    )
    if develop:
        h = node_model.node_update(params.gt, params.node_gru, g)
        e = edge_model.edge_update(params.edge_gru, g, h, reward)
        g = GraphState(
            adjacency=g.adjacency,
            node_states=h,
            edge_states=e,
            activations=v,
            weights=edge_model.masked_weights(e, g.adjacency),
            node_kind=g.node_kind,
            allowed=g.allowed,
        )
        if params.cfg.sp_enabled:
            g = structure.apply_structural_step(params.sp, g, rng)
    new_state = AgentState(
        graph=g,
        ou_state=state.ou_state,
        step_index=state.step_index + 1,
        last_reward=float(reward),
    )
    return action, new_state


def rollout(
    params: AgentParams,
    env_kind: str,
    episodes: int,
    trials: int,
    seed: int,
    sa_enabled: bool = True,
    step_hook=None,
    env_kwargs: dict | None = None,
) -> FitnessReport:
    """Evaluate one genome: ``trials`` independent lifetimes.

    Each trial draws a fresh graph, optionally runs the pre-experience
    phase, then plays ``episodes`` episodes back-to-back; the environment
    resets between episodes, the agent never does. The reward fed to the
    agent always lags one environment step (and carries across episode
    boundaries). A numeric blow-up anywhere prices the whole rollout at
    the environment's minimum achievable episode return.
    """
    if episodes < 1 or trials < 1:
        raise ConfigError("episodes and trials must be >= 1")
    env = envs.make_env(env_kind, **(env_kwargs or {}))
    cfg = params.cfg
    if env.spec.obs_dim != cfg.topology.n_in:
        raise ConfigError(
            f"{env_kind} emits {env.spec.obs_dim} observations, "
            f"topology has {cfg.topology.n_in} inputs"
        )
    if env.spec.action_space != cfg.action_space:
        raise ConfigError(f"action space mismatch for {env_kind}")

    root = make_rng(seed)
    per_trial = np.zeros((trials, episodes), dtype=np.float64)
    dens_traj: list = []
    wmean_traj: list = []
    wvar_traj: list = []
    final_densities = np.zeros(trials, dtype=np.float64)
    try:
        for k in range(trials):
            trial_rng = root.child(k)
            state = init_state(params, trial_rng.child(0))
            if sa_enabled and cfg.sa_steps > 0:
                state = run_sa_phase(state, params, trial_rng.child(1))
            env_rng = trial_rng.child(2)
            step_rng = trial_rng.child(3)
            prev_reward = 0.0
            t = 0
            record = k == 0
            for ep in range(episodes):
                env_state, raw_obs = env.reset(env_rng)
                ep_return = 0.0
                done = False
                while not done:
                    obs = dynamics.normalize_obs(env_kind, raw_obs)
                    action, state = agent_step(state, params, obs, prev_reward, step_rng)
                    env_state, raw_obs, r, done = env.step(env_state, action, env_rng)
                    ep_return += r
                    prev_reward = r
                    if record:
                        g = state.graph
                        dens_traj.append(density(g))
                        wm, wv = weight_stats(g)
                        wmean_traj.append(wm)
                        wvar_traj.append(wv)
                    if step_hook is not None:
                        step_hook(k, t, obs, action, r, done, state, env_state)
                    t += 1
                per_trial[k, ep] = ep_return
            final_densities[k] = density(state.graph)
    except NumericError:
        worst = env.spec.min_return
        per_trial[:] = worst
        return FitnessReport(
            fitness=float(worst),
            per_episode_returns=np.full(episodes, worst, dtype=np.float64),
            per_trial_returns=per_trial,
            density_trajectory=np.zeros(0),
            weight_mean_trajectory=np.zeros(0),
            weight_var_trajectory=np.zeros(0),
            final_density=0.0,
        )
    return FitnessReport(
        fitness=float(per_trial.mean()),
        per_episode_returns=per_trial.mean(axis=0),
        per_trial_returns=per_trial,
        density_trajectory=np.asarray(dens_traj, dtype=np.float64),
        weight_mean_trajectory=np.asarray(wmean_traj, dtype=np.float64),
        weight_var_trajectory=np.asarray(wvar_traj, dtype=np.float64),
        final_density=float(final_densities.mean()),
    )
