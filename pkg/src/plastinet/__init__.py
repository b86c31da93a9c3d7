"""plastinet: self-organizing recurrent networks with evolved plasticity.

A network's nodes, edges, weights and wiring all change while the agent
lives, driven by small learned rules (an attention layer feeding shared
GRUs, plus genesis/pruning heads); the rule parameters are the genome and
are optimized with CMA-ES on classic-control and foraging tasks.
"""

from .agent import (
    AgentConfig,
    AgentParams,
    AgentState,
    FitnessReport,
    agent_step,
    flatten,
    init_state,
    param_count,
    rollout,
    unflatten,
    zeros_params,
)
from .dynamics import ActionSpaceSpec
from .errors import CheckpointError, ConfigError, NumericError
from .graph import GraphState, TopologyConfig, density, init_graph
from .harness import ExperimentConfig, evaluate, inspect, load_config, train
from .numerics import RngStream, derive_seed, make_rng

__version__ = "0.1.0"

__all__ = [
    "ActionSpaceSpec",
    "AgentConfig",
    "AgentParams",
    "AgentState",
    "CheckpointError",
    "ConfigError",
    "ExperimentConfig",
    "FitnessReport",
    "GraphState",
    "NumericError",
    "RngStream",
    "TopologyConfig",
    "agent_step",
    "density",
    "derive_seed",
    "evaluate",
    "flatten",
    "init_graph",
    "init_state",
    "inspect",
    "load_config",
    "make_rng",
    "param_count",
    "rollout",
    "train",
    "unflatten",
    "zeros_params",
    "__version__",
]
