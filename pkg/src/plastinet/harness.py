"""Experiment orchestration: config, training loop, evaluation, inspection.

Artifacts are plain files: a generations CSV, a JSON checkpoint of the best
genome, and a TOML echo of the fully resolved configuration. Every random
draw descends from the experiment seed, and each individual's rollout seed
is derived from (seed, generation, index) alone, so logged numbers do not
depend on worker count or completion order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import envs as envs_mod
from .agent import AgentConfig, param_count, rollout, sp_param_count, unflatten
from .cmaes import cma_ask, cma_init, cma_tell
from .dynamics import OBS_NORM_VERSION
from .errors import CheckpointError, ConfigError, NumericError
from .graph import TopologyConfig, density, to_snapshot, weight_stats
from .numerics import derive_seed, make_rng

CHECKPOINT_VERSION = 1

GENERATIONS_CSV_COLUMNS = (
    "generation",
    "best_fitness",
    "mean_fitness",
    "median_fitness",
    "sigma",
    "mean_density",
    "wallclock_ms",
)

# Reference population sizes from the original training setup; used when a
# config does not pin one explicitly.
DEFAULT_POPSIZE = {"cartpole": 128, "acrobot": 128, "pendulum": 128, "foraging": 256}
DEFAULT_SIGMA0 = 0.065


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; maps 1:1 onto the TOML file keys.

    popsize/episodes of 0 mean "use the per-environment default".
    """

    env: str
    n_total: int = 32
    mu_conn: float = 0.5
    sigma_conn: float = 0.0
    dh: int = 8
    de: int = 4
    sp_enabled: bool = True
    frozen_graph: bool = False
    sa_steps: int = 0
    p_switch: float = 0.5
    popsize: int = 0
    generations: int = 300
    mc_trials: int = 3
    episodes: int = 0
    sigma0: float = DEFAULT_SIGMA0
    seed: int = 0

    def __post_init__(self):
        if self.env not in envs_mod.ENV_KINDS:
            raise ConfigError(f"unknown environment {self.env!r}")
        if self.generations < 0 or self.popsize < 0 or self.episodes < 0:
            raise ConfigError("counts must be non-negative")
        if self.mc_trials < 1:
            raise ConfigError("mc_trials must be >= 1")

    @property
    def resolved_popsize(self) -> int:
        return self.popsize if self.popsize else DEFAULT_POPSIZE[self.env]

    @property
    def resolved_episodes(self) -> int:
        if self.episodes:
            return self.episodes
        return envs_mod.make_env(self.env, **self.env_kwargs()).spec.episodes_default

    def env_kwargs(self) -> dict:
        return {"p_switch": self.p_switch} if self.env == "foraging" else {}

    def agent_config(self) -> AgentConfig:
        env = envs_mod.make_env(self.env, **self.env_kwargs())
        topo = TopologyConfig(
            n_total=self.n_total,
            n_in=env.spec.obs_dim,
            n_out=env.spec.action_space.n,
            mu_conn=self.mu_conn,
            sigma_conn=self.sigma_conn,
        )
        return AgentConfig(
            topology=topo,
            action_space=env.spec.action_space,
            dh=self.dh,
            de=self.de,
            sp_enabled=self.sp_enabled,
            frozen_graph=self.frozen_graph,
            sa_steps=self.sa_steps,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_dict(d: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "env" not in d:
        raise ConfigError("config needs an 'env' key")
    return ExperimentConfig(**d)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as f:
        data = tomllib.load(f)
    return config_from_dict(data)


def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot write {type(v).__name__} to TOML")


def dump_config(cfg: ExperimentConfig, path) -> None:
    lines = [f"{k} = {_toml_scalar(v)}" for k, v in cfg.to_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(path, cfg: ExperimentConfig, vec: np.ndarray, meta: dict) -> None:
    payload = {
        "spec_version": CHECKPOINT_VERSION,
        "obs_norm_version": OBS_NORM_VERSION,
        "config": cfg.to_dict(),
        "param_count": int(vec.shape[0]),
        "params": [float(x) for x in vec],
        "seed": cfg.seed,
    }
    payload.update(meta)
    Path(path).write_text(json.dumps(payload, indent=1))


def load_checkpoint(path) -> dict:
    payload = json.loads(Path(path).read_text())
    if payload.get("spec_version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {payload.get('spec_version')!r} != {CHECKPOINT_VERSION}"
        )
    if payload.get("obs_norm_version") != OBS_NORM_VERSION:
        raise CheckpointError("checkpoint was written with different input scaling")
    cfg = config_from_dict(payload["config"])
    vec = np.asarray(payload["params"], dtype=np.float64)
    if vec.shape[0] != payload["param_count"]:
        raise CheckpointError("parameter array length disagrees with param_count")
    if vec.shape[0] != param_count(cfg.agent_config()):
        raise CheckpointError("parameter array does not match the config's layout")
    payload["_cfg"] = cfg
    payload["_vec"] = vec
    return payload


# ---------------------------------------------------------------------------
# Training


def _evaluate_genome(task):
    vec, acfg, env_kind, episodes, trials, seed, env_kwargs = task
    params = unflatten(vec, acfg)
    rep = rollout(
        params, env_kind, episodes, trials, seed, env_kwargs=env_kwargs
    )
    return rep.fitness, rep.final_density


def train(cfg: ExperimentConfig, out_dir, workers: int = 1, log=print) -> Path:
    """Run the full evolutionary loop; returns the artifact directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    acfg = cfg.agent_config()
    dim = param_count(acfg)
    log(
        f"{cfg.env}: {dim} parameters"
        + (f" ({sp_param_count(acfg)} in the rewiring heads)" if cfg.sp_enabled else "")
        + f", popsize {cfg.resolved_popsize}, {cfg.generations} generations"
    )
    dump_config(cfg, out / "config.toml")

    es = cma_init(dim, cfg.sigma0, cfg.resolved_popsize)
    cma_rng = make_rng(cfg.seed).child(0)
    episodes = cfg.resolved_episodes
    env_kwargs = cfg.env_kwargs()

    best_fitness = -math.inf
    best = None  # (vec, generation, individual, rollout_seed)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        with open(out / "generations.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(GENERATIONS_CSV_COLUMNS)
            for gen in range(cfg.generations):
                t0 = time.perf_counter()
                pop = cma_ask(es, cma_rng)
                seeds = [derive_seed(cfg.seed, gen, i) for i in range(es.popsize)]
                tasks = [
                    (pop[i], acfg, cfg.env, episodes, cfg.mc_trials, seeds[i], env_kwargs)
                    for i in range(es.popsize)
                ]
                if pool is not None:
                    results = list(pool.map(_evaluate_genome, tasks, chunksize=4))
                else:
                    results = [_evaluate_genome(t) for t in tasks]
                fitnesses = np.array([r[0] for r in results])
                densities = np.array([r[1] for r in results])
                if np.isnan(fitnesses).all():
                    raise NumericError(
                        f"generation {gen}: every rollout returned NaN fitness"
                    )
                i_best = int(np.argmax(fitnesses))
                if fitnesses[i_best] > best_fitness:
                    best_fitness = float(fitnesses[i_best])
                    best = (pop[i_best].copy(), gen, i_best, seeds[i_best])
                cma_tell(es, pop, -fitnesses)
                ms = int(round((time.perf_counter() - t0) * 1000.0))
                writer.writerow(
                    [
                        gen,
                        repr(best_fitness),
                        repr(float(fitnesses.mean())),
                        repr(float(np.median(fitnesses))),
                        repr(es.sigma),
                        repr(float(densities.mean())),
                        ms,
                    ]
                )
                fh.flush()
                log(
                    f"gen {gen:4d} best {best_fitness:.3f} "
                    f"mean {fitnesses.mean():.3f} sigma {es.sigma:.4f}"
                )
    finally:
        if pool is not None:
            pool.shutdown()

    if best is None:  # generations == 0: fall back to the initial mean
        meta = {"fitness": None, "generation": None, "individual": None, "rollout_seed": None}
        save_checkpoint(out / "best_checkpoint.json", cfg, es.mean, meta)
    else:
        vec, gen, idx, rseed = best
        meta = {
            "fitness": best_fitness,
            "generation": gen,
            "individual": idx,
            "rollout_seed": rseed,
        }
        save_checkpoint(out / "best_checkpoint.json", cfg, vec, meta)
    return out


# ---------------------------------------------------------------------------
# Evaluation / inspection


def _checkpoint_agent(ck: dict, cfg: ExperimentConfig):
    """Rebuild (agent config, params) for a possibly env-overridden checkpoint."""
    acfg = cfg.agent_config()
    need = param_count(acfg)
    if ck["_vec"].shape[0] != need:
        raise ConfigError(
            f"checkpoint carries {ck['_vec'].shape[0]} parameters but "
            f"{cfg.env!r} needs {need}; the environments' in/out layouts differ"
        )
    return acfg, unflatten(ck["_vec"], acfg)


def evaluate(
    checkpoint_path,
    env_kind: str | None = None,
    trials: int = 3,
    episodes: int | None = None,
    seed: int = 0,
    out_path=None,
    frozen_graph: bool | None = None,
) -> dict:
    """Roll a stored genome out and summarize per-episode returns.

    ``frozen_graph`` overrides the stored flag (for ablated evaluation of a
    plastic checkpoint). Writes one JSONL row per trial when out_path given.
    """
    ck = load_checkpoint(checkpoint_path)
    cfg: ExperimentConfig = ck["_cfg"]
    if env_kind is None:
        env_kind = cfg.env
    if env_kind != cfg.env:
        cfg = replace(cfg, env=env_kind)
    if frozen_graph is not None:
        cfg = replace(cfg, frozen_graph=frozen_graph)
    acfg, params = _checkpoint_agent(ck, cfg)
    eps = episodes if episodes else cfg.resolved_episodes
    rep = rollout(
        params, env_kind, eps, trials, seed, env_kwargs=cfg.env_kwargs()
    )
    report = {
        "env": env_kind,
        "trials": trials,
        "episodes": eps,
        "seed": seed,
        "fitness": rep.fitness,
        "episode_mean": [float(x) for x in rep.per_episode_returns],
        "episode_std": [float(x) for x in rep.per_trial_returns.std(axis=0)],
        "frozen_graph": acfg.frozen_graph,
    }
    if out_path is not None:
        with open(out_path, "w") as f:
            for k in range(trials):
                row = {"trial": k, "returns": [float(x) for x in rep.per_trial_returns[k]]}
                f.write(json.dumps(row) + "\n")
            f.write(json.dumps({"summary": report}) + "\n")
    return report


def inspect(
    checkpoint_path,
    env_kind: str | None = None,
    seed: int = 0,
    out_csv="trajectory.csv",
    episodes: int | None = None,
    trace_path=None,
    snapshots_path=None,
) -> Path:
    """Single-lifetime export, one CSV row per environment step.

    Per step: output-node in-degrees, density, weight moments over existing
    edges, every activation, and (foraging) the food side. Optionally also
    writes a JSONL step trace and full graph snapshots.
    """
    ck = load_checkpoint(checkpoint_path)
    cfg: ExperimentConfig = ck["_cfg"]
    if env_kind is None:
        env_kind = cfg.env
    if env_kind != cfg.env:
        cfg = replace(cfg, env=env_kind)
    acfg, params = _checkpoint_agent(ck, cfg)
    eps = episodes if episodes else cfg.resolved_episodes

    n_out = acfg.topology.n_out
    n = acfg.topology.n_total
    rows = []
    trace_rows = []
    snapshot_rows = []

    def hook(trial, t, obs, action, reward, done, state, env_state):
        g = state.graph
        in_deg = g.adjacency[:, n - n_out :].sum(axis=0)
        wm, wv = weight_stats(g)
        row = [t, *(int(d) for d in in_deg)]
        row += [repr(density(g)), repr(wm), repr(wv)]
        row += [repr(float(a)) for a in g.activations]
        if env_kind == "foraging":
            row.append("left" if env_state.food_side == 0 else "right")
        rows.append(row)
        if trace_path is not None:
            trace_rows.append(
                {
                    "t": t,
                    "obs": [float(x) for x in obs],
                    "action": action if isinstance(action, int) else [float(x) for x in np.ravel(action)],
                    "reward": float(reward),
                    "done": bool(done),
                    "env_kind": env_kind,
                }
            )
        if snapshots_path is not None:
            snapshot_rows.append(to_snapshot(g))

    rollout(
        params,
        env_kind,
        eps,
        1,
        seed,
        env_kwargs=cfg.env_kwargs(),
        step_hook=hook,
    )

    header = ["step"]
    header += [f"in_degree_out{j}" for j in range(n_out)]
    header += ["density", "weight_mean", "weight_var"]
    header += [f"activation_{i}" for i in range(n)]
    if env_kind == "foraging":
        header.append("food_side")
    out = Path(out_csv)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    if trace_path is not None:
        with open(trace_path, "w") as f:
            for r in trace_rows:
                f.write(json.dumps(r) + "\n")
    if snapshots_path is not None:
        with open(snapshots_path, "w") as f:
            for r in snapshot_rows:
                f.write(json.dumps(r) + "\n")
    return out
