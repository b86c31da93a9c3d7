"""Command-line entry point: train / eval / inspect / baseline."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import envs, harness
from .errors import CheckpointError, ConfigError


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plastinet",
        description="Evolve self-organizing recurrent networks on control tasks.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run the evolutionary training loop")
    t.add_argument("--config", required=True, help="flat TOML experiment file")
    t.add_argument("--out", default="run", help="artifact directory")
    t.add_argument("--seed", type=int, default=None, help="override config seed")
    t.add_argument("--generations", type=int, default=None)
    t.add_argument("--popsize", type=int, default=None)
    t.add_argument("--workers", type=int, default=1, help="parallel rollout processes")
    t.add_argument("--quiet", action="store_true")

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--env", default=None, help="defaults to the checkpoint's env")
    e.add_argument("--trials", type=int, default=3)
    e.add_argument("--episodes", type=int, default=None)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default=None, help="write per-trial returns as JSONL")
    e.add_argument(
        "--ablated",
        action="store_true",
        help="evaluate with the graph frozen after the pre-experience phase",
    )

    i = sub.add_parser("inspect", help="export a per-step trajectory CSV")
    i.add_argument("--checkpoint", required=True)
    i.add_argument("--env", default=None)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--episodes", type=int, default=None)
    i.add_argument("--out", default="trajectory.csv")
    i.add_argument("--trace", default=None, help="also write a JSONL step trace")
    i.add_argument("--snapshots", default=None, help="also write JSONL graph snapshots")

    b = sub.add_parser("baseline", help="mean return of a uniform-random policy")
    b.add_argument("--env", required=True, choices=envs.ENV_KINDS)
    b.add_argument("--trials", type=int, default=10000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--p-switch", type=float, default=0.5, help="foraging only")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cfg = harness.load_config(args.config)
            if args.seed is not None:
                cfg = replace(cfg, seed=args.seed)
            if args.generations is not None:
                cfg = replace(cfg, generations=args.generations)
            if args.popsize is not None:
                cfg = replace(cfg, popsize=args.popsize)
            log = (lambda *a, **k: None) if args.quiet else print
            out = harness.train(cfg, args.out, workers=args.workers, log=log)
            print(f"artifacts in {out}")
        elif args.command == "eval":
            report = harness.evaluate(
                args.checkpoint,
                env_kind=args.env,
                trials=args.trials,
                episodes=args.episodes,
                seed=args.seed,
                out_path=args.out,
                frozen_graph=True if args.ablated else None,
            )
            print(json.dumps(report, indent=1))
        elif args.command == "inspect":
            out = harness.inspect(
                args.checkpoint,
                env_kind=args.env,
                seed=args.seed,
                out_csv=args.out,
                episodes=args.episodes,
                trace_path=args.trace,
                snapshots_path=args.snapshots,
            )
            print(f"wrote {out}")
        elif args.command == "baseline":
            kwargs = {"p_switch": args.p_switch} if args.env == "foraging" else {}
            value = envs.random_policy_baseline(
                args.env, args.trials, seed=args.seed, env_kwargs=kwargs
            )
            print(repr(value))
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
