"""Command-line entry points.

Three subcommands bind the library into reproducible workflows:

``gen-dataset``
    Sample trajectories for the bundled contexts, rate them with each
    scenario's rules expert, and write the ratings CSV plus one JSON
    document per trajectory.

``run``
    Execute an online-learning experiment and write per-round metrics.
    Accepts either a config file (``--config``) or flags; flags win when
    both are given.

``serve``
    Start the HTTP session service used by the browser UI.

Exit codes: 0 success, 2 usage, 3 config, 4 runtime. Every command is
deterministic given its seed arguments.
"""

from __future__ import annotations

import argparse
import csv
import os
import socket
import sys
from dataclasses import replace

import numpy as np

from . import scenarios
from .errors import CoactiveError, ConfigError, SchemaError
from .eval import (
    ALGORITHMS,
    SETTINGS,
    ExperimentConfig,
    generate_labeled_dataset,
    load_experiment_config,
    master_pool,
    run_experiment,
)
from .kinematics import save_trajectory
from .planner import PlannerConfig

# The session service validates these; alpha_fraction is a synthetic
# strategy for probe runs and is not exposed on the command line.
EVENT_FEEDBACK_KINDS = ("rerank_top", "rerank_top5", "approx_argmax", "zero_g")


def _cmd_gen_dataset(args) -> int:
    contexts = scenarios.dataset_contexts()
    if args.contexts is not None:
        if not 1 <= args.contexts <= len(contexts):
            raise ConfigError(
                f"--contexts must be in 1..{len(contexts)}, got {args.contexts}"
            )
        contexts = contexts[: args.contexts]
    os.makedirs(args.out, exist_ok=True)
    cache_dir = args.cache_dir or os.path.join(args.out, "pool-cache")
    planner = PlannerConfig(shortcut_passes=args.passes)
    csv_path = os.path.join(args.out, "dataset.csv")
    dataset = generate_labeled_dataset(
        contexts=contexts,
        planner_config=planner,
        per_context=args.per,
        seed=args.seed,
        out_path=csv_path,
        cache_dir=cache_dir,
    )
    # The pools are cached now, so a second pass to dump the trajectory
    # documents costs one cache read per context.
    pool_cfg = replace(planner, n_samples=args.per)
    for ctx in contexts:
        trajs, _ = master_pool(ctx, pool_cfg, args.seed, cache_dir=cache_dir)
        sub = os.path.join(args.out, "trajectories", ctx.id.replace("+", "_"))
        os.makedirs(sub, exist_ok=True)
        for tr in trajs:
            name = tr.id.replace("/", "-") + ".json"
            save_trajectory(tr, os.path.join(sub, name))
    print(f"{len(dataset.context_ids)} rows -> {csv_path}")
    return 0


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_experiment_config(args.config)
    else:
        if args.algo is None or args.scenario is None:
            args.parser.error("either --config or both --algo and --scenario are required")
        cfg = ExperimentConfig(algorithm=args.algo, scenario=args.scenario)
    overrides = {
        "algorithm": args.algo,
        "scenario": args.scenario,
        "feedback": args.feedback,
        "setting": args.setting,
        "T": args.T,
        "alpha": args.alpha,
        "candidates_per_round": args.candidates,
        "master_pool_size": args.pool_size,
        "checkpoint": args.checkpoint,
        "cache_dir": args.cache_dir,
        "out_dir": args.out,
    }
    if args.seeds is not None:
        try:
            overrides["seeds"] = tuple(int(s) for s in args.seeds.split(",") if s.strip())
        except ValueError:
            raise ConfigError(f"--seeds expects comma-separated integers, got {args.seeds!r}")
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    if cfg.out_dir is None:
        cfg = replace(cfg, out_dir="runs")
    return cfg


def _cmd_run(args) -> int:
    cfg = _experiment_config(args)
    if args.sweep_c is None:
        rows = run_experiment(cfg)
        mean3 = float(np.mean([r["ndcg3"] for r in rows]))
        print(f"{len(rows)} rows -> {os.path.join(cfg.out_dir, 'metrics.csv')}")
        print(f"mean ndcg@3 {mean3:.4f} over {len(cfg.seeds)} seed(s)")
        return 0

    if cfg.algorithm != "mmp_online":
        raise ConfigError("--sweep-c tunes the structured-margin regularizer and needs --algo mmp_online")
    try:
        cs = [float(x) for x in args.sweep_c.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--sweep-c expects comma-separated numbers, got {args.sweep_c!r}")
    if not cs:
        raise ConfigError("--sweep-c got an empty list")
    summary = []
    for c in cs:
        sub_cfg = replace(cfg, mmp=replace(cfg.mmp, c=c), out_dir=os.path.join(cfg.out_dir, f"c{c:g}"))
        rows = run_experiment(sub_cfg)
        mean1 = float(np.mean([r["ndcg1"] for r in rows]))
        mean3 = float(np.mean([r["ndcg3"] for r in rows]))
        summary.append((c, mean1, mean3))
        print(f"c={c:g}: mean ndcg@3 {mean3:.4f} -> {os.path.join(sub_cfg.out_dir, 'metrics.csv')}")
    sweep_path = os.path.join(cfg.out_dir, "sweep.csv")
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["c", "mean_ndcg1", "mean_ndcg3"])
        for c, mean1, mean3 in summary:
            writer.writerow([f"{c:g}", f"{mean1:.6f}", f"{mean3:.6f}"])
    best = max(summary, key=lambda row: row[2])
    print(f"best c={best[0]:g} (mean ndcg@3 {best[2]:.4f}) -> {sweep_path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((args.host, args.port))
    except OSError as exc:
        sock.close()
        raise CoactiveError(f"cannot bind {args.host}:{args.port}: {exc}")
    host, port = sock.getsockname()[:2]
    print(f"serving on http://{host}:{port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coactive",
        description="Trajectory preference learning: datasets, experiments, and the feedback service.",
    )
    sub = parser.add_subparsers(dest="command")

    gen = sub.add_parser("gen-dataset", help="sample and rate trajectories for the bundled contexts")
    gen.add_argument("--contexts", type=int, default=None, help="use only the first N bundled contexts")
    gen.add_argument("--per", type=int, default=100, help="trajectories per context (default 100)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="dataset", help="output directory (default ./dataset)")
    gen.add_argument("--cache-dir", default=None, help="pool cache directory (default <out>/pool-cache)")
    gen.add_argument("--passes", type=int, default=PlannerConfig().shortcut_passes,
                     help="shortcutting passes per plan")
    gen.set_defaults(func=_cmd_gen_dataset, parser=gen)

    run = sub.add_parser("run", help="run an online-learning experiment")
    run.add_argument("--config", default=None, help="experiment config file (.json or .toml)")
    run.add_argument("--algo", choices=ALGORITHMS, default=None)
    run.add_argument("--scenario", default=None, help="task id, family name, or task+variant")
    run.add_argument("--feedback", choices=EVENT_FEEDBACK_KINDS, default=None)
    run.add_argument("--setting", choices=SETTINGS, default=None)
    run.add_argument("--T", type=int, default=None, help="feedback rounds per seed")
    run.add_argument("--seeds", default=None, help="comma-separated seed list, e.g. 0,1,2")
    run.add_argument("--alpha", type=float, default=None, help="expected informativeness in (0, 1]")
    run.add_argument("--candidates", type=int, default=None, help="candidates shown per round")
    run.add_argument("--pool-size", type=int, default=None, help="master pool size per (scenario, seed)")
    run.add_argument("--checkpoint", default=None, help="weights document for the pretrained setting")
    run.add_argument("--cache-dir", default=None, help="reuse planned pools across runs")
    run.add_argument("--out", default=None, help="output directory (default ./runs)")
    run.add_argument("--sweep-c", default=None, metavar="C1,C2,...",
                     help="mmp_online only: rerun per regularizer value and report the best")
    run.set_defaults(func=_cmd_run, parser=run)

    serve = sub.add_parser("serve", help="start the feedback session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000, help="0 picks an ephemeral port")
    serve.add_argument("--data-dir", default=None, help="persist sessions here across restarts")
    serve.set_defaults(func=_cmd_serve, parser=serve)

    parser.set_defaults(func=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (CoactiveError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
