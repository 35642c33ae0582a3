"""Command-line entry points: GTP serving, self-play generation, training,
metric evaluation, and engine matches.

Exit codes: 0 ok, 1 usage error, 2 runtime failure. Every artefact carries
the config hash (JSON field, CSV comment line, or sidecar file).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import List, Optional

from .config import RunConfig, load_config, serialize_config
from .errors import MlvnError
from .perf import tune_allocator

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _write_csv(path: str, header: str, rows, config_hash: str) -> None:
    with open(path, "w") as f:
        f.write(f"# config_hash={config_hash}\n")
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")


def cmd_gtp(args, cfg: RunConfig) -> int:
    from .engine import EngineConfig, EngineSession, make_evaluator
    from .gtp import GtpServer

    econf = EngineConfig(
        search=cfg.search, dynkomi=cfg.dynkomi, checkpoint=args.checkpoint
    )
    evaluator = make_evaluator(econf, cfg.board_size, cfg.grid)
    session = EngineSession(
        evaluator,
        search_config=cfg.search,
        dynkomi_config=cfg.dynkomi,
        board_size=cfg.board_size,
        komi=cfg.komi,
        seed=args.seed,
    )
    GtpServer(session).serve()
    return EXIT_OK


def cmd_selfplay(args, cfg: RunConfig) -> int:
    from .dataset import write_dataset
    from .selfplay import generate_dataset

    count = args.count if args.count is not None else cfg.selfplay.games
    seed = args.seed if args.seed is not None else cfg.selfplay.seed
    records, _ = generate_dataset(
        count,
        size=cfg.board_size,
        grid=cfg.grid,
        positions_per_game=cfg.selfplay.positions_per_game,
        seed=seed,
    )
    write_dataset(records, args.out, cfg.board_size, cfg.grid)
    meta = {
        "config_hash": cfg.config_hash(),
        "games": count,
        "records": len(records),
        "seed": seed,
    }
    with open(args.out + ".meta.json", "w") as f:
        json.dump(meta, f, indent=2)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    from .dataset import read_dataset
    from .valuenet import init_params, save_checkpoint, train

    records, size, grid = read_dataset(args.data)
    if size != cfg.board_size or (grid.k_min, grid.k_max) != (cfg.grid.k_min, cfg.grid.k_max):
        print(
            f"error: dataset is {size}x{size} grid [{grid.k_min}, {grid.k_max}], "
            f"config wants {cfg.board_size}x{cfg.board_size} [{cfg.grid.k_min}, {cfg.grid.k_max}]",
            file=sys.stderr,
        )
        return EXIT_USAGE
    holdout = max(1, int(len(records) * args.holdout)) if args.holdout else 0
    eval_records = records[:holdout]
    train_records = records[holdout:]
    params = init_params(cfg.arch, seed=cfg.training.seed)
    params, history = train(
        params,
        train_records,
        cfg.training,
        eval_records=eval_records or None,
        log=lambda row: print(
            f"epoch {row['epoch']:3d} train {row['train_total']:.4f}"
            + (f" eval {row['eval_total']:.4f}" if "eval_total" in row else "")
        ),
    )
    save_checkpoint(params, args.out)
    if args.history:
        keys = list(history[0].keys())
        _write_csv(
            args.history,
            ",".join(keys),
            ([row[k] for k in keys] for row in history),
            cfg.config_hash(),
        )
    print(f"saved checkpoint to {args.out}")
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    from .metrics import correlation_scatter, d_prediction_rates, mse_curve
    from .selfplay import generate_dataset
    from .valuenet import NetworkEvaluator, load_checkpoint

    params = load_checkpoint(args.checkpoint)
    evaluator = NetworkEvaluator(params, batch_size=max(cfg.search.batch_size, 128))
    _, games = generate_dataset(
        args.games,
        size=params.arch.board_size,
        grid=params.arch.grid,
        positions_per_game=1,
        seed=args.seed if args.seed is not None else cfg.selfplay.seed,
        keep_games=True,
    )
    komi = args.komi if args.komi is not None else params.arch.grid.center
    chash = cfg.config_hash()
    if args.metric == "mse":
        curve = mse_curve(games, evaluator, komi)
        _write_csv(
            args.out,
            "j,mse,count",
            ((j, f"{curve.values[j]:.6f}", curve.counts[j]) for j in range(len(curve.values))),
            chash,
        )
    elif args.metric == "dpred":
        report = d_prediction_rates(games, evaluator)
        header = "j," + ",".join(f"d{d}" for d in report.d_values) + ",count"
        rows = (
            [j]
            + [f"{report.rates[d][j]:.6f}" for d in report.d_values]
            + [report.counts[j]]
            for j in range(report.j_cap + 1)
        )
        _write_csv(args.out, header, rows, chash)
    else:  # scatter
        boards = []
        for game in games[: args.games]:
            mid = len(game.moves) // 2
            for _, board in game.positions([mid]):
                boards.append(board.copy())
        scatter = correlation_scatter(boards, evaluator, komi)
        _write_csv(
            args.out,
            "bv_territory,value",
            ((f"{x:.3f}", f"{y:.6f}") for x, y in scatter.points),
            chash,
        )
    print(f"wrote {args.metric} metrics to {args.out}")
    return EXIT_OK


def cmd_match(args, cfg: RunConfig) -> int:
    from .engine import EngineConfig
    from .match import run_match

    dk_a = replace(cfg.dynkomi, method=args.method_a)
    dk_b = replace(cfg.dynkomi, method=args.method_b)
    engine_a = EngineConfig(name="a", search=cfg.search, dynkomi=dk_a, checkpoint=args.checkpoint)
    engine_b = EngineConfig(name="b", search=cfg.search, dynkomi=dk_b, checkpoint=args.checkpoint)
    komi = args.komi if args.komi is not None else (0.5 if args.handicap else cfg.komi)
    result = run_match(
        engine_a,
        engine_b,
        games=args.games,
        board_size=cfg.board_size,
        komi=komi,
        handicap=args.handicap,
        base_seed=args.seed if args.seed is not None else 0,
        workers=args.workers,
        out_dir=args.out,
    )
    summary = {
        "config_hash": cfg.config_hash(),
        "engine_a": {"dynkomi": args.method_a, "checkpoint": args.checkpoint},
        "engine_b": {"dynkomi": args.method_b, "checkpoint": args.checkpoint},
        "board_size": cfg.board_size,
        "komi": komi,
        "handicap": args.handicap,
        "seed": args.seed or 0,
        **result.summary(),
    }
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "match.json"), "w") as f:
        json.dump(summary, f, indent=2)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_show_config(args, cfg: RunConfig) -> int:
    sys.stdout.write(serialize_config(cfg))
    print(f"# config_hash={cfg.config_hash()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlvn", description=__doc__)
    parser.add_argument("--config", help="path to an INI run configuration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gtp", help="serve GTP on stdin/stdout")
    p.add_argument("--checkpoint", help="value network checkpoint (uniform evaluator if omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gtp)

    p = sub.add_parser("selfplay", help="generate a training dataset")
    p.add_argument("--count", type=int, help="number of games")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_selfplay)

    p = sub.add_parser("train", help="train the value network")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="loss history CSV path")
    p.add_argument("--holdout", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="compute evaluation metrics as CSV")
    p.add_argument("--metric", choices=("mse", "dpred", "scatter"), required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--games", type=int, default=200)
    p.add_argument("--komi", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("match", help="run an engine-vs-engine match")
    p.add_argument("--method-a", default="none", help="dynamic komi method for engine A")
    p.add_argument("--method-b", default="none")
    p.add_argument("--checkpoint")
    p.add_argument("--games", type=int, default=20)
    p.add_argument("--handicap", type=int, default=0)
    p.add_argument("--komi", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("show-config", help="print the resolved configuration")
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    tune_allocator()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
    except (OSError, MlvnError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, cfg)
    except MlvnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
