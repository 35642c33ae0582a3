#!/usr/bin/env python3
"""Produce the desk-scale experiment artefacts the acceptance suite checks.

Stages (each resumable; outputs land under --out, default runs/acceptance):
  corpus   20k-game training dataset + three held-out benchmark corpora
  train    the per-komi network and the single-output (center komi) network
  metrics  held-out losses, monotonicity, MSE curves, d-prediction, scatter
  match    H2 handicap matches: ML-DK white and no-dynkomi white vs the
           same no-dynkomi black baseline (200 games each, 400 po/move)

Run `--stage all` for everything; expect several hours for the match stage
on a small machine. Numbers land in summary.json as they are produced.
"""

import argparse
import json
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mlvn.perf import tune_allocator

tune_allocator()

import numpy as np

from mlvn.dataset import read_dataset, write_dataset
from mlvn.dynkomi import DynKomiConfig
from mlvn.engine import EngineConfig
from mlvn.komi import GRID_9, KomiGrid
from mlvn.match import run_match
from mlvn.mcts import SearchConfig
from mlvn.metrics import correlation_scatter, d_prediction_rates, mse_curve
from mlvn.selfplay import TrainingRecord, generate_dataset
from mlvn.valuenet import (
    ArchConfig,
    NetworkEvaluator,
    TrainConfig,
    evaluate_loss,
    init_params,
    load_checkpoint,
    records_to_arrays,
    save_checkpoint,
    train,
)

TRAIN_GAMES = 20_000
HOLDOUT_FRACTION = 0.1
BENCH_GAMES = 400  # per benchmark corpus
BENCH_KOMIS = (7.5, 6.5, 0.5)
MATCH_GAMES = 200
MATCH_PLAYOUTS = 400
SINGLE_GRID = KomiGrid(7.5, 7.5, 7.5)

TRAIN_SEED = 101
BENCH_SEEDS = (501, 502, 503)
MATCH_SEED = 900


def log(msg):
    print(f"[{time.strftime('%H:%M:%S')}] {msg}", flush=True)


def update_summary(out_dir, key, value):
    path = os.path.join(out_dir, "summary.json")
    summary = {}
    if os.path.exists(path):
        with open(path) as f:
            summary = json.load(f)
    summary[key] = value
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)


def bench_corpus_path(out_dir, komi):
    return os.path.join(out_dir, f"bench_k{komi:g}".replace(".", "_") + ".json")


def stage_corpus(out_dir, force=False):
    data_path = os.path.join(out_dir, "train_9x9.mlvnd")
    if os.path.exists(data_path) and not force:
        log("corpus: training dataset already present")
    else:
        log(f"corpus: generating {TRAIN_GAMES} self-play games (m=1)")
        t0 = time.time()
        records, _ = generate_dataset(TRAIN_GAMES, size=9, grid=GRID_9, seed=TRAIN_SEED)
        write_dataset(records, data_path, 9, GRID_9)
        log(f"corpus: wrote {len(records)} records in {time.time() - t0:.0f}s")
        update_summary(out_dir, "corpus", {"games": TRAIN_GAMES, "records": len(records)})
    for komi, seed in zip(BENCH_KOMIS, BENCH_SEEDS):
        path = bench_corpus_path(out_dir, komi)
        if os.path.exists(path) and not force:
            continue
        log(f"corpus: benchmark set at komi {komi} ({BENCH_GAMES} games, seed {seed})")
        records, games = generate_dataset(
            BENCH_GAMES, size=9, grid=GRID_9, seed=seed, keep_games=True
        )
        # store one record per position is wasteful; bench games replay from
        # their move lists, so persist the games as a dataset of move seeds
        payload = [
            {
                "moves": [list(m) if m else None for m in g.moves],
                "n": g.territory_diff,
                "owners": g.owners,
                "game_id": g.game_id,
            }
            for g in games
        ]
        with open(path, "w") as f:
            json.dump(payload, f)


def load_bench_games(out_dir, komi):
    from mlvn.selfplay import GameRecord

    with open(bench_corpus_path(out_dir, komi)) as f:
        payload = json.load(f)
    games = []
    for row in payload:
        games.append(
            GameRecord(
                size=9,
                moves=[tuple(m) if m else None for m in row["moves"]],
                owners=row["owners"],
                territory_diff=row["n"],
                game_id=row["game_id"],
            )
        )
    return games


def _slice_to_single(records):
    idx = GRID_9.index(SINGLE_GRID.center)
    out = []
    for r in records:
        out.append(
            TrainingRecord(
                features=r.features,
                value_labels=r.value_labels[idx : idx + 1],
                ownership=r.ownership,
                to_move=r.to_move,
                game_id=r.game_id,
                move_index=r.move_index,
            )
        )
    return out


def stage_train(out_dir, epochs, force=False):
    records, size, grid = read_dataset(os.path.join(out_dir, "train_9x9.mlvnd"))
    holdout = int(len(records) * HOLDOUT_FRACTION)
    eval_records, train_records = records[:holdout], records[holdout:]
    cfg = TrainConfig(epochs=epochs, batch_size=32, lr=0.02, seed=7)

    ml_path = os.path.join(out_dir, "bvml_9x9.mlvw")
    if not os.path.exists(ml_path) or force:
        log(f"train: per-komi network, {len(train_records)} records, {epochs} epochs")
        arch = ArchConfig(board_size=9, grid=GRID_9)
        params = init_params(arch, seed=1)
        t0 = time.time()
        params, history = train(
            params,
            train_records,
            cfg,
            eval_records=eval_records,
            log=lambda row: log(
                f"  epoch {row['epoch']:3d} train {row['train_total']:.4f} "
                f"eval {row.get('eval_total', float('nan')):.4f}"
            ),
        )
        save_checkpoint(params, ml_path)
        with open(os.path.join(out_dir, "bvml_loss.csv"), "w") as f:
            keys = list(history[0].keys())
            f.write(",".join(keys) + "\n")
            for row in history:
                f.write(",".join(str(row[k]) for k in keys) + "\n")
        log(f"train: per-komi network done in {(time.time() - t0) / 60:.1f} min")

    single_path = os.path.join(out_dir, "single_9x9.mlvw")
    if not os.path.exists(single_path) or force:
        log("train: single-output (center komi) network")
        arch1 = ArchConfig(board_size=9, grid=SINGLE_GRID)
        params1 = init_params(arch1, seed=1)
        t0 = time.time()
        params1, _ = train(
            params1,
            _slice_to_single(train_records),
            cfg,
            eval_records=_slice_to_single(eval_records),
            log=lambda row: log(
                f"  epoch {row['epoch']:3d} train {row['train_total']:.4f} "
                f"eval {row.get('eval_total', float('nan')):.4f}"
            ),
        )
        save_checkpoint(params1, single_path)
        log(f"train: single-output network done in {(time.time() - t0) / 60:.1f} min")


def stage_metrics(out_dir, force=False):
    records, _, _ = read_dataset(os.path.join(out_dir, "train_9x9.mlvnd"))
    holdout = int(len(records) * HOLDOUT_FRACTION)
    eval_records = records[:holdout]
    params = load_checkpoint(os.path.join(out_dir, "bvml_9x9.mlvw"))
    single = load_checkpoint(os.path.join(out_dir, "single_9x9.mlvw"))
    evaluator = NetworkEvaluator(params, batch_size=256)
    single_eval = NetworkEvaluator(single, batch_size=256)

    # criterion 7: held-out loss reduction vs the zero-output baseline
    x, y, tau = records_to_arrays(eval_records)
    baseline_value = 0.5
    baseline_bv = float(np.mean((tau - 0.5) ** 2))
    baseline = baseline_value + baseline_bv
    trained_loss = evaluate_loss(params, x, y, tau)
    reduction = 1.0 - trained_loss.total / baseline
    log(
        f"metrics: held-out baseline {baseline:.4f} trained {trained_loss.total:.4f} "
        f"reduction {reduction * 100:.1f}%"
    )

    # criterion 7: trained-output monotonicity over 500 held-out positions
    feats = np.stack([r.features for r in eval_records[:500]])
    v, _ = evaluator.evaluate_planes(feats)
    mono = float(np.mean(np.diff(v, axis=1) <= 1e-9))
    log(f"metrics: adjacent-komi monotone fraction {mono * 100:.2f}%")
    update_summary(
        out_dir,
        "training_sanity",
        {
            "holdout_records": len(eval_records),
            "baseline_total": baseline,
            "baseline_value_mse": baseline_value,
            "baseline_bv_mse": baseline_bv,
            "trained_total": trained_loss.total,
            "trained_value_mse": trained_loss.value_mse,
            "trained_bv_mse": trained_loss.bv_mse,
            "loss_reduction": reduction,
            "monotone_fraction": mono,
            "monotone_positions": int(len(feats)),
        },
    )

    # criterion 8: MSE(j) shape at the center komi
    games_75 = load_bench_games(out_dir, 7.5)
    curve = mse_curve(games_75, evaluator, 7.5)
    _write_curve(out_dir, "mse_center.csv", curve)
    early, late = _quartile_means(curve)
    log(f"metrics: MSE(j) center komi first-quartile {early:.4f} last-quartile {late:.4f}")
    update_summary(
        out_dir,
        "mse_shape",
        {"first_quartile": early, "last_quartile": late, "games": curve.games},
    )

    # criterion 9: off-center advantage at komi 0.5 on 0.5-komi-relevant games
    games_05 = [
        g
        for g in load_bench_games(out_dir, 0.5)
        if GRID_9.k_min < g.territory_diff < GRID_9.k_max + 1
    ]
    ml_curve = mse_curve(games_05, evaluator, 0.5, value_komi=0.5)
    single_curve = mse_curve(games_05, single_eval, 0.5, value_komi=7.5)
    _write_curve(out_dir, "mse_k05_ml.csv", ml_curve)
    _write_curve(out_dir, "mse_k05_single.csv", single_curve)
    _, ml_late = _quartile_means(ml_curve)
    _, single_late = _quartile_means(single_curve)
    log(f"metrics: late-game MSE at komi 0.5: ml {ml_late:.4f} vs single-head {single_late:.4f}")
    update_summary(
        out_dir,
        "off_center",
        {
            "games": len(games_05),
            "ml_late_mse": ml_late,
            "single_late_mse": single_late,
        },
    )

    # criterion 12: d-prediction rates on the trained evaluator
    report = d_prediction_rates(games_75, evaluator)
    rows = []
    for j in range(report.j_cap + 1):
        rows.append(
            [j] + [float(report.rates[d][j]) for d in report.d_values] + [int(report.counts[j])]
        )
    with open(os.path.join(out_dir, "dpred.csv"), "w") as f:
        f.write("j," + ",".join(f"d{d}" for d in report.d_values) + ",count\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")
    monotone_in_d = True
    for lo, hi in zip(report.d_values, report.d_values[1:]):
        if not (report.rates[lo] <= report.rates[hi] + 1e-12).all():
            monotone_in_d = False
    update_summary(
        out_dir,
        "d_prediction",
        {
            "games_used": report.games_used,
            "games_skipped": report.games_skipped,
            "monotone_in_d": monotone_in_d,
            "d0_final_bucket": float(report.rates[0][-1]),
            "d7_final_bucket": float(report.rates[7][-1]),
        },
    )

    # BV/VN correlation scatter on mid-game held-out positions
    boards = []
    for game in games_75[:250]:
        for _, board in game.positions([len(game.moves) // 2]):
            boards.append(board.copy())
    scatter = correlation_scatter(boards, evaluator, 7.5)
    with open(os.path.join(out_dir, "scatter_center.csv"), "w") as f:
        f.write("bv_territory,value\n")
        for xv, yv in scatter.points:
            f.write(f"{xv:.3f},{yv:.6f}\n")
    log(
        f"metrics: scatter discordant fractions lower-right {scatter.lower_right:.3f} "
        f"upper-left {scatter.upper_left:.3f}"
    )
    update_summary(
        out_dir,
        "scatter",
        {
            "positions": len(boards),
            "lower_right": scatter.lower_right,
            "upper_left": scatter.upper_left,
        },
    )


def _quartile_means(curve):
    counts = curve.counts
    values = curve.values
    jmax = curve.j_cap
    q = (jmax + 1) // 4
    first = values[:q][counts[:q] > 0]
    last = values[jmax + 1 - q :][counts[jmax + 1 - q :] > 0]
    return float(first.mean()), float(last.mean())


def _write_curve(out_dir, name, curve):
    with open(os.path.join(out_dir, name), "w") as f:
        f.write("j,mse,count\n")
        for j in range(len(curve.values)):
            f.write(f"{j},{curve.values[j]:.6f},{curve.counts[j]}\n")


def stage_match(out_dir, workers, games, force=False):
    ckpt = os.path.join(out_dir, "bvml_9x9.mlvw")
    search = SearchConfig(playouts=MATCH_PLAYOUTS, batch_size=16, lam=0.5)
    baseline = EngineConfig(
        name="baseline", search=search, dynkomi=DynKomiConfig(method="none"), checkpoint=ckpt
    )
    for method in ("ml-dk", "none"):
        result_path = os.path.join(out_dir, f"match_{method.replace('-', '')}.json")
        if os.path.exists(result_path) and not force:
            log(f"match: {method} result already present")
            continue
        white = EngineConfig(
            name=method,
            search=search,
            dynkomi=DynKomiConfig(method=method),
            checkpoint=ckpt,
        )
        log(f"match: white={method} vs black baseline, H2 komi 0.5, {games} games")
        t0 = time.time()
        done = [0]

        def progress(outcome):
            done[0] += 1
            if done[0] % 10 == 0:
                log(f"  {method}: {done[0]}/{games} games, {time.time() - t0:.0f}s")

        result = run_match(
            white,
            baseline,
            games=games,
            board_size=9,
            komi=0.5,
            handicap=2,
            base_seed=MATCH_SEED,
            workers=workers,
            out_dir=os.path.join(out_dir, f"sgf_{method.replace('-', '')}"),
            progress=progress,
        )
        # opening dynamic komi per game: mean over the first 10 white moves
        opening = []
        for o in result.outcomes:
            head = [e.komi_out for e in o.white_dynkomi[:10]]
            if head:
                opening.append(sum(head) / len(head))
        payload = {
            "method": method,
            "games": result.games,
            "white_wins": result.wins,
            "white_win_rate": result.p,
            "ci95": result.ci95_half,
            "mean_opening_dynkomi": (sum(opening) / len(opening)) if opening else 0.5,
            "real_komi": 0.5,
            "playouts": MATCH_PLAYOUTS,
            "handicap": 2,
            "seconds": time.time() - t0,
        }
        with open(result_path, "w") as f:
            json.dump(payload, f, indent=2)
        update_summary(out_dir, f"match_{method}", payload)
        log(
            f"match: {method} white win rate {result.p * 100:.1f}% "
            f"({result.wins}/{result.games}) in {(time.time() - t0) / 60:.0f} min"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/acceptance")
    ap.add_argument(
        "--stage", default="all", choices=("all", "corpus", "train", "metrics", "match")
    )
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--match-games", type=int, default=MATCH_GAMES)
    ap.add_argument("--force", action="store_true")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    stages = [args.stage] if args.stage != "all" else ["corpus", "train", "metrics", "match"]
    for stage in stages:
        if stage == "corpus":
            stage_corpus(args.out, args.force)
        elif stage == "train":
            stage_train(args.out, args.epochs, args.force)
        elif stage == "metrics":
            stage_metrics(args.out, args.force)
        elif stage == "match":
            stage_match(args.out, args.workers, args.match_games, args.force)
    log("pipeline complete")


if __name__ == "__main__":
    main()
