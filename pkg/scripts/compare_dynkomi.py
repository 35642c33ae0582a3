#!/usr/bin/env python3
"""Compare all dynamic-komi methods in handicap games against one baseline.

Plays each of {none, ss-r, ss-b, ss-m, vs-m, ml-dk} as White against the
same no-dynamic-komi Black baseline (H stones, komi 0.5) and prints a
win-rate table with 95% confidence half-widths. Desk-scale sibling of the
published handicap cross-tables; game counts are yours to choose.

    python scripts/compare_dynkomi.py --checkpoint runs/acceptance/bvml_9x9.mlvw \
        --games 50 --handicap 2 --playouts 200 --workers 2
"""

import argparse
import json
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mlvn.perf import tune_allocator

tune_allocator()

from mlvn.dynkomi import METHODS, DynKomiConfig
from mlvn.engine import EngineConfig
from mlvn.match import run_match
from mlvn.mcts import SearchConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--games", type=int, default=50)
    ap.add_argument("--handicap", type=int, default=2)
    ap.add_argument("--playouts", type=int, default=200)
    ap.add_argument("--board-size", type=int, default=9)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--methods", nargs="*", default=list(METHODS))
    ap.add_argument("--out", default=None, help="optional JSON output path")
    args = ap.parse_args()

    search = SearchConfig(playouts=args.playouts, batch_size=16, lam=0.5)
    baseline = EngineConfig(
        name="baseline",
        search=search,
        dynkomi=DynKomiConfig(method="none"),
        checkpoint=args.checkpoint,
    )
    rows = []
    for method in args.methods:
        white = EngineConfig(
            name=method,
            search=search,
            dynkomi=DynKomiConfig(method=method),
            checkpoint=args.checkpoint,
        )
        t0 = time.time()
        result = run_match(
            white,
            baseline,
            games=args.games,
            board_size=args.board_size,
            komi=0.5,
            handicap=args.handicap,
            base_seed=args.seed,
            workers=args.workers,
        )
        rows.append(
            {
                "method": method,
                "white_win_rate": result.p,
                "ci95": result.ci95_half,
                "wins": result.wins,
                "games": result.games,
                "seconds": round(time.time() - t0, 1),
            }
        )
        print(
            f"{method:>6}: {result.p * 100:6.2f}% (+/-{result.ci95_half * 100:.2f}%) "
            f"[{result.wins}/{result.games}] in {rows[-1]['seconds']:.0f}s",
            flush=True,
        )
    if args.out:
        with open(args.out, "w") as f:
            json.dump(
                {
                    "handicap": args.handicap,
                    "playouts": args.playouts,
                    "board_size": args.board_size,
                    "results": rows,
                },
                f,
                indent=2,
            )


if __name__ == "__main__":
    main()
