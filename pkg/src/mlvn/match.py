"""Engine-vs-engine match runner.

Even games are played in mirrored pairs (same per-colour seeds, colours
swapped) so a match against the same configuration is exactly 50% and
swapping the engine arguments yields the complementary result on identical
seeds. Handicap games put the engine under test on White against the
handicapped Black baseline, komi 0.5.

Games are independent given their seeds; ``workers > 1`` distributes them
over processes. Statistics are aggregated by the parent.
"""

from __future__ import annotations

import multiprocessing
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .board import BLACK, WHITE, new_board, territory_ownership
from .dynkomi import AdjustmentLog
from .engine import EngineConfig, EngineSession, make_evaluator
from .metrics import ci95
from .selfplay import move_cap_for
from .sgf import game_to_sgf, result_string

_EVALUATOR_CACHE: Dict[Tuple[Optional[str], int], object] = {}


def _cached_evaluator(config: EngineConfig, board_size: int):
    key = (config.checkpoint, board_size)
    ev = _EVALUATOR_CACHE.get(key)
    if ev is None:
        ev = make_evaluator(config, board_size)
        _EVALUATOR_CACHE[key] = ev
    return ev


@dataclass
class GameOutcome:
    index: int
    black: str  # "a" or "b"
    winner: str  # "a" or "b"
    territory_diff: int
    komi: float
    moves: int
    sgf: str
    failure: str = ""
    white_dynkomi: List[AdjustmentLog] = field(default_factory=list)


@dataclass
class MatchResult:
    """Aggregate result from engine A's perspective."""

    wins: int
    losses: int
    games: int
    p: float
    ci95_half: float
    outcomes: List[GameOutcome]
    sgf_paths: List[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "wins": self.wins,
            "losses": self.losses,
            "games": self.games,
            "p": self.p,
            "ci95": self.ci95_half,
        }


@dataclass
class _GameSpec:
    index: int
    engine_a: EngineConfig
    engine_b: EngineConfig
    a_is_black: bool
    board_size: int
    komi: float
    handicap: int
    seed_black: int
    seed_white: int
    move_cap: int


def _limit_blas_threads() -> None:
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except ImportError:
        pass


def _play_game(spec: _GameSpec) -> GameOutcome:
    configs = {
        BLACK: spec.engine_a if spec.a_is_black else spec.engine_b,
        WHITE: spec.engine_b if spec.a_is_black else spec.engine_a,
    }
    seeds = {BLACK: spec.seed_black, WHITE: spec.seed_white}
    sessions = {}
    for color, cfg in configs.items():
        ev = _cached_evaluator(cfg, spec.board_size)
        sessions[color] = EngineSession(
            ev,
            search_config=cfg.search,
            dynkomi_config=cfg.dynkomi,
            board_size=spec.board_size,
            komi=spec.komi,
            seed=seeds[color],
        )
    arbiter = new_board(spec.board_size, spec.komi)
    handicap_pts: List[Tuple[int, int]] = []
    if spec.handicap:
        handicap_pts = arbiter.place_handicap(spec.handicap)
        for s in sessions.values():
            s.place_handicap(spec.handicap)
    moves = []
    failure = ""
    loser_by_failure = 0
    while not arbiter.is_game_over() and arbiter.move_count < spec.move_cap:
        side = arbiter.to_move
        try:
            move = sessions[side].genmove()
            arbiter.play(move)
        except Exception as exc:  # contract violation loses the game
            failure = f"{'black' if side == BLACK else 'white'}: {exc}"
            loser_by_failure = side
            break
        sessions[BLACK + WHITE - side].observe(move)
        moves.append((side, move))
    n = territory_ownership(arbiter)[1]
    if failure:
        black_won = loser_by_failure == WHITE
    else:
        black_won = n > spec.komi
    winner_color = BLACK if black_won else WHITE
    winner = ("a" if spec.a_is_black else "b") if winner_color == BLACK else (
        "b" if spec.a_is_black else "a"
    )
    sgf = game_to_sgf(
        spec.board_size,
        spec.komi,
        moves,
        handicap_points=handicap_pts,
        result=("Void" if failure else result_string(n, spec.komi)),
    )
    return GameOutcome(
        index=spec.index,
        black="a" if spec.a_is_black else "b",
        winner=winner,
        territory_diff=n,
        komi=spec.komi,
        moves=len(moves),
        sgf=sgf,
        failure=failure,
        white_dynkomi=list(sessions[WHITE].dyn_state.log),
    )


def _worker_play(spec: _GameSpec) -> GameOutcome:
    _limit_blas_threads()
    return _play_game(spec)


def _game_specs(
    engine_a: EngineConfig,
    engine_b: EngineConfig,
    games: int,
    board_size: int,
    komi: float,
    handicap: int,
    base_seed: int,
    move_cap: int,
) -> List[_GameSpec]:
    specs = []
    for g in range(games):
        pair = g // 2
        if handicap:
            a_black = False  # engine under test plays white in handicap games
            seed_b = (base_seed << 24) ^ (g << 2)
            seed_w = (base_seed << 24) ^ (g << 2) ^ 1
        else:
            a_black = g % 2 == 0
            # pair-indexed, colour-keyed seeds: the two games of a pair are
            # the same physical game when the engines are identical
            seed_b = (base_seed << 24) ^ (pair << 2)
            seed_w = (base_seed << 24) ^ (pair << 2) ^ 1
        specs.append(
            _GameSpec(
                index=g,
                engine_a=engine_a,
                engine_b=engine_b,
                a_is_black=a_black,
                board_size=board_size,
                komi=komi,
                handicap=handicap,
                seed_black=seed_b,
                seed_white=seed_w,
                move_cap=move_cap,
            )
        )
    return specs


def run_match(
    engine_a: EngineConfig,
    engine_b: EngineConfig,
    games: int,
    board_size: int = 9,
    komi: float = 7.5,
    handicap: int = 0,
    base_seed: int = 0,
    workers: int = 1,
    out_dir: Optional[str] = None,
    move_cap: Optional[int] = None,
    progress=None,
) -> MatchResult:
    """Play ``games`` games between two engine configurations.

    Handicap games require komi 0.5 and put engine A on White. Results are
    counted from A's perspective; an engine failure scores the game against
    the failing engine. SGFs and a JSON summary land in ``out_dir`` if set.
    """
    if handicap and abs(komi - 0.5) > 1e-9:
        raise ValueError("handicap games use komi 0.5")
    cap = move_cap_for(board_size) if move_cap is None else move_cap
    specs = _game_specs(
        engine_a, engine_b, games, board_size, komi, handicap, base_seed, cap
    )
    if workers > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers) as pool:
            outcomes = []
            for out in pool.imap_unordered(_worker_play, specs):
                outcomes.append(out)
                if progress:
                    progress(out)
        outcomes.sort(key=lambda o: o.index)
    else:
        _limit_blas_threads()
        outcomes = []
        for spec in specs:
            outcomes.append(_play_game(spec))
            if progress:
                progress(outcomes[-1])
    wins = sum(1 for o in outcomes if o.winner == "a")
    losses = len(outcomes) - wins
    p, half = ci95(wins, len(outcomes))
    result = MatchResult(
        wins=wins, losses=losses, games=len(outcomes), p=p, ci95_half=half, outcomes=outcomes
    )
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for o in outcomes:
            path = os.path.join(out_dir, f"game_{o.index:04d}.sgf")
            with open(path, "w") as f:
                f.write(o.sgf)
            result.sgf_paths.append(path)
    return result
