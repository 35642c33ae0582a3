"""Engine session: a board plus search, evaluator and dynamic-komi state.

One session drives one game. ``genmove`` searches at the current dynamic
komi, plays the chosen move on the session board, then computes the komi
for the next search from the fresh root statistics (per-move cadence).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from .board import Move, new_board
from .dynkomi import DynKomiConfig, DynKomiState, next_komi
from .errors import GameOver
from .komi import KomiGrid
from .mcts import RootStats, SearchConfig, search


@dataclass
class EngineConfig:
    name: str = "mlvn"
    search: SearchConfig = field(default_factory=SearchConfig)
    dynkomi: DynKomiConfig = field(default_factory=DynKomiConfig)
    checkpoint: Optional[str] = None  # None -> uniform evaluator


def make_evaluator(config: EngineConfig, board_size: int, grid: Optional[KomiGrid] = None):
    from .komi import default_grid
    from .valuenet import ConstantEvaluator, NetworkEvaluator, load_checkpoint

    if config.checkpoint:
        params = load_checkpoint(config.checkpoint)
        return NetworkEvaluator(params, batch_size=config.search.batch_size)
    return ConstantEvaluator(grid or default_grid(board_size), board_size)


class EngineSession:
    """Game state of a single engine instance."""

    def __init__(
        self,
        evaluator,
        search_config: Optional[SearchConfig] = None,
        dynkomi_config: Optional[DynKomiConfig] = None,
        board_size: int = 9,
        komi: float = 7.5,
        seed: int = 0,
    ):
        self.evaluator = evaluator
        self.search_config = search_config or SearchConfig()
        self.dynkomi_config = dynkomi_config or DynKomiConfig()
        self.board = new_board(board_size, komi)
        self.dyn_state = DynKomiState(k0=komi)
        self.move_log: List[Tuple[int, Move]] = []
        self.last_stats: Optional[RootStats] = None
        self._seed = seed
        self._move_rng = random.Random(seed)

    # ------------------------------------------------------------- lifecycle

    def reset_board(self, size: Optional[int] = None) -> None:
        size = size or self.board.size
        self.board = new_board(size, self.board.komi)
        self.dyn_state.reset()
        self.move_log.clear()
        self.last_stats = None
        self._move_rng = random.Random(self._seed)

    def set_komi(self, komi: float) -> None:
        self.board.komi = komi
        self.dyn_state.reset(k0=komi)

    def set_seed(self, seed: int) -> None:
        self._seed = seed
        self._move_rng = random.Random(seed)

    def place_handicap(self, h: int) -> List[Tuple[int, int]]:
        points = self.board.place_handicap(h)
        return points

    # ----------------------------------------------------------------- play

    def observe(self, move: Move) -> None:
        """Apply a move (own or opponent's) to the session board."""
        self.board.play(move)
        self.move_log.append((self.board.move_count - 1, move))

    def genmove(self) -> Move:
        """Search at the current dynamic komi, play and return the move."""
        if self.board.is_game_over():
            raise GameOver("game already finished")
        cfg = replace(self.search_config, seed=self._move_rng.randrange(1 << 62))
        move, stats = search(self.board, cfg, self.evaluator, self.dyn_state.current)
        self.last_stats = stats
        self.observe(move)
        # komi for the next search, from this search's root statistics;
        # the ordinal is the index of the move about to be played
        board_points = self.board.size * self.board.size
        next_komi(
            self.dynkomi_config, self.dyn_state, self.board.move_count, board_points, stats
        )
        return move
