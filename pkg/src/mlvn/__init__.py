"""mlvn: a small-board Go engine around a per-komi value network with an
ownership head, PUCT search, and dynamic komi."""

__version__ = "0.1.0"

from .board import (  # noqa: F401
    BLACK,
    EMPTY,
    NEUTRAL,
    WHITE,
    Board,
    ScoreResult,
    final_ownership,
    new_board,
    place_handicap,
    territory_ownership,
)
from .komi import GRID_9, GRID_19, KomiGrid, default_grid  # noqa: F401
