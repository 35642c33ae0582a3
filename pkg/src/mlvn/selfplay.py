"""Self-play game generation and conversion to training records.

A finished game yields a single label set: the per-komi win/loss vector and
the per-point ownership targets, both taken from black's perspective. Every
position sampled from the game carries those game-final labels.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .board import BLACK, EMPTY, NEUTRAL, WHITE, Board, Move, new_board, territory_ownership
from .errors import IllegalMove, MoveLimitExceeded
from .features import encode_features
from .komi import KomiGrid

Policy = Callable[[Board, random.Random], Move]


def move_cap_for(size: int) -> int:
    # pathological-cycle guard; superko already rules out true repetition
    return 3 * size * size


def label_value_vector(n: int, grid: KomiGrid) -> np.ndarray:
    """Per-komi win/loss labels for a game black won by n points.

    +1 at every grid komi k < n, -1 at every k > n. The half-integer grid
    makes k == n impossible.
    """
    return np.where(grid.values() < n, 1, -1).astype(np.int8)


def ownership_targets(owners: Sequence[int]) -> np.ndarray:
    """Map final ownership to per-point targets: black 1.0, white 0.0,
    neutral 0.5."""
    out = np.empty(len(owners), dtype=np.float32)
    for i, o in enumerate(owners):
        out[i] = 1.0 if o == BLACK else 0.0 if o == WHITE else 0.5
    return out


@dataclass
class GameRecord:
    """A finished self-play game with final ownership and score."""

    size: int
    moves: List[Move]
    owners: List[int]
    territory_diff: int
    handicap: Tuple[Tuple[int, int], ...] = ()
    game_id: int = 0
    seed: int = 0

    def __len__(self) -> int:
        return len(self.moves)

    def neutral_count(self) -> int:
        return sum(1 for o in self.owners if o == NEUTRAL)

    def replay(self, upto: Optional[int] = None) -> Board:
        """Board after the first ``upto`` moves (all moves if None)."""
        board = new_board(self.size)
        for col, row in self.handicap:
            board.grid[row * self.size + col] = BLACK
            board._remove_empty(row * self.size + col)
            board.position_hash ^= board._ztab[BLACK][row * self.size + col]
        if self.handicap:
            board.position_hash ^= board._zside
            board.to_move = WHITE
            board.history_hashes = {board.position_hash}
        count = len(self.moves) if upto is None else upto
        for move in self.moves[:count]:
            board.play(move)
        return board

    def positions(self, indices: Sequence[int]):
        """Yield (index, board-after-index-moves) for sorted indices,
        replaying the game once."""
        board = self.replay(0)
        last = 0
        for j in sorted(indices):
            for move in self.moves[last:j]:
                board.play(move)
            last = j
            yield j, board


@dataclass
class TrainingRecord:
    """One sampled position with the game-final labels."""

    features: np.ndarray  # (8, size, size) float32
    value_labels: np.ndarray  # (grid.count,) int8, +1/-1
    ownership: np.ndarray  # (size*size,) float32 in {0, 0.5, 1}
    to_move: int
    game_id: int = 0
    move_index: int = 0


def generate_game(
    policy: Optional[Policy] = None,
    size: int = 9,
    seed: int = 0,
    resolution: str = "structural",
    move_cap: Optional[int] = None,
    game_id: int = 0,
    handicap: int = 0,
) -> GameRecord:
    """Play one game to completion and score it structurally.

    The policy maps (board, rng) to a move; the default is the light playout
    policy, which never passes while a legal non-eye-filling move exists, so
    the structural scoring rule is exact at the end. ``resolution`` selects
    the check applied to the final position: "structural" trusts the policy,
    "verify" raises if a mixed-border empty region remains.

    Raises MoveLimitExceeded past 3*size^2 moves; such games are discarded.
    """
    if resolution not in ("structural", "verify"):
        raise ValueError(f"unknown resolution mode {resolution!r}")
    if policy is None:
        from .mcts import light_policy

        policy = light_policy
    rng = random.Random(seed)
    cap = move_cap_for(size) if move_cap is None else move_cap
    board = new_board(size)
    handicap_pts: Tuple[Tuple[int, int], ...] = ()
    if handicap:
        handicap_pts = tuple(board.place_handicap(handicap))
    moves: List[Move] = []
    while not board.is_game_over():
        if len(moves) >= cap:
            raise MoveLimitExceeded(f"game exceeded {cap} moves")
        move = policy(board, rng)
        try:
            board.play(move)
        except IllegalMove as exc:
            raise IllegalMove(f"policy returned illegal move {move}: {exc}") from exc
        moves.append(move)
    owners, n = territory_ownership(board)
    if resolution == "verify":
        bad = sum(
            1
            for p, o in enumerate(owners)
            if o == NEUTRAL and board.grid[p] == EMPTY and _mixed_region(board, p)
        )
        if bad:
            raise MoveLimitExceeded(f"{bad} contested points at game end")
    return GameRecord(
        size=size,
        moves=moves,
        owners=owners,
        territory_diff=n,
        handicap=handicap_pts,
        game_id=game_id,
        seed=seed,
    )


def _mixed_region(board: Board, p: int) -> bool:
    border = 0
    stack = [p]
    seen = {p}
    while stack:
        q = stack.pop()
        for r in board._neigh[q]:
            v = board.grid[r]
            if v == EMPTY:
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
            else:
                border |= v
    return border == (BLACK | WHITE)


def sample_positions(
    game: GameRecord,
    m: int,
    grid: KomiGrid,
    rng: Optional[random.Random] = None,
) -> List[TrainingRecord]:
    """Sample m positions uniformly without replacement from the game.

    Every record carries the same game-final label vector and ownership
    targets. m larger than the game takes every position once.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = rng or random.Random(0)
    count = len(game.moves)
    if count == 0:
        return []
    take = min(m, count)
    indices = rng.sample(range(count), take)
    labels = label_value_vector(game.territory_diff, grid)
    targets = ownership_targets(game.owners)
    records = []
    for j, board in game.positions(indices):
        records.append(
            TrainingRecord(
                features=encode_features(board),
                value_labels=labels.copy(),
                ownership=targets.copy(),
                to_move=board.to_move,
                game_id=game.game_id,
                move_index=j,
            )
        )
    return records


def generate_dataset(
    count: int,
    size: int = 9,
    grid: Optional[KomiGrid] = None,
    positions_per_game: int = 1,
    seed: int = 0,
    policy: Optional[Policy] = None,
    keep_games: bool = False,
) -> Tuple[List[TrainingRecord], List[GameRecord]]:
    """Generate ``count`` games and sample training records from each.

    Games hitting the move cap are discarded and replaced (the seed stream
    keeps advancing, so output is deterministic for a given seed).
    """
    from .komi import default_grid

    if grid is None:
        grid = default_grid(size)
    records: List[TrainingRecord] = []
    games: List[GameRecord] = []
    game_id = 0
    attempt = 0
    while game_id < count:
        game_seed = (seed << 20) + attempt
        attempt += 1
        try:
            game = generate_game(policy=policy, size=size, seed=game_seed, game_id=game_id)
        except MoveLimitExceeded:
            continue
        sample_rng = random.Random(game_seed ^ 0x5EED)
        records.extend(sample_positions(game, positions_per_game, grid, sample_rng))
        if keep_games:
            games.append(game)
        game_id += 1
    return records, games
