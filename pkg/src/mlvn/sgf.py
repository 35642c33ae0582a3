"""Minimal SGF (FF[4]) read/write for game records.

Covers the properties the harness produces and consumes: B, W, AB, KM, SZ,
RE. SGF rows count from the top; the engine counts rows from the bottom, so
coordinates flip on the way through.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .board import BLACK, WHITE, Board, new_board
from .errors import FormatError

_LETTERS = "abcdefghijklmnopqrs"


def _to_sgf_point(move: Tuple[int, int], size: int) -> str:
    col, row = move
    return _LETTERS[col] + _LETTERS[size - 1 - row]


def _from_sgf_point(text: str, size: int) -> Tuple[int, int]:
    if len(text) != 2 or text[0] not in _LETTERS or text[1] not in _LETTERS:
        raise FormatError(f"bad SGF point {text!r}")
    col = _LETTERS.index(text[0])
    row = size - 1 - _LETTERS.index(text[1])
    if not (0 <= col < size and 0 <= row < size):
        raise FormatError(f"SGF point {text!r} off a {size}x{size} board")
    return col, row


@dataclass
class SgfGame:
    size: int = 9
    komi: float = 7.5
    handicap_points: List[Tuple[int, int]] = field(default_factory=list)
    moves: List[Tuple[int, Optional[Tuple[int, int]]]] = field(default_factory=list)
    result: str = ""


def game_to_sgf(
    size: int,
    komi: float,
    moves: List[Tuple[int, Optional[Tuple[int, int]]]],
    handicap_points: List[Tuple[int, int]] = (),
    result: str = "",
) -> str:
    """Serialise a game; moves are (color, point-or-None) pairs."""
    parts = [f"(;FF[4]GM[1]SZ[{size}]KM[{komi}]"]
    if result:
        parts.append(f"RE[{result}]")
    if handicap_points:
        parts.append("AB" + "".join(f"[{_to_sgf_point(p, size)}]" for p in handicap_points))
    for color, move in moves:
        tag = "B" if color == BLACK else "W"
        parts.append(f";{tag}[{'' if move is None else _to_sgf_point(move, size)}]")
    parts.append(")")
    return "".join(parts)


_PROP_RE = re.compile(r"([A-Z]+)((?:\[[^\]]*\])+)")
_VAL_RE = re.compile(r"\[([^\]]*)\]")


def parse_sgf(text: str) -> SgfGame:
    text = text.strip()
    if not text.startswith("(") or not text.endswith(")"):
        raise FormatError("not an SGF game tree")
    game = SgfGame()
    size_seen = False
    for name, raw in _PROP_RE.findall(text):
        values = _VAL_RE.findall(raw)
        if name == "SZ":
            game.size = int(values[0])
            size_seen = True
        elif name == "KM":
            game.komi = float(values[0])
        elif name == "RE":
            game.result = values[0]
        elif name == "AB":
            game.handicap_points = [_from_sgf_point(v, game.size) for v in values]
        elif name in ("B", "W"):
            color = BLACK if name == "B" else WHITE
            for v in values:
                move = None if v in ("", "tt") else _from_sgf_point(v, game.size)
                game.moves.append((color, move))
    if not size_seen:
        raise FormatError("SGF lacks an SZ property")
    return game


def replay_sgf(game: SgfGame, komi: Optional[float] = None) -> Board:
    """Board reached by replaying the SGF mainline."""
    board = new_board(game.size, game.komi if komi is None else komi)
    for col, row in game.handicap_points:
        p = row * game.size + col
        board.grid[p] = BLACK
        board._remove_empty(p)
        board.position_hash ^= board._ztab[BLACK][p]
    if game.handicap_points:
        board.position_hash ^= board._zside
        board.to_move = WHITE
        board.history_hashes = {board.position_hash}
        board.handicap_points = tuple(
            row * game.size + col for col, row in game.handicap_points
        )
    for color, move in game.moves:
        if board.to_move != color:
            board.set_to_move(color)
        board.play(move)
    return board


def result_string(territory_diff: int, komi: float) -> str:
    """Chinese-score result, "B+x" or "W+x" with x = |n - komi|."""
    margin = territory_diff - komi
    if margin > 0:
        return f"B+{margin:g}"
    return f"W+{-margin:g}"


def record_to_sgf(record, komi: float, result: str = "") -> str:
    """SGF for a selfplay.GameRecord (colors reconstructed by alternation)."""
    color = WHITE if record.handicap else BLACK
    moves = []
    for move in record.moves:
        moves.append((color, move))
        color = BLACK + WHITE - color
    return game_to_sgf(
        record.size, komi, moves, handicap_points=list(record.handicap), result=result
    )
