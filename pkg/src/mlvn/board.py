"""Go rules engine for square boards.

Chinese (area) scoring, suicide forbidden, superko enforced by hashing the
(grid, side-to-move) pair. Boards are mutable but exclusively owned: call
``copy()`` before sharing; nothing here mutates a board it did not receive.

Points at the API boundary are ``(col, row)`` tuples, 0-based, and a move is
either such a tuple or ``None`` for a pass. Internally points are flat
indices ``row * size + col``; the underscore methods that take flat indices
are the hot path for playout policies.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import (
    BoardNotEmpty,
    GameNotOver,
    GameOver,
    IllegalMove,
    InvalidSize,
    UnsupportedHandicap,
)

EMPTY = 0
BLACK = 1
WHITE = 2
NEUTRAL = 0  # ownership code for dame/seki points

Move = Optional[Tuple[int, int]]

MIN_SIZE = 5
MAX_SIZE = 19

_ZOBRIST_SEED = 0x9E3779B97F4A7C15

# per-size caches: neighbour/diagonal tables and zobrist tables
_neighbors_cache: dict = {}
_diagonals_cache: dict = {}
_zobrist_cache: dict = {}


def _neighbors(size: int):
    tab = _neighbors_cache.get(size)
    if tab is None:
        tab = []
        for r in range(size):
            for c in range(size):
                adj = []
                if c > 0:
                    adj.append(r * size + c - 1)
                if c < size - 1:
                    adj.append(r * size + c + 1)
                if r > 0:
                    adj.append((r - 1) * size + c)
                if r < size - 1:
                    adj.append((r + 1) * size + c)
                tab.append(tuple(adj))
        tab = tuple(tab)
        _neighbors_cache[size] = tab
    return tab


def _diagonals(size: int):
    tab = _diagonals_cache.get(size)
    if tab is None:
        tab = []
        for r in range(size):
            for c in range(size):
                adj = []
                for dr, dc in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < size and 0 <= cc < size:
                        adj.append(rr * size + cc)
                tab.append(tuple(adj))
        tab = tuple(tab)
        _diagonals_cache[size] = tab
    return tab


def _zobrist(size: int):
    tab = _zobrist_cache.get(size)
    if tab is None:
        rng = random.Random(_ZOBRIST_SEED ^ size)
        black = tuple(rng.getrandbits(64) for _ in range(size * size))
        white = tuple(rng.getrandbits(64) for _ in range(size * size))
        side = rng.getrandbits(64)
        tab = ((None, black, white), side)
        _zobrist_cache[size] = tab
    return tab


def opponent(color: int) -> int:
    return BLACK + WHITE - color


@dataclass(frozen=True)
class ScoreResult:
    """Territory difference n = black-owned points minus white-owned points."""

    territory_diff: int

    def black_wins(self, komi: float) -> bool:
        return self.territory_diff > komi


class Board:
    """Full game state: grid, turn, ko point, hash history, capture counts."""

    __slots__ = (
        "size",
        "komi",
        "grid",
        "to_move",
        "ko_point",
        "position_hash",
        "history_hashes",
        "move_count",
        "consecutive_passes",
        "captures_black",
        "captures_white",
        "last_move",
        "handicap_points",
        "_empties",
        "_empty_pos",
        "_neigh",
        "_diag",
        "_ztab",
        "_zside",
        "_mark",
        "_stamp",
    )

    def __init__(self, size: int, komi: float = 7.5):
        if size % 2 == 0 or not (MIN_SIZE <= size <= MAX_SIZE):
            raise InvalidSize(f"board size must be odd and in [{MIN_SIZE}, {MAX_SIZE}], got {size}")
        n = size * size
        self.size = size
        self.komi = komi
        self.grid = [EMPTY] * n
        self.to_move = BLACK
        self.ko_point: Optional[int] = None
        self.history_hashes: set = set()
        self.move_count = 0
        self.consecutive_passes = 0
        self.captures_black = 0
        self.captures_white = 0
        self.last_move: Optional[int] = None
        self.handicap_points: Tuple[int, ...] = ()
        self._empties = list(range(n))
        self._empty_pos = list(range(n))
        self._neigh = _neighbors(size)
        self._diag = _diagonals(size)
        self._ztab, self._zside = _zobrist(size)
        self._mark = [0] * n
        self._stamp = 0
        self.position_hash = 0  # empty grid, black to move
        self.history_hashes.add(self.position_hash)

    # ------------------------------------------------------------------ copy

    def copy(self) -> "Board":
        b = Board.__new__(Board)
        b.size = self.size
        b.komi = self.komi
        b.grid = self.grid[:]
        b.to_move = self.to_move
        b.ko_point = self.ko_point
        b.position_hash = self.position_hash
        b.history_hashes = set(self.history_hashes)
        b.move_count = self.move_count
        b.consecutive_passes = self.consecutive_passes
        b.captures_black = self.captures_black
        b.captures_white = self.captures_white
        b.last_move = self.last_move
        b.handicap_points = self.handicap_points
        b._empties = self._empties[:]
        b._empty_pos = self._empty_pos[:]
        b._neigh = self._neigh
        b._diag = self._diag
        b._ztab = self._ztab
        b._zside = self._zside
        b._mark = [0] * (self.size * self.size)
        b._stamp = 0
        return b

    # ------------------------------------------------------- point utilities

    def flat(self, col: int, row: int) -> int:
        return row * self.size + col

    def coords(self, p: int) -> Tuple[int, int]:
        return p % self.size, p // self.size

    def is_game_over(self) -> bool:
        return self.consecutive_passes >= 2

    def stone_count(self) -> int:
        return self.size * self.size - len(self._empties)

    # ------------------------------------------------------ empties tracking

    def _remove_empty(self, p: int) -> None:
        empties, pos = self._empties, self._empty_pos
        i = pos[p]
        last = empties[-1]
        empties[i] = last
        pos[last] = i
        empties.pop()
        pos[p] = -1

    def _add_empty(self, p: int) -> None:
        self._empty_pos[p] = len(self._empties)
        self._empties.append(p)

    # --------------------------------------------------------- group queries

    def _group_has_liberty(self, p: int) -> bool:
        """True iff the group containing p has at least one liberty."""
        grid = self.grid
        neigh = self._neigh
        color = grid[p]
        self._stamp += 1
        stamp = self._stamp
        mark = self._mark
        mark[p] = stamp
        stack = [p]
        while stack:
            q = stack.pop()
            for r in neigh[q]:
                v = grid[r]
                if v == EMPTY:
                    return True
                if v == color and mark[r] != stamp:
                    mark[r] = stamp
                    stack.append(r)
        return False

    def _remove_group(self, p: int, out: list) -> None:
        """Remove the group at p from the grid, appending its points to out."""
        grid = self.grid
        neigh = self._neigh
        color = grid[p]
        grid[p] = EMPTY
        out.append(p)
        stack = [p]
        while stack:
            q = stack.pop()
            for r in neigh[q]:
                if grid[r] == color:
                    grid[r] = EMPTY
                    out.append(r)
                    stack.append(r)

    def _is_true_eye(self, p: int, color: int) -> bool:
        """Single-point eye test used by playout policies.

        All orthogonal neighbours must be own stones; opponent diagonals make
        it a false eye (one allowed in the centre, none on the edge).
        """
        grid = self.grid
        for q in self._neigh[p]:
            if grid[q] != color:
                return False
        opp = BLACK + WHITE - color
        diag = self._diag[p]
        bad = 0
        for q in diag:
            if grid[q] == opp:
                bad += 1
        if len(diag) < 4:
            bad += 1
        return bad < 2

    # ------------------------------------------------------------ move logic

    def _apply_stone(self, p: int):
        """Place a to_move stone at empty point p, resolving captures.

        Returns (captured_points, new_hash, error) where error is None on
        success, or "suicide"/"superko" with the grid already restored.
        Does not touch counters, empties or history; commit or discard via
        _commit_stone. Ko exclusion is the caller's job.
        """
        grid = self.grid
        me = self.to_move
        opp = BLACK + WHITE - me
        grid[p] = me
        captured: list = []
        for q in self._neigh[p]:
            if grid[q] == opp and not self._group_has_liberty(q):
                self._remove_group(q, captured)
        if not captured and not self._group_has_liberty(p):
            grid[p] = EMPTY
            return (), 0, "suicide"
        ztab = self._ztab
        h = self.position_hash ^ ztab[me][p] ^ self._zside
        if captured:
            zo = ztab[opp]
            for q in captured:
                h ^= zo[q]
        if h in self.history_hashes:
            grid[p] = EMPTY
            for q in captured:
                grid[q] = opp
            return (), 0, "superko"
        return captured, h, None

    def _commit_stone(self, p: int, captured: list, new_hash: int) -> None:
        me = self.to_move
        self._remove_empty(p)
        for q in captured:
            self._add_empty(q)
        if me == BLACK:
            self.captures_black += len(captured)
        else:
            self.captures_white += len(captured)
        ko = None
        if len(captured) == 1:
            grid = self.grid
            lone = True
            libs = 0
            for q in self._neigh[p]:
                v = grid[q]
                if v == me:
                    lone = False
                    break
                if v == EMPTY:
                    libs += 1
            if lone and libs == 1:
                ko = captured[0]
        self.ko_point = ko
        self.to_move = BLACK + WHITE - me
        self.move_count += 1
        self.consecutive_passes = 0
        self.last_move = p
        self.position_hash = new_hash
        self.history_hashes.add(new_hash)

    def _play_pass(self) -> None:
        self.position_hash ^= self._zside
        self.history_hashes.add(self.position_hash)
        self.to_move = BLACK + WHITE - self.to_move
        self.move_count += 1
        self.consecutive_passes += 1
        self.ko_point = None
        self.last_move = None

    def _try_play(self, p: int) -> bool:
        """Attempt a stone at flat point p; commit and return True, or leave
        the board unchanged and return False. Hot path."""
        if self.grid[p] != EMPTY or p == self.ko_point:
            return False
        captured, h, err = self._apply_stone(p)
        if err is not None:
            return False
        self._commit_stone(p, captured, h)
        return True

    def _probe_legal(self, p: int) -> bool:
        """Legality of a stone at p without changing the board."""
        if self.grid[p] != EMPTY or p == self.ko_point:
            return False
        captured, _, err = self._apply_stone(p)
        if err is not None:
            return False
        grid = self.grid
        grid[p] = EMPTY
        if captured:
            opp = BLACK + WHITE - self.to_move
            for q in captured:
                grid[q] = opp
        return True

    def play(self, move: Move) -> None:
        """Play a move for the side to move. Raises IllegalMove or GameOver."""
        if self.consecutive_passes >= 2:
            raise GameOver("game is over after two consecutive passes")
        if move is None:
            self._play_pass()
            return
        col, row = move
        if not (0 <= col < self.size and 0 <= row < self.size):
            raise IllegalMove(f"point {move} off the board")
        p = row * self.size + col
        if self.grid[p] != EMPTY:
            raise IllegalMove(f"point {move} is occupied")
        if p == self.ko_point:
            raise IllegalMove(f"point {move} is the ko point")
        captured, h, err = self._apply_stone(p)
        if err is not None:
            raise IllegalMove(f"{err} at {move}")
        self._commit_stone(p, captured, h)

    def legal_moves(self) -> List[Move]:
        """All legal moves, pass included. Raises GameOver once game ended."""
        if self.consecutive_passes >= 2:
            raise GameOver("no moves in a finished game")
        moves: List[Move] = [self.coords(p) for p in self._empties if self._probe_legal(p)]
        moves.append(None)
        return moves

    def is_legal(self, move: Move) -> bool:
        if self.consecutive_passes >= 2:
            return False
        if move is None:
            return True
        col, row = move
        if not (0 <= col < self.size and 0 <= row < self.size):
            return False
        return self._probe_legal(row * self.size + col)

    # ------------------------------------------------------------- handicap

    def set_to_move(self, color: int) -> None:
        """Force the side to move (GTP free setup). Clears any ko point."""
        if color == self.to_move:
            return
        self.position_hash ^= self._zside
        self.history_hashes.add(self.position_hash)
        self.to_move = color
        self.ko_point = None

    def place_handicap(self, h: int) -> List[Tuple[int, int]]:
        """Place h black handicap stones on star points; White to move after.

        The caller is responsible for setting the game komi to 0.5.
        """
        if self.move_count > 0 or self.stone_count() > 0:
            raise BoardNotEmpty("handicap stones require an empty board")
        points = handicap_points(self.size, h)
        zb = self._ztab[BLACK]
        for col, row in points:
            p = row * self.size + col
            self.grid[p] = BLACK
            self._remove_empty(p)
            self.position_hash ^= zb[p]
        self.position_hash ^= self._zside  # white to move
        self.to_move = WHITE
        self.handicap_points = tuple(self.flat(c, r) for c, r in points)
        self.history_hashes = {self.position_hash}
        return points


def star_points(size: int) -> List[Tuple[int, int]]:
    """Star points in handicap placement order: corner pairs, then centre."""
    if size >= 13:
        off = 3
    elif size >= 7:
        off = 2
    else:
        off = 1
    hi = size - 1 - off
    mid = size // 2
    return [(off, off), (hi, hi), (off, hi), (hi, off), (mid, mid)]


def handicap_points(size: int, h: int) -> List[Tuple[int, int]]:
    stars = star_points(size)
    if not (1 <= h <= len(stars)):
        raise UnsupportedHandicap(f"handicap must be 1..{len(stars)}, got {h}")
    if h == 1:
        # fixed corner star instead of free placement, for determinism
        return [stars[3]]
    return stars[:h]


def new_board(size: int, komi: float = 7.5) -> Board:
    return Board(size, komi)


def place_handicap(board: Board, h: int) -> Board:
    board.place_handicap(h)
    return board


# ------------------------------------------------------------------ scoring


def territory_ownership(board: Board) -> Tuple[List[int], int]:
    """Structural ownership of the current position.

    Stones own their points; an empty region bordered by exactly one colour
    belongs to that colour, otherwise it is NEUTRAL. Returns (owners, n)
    with n the black-minus-white point difference. Defined for any position;
    exact once the game has been played out to full resolution.
    """
    grid = board.grid
    neigh = board._neigh
    owners = grid[:]
    seen = bytearray(len(grid))
    for p0 in board._empties:
        if seen[p0]:
            continue
        region = [p0]
        seen[p0] = 1
        border = 0  # bitmask; BLACK|WHITE == 3 means mixed
        i = 0
        while i < len(region):
            q = region[i]
            i += 1
            for r in neigh[q]:
                v = grid[r]
                if v == EMPTY:
                    if not seen[r]:
                        seen[r] = 1
                        region.append(r)
                else:
                    border |= v
        owner = BLACK if border == BLACK else WHITE if border == WHITE else NEUTRAL
        if owner != NEUTRAL:
            for q in region:
                owners[q] = owner
    n = owners.count(BLACK) - owners.count(WHITE)
    return owners, n


def final_ownership(board: Board) -> Tuple[List[int], ScoreResult]:
    """Ownership and score of a finished game (two consecutive passes)."""
    if not board.is_game_over():
        raise GameNotOver("final ownership requires two consecutive passes")
    owners, n = territory_ownership(board)
    return owners, ScoreResult(n)


def compute_hash(board: Board) -> int:
    """Recompute the position hash from scratch (test oracle for the
    incremental hash)."""
    ztab, zside = _zobrist(board.size)
    h = 0
    for p, v in enumerate(board.grid):
        if v != EMPTY:
            h ^= ztab[v][p]
    if board.to_move == WHITE:
        h ^= zside
    return h


def board_diagram(board: Board) -> str:
    """ASCII diagram, top row first. Debugging aid."""
    chars = {EMPTY: ".", BLACK: "X", WHITE: "O"}
    rows = []
    for r in range(board.size - 1, -1, -1):
        rows.append(" ".join(chars[board.grid[r * board.size + c]] for c in range(board.size)))
    return "\n".join(rows)


def board_from_diagram(text: str, to_move: int = BLACK, komi: float = 7.5) -> Board:
    """Build a position from a diagram as printed by board_diagram.

    Intended for tests: the stones are placed directly, the hash history is
    seeded with just the resulting position.
    """
    lines = [ln.split() for ln in text.strip().splitlines()]
    size = len(lines)
    board = Board(size, komi)
    for i, line in enumerate(lines):
        if len(line) != size:
            raise ValueError("diagram is not square")
        row = size - 1 - i
        for col, ch in enumerate(line):
            if ch == ".":
                continue
            color = BLACK if ch in ("X", "B", "#") else WHITE
            p = row * size + col
            board.grid[p] = color
            board._remove_empty(p)
            board.position_hash ^= board._ztab[color][p]
    if to_move == WHITE:
        board.position_hash ^= board._zside
    board.to_move = to_move
    board.history_hashes = {board.position_hash}
    return board
