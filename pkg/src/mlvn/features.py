"""Input planes for the evaluator network.

Eight binary planes: black stones, white stones, empty, ko point,
black-to-move, last move, stones in atari, all-ones. Exactly one of the
first three planes is set at each point.
"""

from __future__ import annotations

import numpy as np

from .board import BLACK, EMPTY, WHITE, Board

NUM_PLANES = 8

PLANE_BLACK = 0
PLANE_WHITE = 1
PLANE_EMPTY = 2
PLANE_KO = 3
PLANE_TO_MOVE_BLACK = 4
PLANE_LAST_MOVE = 5
PLANE_ATARI = 6
PLANE_ONES = 7


def atari_points(board: Board) -> list:
    """Flat indices of stones whose group has exactly one liberty."""
    grid = board.grid
    neigh = board._neigh
    n = len(grid)
    seen = bytearray(n)
    out = []
    for p in range(n):
        if seen[p] or grid[p] == EMPTY:
            continue
        color = grid[p]
        group = [p]
        seen[p] = 1
        libs = set()
        i = 0
        while i < len(group) and len(libs) < 2:
            q = group[i]
            i += 1
            for r in neigh[q]:
                v = grid[r]
                if v == EMPTY:
                    libs.add(r)
                elif v == color and not seen[r]:
                    seen[r] = 1
                    group.append(r)
        # finish flooding the group so each stone is visited once
        while i < len(group):
            q = group[i]
            i += 1
            for r in neigh[q]:
                if grid[r] == color and not seen[r]:
                    seen[r] = 1
                    group.append(r)
        if len(libs) == 1:
            out.extend(group)
    return out


def encode_features(board: Board) -> np.ndarray:
    """Encode a position as (8, size, size) float32 planes."""
    s = board.size
    n = s * s
    planes = np.zeros((NUM_PLANES, n), dtype=np.float32)
    g = np.asarray(board.grid, dtype=np.int8)
    planes[PLANE_BLACK] = g == BLACK
    planes[PLANE_WHITE] = g == WHITE
    planes[PLANE_EMPTY] = g == EMPTY
    if board.ko_point is not None:
        planes[PLANE_KO, board.ko_point] = 1.0
    if board.to_move == BLACK:
        planes[PLANE_TO_MOVE_BLACK] = 1.0
    if board.last_move is not None:
        planes[PLANE_LAST_MOVE, board.last_move] = 1.0
    pts = atari_points(board)
    if pts:
        planes[PLANE_ATARI, pts] = 1.0
    planes[PLANE_ONES] = 1.0
    return planes.reshape(NUM_PLANES, s, s)
