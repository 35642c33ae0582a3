"""Independent brute-force scoring oracle.

Deliberately implemented against a dict-of-coordinates view of the board,
region by region, sharing no code with the engine's flat-array scorer.
"""

from collections import deque

from mlvn.board import BLACK, EMPTY, WHITE


def oracle_ownership(board):
    """Return ({(col, row): owner}, territory difference) by explicit
    region flooding; owner codes match the engine (0 neutral)."""
    size = board.size
    stones = {}
    for row in range(size):
        for col in range(size):
            v = board.grid[row * size + col]
            if v != EMPTY:
                stones[(col, row)] = v

    def neighbors(pt):
        col, row = pt
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            c, r = col + dc, row + dr
            if 0 <= c < size and 0 <= r < size:
                yield (c, r)

    owners = dict(stones)
    visited = set()
    for row in range(size):
        for col in range(size):
            pt = (col, row)
            if pt in stones or pt in visited:
                continue
            region = set()
            border_colors = set()
            queue = deque([pt])
            region.add(pt)
            while queue:
                cur = queue.popleft()
                for nb in neighbors(cur):
                    if nb in stones:
                        border_colors.add(stones[nb])
                    elif nb not in region:
                        region.add(nb)
                        queue.append(nb)
            visited |= region
            if border_colors == {BLACK}:
                owner = BLACK
            elif border_colors == {WHITE}:
                owner = WHITE
            else:
                owner = 0
            for p in region:
                owners[p] = owner
    n = sum(1 for o in owners.values() if o == BLACK) - sum(
        1 for o in owners.values() if o == WHITE
    )
    return owners, n


def oracle_score(board):
    return oracle_ownership(board)[1]
