import random

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(0xBEEF)


def play_random_game(size, seed, max_moves=None):
    """Light playout to completion; returns the final board."""
    from mlvn.board import new_board
    from mlvn.mcts import _play_light_move

    board = new_board(size)
    r = random.Random(seed)
    cap = max_moves or 3 * size * size
    moves = 0
    while not board.is_game_over() and moves < cap:
        _play_light_move(board, r)
        moves += 1
    return board
