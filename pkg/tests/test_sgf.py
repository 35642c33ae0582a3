import pytest

from mlvn.board import BLACK, WHITE
from mlvn.errors import FormatError
from mlvn.selfplay import generate_game
from mlvn.sgf import (
    game_to_sgf,
    parse_sgf,
    record_to_sgf,
    replay_sgf,
    result_string,
)


class TestRoundTrip:
    def test_simple_game(self):
        moves = [(BLACK, (2, 2)), (WHITE, (6, 6)), (BLACK, None), (WHITE, (4, 4))]
        text = game_to_sgf(9, 7.5, moves, result="B+3")
        game = parse_sgf(text)
        assert game.size == 9
        assert game.komi == 7.5
        assert game.result == "B+3"
        assert game.moves == moves

    def test_handicap_stones(self):
        text = game_to_sgf(9, 0.5, [(WHITE, (4, 4))], handicap_points=[(2, 2), (6, 6)])
        game = parse_sgf(text)
        assert sorted(game.handicap_points) == [(2, 2), (6, 6)]
        board = replay_sgf(game)
        assert board.grid[2 * 9 + 2] == BLACK
        assert board.grid[4 * 9 + 4] == WHITE

    def test_pass_encoding(self):
        text = game_to_sgf(9, 7.5, [(BLACK, None)])
        assert ";B[]" in text
        game = parse_sgf(text)
        assert game.moves == [(BLACK, None)]

    def test_selfplay_record_replay(self):
        rec = generate_game(size=9, seed=5)
        text = record_to_sgf(rec, komi=7.5, result=result_string(rec.territory_diff, 7.5))
        game = parse_sgf(text)
        board = replay_sgf(game)
        replayed = rec.replay()
        assert board.grid == replayed.grid
        assert board.is_game_over()

    def test_coordinates_flip_consistently(self):
        # (0, 0) is the bottom-left corner: SGF row letter must be the last
        text = game_to_sgf(9, 7.5, [(BLACK, (0, 0))])
        assert ";B[ai]" in text
        game = parse_sgf(text)
        assert game.moves[0][1] == (0, 0)


class TestResultString:
    def test_black_win(self):
        assert result_string(9, 7.5) == "B+1.5"

    def test_white_win(self):
        assert result_string(3, 7.5) == "W+4.5"

    def test_handicap_komi(self):
        assert result_string(0, 0.5) == "W+0.5"


class TestErrors:
    def test_not_sgf(self):
        with pytest.raises(FormatError):
            parse_sgf("hello world")

    def test_missing_size(self):
        with pytest.raises(FormatError):
            parse_sgf("(;FF[4]KM[7.5];B[aa])")

    def test_bad_point(self):
        with pytest.raises(FormatError):
            parse_sgf("(;FF[4]SZ[9];B[zz])")
