import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlvn.board import BLACK, NEUTRAL, WHITE, new_board
from mlvn.errors import IllegalMove, MoveLimitExceeded
from mlvn.features import (
    PLANE_ATARI,
    PLANE_BLACK,
    PLANE_EMPTY,
    PLANE_KO,
    PLANE_LAST_MOVE,
    PLANE_ONES,
    PLANE_TO_MOVE_BLACK,
    PLANE_WHITE,
    encode_features,
)
from mlvn.komi import GRID_9, KomiGrid
from mlvn.selfplay import (
    GameRecord,
    generate_game,
    label_value_vector,
    ownership_targets,
    sample_positions,
)


class TestKomiGrid:
    def test_default_9x9_width(self):
        assert GRID_9.count == 42
        assert GRID_9.values()[0] == -20.5
        assert GRID_9.values()[-1] == 20.5
        assert GRID_9.center == 7.5

    def test_19x19_grid_is_41_wide(self):
        from mlvn.komi import GRID_19

        assert GRID_19.count == 41
        assert (GRID_19.k_min, GRID_19.k_max, GRID_19.center) == (-12.5, 27.5, 7.5)

    def test_half_integers_enforced(self):
        from mlvn.errors import InvalidConfig

        with pytest.raises(InvalidConfig):
            KomiGrid(-2.0, 2.0, 0.0)
        with pytest.raises(InvalidConfig):
            KomiGrid(2.5, -2.5, 0.5)

    def test_index_and_contains(self):
        from mlvn.errors import GridMismatch

        assert GRID_9.index(7.5) == 28
        assert GRID_9.contains(0.5)
        assert not GRID_9.contains(0.0)
        with pytest.raises(GridMismatch):
            GRID_9.index(99.5)


class TestLabelValueVector:
    def test_table_example_n3(self):
        # n = 3 on the -3.5..12.5 axis: win below 3, loss above
        grid = KomiGrid(-3.5, 12.5, 7.5)
        labels = label_value_vector(3, grid)
        values = grid.values()
        for k, lab in zip(values, labels):
            assert lab == (1 if k < 3 else -1)
        assert labels[: 7].tolist() == [1] * 7  # -3.5 .. 2.5
        assert labels[7 :].tolist() == [-1] * 10  # 3.5 .. 12.5

    def test_n7_boundary(self):
        grid = GRID_9
        labels = label_value_vector(7, grid)
        # a 6.5-komi game is a win, a 7.5-komi game is a loss
        assert labels[grid.index(6.5)] == 1
        assert labels[grid.index(7.5)] == -1
        assert labels[grid.index(0.5)] == 1

    def test_n0(self):
        labels = label_value_vector(0, GRID_9)
        vals = GRID_9.values()
        assert all(l == 1 for l, k in zip(labels, vals) if k < 0)
        assert all(l == -1 for l, k in zip(labels, vals) if k > 0)

    def test_saturation(self):
        assert (label_value_vector(-81, GRID_9) == -1).all()
        assert (label_value_vector(81, GRID_9) == 1).all()

    def test_exhaustive_monotone(self):
        # nonincreasing in k, crossing exactly at n, for every possible n
        vals = GRID_9.values()
        for n in range(-81, 82):
            labels = label_value_vector(n, GRID_9)
            assert (np.diff(labels.astype(int)) <= 0).all()
            for k, lab in zip(vals, labels):
                assert lab == (1 if k < n else -1)


class TestOwnershipTargets:
    def test_mapping(self):
        targets = ownership_targets([BLACK, WHITE, NEUTRAL])
        assert targets.tolist() == [1.0, 0.0, 0.5]

    @given(st.lists(st.sampled_from([BLACK, WHITE, NEUTRAL]), min_size=25, max_size=25))
    def test_sum_identity(self, owners):
        # sum of (2*target - 1) equals the territory difference
        targets = ownership_targets(owners)
        n = owners.count(BLACK) - owners.count(WHITE)
        assert float(np.sum(2 * targets - 1)) == pytest.approx(n)


class TestEncodeFeatures:
    def test_empty_board_black_to_move(self):
        planes = encode_features(new_board(9))
        assert planes.shape == (8, 9, 9)
        assert (planes[PLANE_EMPTY] == 1).all()
        assert (planes[PLANE_TO_MOVE_BLACK] == 1).all()
        assert (planes[PLANE_ONES] == 1).all()
        for idx in (PLANE_BLACK, PLANE_WHITE, PLANE_KO, PLANE_LAST_MOVE, PLANE_ATARI):
            assert (planes[idx] == 0).all()

    def test_one_stone(self):
        b = new_board(9)
        b.play((4, 4))
        planes = encode_features(b)
        assert planes[PLANE_BLACK, 4, 4] == 1
        assert planes[PLANE_BLACK].sum() == 1
        assert planes[PLANE_LAST_MOVE, 4, 4] == 1
        assert planes[PLANE_LAST_MOVE].sum() == 1
        assert (planes[PLANE_TO_MOVE_BLACK] == 0).all()  # white to move
        assert planes[PLANE_EMPTY].sum() == 80

    def test_one_of_first_three_planes_everywhere(self):
        b = new_board(5)
        for mv in [(0, 0), (1, 1), (2, 2), (1, 0)]:
            b.play(mv)
        planes = encode_features(b)
        stack = planes[PLANE_BLACK] + planes[PLANE_WHITE] + planes[PLANE_EMPTY]
        assert (stack == 1).all()

    def test_atari_plane(self):
        # white (1,0) ends with one liberty; so does black (0,0) beside it
        b = new_board(5)
        b.play((0, 0))
        b.play((1, 0))
        b.play((2, 0))
        planes = encode_features(b)
        assert planes[PLANE_ATARI, 0, 1] == 1  # white (1,0)
        assert planes[PLANE_ATARI, 0, 0] == 1  # black (0,0)
        assert planes[PLANE_ATARI].sum() == 2

    def test_atari_plane_multi_liberty_group_unset(self):
        b = new_board(5)
        b.play((2, 2))
        planes = encode_features(b)
        assert planes[PLANE_ATARI].sum() == 0

    def test_ko_plane(self):
        from mlvn.board import board_from_diagram

        b = board_from_diagram(
            """
            . . . . .
            . . X O .
            . X O . O
            . . X O .
            . . . . .
            """,
            to_move=BLACK,
        )
        b.play((3, 2))
        planes = encode_features(b)
        assert planes[PLANE_KO, 2, 2] == 1


class TestGenerateGame:
    def test_always_pass_policy(self):
        game = generate_game(policy=lambda board, rng: None, size=9, seed=0)
        assert len(game.moves) == 2
        assert game.territory_diff == 0
        assert all(o == NEUTRAL for o in game.owners)

    def test_light_playout_resolution(self):
        # every empty point at the end is single-colour bordered or neutral,
        # and neutral only in mixed regions (structural postcondition)
        game = generate_game(size=9, seed=42)
        board = game.replay()
        assert board.is_game_over()
        from mlvn.board import territory_ownership

        owners, n = territory_ownership(board)
        assert owners == game.owners
        assert n == game.territory_diff

    def test_illegal_policy_move_raises(self):
        def bad_policy(board, rng):
            return (0, 0) if board.grid[0] != 0 else (0, 0)

        generate = lambda: generate_game(policy=bad_policy, size=5, seed=1)
        with pytest.raises(IllegalMove):
            generate()

    def test_move_cap(self):
        def stubborn(board, rng):
            # alternating pass/stone keeps the game going forever
            from mlvn.mcts import light_policy

            return light_policy(board, rng) if board.move_count % 2 == 0 else None

        with pytest.raises(MoveLimitExceeded):
            generate_game(policy=stubborn, size=5, seed=2, move_cap=10)

    def test_deterministic(self):
        g1 = generate_game(size=9, seed=123)
        g2 = generate_game(size=9, seed=123)
        assert g1.moves == g2.moves
        assert g1.territory_diff == g2.territory_diff


class TestSamplePositions:
    def test_single_position_game_final_labels(self):
        game = generate_game(size=9, seed=7)
        recs1 = sample_positions(game, 1, GRID_9, random.Random(1))
        recs2 = sample_positions(game, 1, GRID_9, random.Random(99))
        assert len(recs1) == len(recs2) == 1
        # labels identical no matter which position was sampled
        assert (recs1[0].value_labels == recs2[0].value_labels).all()
        assert (recs1[0].ownership == recs2[0].ownership).all()

    def test_m_exceeds_length(self):
        game = generate_game(policy=lambda b, r: None, size=5, seed=0)
        recs = sample_positions(game, 10, GRID_9, random.Random(0))
        assert len(recs) == 2  # both positions, no duplicates
        assert sorted(r.move_index for r in recs) == [0, 1]

    def test_label_sum_identity(self):
        game = generate_game(size=9, seed=11)
        rec = sample_positions(game, 1, GRID_9, random.Random(2))[0]
        assert float(np.sum(2 * rec.ownership - 1)) == pytest.approx(game.territory_diff)


class TestPairedLabels:
    @settings(max_examples=30)
    @given(st.integers(0, 10_000))
    def test_zero_neutral_games_have_paired_labels(self, seed):
        game = generate_game(size=5, seed=seed)
        if game.neutral_count() > 0:
            return
        n = game.territory_diff
        assert n % 2 == 1
        grid = KomiGrid(-10.5, 10.5, 0.5)
        labels = label_value_vector(n, grid)
        vals = grid.values()
        for m in range(-5, 6):
            lo, hi = 2 * m - 0.5, 2 * m + 0.5
            if grid.contains(lo) and grid.contains(hi):
                assert labels[grid.index(lo)] == labels[grid.index(hi)]
