import pytest

from mlvn.board import WHITE
from mlvn.dynkomi import DynKomiConfig
from mlvn.engine import EngineConfig, EngineSession, make_evaluator
from mlvn.errors import GameOver
from mlvn.komi import GRID_9
from mlvn.mcts import SearchConfig
from mlvn.valuenet import ConstantEvaluator


def make_session(method="none", seed=0, komi=7.5):
    return EngineSession(
        ConstantEvaluator(GRID_9, 9),
        search_config=SearchConfig(playouts=8, batch_size=8),
        dynkomi_config=DynKomiConfig(method=method),
        board_size=9,
        komi=komi,
        seed=seed,
    )


class TestGenmove:
    def test_plays_on_own_board(self):
        s = make_session()
        move = s.genmove()
        assert s.board.move_count == 1
        assert s.move_log[0][1] == move

    def test_reproducible_with_seed(self):
        moves_a = []
        moves_b = []
        for moves in (moves_a, moves_b):
            s = make_session(seed=42)
            for _ in range(6):
                moves.append(s.genmove())
        assert moves_a == moves_b

    def test_game_over_raises(self):
        s = make_session()
        s.observe(None)
        s.observe(None)
        with pytest.raises(GameOver):
            s.genmove()

    def test_dynkomi_updates_per_move(self):
        s = make_session(method="ml-dk", komi=0.5)
        s.genmove()
        assert len(s.dyn_state.log) == 1
        s.observe((0, 0))
        s.genmove()
        assert len(s.dyn_state.log) == 2
        # ordinal recorded is the index of the move about to be played
        assert s.dyn_state.log[0].move_index == 1
        assert s.dyn_state.log[1].move_index == 3

    def test_none_method_komi_constant(self):
        s = make_session(method="none")
        for _ in range(3):
            s.genmove()
        assert s.dyn_state.current == 7.5
        assert all(e.komi_out == 7.5 for e in s.dyn_state.log)


class TestSessionState:
    def test_set_komi_resets_dynkomi(self):
        s = make_session(method="ml-dk")
        s.dyn_state.current = 11.5
        s.set_komi(5.5)
        assert s.dyn_state.k0 == 5.5
        assert s.dyn_state.current == 5.5
        assert s.board.komi == 5.5

    def test_reset_board_clears_everything(self):
        s = make_session()
        s.genmove()
        s.reset_board()
        assert s.board.move_count == 0
        assert s.move_log == []
        assert s.dyn_state.log == []
        # seed stream restarts: same first move as a fresh session
        fresh = make_session()
        assert s.genmove() == fresh.genmove()

    def test_handicap_placement(self):
        s = make_session(komi=0.5)
        points = s.place_handicap(2)
        assert sorted(points) == [(2, 2), (6, 6)]
        assert s.board.to_move == WHITE


class TestMakeEvaluator:
    def test_uniform_fallback(self):
        ev = make_evaluator(EngineConfig(checkpoint=None), 9)
        e = ev.evaluate_board(None) if hasattr(ev, "_v") else None
        assert ev.grid.count == GRID_9.count

    def test_checkpoint_loading(self, tmp_path):
        from mlvn.valuenet import ArchConfig, init_params, save_checkpoint

        path = tmp_path / "n.mlvw"
        save_checkpoint(init_params(ArchConfig(board_size=9, grid=GRID_9), seed=0), path)
        ev = make_evaluator(EngineConfig(checkpoint=str(path)), 9)
        assert ev.board_size == 9
        assert ev.grid.count == 42
