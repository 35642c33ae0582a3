import io

import pytest

from mlvn.board import BLACK, WHITE
from mlvn.dynkomi import DynKomiConfig
from mlvn.engine import EngineSession
from mlvn.gtp import GtpServer, format_vertex, parse_vertex
from mlvn.komi import GRID_9
from mlvn.mcts import SearchConfig
from mlvn.selfplay import generate_game, ownership_targets
from mlvn.valuenet import ConstantEvaluator, LabelEvaluator


def make_server(evaluator=None, playouts=8, method="none", seed=0):
    session = EngineSession(
        evaluator or ConstantEvaluator(GRID_9, 9),
        search_config=SearchConfig(playouts=playouts, batch_size=8),
        dynkomi_config=DynKomiConfig(method=method),
        board_size=9,
        komi=7.5,
        seed=seed,
    )
    return GtpServer(session)


def ok(response):
    assert response is not None and response.startswith("="), response
    return response[1:].strip()


class TestVertexCodec:
    def test_format(self):
        assert format_vertex((0, 0)) == "A1"
        assert format_vertex((8, 8)) == "J9"  # I is skipped
        assert format_vertex(None) == "pass"

    def test_parse(self):
        assert parse_vertex("A1", 9) == (0, 0)
        assert parse_vertex("j9", 9) == (8, 8)
        assert parse_vertex("PASS", 9) is None

    def test_bad_vertex(self):
        with pytest.raises(ValueError):
            parse_vertex("Z3", 9)
        with pytest.raises(ValueError):
            parse_vertex("A99", 9)


class TestProtocol:
    def test_protocol_version(self):
        assert ok(make_server().handle_line("protocol_version")) == "2"

    def test_id_echo(self):
        resp = make_server().handle_line("42 protocol_version")
        assert resp.startswith("=42 ")

    def test_name_version(self):
        srv = make_server()
        assert ok(srv.handle_line("name")) == "mlvn"
        assert ok(srv.handle_line("version"))

    def test_known_and_list(self):
        srv = make_server()
        assert ok(srv.handle_line("known_command genmove")) == "true"
        assert ok(srv.handle_line("known_command frobnicate")) == "false"
        listing = ok(srv.handle_line("list_commands"))
        assert "mlvn-values" in listing

    def test_unknown_command_is_error_not_crash(self):
        resp = make_server().handle_line("frobnicate 3")
        assert resp.startswith("?")

    def test_malformed_inputs(self):
        srv = make_server()
        for line in ("play purple K55", "boardsize banana", "komi", "play b Z9", "play", "genmove"):
            resp = srv.handle_line(line)
            assert resp is None or resp.startswith("?"), (line, resp)

    def test_empty_and_comment_lines(self):
        srv = make_server()
        assert srv.handle_line("") is None
        assert srv.handle_line("# just a comment") is None

    def test_quit(self):
        srv = make_server()
        inp = io.StringIO("protocol_version\nquit\nname\n")
        out = io.StringIO()
        srv.serve(inp, out)
        text = out.getvalue()
        assert "= 2" in text
        assert "mlvn" not in text  # loop stopped at quit


class TestGameFlow:
    def test_boardsize_komi_genmove(self):
        srv = make_server()
        ok(srv.handle_line("boardsize 9"))
        ok(srv.handle_line("komi 7.5"))
        vertex = ok(srv.handle_line("genmove b"))
        assert vertex == "pass" or parse_vertex(vertex, 9) is not None
        # the move was played on the session board
        assert srv.session.board.move_count == 1

    def test_play_updates_board(self):
        srv = make_server()
        ok(srv.handle_line("play b D4"))
        col, row = parse_vertex("D4", 9)
        assert srv.session.board.grid[row * 9 + col] == BLACK
        ok(srv.handle_line("play w E5"))
        assert srv.session.board.to_move == BLACK

    def test_play_out_of_turn_allowed(self):
        srv = make_server()
        ok(srv.handle_line("play w E5"))
        assert srv.session.board.grid[4 * 9 + 4] == WHITE

    def test_illegal_play_is_error(self):
        srv = make_server()
        ok(srv.handle_line("play b D4"))
        resp = srv.handle_line("play w D4")
        assert resp.startswith("?")

    def test_clear_board(self):
        srv = make_server()
        ok(srv.handle_line("play b D4"))
        ok(srv.handle_line("clear_board"))
        assert srv.session.board.move_count == 0
        assert srv.session.board.stone_count() == 0

    def test_fixed_handicap_then_final_score(self):
        srv = make_server()
        ok(srv.handle_line("boardsize 9"))
        ok(srv.handle_line("komi 0.5"))
        verts = ok(srv.handle_line("fixed_handicap 2")).split()
        assert sorted(verts) == sorted(["C3", "G7"])
        ok(srv.handle_line("play w pass"))
        ok(srv.handle_line("play b pass"))
        score = ok(srv.handle_line("final_score"))
        # the handicap stones dominate the empty board: every empty region
        # borders only black, so black wins at komi 0.5
        assert score == "B+80.5"
        assert score.startswith("B+")

    def test_final_score_requires_game_over(self):
        srv = make_server()
        resp = srv.handle_line("final_score")
        assert resp.startswith("?")

    def test_komi_resets_dynkomi_state(self):
        srv = make_server(method="ml-dk")
        srv.session.dyn_state.current = 12.5
        ok(srv.handle_line("komi 5.5"))
        assert srv.session.dyn_state.k0 == 5.5
        assert srv.session.dyn_state.current == 5.5

    def test_boardsize_clears_board(self):
        srv = make_server()
        ok(srv.handle_line("play b D4"))
        ok(srv.handle_line("boardsize 9"))
        assert srv.session.board.stone_count() == 0


class TestStatelessness:
    def test_replay_equivalence(self):
        script = [
            "boardsize 9",
            "komi 7.5",
            "play b D4",
            "play w E5",
            "play b pass",
            "play w C3",
        ]
        s1 = make_server(seed=3)
        s2 = make_server(seed=3)
        for line in script:
            s1.handle_line(line)
        for line in script:
            s2.handle_line(line)
        assert s1.session.board.grid == s2.session.board.grid
        assert s1.session.board.position_hash == s2.session.board.position_hash
        assert s1.session.dyn_state.current == s2.session.dyn_state.current

    def test_genmove_reproducible_with_seed(self):
        moves1, moves2 = [], []
        for store in (moves1, moves2):
            srv = make_server(seed=11)
            ok(srv.handle_line("boardsize 9"))
            ok(srv.handle_line("komi 7.5"))
            for color in ("b", "w", "b", "w"):
                store.append(ok(srv.handle_line(f"genmove {color}")))
        assert moves1 == moves2


class TestExtensions:
    def test_values_grid(self):
        srv = make_server(ConstantEvaluator(GRID_9, 9, v=0.7))
        lines = ok(srv.handle_line("mlvn-values")).splitlines()
        assert len(lines) == 42
        k, v = lines[0].split()
        assert float(k) == -20.5
        assert float(v) == pytest.approx(0.7)

    def test_ownership_grid(self):
        srv = make_server(ConstantEvaluator(GRID_9, 9, ownership=0.25))
        lines = ok(srv.handle_line("mlvn-ownership")).splitlines()
        assert len(lines) == 9
        assert all(len(row.split()) == 9 for row in lines)
        assert float(lines[0].split()[0]) == pytest.approx(0.25)

    def test_dynkomi_report(self):
        srv = make_server(method="ml-dk")
        method, komi = ok(srv.handle_line("mlvn-dynkomi")).split()
        assert method == "ml-dk"
        assert float(komi) == 7.5

    def test_score_prediction_oracle_wiring(self):
        # oracle evaluator of a known game: the empty-board prediction is
        # that game's final territory difference
        game = generate_game(size=9, seed=21)
        ev = LabelEvaluator(
            game.territory_diff, GRID_9, 9, ownership=ownership_targets(game.owners)
        )
        srv = make_server(ev)
        pred = int(ok(srv.handle_line("mlvn-score-prediction")))
        assert pred == game.territory_diff
