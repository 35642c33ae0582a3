import json

import pytest

from mlvn.dynkomi import DynKomiConfig
from mlvn.engine import EngineConfig
from mlvn.match import run_match
from mlvn.mcts import SearchConfig


def tiny_engine(method="none", playouts=8):
    return EngineConfig(
        name=method,
        search=SearchConfig(playouts=playouts, batch_size=8),
        dynkomi=DynKomiConfig(method=method),
    )


@pytest.fixture(scope="module")
def self_match():
    a = tiny_engine()
    b = tiny_engine()
    return run_match(a, b, games=8, board_size=5, komi=7.5, base_seed=4)


class TestEvenMatch:
    def test_counts(self, self_match):
        assert self_match.wins + self_match.losses == self_match.games == 8

    def test_self_play_is_exactly_half(self, self_match):
        # mirrored pairs with identical configs replay the same game with
        # colours swapped, so the split is exact
        assert self_match.p == pytest.approx(0.5)

    def test_colors_alternate(self, self_match):
        blacks = [o.black for o in self_match.outcomes]
        assert blacks == ["a", "b"] * 4

    def test_ci_field(self, self_match):
        p, half = self_match.p, self_match.ci95_half
        assert 0 <= p <= 1
        assert half == pytest.approx(1.96 * (p * (1 - p) / 8) ** 0.5)

    def test_swapped_arguments_complementary(self):
        a = tiny_engine(playouts=8)
        b = tiny_engine(playouts=16)
        r1 = run_match(a, b, games=6, board_size=5, komi=7.5, base_seed=9)
        r2 = run_match(b, a, games=6, board_size=5, komi=7.5, base_seed=9)
        assert r1.wins == r2.losses
        assert r1.p == pytest.approx(1.0 - r2.p)


class TestHandicapMatch:
    def test_engine_a_plays_white(self):
        a = tiny_engine("ml-dk")
        b = tiny_engine()
        result = run_match(
            a, b, games=4, board_size=5, komi=0.5, handicap=2, base_seed=2
        )
        assert all(o.black == "b" for o in result.outcomes)
        assert result.wins + result.losses == 4
        # white's dynamic komi log is captured per game
        assert all(len(o.white_dynkomi) > 0 for o in result.outcomes)
        assert all(e.method == "ml-dk" for o in result.outcomes for e in o.white_dynkomi)

    def test_handicap_requires_half_komi(self):
        with pytest.raises(ValueError):
            run_match(tiny_engine(), tiny_engine(), games=2, board_size=5, komi=7.5, handicap=2)


class TestFailureHandling:
    def test_engine_failure_recorded_against_it(self, monkeypatch):
        import mlvn.match as match_mod

        class Exploder:
            grid = None

            def __init__(self, inner):
                self.inner = inner
                self.grid = inner.grid
                self.board_size = inner.board_size
                self.calls = 0

            def evaluate_planes(self, feats):
                self.calls += 1
                if self.calls > 3:
                    raise RuntimeError("boom")
                return self.inner.evaluate_planes(feats)

        from mlvn.engine import make_evaluator

        def fake_cached(config, board_size):
            ev = make_evaluator(config, board_size)
            if config.name == "bad":
                return Exploder(ev)
            return ev

        monkeypatch.setattr(match_mod, "_cached_evaluator", fake_cached)
        good = tiny_engine()
        bad = tiny_engine()
        bad.name = "bad"
        result = run_match(good, bad, games=2, board_size=5, komi=7.5, base_seed=1)
        assert result.wins + result.losses == 2
        assert result.wins == 2  # the exploding engine loses both
        assert any(o.failure for o in result.outcomes)


class TestArtifacts:
    def test_sgf_and_summary_written(self, tmp_path):
        result = run_match(
            tiny_engine(),
            tiny_engine(),
            games=2,
            board_size=5,
            komi=7.5,
            base_seed=3,
            out_dir=str(tmp_path),
        )
        assert len(result.sgf_paths) == 2
        for path in result.sgf_paths:
            text = open(path).read()
            assert text.startswith("(;FF[4]")
        summary = result.summary()
        assert json.dumps(summary)  # serialisable
        assert summary["games"] == 2


class TestWorkers:
    def test_parallel_matches_sequential(self):
        a = tiny_engine(playouts=8)
        b = tiny_engine(playouts=8)
        r1 = run_match(a, b, games=4, board_size=5, komi=7.5, base_seed=6, workers=1)
        r2 = run_match(a, b, games=4, board_size=5, komi=7.5, base_seed=6, workers=2)
        assert r1.wins == r2.wins
        assert [o.winner for o in r1.outcomes] == [o.winner for o in r2.outcomes]
