import json
import os

import pytest

from mlvn.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from mlvn.config import RunConfig, load_config, parse_config, serialize_config
from mlvn.errors import InvalidConfig


class TestConfig:
    def test_defaults_match_cited_values(self):
        cfg = RunConfig()
        assert cfg.search.lam == 0.5
        assert cfg.search.batch_size == 16
        assert cfg.dynkomi.c == 8.0
        assert cfg.dynkomi.s == 0.45
        assert (cfg.dynkomi.lower, cfg.dynkomi.upper) == (0.45, 0.55)
        assert cfg.selfplay.positions_per_game == 1

    def test_round_trip(self):
        cfg = RunConfig()
        text = serialize_config(cfg)
        cfg2 = parse_config(text)
        assert cfg2.config_hash() == cfg.config_hash()

    def test_parse_overrides(self):
        cfg = parse_config(
            """
            [board]
            size = 5
            komi = 0.5

            [grid]
            k_min = -6.5
            k_max = 6.5
            center = 0.5

            [search]
            playouts = 32

            [dynkomi]
            method = ml-dk
            """
        )
        assert cfg.board_size == 5
        assert cfg.grid.count == 14
        assert cfg.search.playouts == 32
        assert cfg.dynkomi.method == "ml-dk"
        assert cfg.arch.board_size == 5

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidConfig):
            parse_config("[search]\nwarp_factor = 9\n")
        with pytest.raises(InvalidConfig):
            parse_config("[warp]\nx = 1\n")

    def test_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / "run.ini"
        path.write_text("[board]\nsize = 5\n")
        monkeypatch.setenv("MLVN_CONFIG", str(path))
        cfg = load_config()
        assert cfg.board_size == 5

    def test_hash_changes_with_content(self):
        a = RunConfig()
        b = parse_config("[search]\nplayouts = 13\n")
        assert a.config_hash() != b.config_hash()


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(
        """
        [board]
        size = 5
        [grid]
        k_min = -24.5
        k_max = 24.5
        center = 0.5
        [arch]
        trunk_layers = 2
        trunk_filters = 4
        value_hidden = 8
        [search]
        playouts = 8
        batch_size = 8
        [selfplay]
        games = 4
        seed = 2
        [training]
        epochs = 2
        batch_size = 8
        augment = false
        """
    )
    return str(path)


class TestCliSelfplay:
    def test_deterministic_byte_identical(self, small_config, tmp_path):
        out1 = str(tmp_path / "d1.mlvnd")
        out2 = str(tmp_path / "d2.mlvnd")
        assert main(["--config", small_config, "selfplay", "--count", "4", "--seed", "1", "--out", out1]) == EXIT_OK
        assert main(["--config", small_config, "selfplay", "--count", "4", "--seed", "1", "--out", out2]) == EXIT_OK
        assert open(out1, "rb").read() == open(out2, "rb").read()
        meta = json.load(open(out1 + ".meta.json"))
        assert {"config_hash", "games", "records", "seed"} <= set(meta)


class TestCliTrainEval:
    def test_train_then_eval_mse(self, small_config, tmp_path):
        data = str(tmp_path / "d.mlvnd")
        ckpt = str(tmp_path / "net.mlvw")
        hist = str(tmp_path / "loss.csv")
        assert main(["--config", small_config, "selfplay", "--count", "6", "--seed", "3", "--out", data]) == EXIT_OK
        assert main(["--config", small_config, "train", "--data", data, "--out", ckpt, "--history", hist]) == EXIT_OK
        assert os.path.exists(ckpt)
        lines = open(hist).read().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert "train_total" in lines[1]

        out_csv = str(tmp_path / "mse.csv")
        rc = main([
            "--config", small_config, "eval", "--metric", "mse",
            "--checkpoint", ckpt, "--games", "3", "--seed", "9", "--out", out_csv,
        ])
        assert rc == EXIT_OK
        rows = open(out_csv).read().splitlines()
        assert rows[1] == "j,mse,count"

    def test_eval_dpred_and_scatter(self, small_config, tmp_path):
        data = str(tmp_path / "d.mlvnd")
        ckpt = str(tmp_path / "net.mlvw")
        assert main(["--config", small_config, "selfplay", "--count", "6", "--seed", "3", "--out", data]) == EXIT_OK
        assert main(["--config", small_config, "train", "--data", data, "--out", ckpt]) == EXIT_OK
        for metric, header in (("dpred", "j,d0"), ("scatter", "bv_territory,value")):
            out_csv = str(tmp_path / f"{metric}.csv")
            rc = main([
                "--config", small_config, "eval", "--metric", metric,
                "--checkpoint", ckpt, "--games", "4", "--seed", "11", "--out", out_csv,
            ])
            assert rc == EXIT_OK
            rows = open(out_csv).read().splitlines()
            assert rows[1].startswith(header)

    def test_eval_zero_checkpoint_flat_half(self, small_config, tmp_path):
        from mlvn.config import load_config
        from mlvn.valuenet import save_checkpoint, zero_params

        cfg = load_config(small_config)
        ckpt = str(tmp_path / "zero.mlvw")
        save_checkpoint(zero_params(cfg.arch), ckpt)
        out_csv = str(tmp_path / "mse0.csv")
        rc = main([
            "--config", small_config, "eval", "--metric", "mse",
            "--checkpoint", ckpt, "--games", "3", "--seed", "5", "--out", out_csv,
        ])
        assert rc == EXIT_OK
        rows = open(out_csv).read().splitlines()[2:]
        for row in rows:
            j, mse, count = row.split(",")
            if int(count) > 0:
                assert float(mse) == pytest.approx(0.5)


class TestCliMatch:
    def test_match_json_schema(self, small_config, tmp_path):
        out = str(tmp_path / "m")
        rc = main([
            "--config", small_config, "match", "--games", "2",
            "--seed", "1", "--out", out,
        ])
        assert rc == EXIT_OK
        summary = json.load(open(os.path.join(out, "match.json")))
        assert {"p", "ci95", "wins", "losses", "games", "config_hash"} <= set(summary)
        sgfs = [f for f in os.listdir(out) if f.endswith(".sgf")]
        assert len(sgfs) == 2


class TestExitCodes:
    def test_usage_error(self):
        assert main(["bogus-command"]) == EXIT_USAGE

    def test_missing_config_file(self):
        assert main(["--config", "/nonexistent.ini", "show-config"]) == EXIT_USAGE

    def test_runtime_error_bad_checkpoint(self, small_config, tmp_path):
        bad = tmp_path / "bad.mlvw"
        bad.write_bytes(b"JUNKJUNKJUNK")
        rc = main([
            "--config", small_config, "eval", "--metric", "mse",
            "--checkpoint", str(bad), "--games", "2", "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == EXIT_RUNTIME
