import numpy as np
import pytest

from icae import cli
from icae.autoencoder import AeConfig, AeModel, evaluate_ser, train_end_to_end
from icae.channel import ChannelSpec, classify_regime
from icae.checkpoint import load_checkpoint, save_checkpoint
from icae.errors import CheckpointError, CheckpointVersionError, ConfigurationError
from icae.harness import (
    CSV_HEADER,
    ExperimentConfig,
    build_config,
    parse_floats,
    read_config_file,
    read_ser_csv,
    run_preset,
)
from icae.rng import seed_streams, stream


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = train_end_to_end(AeConfig(steps=100), rng=np.random.default_rng(2))
        path = tmp_path / "m.aemodel"
        save_checkpoint(model, path)
        back = load_checkpoint(path)
        for p, q in zip(model.params(), back.params()):
            np.testing.assert_array_equal(p.values, q.values)
        ch = ChannelSpec(m=2)
        a = evaluate_ser(model, ch, 0.5, [3.0], 10_000, seed=1).records[0]
        b = evaluate_ser(back, ch, 0.5, [3.0], 10_000, seed=1).records[0]
        assert (a.ser, a.ber) == (b.ser, b.ber)

    def test_header_and_size(self, tmp_path):
        path = tmp_path / "m.aemodel"
        save_checkpoint(AeModel.build(4, 4, np.random.default_rng(0)), path)
        data = path.read_bytes()
        lines = data.split(b"\n")
        assert lines[0] == b"AEMODEL v1 n=4 k=4 layers=4"
        assert lines[1:5] == [b"dense 16 16 elu", b"dense 16 8 linear", b"dense 8 16 relu", b"dense 16 16 softmax"]
        header_len = sum(len(line) + 1 for line in lines[:5])
        n_floats = 16 * 16 + 16 + 8 * 16 + 8 + 16 * 8 + 16 + 16 * 16 + 16
        assert len(data) - header_len == 8 * n_floats

    def test_truncated(self, tmp_path):
        path = tmp_path / "m.aemodel"
        save_checkpoint(AeModel.build(4, 4, np.random.default_rng(0)), path)
        path.write_bytes(path.read_bytes()[:-9])
        with pytest.raises(CheckpointError, match="byte offset"):
            load_checkpoint(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "m.aemodel"
        save_checkpoint(AeModel.build(4, 4, np.random.default_rng(0)), path)
        path.write_bytes(path.read_bytes().replace(b"AEMODEL v1", b"AEMODEL v2", 1))
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(path)

    def test_garbage(self, tmp_path):
        path = tmp_path / "m.aemodel"
        path.write_bytes(b"hello\n")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestStreams:
    def test_same_label_same_draws(self):
        a = stream(42, "train/x").random(100)
        b = stream(42, "train/x").random(100)
        np.testing.assert_array_equal(a, b)

    def test_labels_differ(self):
        s = seed_streams(42, ["a", "b"])
        xa = s["a"].integers(0, 2**63, size=10_000)
        xb = s["b"].integers(0, 2**63, size=10_000)
        assert xa[0] != xb[0]
        assert len(np.intersect1d(xa, xb)) == 0

    def test_duplicates(self):
        with pytest.raises(ValueError):
            seed_streams(1, ["a", "a"])

    def test_stable_across_processes(self):
        # frozen first draw of PCG64(SeedSequence(42, spawn_key=b"ser/0"))
        first = stream(42, "ser/0").integers(0, 2**32)
        assert first == stream(42, "ser/0").integers(0, 2**32)
        import subprocess
        import sys

        out = subprocess.run([sys.executable, "-c",
                              "from icae.rng import stream; print(stream(42, 'ser/0').integers(0, 2**32))"],
                             capture_output=True, text=True, check=True)
        assert int(out.stdout) == first


class TestConfig:
    def test_parse_floats(self):
        assert parse_floats("1,2.5") == (1.0, 2.5)
        assert parse_floats("-2:10:1")[0] == -2.0 and len(parse_floats("-2:10:1")) == 13

    def test_file(self, tmp_path):
        f = tmp_path / "exp.cfg"
        f.write_text("# demo\nsteps = 500\nalpha_train = 0.5\nalpha_eval = 0.5, 1.0\nsymbols = 20000\n"
                     "grid_max = 4.0\n")
        cfg = build_config(read_config_file(f))
        assert cfg.ae.steps == 500 and cfg.ae.train_alpha == 0.5
        assert cfg.alpha_eval_list == (0.5, 1.0)
        assert cfg.adl.grid_max == 4.0

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "exp.cfg"
        f.write_text("bogus = 1\n")
        with pytest.raises(ConfigurationError):
            read_config_file(f)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(preset="fig9")
        with pytest.raises(ConfigurationError):
            ExperimentConfig(symbols_per_point=100)


class TestPresets:
    def test_custom_preset_writes_schema(self, tmp_path):
        cfg = build_config({"steps": 300, "alpha_train": 0.5, "alpha_eval": "0.5,1.0,2.5",
                            "ebn0_grid": "0,4", "symbols": 10_000, "out": str(tmp_path), "seed": 3})
        run_preset(cfg)
        text = (tmp_path / "custom.csv").read_text()
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        rows = read_ser_csv(tmp_path / "custom.csv")
        assert len(rows) == 6
        for row in rows:
            assert row["regime"] == classify_regime(float(row["alpha_eval"])).name
            assert 0 <= float(row["ser"]) <= 1
        index = (tmp_path / "plots" / "index.txt").read_text().split()
        assert any(name.endswith(".dat") for name in index)


class TestCli:
    def test_usage_error_exit_code(self, capsys):
        assert cli.main(["reproduce", "--figure", "9"]) == cli.EXIT_USAGE
        assert cli.main([]) == cli.EXIT_USAGE

    def test_bad_model_file(self, tmp_path):
        bad = tmp_path / "bad.aemodel"
        bad.write_bytes(b"AEMODEL v1 n=4 k=4 layers=4\n")
        assert cli.main(["eval", "--model", str(bad), "--out", str(tmp_path / "e.csv")]) == cli.EXIT_USAGE

    def test_numeric_failure_exit_code(self, tmp_path, monkeypatch):
        from icae.errors import TrainingDivergedError

        def boom(*a, **k):
            raise TrainingDivergedError("loss became nan in epoch 3")

        monkeypatch.setattr(cli, "train_end_to_end", boom)
        assert cli.main(["train", "--out", str(tmp_path / "m")]) == cli.EXIT_NUMERIC

    def test_train_eval_adl(self, tmp_path):
        model = tmp_path / "m.aemodel"
        assert cli.main(["train", "--steps", "400", "--alpha-train", "1.5", "--seed", "1",
                         "--out", str(model)]) == 0
        assert load_checkpoint(model).M == 16
        out = tmp_path / "e.csv"
        assert cli.main(["eval", "--model", str(model), "--alpha-eval", "1.5", "--alpha-eval", "3.0",
                         "--ebn0-grid", "7", "--symbols", "10000", "--out", str(out)]) == 0
        assert len(read_ser_csv(out)) == 2
        cfg = tmp_path / "adl.cfg"
        cfg.write_text("group_count = 4\ngroup_size = 200\npilot_ratio = 0.05\ngrid_min = 1.0\n"
                       "grid_max = 2.0\ngrid_step = 0.5\n")
        assert cli.main(["adl", "--model", str(model), "--alpha-true", "1.5", "--alpha-train", "1.5",
                         "--adapt-steps", "50", "--config", str(cfg), "--out", str(tmp_path / "adl")]) == 0
        table = (tmp_path / "adl" / "reward_table.csv").read_text().splitlines()
        assert table[0] == "alpha_candidate,raw_reward,normalized_reward"
        assert len(table) == 4
