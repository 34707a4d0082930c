import json
import os
from dataclasses import replace

import pytest

import main
from networks import losses
from services import ingest_service

TRAIN_FLAGS = ["--epochs", "2", "--window", "8", "--hidden", "4", "--batch-size", "16", "--no-timing"]
OUTPUT_FILES = ["model.json", "history.json", "history.csv", "predictions.csv"]


def _train(data, out, config_file, *extra):
    argv = ["--no-log-file", "train", "--data", data, "--out", str(out), "--config", config_file, *TRAIN_FLAGS, *extra]
    return main.main(argv)


class TestTrain:
    def test_writes_artifacts(self, tmp_path, write_sine_csv, small_config_file, capsys):
        out = tmp_path / "run"
        assert _train(write_sine_csv(), out, small_config_file, "--format", "json") == main.EXIT_OK
        for name in OUTPUT_FILES + ["manifest.json"]:
            assert (out / name).exists(), name
        report = json.loads(capsys.readouterr().out)
        assert report["processing_time_s"] == 0.0
        assert report["n_points"] == 40 - 8

    def test_baseline_model(self, tmp_path, write_sine_csv, small_config_file):
        out = tmp_path / "lstm"
        assert _train(write_sine_csv(), out, small_config_file, "--model", "lstm") == main.EXIT_OK
        model = json.loads((out / "model.json").read_text(encoding="utf-8"))
        assert model["kind"] == "lstm"
        assert model["discriminator"] is None

    def test_missing_data_file(self, tmp_path, small_config_file):
        assert _train(str(tmp_path / "missing.csv"), tmp_path / "out", small_config_file) == main.EXIT_DATA

    def test_negative_learning_rate(self, tmp_path, write_sine_csv, small_config_file):
        assert _train(write_sine_csv(), tmp_path / "out", small_config_file, "--rho-g", "-1") == main.EXIT_CONFIG

    def test_missing_config_file(self, tmp_path, write_sine_csv):
        assert _train(write_sine_csv(), tmp_path / "out", str(tmp_path / "nope.json")) == main.EXIT_CONFIG

    def test_discriminator_too_large_for_window(self, tmp_path, write_sine_csv):
        config_file = tmp_path / "big.json"
        config_file.write_text('{"d_channels": [4, 4, 4], "d_kernel_width": 5, "d_stride": 1}', encoding="utf-8")
        assert _train(write_sine_csv(), tmp_path / "out", str(config_file)) == main.EXIT_CONFIG

    def test_non_integer_channel_count(self, tmp_path, write_sine_csv):
        config_file = tmp_path / "channels.json"
        config_file.write_text('{"d_channels": ["8"], "d_kernel_width": 3, "d_stride": 1}', encoding="utf-8")
        assert _train(write_sine_csv(), tmp_path / "out", str(config_file)) == main.EXIT_CONFIG

    def test_infinite_close_in_training_split(self, tmp_path, make_sine_series, small_config_file):
        series = make_sine_series(n=200)
        series.bars[50] = replace(series.bars[50], close=float("inf"))
        data = tmp_path / "INF.csv"
        data.write_text(ingest_service.to_csv(series), encoding="utf-8")
        out = tmp_path / "out"
        assert _train(str(data), out, small_config_file) == main.EXIT_DATA
        assert not (out / "history.json").exists()

    def test_divergence_exit_code(self, tmp_path, write_sine_csv, small_config_file, monkeypatch):
        monkeypatch.setattr(losses, "baseline_loss", lambda predicted, actual: float("nan"))
        out = tmp_path / "diverged"
        assert _train(write_sine_csv(), out, small_config_file, "--model", "lstm") == main.EXIT_DIVERGED
        assert (out / "history.json").exists()
        assert not (out / "model.json").exists()

    def test_no_timing_outputs_are_byte_identical(self, tmp_path, write_sine_csv, small_config_file, capsys):
        data = write_sine_csv()
        first, second = tmp_path / "first", tmp_path / "second"
        assert _train(data, first, small_config_file) == main.EXIT_OK
        out_first = capsys.readouterr().out
        assert _train(data, second, small_config_file) == main.EXIT_OK
        out_second = capsys.readouterr().out
        for name in OUTPUT_FILES:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
        assert out_first == out_second

    def test_log_file_written(self, tmp_path, write_sine_csv, small_config_file):
        log_file = tmp_path / "logs" / "run.log"
        argv = ["--log-file", str(log_file), "train", "--data", write_sine_csv(), "--out", str(tmp_path / "out"),
                "--config", small_config_file, *TRAIN_FLAGS]
        assert main.main(argv) == main.EXIT_OK
        assert "GAN epoch" in log_file.read_text(encoding="utf-8")


class TestEvaluate:
    def test_json_report(self, tmp_path, write_sine_csv, small_config_file, capsys):
        data = write_sine_csv()
        out = tmp_path / "run"
        _train(data, out, small_config_file)
        capsys.readouterr()
        argv = ["--no-log-file", "evaluate", "--model", str(out / "model.json"), "--data", data,
                "--format", "json", "--no-timing", "--out", str(tmp_path / "eval")]
        assert main.main(argv) == main.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert 0.0 <= report["directional_accuracy_pct"] <= 100.0
        assert report["processing_time_s"] == 0.0
        assert (tmp_path / "eval" / "predictions.csv").exists()

    def test_evaluate_whole_file(self, tmp_path, write_sine_csv, small_config_file, capsys):
        data = write_sine_csv()
        out = tmp_path / "run"
        _train(data, out, small_config_file)
        capsys.readouterr()
        argv = ["--no-log-file", "evaluate", "--model", str(out / "model.json"), "--data", data, "--all", "--format", "json"]
        assert main.main(argv) == main.EXIT_OK
        assert json.loads(capsys.readouterr().out)["n_points"] == 200 - 8

    def test_test_split_too_short(self, tmp_path, write_sine_csv, small_config_file):
        out = tmp_path / "run"
        _train(write_sine_csv(), out, small_config_file)
        short = write_sine_csv("SHORT", n=20)
        argv = ["--no-log-file", "evaluate", "--model", str(out / "model.json"), "--data", short]
        assert main.main(argv) == main.EXIT_DATA

    def test_missing_model(self, tmp_path, write_sine_csv):
        argv = ["--no-log-file", "evaluate", "--model", str(tmp_path / "model.json"), "--data", write_sine_csv()]
        assert main.main(argv) == main.EXIT_DATA


class TestCompareAndPlotData:
    def test_compare_then_plotdata(self, tmp_path, write_sine_csv, small_config_file, capsys):
        a = write_sine_csv("A", n=150)
        b = write_sine_csv("B", n=150, phase=1.0)
        out = tmp_path / "cmp"
        argv = ["--no-log-file", "compare", "--data", a, b, "--jobs", "2", "--config", small_config_file,
                *TRAIN_FLAGS, "--out", str(out), "--format", "json"]
        assert main.main(argv) == main.EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert [r["ticker"] for r in summary["rows"]] == ["A", "B"]
        for ticker in ("A", "B"):
            for kind in ("lstm", "gan"):
                assert (out / ticker / kind / "model.json").exists()
        assert (out / "comparison.txt").exists()
        assert (out / "manifest.json").exists()

        assert main.main(["--no-log-file", "plotdata", "--comparison", str(out)]) == main.EXIT_OK
        plots = out / "plots"
        assert sorted(os.listdir(plots)) == ["bars_da.csv", "bars_rmse.csv", "bars_time.csv", "prices_A.csv", "prices_B.csv"]

    def test_duplicate_labels(self, tmp_path, write_sine_csv, small_config_file):
        a = write_sine_csv("A", n=150)
        argv = ["--no-log-file", "compare", "--data", a, a, "--config", small_config_file, *TRAIN_FLAGS, "--out", str(tmp_path / "cmp")]
        assert main.main(argv) == main.EXIT_CONFIG

    def test_plotdata_without_comparison(self, tmp_path):
        assert main.main(["--no-log-file", "plotdata", "--comparison", str(tmp_path)]) == main.EXIT_DATA


class TestFetch:
    def test_writes_parsed_csv(self, tmp_path, csv_text, monkeypatch):
        calls = []

        def fake_fetch(ticker, start, end, endpoint):
            calls.append((ticker, start.isoformat(), end.isoformat(), endpoint))
            return csv_text

        monkeypatch.setattr(ingest_service, "fetch_remote", fake_fetch)
        target = tmp_path / "IDX.csv"
        argv = ["--no-log-file", "fetch", "--ticker", "IDX", "--start", "2018-01-01", "--end", "2018-02-01",
                "--endpoint", "https://quotes.test/{ticker}?a={start}&b={end}", "--out", str(target)]
        assert main.main(argv) == main.EXIT_OK
        assert calls == [("IDX", "2018-01-01", "2018-02-01", "https://quotes.test/{ticker}?a={start}&b={end}")]
        assert len(ingest_service.load_price_file(str(target))) == 3

    def test_end_before_start(self, tmp_path):
        argv = ["--no-log-file", "fetch", "--ticker", "IDX", "--start", "2018-02-01", "--end", "2018-01-01",
                "--endpoint", "https://quotes.test/{ticker}/{start}/{end}", "--out", str(tmp_path / "x.csv")]
        assert main.main(argv) == main.EXIT_CONFIG

    def test_unknown_command_exits(self):
        with pytest.raises(SystemExit):
            main.main(["--no-log-file", "serve"])
