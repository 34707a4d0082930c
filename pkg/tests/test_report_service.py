import json
import os
from dataclasses import replace
from datetime import date, datetime, timezone

import numpy as np
import pandas as pd
import pytest

import config
from models.training_entities import (
    ComparisonReport,
    ComparisonRow,
    EpochRecord,
    EvalReport,
    RunConfig,
    TrainHistory,
    WalkForwardResult,
)
from services import report_service, training_service
from utils.errors import ConfigError, DataError, ShapeMismatch


def _report(da=60.0, seconds=1.5, mrmse=0.02):
    return EvalReport(
        directional_accuracy_pct=da,
        trend_da_pct=55.0,
        rmse=1.25,
        rmsre=mrmse,
        mrmse=mrmse,
        processing_time_s=seconds,
        n_points=40,
    )


def _result(n=5):
    return WalkForwardResult(
        dates=[date(2020, 1, 1 + i) for i in range(n)],
        actual=np.linspace(10, 14, n),
        predicted=np.linspace(10.5, 13.5, n),
        previous=np.linspace(9, 13, n),
    )


def _history():
    records = [
        EpochRecord(epoch=e, g_loss=1.0 / e, g_adv=0.7, g_p=0.2, g_dpl=0.1, d_loss=1.3, forecast_loss=0.2, seconds=0.0, rho_g=0.01, rho_d=0.01)
        for e in (1, 2)
    ]
    return TrainHistory(kind="gan", records=records)


@pytest.fixture
def trained_model(sine_series, small_cfg):
    from services import pipeline_service

    prepared = pipeline_service.prepare_training_data(sine_series, small_cfg)
    model, _ = training_service.train(prepared.dataset, small_cfg, prepared.norm_params, clock=lambda: 0.0)
    return model


class TestModelFiles:
    def test_write_and_load(self, tmp_path, trained_model):
        path = report_service.write_model(trained_model, str(tmp_path))
        assert os.path.basename(path) == config.MODEL_FILE_NAME
        loaded = report_service.load_model(path)
        assert loaded.kind == "gan"
        np.testing.assert_array_equal(loaded.generator.to_vector(), trained_model.generator.to_vector())
        np.testing.assert_array_equal(loaded.discriminator.to_vector(), trained_model.discriminator.to_vector())
        assert loaded.config.to_dict() == trained_model.config.to_dict()
        window = np.linspace(100, 120, trained_model.window_size)
        assert training_service.predict(loaded, window) == training_service.predict(trained_model, window)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            report_service.load_model(str(tmp_path / "nope.json"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(DataError):
            report_service.load_model(str(path))

    def test_unknown_format_version(self, tmp_path, trained_model):
        data = trained_model.to_dict()
        data["format_version"] = 99
        path = tmp_path / "model.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        with pytest.raises(ShapeMismatch):
            report_service.load_model(str(path))


class TestHistoryAndPredictions:
    def test_history_files(self, tmp_path):
        json_path, csv_path = report_service.write_history(_history(), str(tmp_path))
        data = json.loads(open(json_path, encoding="utf-8").read())
        assert data["format_version"] == config.FORMAT_VERSION
        assert TrainHistory.from_dict(data).records == _history().records
        frame = pd.read_csv(csv_path)
        assert list(frame.columns) == report_service.HISTORY_COLUMNS
        assert frame["epoch"].tolist() == [1, 2]

    def test_baseline_history_leaves_discriminator_blank(self, tmp_path):
        history = TrainHistory(kind="lstm", records=[replace(_history().records[0], d_loss=None, rho_d=None)])
        _, csv_path = report_service.write_history(history, str(tmp_path))
        assert pd.read_csv(csv_path)["d_loss"].isna().all()

    def test_predictions_round_trip(self, tmp_path):
        path = report_service.write_predictions(_result(), str(tmp_path))
        frame = report_service.read_predictions(path)
        assert list(frame.columns) == ["date", "actual", "predicted"]
        assert frame["date"].tolist()[0] == "2020-01-01"
        np.testing.assert_allclose(frame["predicted"], _result().predicted)

    def test_read_missing_predictions(self, tmp_path):
        with pytest.raises(DataError):
            report_service.read_predictions(str(tmp_path / "predictions.csv"))


class TestManifest:
    def test_records_config_and_hashes(self, tmp_path, write_sine_csv):
        data_path = write_sine_csv("IDX", n=30)
        now = datetime(2024, 5, 1, tzinfo=timezone.utc)
        path = report_service.write_manifest(str(tmp_path), "train", RunConfig(), [data_path], extra={"ticker": "IDX"}, now=now)
        manifest = json.loads(open(path, encoding="utf-8").read())
        assert manifest["command"] == "train"
        assert manifest["created_at"] == now.isoformat()
        assert manifest["ticker"] == "IDX"
        assert len(manifest["data"][0]["sha256"]) == 64
        assert manifest["config"]["train"]["window_size"] == config.WINDOW_SIZE


class TestRendering:
    def test_json(self):
        assert json.loads(report_service.render_report(_report(), "json"))["n_points"] == 40

    def test_csv(self):
        lines = report_service.render_report(_report(), "csv").splitlines()
        assert lines[0].startswith("directional_accuracy_pct,")
        assert len(lines) == 2

    def test_text(self):
        text = report_service.render_report(_report(), "text", label="lstm")
        assert "60.00%" in text

    def test_unknown_format(self):
        with pytest.raises(ConfigError):
            report_service.render_report(_report(), "xml")

    def test_comparison_text_has_average_row(self):
        report = ComparisonReport([ComparisonRow("A", _report(50.0), _report(70.0)), ComparisonRow("B", _report(60.0), _report(80.0))])
        text = report_service.render_comparison(report, "text")
        assert "Current LSTM" in text and "Proposed GAN" in text
        assert text.splitlines()[-1].startswith("Average")
        assert report.averages().gan.directional_accuracy_pct == 75.0

    def test_comparison_csv(self):
        report = ComparisonReport([ComparisonRow("A", _report(), _report())])
        lines = report_service.render_comparison(report, "csv").splitlines()
        assert lines[0].startswith("ticker,model,")
        assert len(lines) == 1 + 4

    def test_safe_name(self):
        assert report_service.safe_name("^GSPC") == "_GSPC"
        assert report_service.safe_name("000001.SS") == "000001.SS"


class TestPlotData:
    def _comparison_dir(self, tmp_path):
        report = ComparisonReport([
            ComparisonRow("A", _report(50.0, 1.0), _report(70.0, 2.0)),
            ComparisonRow("B", _report(60.0, 1.5), _report(65.0, 2.5)),
        ])
        out = tmp_path / "cmp"
        report_service.write_comparison(report, str(out))
        for ticker in ("A", "B"):
            for kind in ("lstm", "gan"):
                report_service.write_predictions(_result(), str(out / ticker / kind))
        return out

    def test_writes_bar_and_price_files(self, tmp_path):
        out = self._comparison_dir(tmp_path)
        written = report_service.write_plot_data(str(out))
        names = sorted(os.path.basename(p) for p in written)
        assert names == ["bars_da.csv", "bars_rmse.csv", "bars_time.csv", "prices_A.csv", "prices_B.csv"]
        bars = pd.read_csv(out / "plots" / "bars_da.csv")
        assert list(bars.columns) == report_service.BAR_COLUMNS
        assert bars["proposed"].tolist() == [70.0, 65.0]
        prices = pd.read_csv(out / "plots" / "prices_A.csv")
        assert list(prices.columns) == ["date", "actual", "baseline", "proposed"]
        assert len(prices) == 5

    def test_missing_comparison(self, tmp_path):
        with pytest.raises(DataError):
            report_service.write_plot_data(str(tmp_path))

    def test_custom_destination(self, tmp_path):
        out = self._comparison_dir(tmp_path)
        written = report_service.write_plot_data(str(out), str(tmp_path / "figures"))
        assert all(p.startswith(str(tmp_path / "figures")) for p in written)
