from datetime import date, timedelta

import numpy as np
import pytest

import config
from models.market_data import PriceBar, PriceSeries
from models.training_entities import TrainConfig
from services.ingest_service import to_csv


def _sine_series(n: int = 300, period: float = 50.0, ticker: str = "SINE", phase: float = 0.0) -> PriceSeries:
    t = np.arange(n)
    closes = 0.5 + 0.4 * np.sin(2.0 * np.pi * t / period + phase)
    start = date(2015, 1, 1)
    bars = [
        PriceBar(
            date=start + timedelta(days=i),
            open=float(c),
            high=float(c) * 1.01,
            low=float(c) * 0.99,
            close=float(c),
            adj_close=float(c),
            volume=1000.0 + i,
        )
        for i, c in enumerate(closes)
    ]
    return PriceSeries(ticker=ticker, bars=bars)


@pytest.fixture(autouse=True)
def isolated_app_dir(tmp_path, monkeypatch):
    """Keep settings and log files out of the real home directory."""
    app_dir = tmp_path / "app_data"
    monkeypatch.setattr(config, "APP_DATA_DIR", str(app_dir))
    monkeypatch.setattr(config, "SETTINGS_FILE_PATH", str(app_dir / "settings.json"))
    monkeypatch.setattr(config, "LOG_FILE_PATH", str(app_dir / "test.log"))
    return app_dir


@pytest.fixture
def make_sine_series():
    return _sine_series


@pytest.fixture
def sine_series():
    return _sine_series()


@pytest.fixture
def write_sine_csv(tmp_path):
    def _write(name: str = "SINE", n: int = 200, phase: float = 0.0) -> str:
        path = tmp_path / f"{name}.csv"
        path.write_text(to_csv(_sine_series(n=n, ticker=name, phase=phase)), encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def small_cfg():
    """A training configuration small enough for unit tests."""
    return TrainConfig(
        window_size=8,
        hidden_size=4,
        epochs=2,
        batch_size=16,
        seed=7,
        d_channels=[2],
        d_kernel_width=3,
        d_stride=1,
        d_dense_units=[4],
    )


@pytest.fixture
def small_config_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(
        '{"d_channels": [2], "d_kernel_width": 3, "d_stride": 1, "d_dense_units": [4]}',
        encoding="utf-8",
    )
    return str(path)


@pytest.fixture
def csv_text():
    return (
        "Date,Open,High,Low,Close,Adj Close,Volume\n"
        "2018-01-02,10.0,11.0,9.5,10.5,10.4,1000\n"
        "2018-01-03,10.5,12.0,10.0,11.5,11.4,1200\n"
        "2018-01-04,11.5,12.5,11.0,12.0,11.9,900\n"
    )
