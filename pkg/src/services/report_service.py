import json
import logging
import os
import re
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence

import pandas as pd

import config
from models.training_entities import ComparisonReport, EvalReport, RunConfig, TrainedModel, TrainHistory, WalkForwardResult
from utils.common_utils import ensure_dir, read_json, sha256_file, write_json, write_text
from utils.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "g_loss", "g_adv", "g_p", "g_dpl", "d_loss", "seconds"]
BAR_METRICS = {
    "da": "directional_accuracy_pct",
    "rmse": "rmse",
    "time": "processing_time_s",
}
BAR_COLUMNS = ["ticker", "baseline", "proposed"]


def _frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n", float_format="%.10g")


def safe_name(ticker: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", ticker) or "series"


def write_model(model: TrainedModel, out_dir: str) -> str:
    return write_json(os.path.join(out_dir, config.MODEL_FILE_NAME), model.to_dict())


def load_model(path: str) -> TrainedModel:
    try:
        data = read_json(path)
    except FileNotFoundError as e:
        raise DataError(f"Model file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"Model file {path} is not valid JSON: {e}") from e
    return TrainedModel.from_dict(data)


def history_frame(history: TrainHistory) -> pd.DataFrame:
    rows = [{name: getattr(r, name) for name in HISTORY_COLUMNS} for r in history.records]
    return pd.DataFrame(rows, columns=HISTORY_COLUMNS)


def write_history(history: TrainHistory, out_dir: str) -> List[str]:
    json_path = write_json(os.path.join(out_dir, config.HISTORY_JSON_NAME), history.to_dict())
    csv_path = write_text(os.path.join(out_dir, config.HISTORY_CSV_NAME), _frame_to_csv(history_frame(history)))
    return [json_path, csv_path]


def predictions_frame(result: WalkForwardResult) -> pd.DataFrame:
    return pd.DataFrame({
        "date": [d.isoformat() for d in result.dates],
        "actual": result.actual,
        "predicted": result.predicted,
    })


def write_predictions(result: WalkForwardResult, out_dir: str) -> str:
    return write_text(os.path.join(out_dir, config.PREDICTIONS_FILE_NAME), _frame_to_csv(predictions_frame(result)))


def read_predictions(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise DataError(f"Predictions file not found: {path}")
    return pd.read_csv(path, dtype={"date": str})


def write_manifest(
    out_dir: str,
    command: str,
    run: RunConfig,
    data_paths: Sequence[str] = (),
    extra: Optional[Dict] = None,
    now: Optional[datetime] = None,
) -> str:
    """Run provenance; the only output that carries a wall-clock timestamp."""
    manifest = {
        "format_version": config.FORMAT_VERSION,
        "command": command,
        "created_at": (now or datetime.now(timezone.utc)).isoformat(),
        "config": run.to_dict(),
        "data": [{"path": os.path.abspath(p), "sha256": sha256_file(p)} for p in data_paths],
    }
    if extra:
        manifest.update(extra)
    return write_json(os.path.join(out_dir, config.MANIFEST_FILE_NAME), manifest)


def render_report(report: EvalReport, fmt: str, label: str = "") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt == "csv":
        return _frame_to_csv(pd.DataFrame([report.to_dict()])).rstrip("\n")
    if fmt == "text":
        return report.to_text(label)
    raise ConfigError(f"Unknown report format '{fmt}'; expected one of {config.REPORT_FORMATS}")


def render_comparison(report: ComparisonReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt == "csv":
        rows = []
        for row in report.rows + [report.averages()]:
            for kind, rep in (("baseline", row.baseline), ("gan", row.gan)):
                rows.append({"ticker": row.ticker, "model": kind, **rep.to_dict()})
        return _frame_to_csv(pd.DataFrame(rows)).rstrip("\n")
    if fmt == "text":
        return report.to_text()
    raise ConfigError(f"Unknown report format '{fmt}'; expected one of {config.REPORT_FORMATS}")


def write_comparison(report: ComparisonReport, out_dir: str) -> List[str]:
    return [
        write_text(os.path.join(out_dir, config.COMPARISON_TEXT_NAME), report.to_text()),
        write_json(os.path.join(out_dir, config.COMPARISON_JSON_NAME), report.to_dict()),
    ]


def write_plot_data(comparison_dir: str, out_dir: Optional[str] = None) -> List[str]:
    """Bar-chart CSVs (one row per ticker) and per-ticker actual/baseline/proposed price curves."""
    comparison_path = os.path.join(comparison_dir, config.COMPARISON_JSON_NAME)
    if not os.path.exists(comparison_path):
        raise DataError(f"No comparison found in {comparison_dir}; run compare first")
    data = read_json(comparison_path)
    rows = data.get("rows") or []
    if not rows:
        raise DataError(f"Comparison in {comparison_dir} has no rows")
    out_dir = ensure_dir(out_dir or os.path.join(comparison_dir, "plots"))

    written = []
    for name, field_name in BAR_METRICS.items():
        frame = pd.DataFrame(
            [(r["ticker"], r["baseline"][field_name], r["gan"][field_name]) for r in rows],
            columns=BAR_COLUMNS,
        )
        written.append(write_text(os.path.join(out_dir, f"bars_{name}.csv"), _frame_to_csv(frame)))

    for r in rows:
        ticker_dir = os.path.join(comparison_dir, safe_name(r["ticker"]))
        baseline = read_predictions(os.path.join(ticker_dir, "lstm", config.PREDICTIONS_FILE_NAME))
        proposed = read_predictions(os.path.join(ticker_dir, "gan", config.PREDICTIONS_FILE_NAME))
        curve = pd.DataFrame({
            "date": baseline["date"],
            "actual": baseline["actual"],
            "baseline": baseline["predicted"],
            "proposed": proposed["predicted"],
        })
        written.append(write_text(os.path.join(out_dir, f"prices_{safe_name(r['ticker'])}.csv"), _frame_to_csv(curve)))
    logger.info(f"Wrote {len(written)} plot data files to {out_dir}")
    return written
