"""End-to-end runs: split -> normalize -> denoise -> embed -> train -> walk-forward evaluate."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models.dataset_entities import ReconstructedDataset, WaveletConfig
from models.market_data import NormParams, PriceSeries
from models.training_entities import (
    ComparisonReport,
    ComparisonRow,
    EvalReport,
    TrainConfig,
    TrainedModel,
    TrainHistory,
    WalkForwardResult,
)
from services import training_service
from services.ingest_service import normalize, require_valid, split_chronological
from services.preprocess_service import feature_matrix, phase_space_reconstruct, wavelet_denoise
from utils.errors import TooShort

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class PreparedData:
    train: PriceSeries
    test: PriceSeries
    dataset: ReconstructedDataset
    norm_params: List[NormParams]


@dataclass(eq=False)
class ModelRun:
    model: TrainedModel
    history: TrainHistory
    report: EvalReport
    result: WalkForwardResult
    training_seconds: float


def wavelet_config(cfg: TrainConfig) -> WaveletConfig:
    return WaveletConfig(levels=cfg.wavelet_levels, threshold_rule=cfg.wavelet_threshold, threshold_value=cfg.wavelet_threshold_value)


def prepare_training_data(series: PriceSeries, cfg: TrainConfig) -> PreparedData:
    """Only the train split feeds the normalization fit, the denoiser and the embedded dataset."""
    require_valid(series)
    train, test = split_chronological(series, cfg.train_fraction)
    values = feature_matrix(train, cfg.features)
    columns = [values] if values.ndim == 1 else [values[:, k] for k in range(values.shape[1])]

    normalized, norm_params = [], []
    for feature, column in zip(cfg.features, columns):
        scaled, params = normalize(column, feature)
        if cfg.wavelet_levels > 0:
            scaled = wavelet_denoise(scaled, wavelet_config(cfg))
        normalized.append(scaled)
        norm_params.append(params)

    signal = normalized[0] if len(normalized) == 1 else np.stack(normalized, axis=1)
    dataset = phase_space_reconstruct(signal, cfg.window_size, cfg.delay)
    if len(dataset) == 0:
        raise TooShort(f"{len(train)} training bars are too few for window size {cfg.window_size} (delay {cfg.delay})")
    logger.info(f"{series.ticker}: {len(dataset)} training windows of length {cfg.window_size}")
    return PreparedData(train=train, test=test, dataset=dataset, norm_params=norm_params)


def run_model(series: PriceSeries, cfg: TrainConfig, clock=time.perf_counter, prepared: Optional[PreparedData] = None) -> ModelRun:
    prepared = prepared or prepare_training_data(series, cfg)
    model, history = training_service.train(prepared.dataset, cfg, norm_params=prepared.norm_params, clock=clock)
    training_seconds = float(sum(r.seconds for r in history.records))
    result = training_service.walk_forward(model, prepared.test)
    report = training_service.report_walk_forward(result, training_seconds)
    logger.info(f"{series.ticker} [{model.kind}]: DA {report.directional_accuracy_pct:.2f}%, MRMSE {report.mrmse:.6g}, trained in {training_seconds:.2f}s")
    return ModelRun(model=model, history=history, report=report, result=result, training_seconds=training_seconds)


def compare_one(series: PriceSeries, cfg: TrainConfig, clock=time.perf_counter) -> Tuple[ModelRun, ModelRun]:
    """Train both model kinds on identical splits and seed."""
    prepared = prepare_training_data(series, cfg)
    baseline = run_model(series, replace(cfg, model_kind="lstm"), clock, prepared)
    gan = run_model(series, replace(cfg, model_kind="gan"), clock, prepared)
    return baseline, gan


def compare(
    series_list: Sequence[PriceSeries],
    cfg: TrainConfig,
    jobs: int = 1,
    clock=time.perf_counter,
) -> Tuple[ComparisonReport, List[Tuple[ModelRun, ModelRun]]]:
    # Ticker i trains with seed + i whether or not jobs run in parallel
    configs = [replace(cfg, seed=cfg.seed + i) for i in range(len(series_list))]

    def job(i: int) -> Tuple[ModelRun, ModelRun]:
        return compare_one(series_list[i], configs[i], clock)

    if jobs > 1 and len(series_list) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(job, range(len(series_list))))
    else:
        runs = [job(i) for i in range(len(series_list))]

    report = ComparisonReport(
        rows=[ComparisonRow(ticker=s.ticker, baseline=b.report, gan=g.report) for s, (b, g) in zip(series_list, runs)]
    )
    return report, runs
