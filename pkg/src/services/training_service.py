"""Training loops for the baseline LSTM and the adversarial generator/discriminator pair,
plus one-step prediction and walk-forward evaluation.
"""
import logging
import time
from typing import Callable, List, Optional, Tuple

import numpy as np

from models.dataset_entities import ReconstructedDataset
from models.market_data import NormParams, PriceSeries
from models.network_params import DiscriminatorParams, GeneratorParams, ParameterSet
from models.training_entities import (
    EpochRecord,
    EvalReport,
    PredictionPair,
    TrainConfig,
    TrainedModel,
    TrainHistory,
    WalkForwardResult,
)
from networks import losses
from networks.cnn_discriminator import discriminator_backward, discriminator_forward_batch, init_discriminator
from networks.lstm_generator import generator_backward, generator_forward, generator_forward_batch, init_generator
from services import evaluation_service
from services.ingest_service import denormalize, normalize_with
from services.preprocess_service import feature_matrix, phase_space_reconstruct
from utils.errors import DivergenceDetected, EmptyDataset, ShapeMismatch, TooShort
from utils.numerics import make_rng

logger = logging.getLogger(__name__)

Clock = Callable[[], float]


def clip_gradients(grads: ParameterSet, max_norm: Optional[float]) -> float:
    """Scale ``grads`` in place so its global L2 norm is at most ``max_norm``; returns the norm before clipping."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for _, g in grads.named_arrays())))
    if max_norm is not None and np.isfinite(norm) and norm > max_norm:
        scale = max_norm / norm
        for _, g in grads.named_arrays():
            g *= scale
    return norm


def sgd_step(params: ParameterSet, grads: ParameterSet, rate: float) -> None:
    """params <- params - rate * grads, in place."""
    for (name, p), (_, g) in zip(params.named_arrays(), grads.named_arrays()):
        if p.shape != g.shape:
            raise ShapeMismatch(f"Gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        p -= rate * g


def _check_dataset(dataset: ReconstructedDataset, cfg: TrainConfig) -> None:
    if len(dataset) == 0:
        raise EmptyDataset("Training dataset holds no samples")
    if dataset.m != cfg.window_size:
        raise ShapeMismatch(f"Dataset windows have length {dataset.m}, configured window size is {cfg.window_size}")
    if dataset.n_features != cfg.input_size:
        raise ShapeMismatch(f"Dataset has {dataset.n_features} features, configuration names {cfg.input_size}")


def _identity_norms(cfg: TrainConfig) -> List[NormParams]:
    return [NormParams(0.0, 1.0, feature) for feature in cfg.features]


def _diverged(kind: str, epoch: int, history: TrainHistory, *values: float) -> None:
    if not all(np.isfinite(v) for v in values):
        logger.error(f"{kind} training diverged in epoch {epoch}; {len(history)} epochs completed")
        raise DivergenceDetected(f"Non-finite loss in epoch {epoch}", history=history)


def train_gan(
    dataset: ReconstructedDataset,
    cfg: TrainConfig,
    norm_params: Optional[List[NormParams]] = None,
    clock: Clock = time.perf_counter,
) -> Tuple[TrainedModel, TrainHistory]:
    cfg.validate()
    _check_dataset(dataset, cfg)
    rng = make_rng(cfg.seed)
    generator = init_generator(cfg.input_size, cfg.hidden_size, rng, cfg.num_layers, cfg.peephole)
    discriminator = init_discriminator(cfg.window_size + 1, cfg.d_channels, cfg.d_kernel_width, cfg.d_stride, cfg.d_dense_units, rng)
    w = cfg.weights
    targets = dataset.target_windows()
    n = len(dataset)
    history = TrainHistory(kind="gan")
    logger.info(f"Training GAN on {n} samples for {cfg.epochs} epochs (generator {generator.size}, discriminator {discriminator.size} parameters)")

    for epoch in range(1, cfg.epochs + 1):
        started = clock()
        sums = np.zeros(5)  # total, adv, p, dpl, d_loss
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            windows, actual = targets[idx], dataset.y[idx]

            # Generator step against the current discriminator
            predicted, g_cache = generator_forward_batch(generator, dataset.x[idx])
            fake = np.concatenate([windows, predicted[:, None]], axis=1)
            _, fake_cache = discriminator_forward_batch(discriminator, fake)
            fake_logits = fake_cache.logits

            d_pred = np.zeros_like(predicted)
            for i in range(idx.size):
                pair = PredictionPair([actual[i]], [predicted[i]], windows[i, -1])
                _, terms = losses.generator_loss(pair, fake_logits[i], w)
                sums[:4] += (terms.total, terms.adv, terms.p, terms.dpl)
                d_pred[i] = w.lambda_p * losses.l_p_grad(pair.Y, pair.Y_prime, w.p)[0]
            # The window part of the fake sequence is data; only its terminal value depends on G
            _, d_fake_input = discriminator_backward(discriminator, fake_cache, w.lambda_adv * losses.l_adv_g_grad(fake_logits))
            d_pred += d_fake_input[:, -1]
            g_grads = generator_backward(generator, g_cache, d_pred)
            clip_gradients(g_grads, cfg.grad_clip)
            sgd_step(generator, g_grads, cfg.rho_g)

            # Discriminator step on real and generated sequences
            real = np.concatenate([windows, actual[:, None]], axis=1)
            _, d_cache = discriminator_forward_batch(discriminator, np.concatenate([real, fake]))
            real_logits, fake_logits = d_cache.logits[:idx.size], d_cache.logits[idx.size:]
            sums[4] += sum(losses.discriminator_loss(r, f) for r, f in zip(real_logits, fake_logits))
            d_real, d_fake = losses.discriminator_loss_grads(real_logits, fake_logits)
            d_grads, _ = discriminator_backward(discriminator, d_cache, np.concatenate([d_real, d_fake]))
            clip_gradients(d_grads, cfg.grad_clip)
            sgd_step(discriminator, d_grads, cfg.rho_d)

            _diverged("GAN", epoch, history, *sums)

        means = sums / n
        record = EpochRecord(
            epoch=epoch,
            g_loss=float(means[0]),
            g_adv=float(means[1]),
            g_p=float(means[2]),
            g_dpl=float(means[3]),
            d_loss=float(means[4]),
            forecast_loss=float(means[2]),
            seconds=float(clock() - started),
            rho_g=cfg.rho_g,
            rho_d=cfg.rho_d,
        )
        history.records.append(record)
        logger.info(f"GAN epoch {epoch}/{cfg.epochs}: G {record.g_loss:.6f} (adv {record.g_adv:.4f}, p {record.g_p:.6f}, dpl {record.g_dpl:.4f}), D {record.d_loss:.6f}")

    model = TrainedModel(
        kind="gan",
        generator=generator,
        discriminator=discriminator,
        norm_params=norm_params or _identity_norms(cfg),
        config=cfg,
    )
    return model, history


def train_baseline(
    dataset: ReconstructedDataset,
    cfg: TrainConfig,
    norm_params: Optional[List[NormParams]] = None,
    clock: Clock = time.perf_counter,
) -> Tuple[TrainedModel, TrainHistory]:
    cfg.validate()
    _check_dataset(dataset, cfg)
    rng = make_rng(cfg.seed)
    generator = init_generator(cfg.input_size, cfg.hidden_size, rng, cfg.num_layers, cfg.peephole)
    targets = dataset.target_windows()
    n = len(dataset)
    history = TrainHistory(kind="lstm")
    logger.info(f"Training baseline LSTM on {n} samples for {cfg.epochs} epochs ({generator.size} parameters)")

    for epoch in range(1, cfg.epochs + 1):
        started = clock()
        sums = np.zeros(3)  # squared error, l_p, l_dpl
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            actual = dataset.y[idx]
            predicted, g_cache = generator_forward_batch(generator, dataset.x[idx])

            sums[0] += losses.baseline_loss(predicted, actual) * idx.size
            sums[1] += float(np.sum(np.abs(predicted - actual)))
            sums[2] += sum(losses.l_dpl(y_t, y, p) for y_t, y, p in zip(targets[idx, -1], actual, predicted))

            g_grads = generator_backward(generator, g_cache, losses.baseline_loss_grad(predicted, actual))
            clip_gradients(g_grads, cfg.grad_clip)
            sgd_step(generator, g_grads, cfg.rho_g)

            _diverged("Baseline", epoch, history, *sums)

        means = sums / n
        record = EpochRecord(
            epoch=epoch,
            g_loss=float(means[0]),
            g_adv=0.0,
            g_p=float(means[1]),
            g_dpl=float(means[2]),
            d_loss=None,
            forecast_loss=float(means[0]),
            seconds=float(clock() - started),
            rho_g=cfg.rho_g,
            rho_d=None,
        )
        history.records.append(record)
        logger.info(f"Baseline epoch {epoch}/{cfg.epochs}: MSE {record.g_loss:.6f}")

    model = TrainedModel(kind="lstm", generator=generator, norm_params=norm_params or _identity_norms(cfg), config=cfg)
    return model, history


def train(dataset: ReconstructedDataset, cfg: TrainConfig, norm_params: Optional[List[NormParams]] = None, clock: Clock = time.perf_counter):
    trainer = train_gan if cfg.model_kind == "gan" else train_baseline
    return trainer(dataset, cfg, norm_params=norm_params, clock=clock)


def _normalize_features(values: np.ndarray, norm_params: List[NormParams]) -> np.ndarray:
    if values.ndim == 1:
        return normalize_with(values, norm_params[0])
    return np.stack([normalize_with(values[..., k], p) for k, p in enumerate(norm_params)], axis=-1)


def predict(model: TrainedModel, window) -> float:
    """Next raw price after ``window`` (m raw prices, or m x features raw values)."""
    window = np.asarray(window, dtype=np.float64)
    expected = (model.window_size,) if len(model.norm_params) == 1 else (model.window_size, len(model.norm_params))
    if window.shape != expected:
        raise ShapeMismatch(f"Window of shape {window.shape} does not match the model's {expected}")
    prediction, _ = generator_forward(model.generator, _normalize_features(window, model.norm_params))
    return float(denormalize(prediction, model.target_norm))


def walk_forward(model: TrainedModel, series: PriceSeries) -> WalkForwardResult:
    """One-step-ahead predictions at every window position inside ``series``."""
    values = feature_matrix(series, model.config.features)
    embedded = phase_space_reconstruct(_normalize_features(values, model.norm_params), model.window_size, model.config.delay)
    if len(embedded) == 0:
        raise TooShort(f"{len(series)} bars are too few for one window of {model.window_size} (delay {model.config.delay})")

    normalized, _ = generator_forward_batch(model.generator, embedded.x)
    span = (model.window_size - 1) * model.config.delay
    target_index = np.arange(len(embedded)) + span + 1
    raw_target = values if values.ndim == 1 else values[:, 0]
    dates = series.dates
    return WalkForwardResult(
        dates=[dates[i] for i in target_index],
        actual=raw_target[target_index],
        predicted=denormalize(normalized, model.target_norm),
        previous=raw_target[target_index - 1],
    )


def report_walk_forward(result: WalkForwardResult, seconds: float) -> EvalReport:
    if len(result) < 2:
        raise TooShort(f"Walk-forward produced {len(result)} prediction(s); metrics need at least 2")
    return evaluation_service.evaluate(result.actual, result.predicted, seconds)


def evaluate_on_test(
    model: TrainedModel,
    test_series: PriceSeries,
    elapsed: Optional[float] = None,
    clock: Clock = time.perf_counter,
) -> EvalReport:
    """Walk-forward report; ``elapsed`` (training wall time) overrides the measured prediction time."""
    started = clock()
    result = walk_forward(model, test_series)
    seconds = elapsed if elapsed is not None else clock() - started
    report = report_walk_forward(result, seconds)
    logger.info(f"{test_series.ticker} [{model.kind}]: DA {report.directional_accuracy_pct:.2f}%, RMSE {report.rmse:.6g}, MRMSE {report.mrmse:.6g}")
    return report
