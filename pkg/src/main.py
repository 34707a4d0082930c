import argparse
import logging
import os
import sys
import time
from datetime import date
from typing import Callable, List, Optional

import config
from models.training_entities import RunConfig
from services import ingest_service, pipeline_service, report_service, training_service
from utils.common_utils import ensure_dir, write_text
from utils.errors import ConfigError, DataError, DivergenceDetected, FetchError, ForecastError, NonFinite, ShapeError
from utils.logging_config import setup_logging
from utils.settings import load_run_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

# Flag dest -> settings key understood by utils.settings
_TRAINING_FLAGS = {
    "model": "model_kind",
    "seed": "seed",
    "epochs": "epochs",
    "window": "window_size",
    "delay": "delay",
    "hidden": "hidden_size",
    "layers": "num_layers",
    "batch_size": "batch_size",
    "rho_g": "rho_g",
    "rho_d": "rho_d",
    "lambda_adv": "lambda_adv",
    "lambda_p": "lambda_p",
    "lambda_dpl": "lambda_dpl",
    "p": "p",
    "grad_clip": "grad_clip",
    "features": "features",
    "train_fraction": "train_fraction",
    "wavelet_levels": "wavelet_levels",
    "wavelet_threshold": "wavelet_threshold",
    "format": "report_format",
    "jobs": "jobs",
    "ticker": "ticker",
    "no_timing": "no_timing",
}


def _add_training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Flat key/value JSON file; flags override its values")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--window", type=int, help=f"Embedding dimension m (default {config.WINDOW_SIZE})")
    parser.add_argument("--delay", type=int, help=f"Delay interval tau (default {config.DELAY})")
    parser.add_argument("--hidden", type=int, help=f"LSTM hidden units (default {config.HIDDEN_SIZE})")
    parser.add_argument("--layers", type=int, help="Stacked LSTM layers (default 1)")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--rho-g", type=float, help="Generator learning rate")
    parser.add_argument("--rho-d", type=float, help="Discriminator learning rate")
    parser.add_argument("--lambda-adv", type=float)
    parser.add_argument("--lambda-p", type=float)
    parser.add_argument("--lambda-dpl", type=float)
    parser.add_argument("--p", type=int, choices=[1, 2])
    parser.add_argument("--grad-clip", type=float)
    parser.add_argument("--features", nargs="+", help="Input columns; the first is the forecast target")
    parser.add_argument("--train-fraction", type=float)
    parser.add_argument("--wavelet-levels", type=int, help="0 disables denoising")
    parser.add_argument("--wavelet-threshold", choices=["universal", "fixed", "none"])
    parser.add_argument("--no-timing", action="store_true", default=None, help="Record all wall-clock durations as 0")


def _add_output_flags(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--out", required=out_required, help="Output directory")
    parser.add_argument("--format", choices=config.REPORT_FORMATS, help="Report format on standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psr-gan-forecaster",
        description="Stock index forecasting with phase-space reconstruction: LSTM baseline versus LSTM/CNN GAN.",
    )
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-file", default=None, help=f"Log file (default {config.LOG_FILE_PATH})")
    parser.add_argument("--no-log-file", action="store_true", help="Log to standard error only")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Train one model on a price CSV")
    train.add_argument("--data", required=True, help="Yahoo-format OHLCV CSV")
    train.add_argument("--ticker", help="Label for the series (default: file name)")
    train.add_argument("--model", choices=["gan", "lstm", "lstm_baseline"])
    _add_training_flags(train)
    _add_output_flags(train)
    train.set_defaults(handler=cmd_train)

    evaluate = sub.add_parser("evaluate", help="Walk-forward evaluation of a trained model")
    evaluate.add_argument("--model", dest="model_file", required=True, help="model.json written by train")
    evaluate.add_argument("--data", required=True)
    evaluate.add_argument("--ticker")
    evaluate.add_argument("--all", action="store_true", help="Walk forward over the whole file instead of its test split")
    evaluate.add_argument("--no-timing", action="store_true", default=None)
    _add_output_flags(evaluate, out_required=False)
    evaluate.set_defaults(handler=cmd_evaluate)

    compare = sub.add_parser("compare", help="Train both models per dataset and tabulate the results")
    compare.add_argument("--data", required=True, nargs="+")
    compare.add_argument("--jobs", type=int, help="Datasets trained in parallel")
    _add_training_flags(compare)
    _add_output_flags(compare)
    compare.set_defaults(handler=cmd_compare)

    plotdata = sub.add_parser("plotdata", help="Write plotting CSVs from a compare output directory")
    plotdata.add_argument("--comparison", required=True, help="Directory written by compare")
    plotdata.add_argument("--out", help="Destination (default: <comparison>/plots)")
    plotdata.set_defaults(handler=cmd_plotdata)

    fetch = sub.add_parser("fetch", help="Download a quote CSV")
    fetch.add_argument("--ticker", required=True)
    fetch.add_argument("--start", required=True, type=date.fromisoformat, help="YYYY-MM-DD")
    fetch.add_argument("--end", required=True, type=date.fromisoformat, help="YYYY-MM-DD")
    fetch.add_argument(
        "--endpoint",
        required=True,
        help="URL template with {ticker} and {start}/{end} (ISO dates) or {start_ts}/{end_ts} (epoch seconds)",
    )
    fetch.add_argument("--out", required=True, help="CSV file to write")
    fetch.set_defaults(handler=cmd_fetch)
    return parser


def _resolve_run(args: argparse.Namespace) -> RunConfig:
    overrides = {key: getattr(args, dest) for dest, key in _TRAINING_FLAGS.items() if getattr(args, dest, None) is not None}
    run = load_run_config(overrides, config_file=getattr(args, "config", None))
    run.data_paths = list(args.data) if isinstance(args.data, list) else [args.data]
    run.out_dir = getattr(args, "out", None) or run.out_dir
    return run


def _clock(run: RunConfig):
    if run.no_timing:
        return lambda: 0.0
    return time.perf_counter


def _ticker_for(path: str, explicit: Optional[str] = None) -> str:
    return explicit or os.path.splitext(os.path.basename(path))[0]


def _write_model_run(model_run: pipeline_service.ModelRun, out_dir: str) -> List[str]:
    ensure_dir(out_dir)
    written = [report_service.write_model(model_run.model, out_dir)]
    written += report_service.write_history(model_run.history, out_dir)
    written.append(report_service.write_predictions(model_run.result, out_dir))
    return written


def cmd_train(args: argparse.Namespace) -> int:
    run = _resolve_run(args)
    out_dir = ensure_dir(run.out_dir)
    series = ingest_service.load_price_file(run.data_paths[0], ticker=_ticker_for(run.data_paths[0], run.ticker))
    prepared = pipeline_service.prepare_training_data(series, run.train)
    try:
        model_run = pipeline_service.run_model(series, run.train, _clock(run), prepared)
    except DivergenceDetected as e:
        if e.history is not None:
            report_service.write_history(e.history, out_dir)
        raise
    written = _write_model_run(model_run, out_dir)
    written.append(report_service.write_manifest(out_dir, "train", run, run.data_paths, extra={"ticker": series.ticker}))
    print(report_service.render_report(model_run.report, run.report_format, label=model_run.model.kind))
    logger.info(f"Wrote {len(written)} artifacts to {out_dir}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = report_service.load_model(args.model_file)
    fmt = args.format or "text"
    series = ingest_service.load_price_file(args.data, ticker=_ticker_for(args.data, args.ticker))
    ingest_service.require_valid(series)
    if not args.all:
        _, series = ingest_service.split_chronological(series, model.config.train_fraction)
    clock = (lambda: 0.0) if args.no_timing else time.perf_counter

    started = clock()
    result = training_service.walk_forward(model, series)
    report = training_service.report_walk_forward(result, clock() - started)

    out_dir = ensure_dir(args.out or os.path.dirname(os.path.abspath(args.model_file)))
    report_service.write_predictions(result, out_dir)
    print(report_service.render_report(report, fmt, label=model.kind))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    run = _resolve_run(args)
    out_dir = ensure_dir(run.out_dir)
    series_list = [ingest_service.load_price_file(p, ticker=_ticker_for(p)) for p in run.data_paths]
    tickers = [s.ticker for s in series_list]
    if len(set(tickers)) != len(tickers):
        raise ConfigError(f"Dataset labels must be unique, got {tickers}")

    comparison, runs = pipeline_service.compare(series_list, run.train, jobs=run.jobs, clock=_clock(run))
    for series, (baseline, gan) in zip(series_list, runs):
        ticker_dir = os.path.join(out_dir, report_service.safe_name(series.ticker))
        _write_model_run(baseline, os.path.join(ticker_dir, "lstm"))
        _write_model_run(gan, os.path.join(ticker_dir, "gan"))
    report_service.write_comparison(comparison, out_dir)
    report_service.write_manifest(out_dir, "compare", run, run.data_paths, extra={"tickers": tickers})
    print(report_service.render_comparison(comparison, run.report_format))
    return EXIT_OK


def cmd_plotdata(args: argparse.Namespace) -> int:
    written = report_service.write_plot_data(args.comparison, args.out)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_fetch(args: argparse.Namespace) -> int:
    if args.end < args.start:
        raise ConfigError(f"End date {args.end} precedes start date {args.start}")
    raw = ingest_service.fetch_remote(args.ticker, args.start, args.end, args.endpoint)
    series = ingest_service.parse_csv(raw, ticker=args.ticker)
    write_text(args.out, ingest_service.to_csv(series))
    logger.info(f"Saved {len(series)} bars for {args.ticker} to {args.out}")
    return EXIT_OK


def _exit_code(error: BaseException) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (DataError, ShapeError, FetchError, FileNotFoundError)):
        return EXIT_DATA
    if isinstance(error, (DivergenceDetected, NonFinite)):
        return EXIT_DIVERGED
    return EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    log_file = None if args.no_log_file else (args.log_file or config.LOG_FILE_PATH)
    setup_logging(getattr(logging, args.log_level), log_file)

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except (ForecastError, FileNotFoundError) as e:
        code = _exit_code(e)
        logger.error(f"{args.command} failed ({e.__class__.__name__}): {e}")
        return code
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
