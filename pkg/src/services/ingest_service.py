import io
import logging
import math
import os
import time
from datetime import date, datetime, timezone
from functools import wraps
from typing import Any, Callable, List, Optional, Sequence, Tuple
from urllib.parse import quote

import httpx
import numpy as np
import pandas as pd

import config
from models.market_data import DateGap, NormParams, PriceBar, PriceSeries, ValidationReport, Violation
from utils.errors import (
    ConfigError,
    DataError,
    DegenerateSeries,
    DegenerateSplit,
    EmptySeries,
    HttpStatus,
    InvalidBars,
    InvalidParams,
    MalformedRow,
    MissingColumn,
    NetworkError,
)

logger = logging.getLogger(__name__)

_NUMERIC_COLUMNS = [
    ("Open", "open"),
    ("High", "high"),
    ("Low", "low"),
    ("Close", "close"),
    ("Adj Close", "adj_close"),
    ("Volume", "volume"),
]

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


def _retry_with_exponential_backoff(
    max_retries: int = config.FETCH_MAX_RETRIES,
    initial_delay: float = config.FETCH_INITIAL_DELAY,
    backoff_factor: float = config.FETCH_BACKOFF_FACTOR,
) -> Callable[..., Any]:
    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            retries = 0
            delay = initial_delay
            while True:
                try:
                    return func(*args, **kwargs)
                except (httpx.TransportError, HttpStatus) as e:
                    if isinstance(e, HttpStatus) and e.status_code not in RETRYABLE_STATUS:
                        raise
                    retries += 1
                    if retries >= max_retries:
                        logger.error(f"Max retries ({max_retries}) exceeded for {func.__name__}. Last error: {e}")
                        raise
                    logger.warning(f"Attempt {retries}/{max_retries} failed for {func.__name__} due to {e.__class__.__name__}. Retrying in {delay:.2f} seconds...")
                    time.sleep(delay)
                    delay *= backoff_factor
        return wrapper
    return decorator


def _find_columns(header: Sequence[str]) -> dict:
    by_lower = {str(name).strip().lower(): name for name in header}
    found = {}
    for required in config.CSV_REQUIRED_COLUMNS:
        actual = by_lower.get(required.lower())
        if actual is None:
            raise MissingColumn(required)
        found[required] = actual
    for optional in config.CSV_OPTIONAL_COLUMNS:
        actual = by_lower.get(optional.lower())
        if actual is not None:
            found[optional] = actual
    return found


def parse_csv(raw: str, ticker: str = "UNKNOWN") -> PriceSeries:
    """Parse Yahoo-style OHLCV text into a date-ascending PriceSeries.

    Rows with a missing numeric field ("null" or empty) are dropped and counted in
    ``dropped_rows``. Unparseable rows are dropped too, unless they make up more than
    half of the file, in which case MalformedRow is raised. Duplicate dates keep the
    last occurrence.
    """
    bad_lines: List[List[str]] = []
    try:
        frame = pd.read_csv(
            io.StringIO(raw),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            engine="python",
            on_bad_lines=bad_lines.append,
        )
    except pd.errors.EmptyDataError as e:
        raise EmptySeries("CSV text is empty") from e

    columns = _find_columns(frame.columns)
    n_total = len(frame) + len(bad_lines)
    if n_total == 0:
        raise EmptySeries(f"No data rows for {ticker}")

    missing = pd.Series(False, index=frame.index)
    unparseable = pd.Series(False, index=frame.index)

    date_text = frame[columns["Date"]].astype(str).str.strip()
    date_missing = date_text.isin(config.CSV_MISSING_TOKENS)
    dates = pd.to_datetime(date_text.where(~date_missing), format="%Y-%m-%d", errors="coerce")
    missing |= date_missing
    unparseable |= dates.isna() & ~date_missing

    values = {}
    for header_name, field_name in _NUMERIC_COLUMNS:
        if header_name not in columns:
            continue
        text = frame[columns[header_name]].astype(str).str.strip()
        is_missing = text.isin(config.CSV_MISSING_TOKENS)
        parsed = pd.to_numeric(text.where(~is_missing), errors="coerce")
        missing |= is_missing
        unparseable |= parsed.isna() & ~is_missing
        values[field_name] = parsed
    if "adj_close" not in values:
        values["adj_close"] = values["close"]

    n_unparseable = len(bad_lines) + int((unparseable & ~missing).sum())
    if n_unparseable > config.MALFORMED_ROW_LIMIT * n_total:
        raise MalformedRow(f"{n_unparseable} of {n_total} rows could not be parsed for {ticker}")

    keep = ~(missing | unparseable)
    table = pd.DataFrame({"date": dates, **values})[keep]
    if table.empty:
        raise EmptySeries(f"No valid rows for {ticker} ({n_total} rows dropped)")

    table = table.sort_values("date", kind="mergesort")
    table = table[~table["date"].duplicated(keep="last")]

    bars = [
        PriceBar(
            date=row.date.date(),
            open=float(row.open),
            high=float(row.high),
            low=float(row.low),
            close=float(row.close),
            adj_close=float(row.adj_close),
            volume=float(row.volume),
        )
        for row in table.itertuples(index=False)
    ]
    dropped = n_total - len(bars)
    if dropped:
        logger.warning(f"{ticker}: dropped {dropped} of {n_total} rows (missing, unparseable or duplicate dates)")
    logger.info(f"{ticker}: parsed {len(bars)} bars from {bars[0].date} to {bars[-1].date}")
    return PriceSeries(ticker=ticker, bars=bars, dropped_rows=dropped)


def to_csv(series: PriceSeries) -> str:
    """Serialize a series in the same column layout parse_csv reads."""
    frame = pd.DataFrame({
        "Date": [b.date.isoformat() for b in series.bars],
        "Open": [b.open for b in series.bars],
        "High": [b.high for b in series.bars],
        "Low": [b.low for b in series.bars],
        "Close": [b.close for b in series.bars],
        "Adj Close": [b.adj_close for b in series.bars],
        "Volume": [b.volume for b in series.bars],
    })
    return frame.to_csv(index=False, lineterminator="\n")


def load_price_file(path: str, ticker: Optional[str] = None) -> PriceSeries:
    if not os.path.isfile(path):
        raise DataError(f"Data file not found: {path}")
    label = ticker or os.path.splitext(os.path.basename(path))[0]
    with open(path, "r", encoding="utf-8") as f:
        raw = f.read()
    return parse_csv(raw, ticker=label)


def validate(series: PriceSeries) -> ValidationReport:
    report = ValidationReport(ticker=series.ticker, n_bars=len(series.bars))
    if not series.bars:
        return report

    for bar in series.bars:
        prices = [bar.open, bar.high, bar.low, bar.close, bar.adj_close]
        if not all(math.isfinite(p) for p in prices):
            report.violations.append(Violation(bar.date, "non_finite_price"))
            continue
        if any(p <= 0 for p in prices):
            report.violations.append(Violation(bar.date, "non_positive_price"))
        if not math.isfinite(bar.volume) or bar.volume < 0:
            report.violations.append(Violation(bar.date, "negative_volume", f"volume={bar.volume}"))
        if bar.low > min(bar.open, bar.close):
            report.violations.append(Violation(bar.date, "low_above_open_close", f"low={bar.low}"))
        if bar.high < max(bar.open, bar.close):
            report.violations.append(Violation(bar.date, "high_below_open_close", f"high={bar.high}"))

    spans = []
    for prev, cur in zip(series.bars, series.bars[1:]):
        span = (cur.date - prev.date).days
        if span == 0:
            report.violations.append(Violation(cur.date, "duplicate_date"))
        elif span < 0:
            report.violations.append(Violation(cur.date, "date_order", f"follows {prev.date}"))
        else:
            spans.append(span)
            if span > config.GAP_THRESHOLD_DAYS:
                report.gaps.append(DateGap(prev.date, cur.date, span))

    if spans:
        report.max_span_days = max(spans)
        report.mean_span_days = float(np.mean(spans))
    report.first_date = series.bars[0].date
    report.last_date = series.bars[-1].date
    if report.violations:
        logger.warning(f"{series.ticker}: {len(report.violations)} bar invariant violations")
    return report


def require_valid(series: PriceSeries) -> ValidationReport:
    """``validate``, raising InvalidBars when any bar breaks a price or ordering rule."""
    report = validate(series)
    if not report.is_valid:
        shown = ", ".join(f"{v.date.isoformat()} {v.rule}" for v in report.violations[:5])
        more = len(report.violations) - 5
        suffix = f" and {more} more" if more > 0 else ""
        raise InvalidBars(f"{series.ticker}: {len(report.violations)} invalid bars ({shown}{suffix})")
    return report


def normalize(values: Sequence[float], feature: str = "close") -> Tuple[np.ndarray, NormParams]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise DegenerateSeries(f"Need at least 2 values to normalize {feature}, got {arr.size}")
    lo, hi = float(arr.min()), float(arr.max())
    if not hi > lo:
        raise DegenerateSeries(f"All {feature} values equal {lo}; range is zero")
    params = NormParams(min_value=lo, max_value=hi, feature=feature)
    return normalize_with(arr, params), params


def normalize_with(values: Sequence[float], params: NormParams) -> np.ndarray:
    """Apply existing min-max parameters; values outside the fitted range map outside [0, 1]."""
    if not params.max_value > params.min_value:
        raise InvalidParams(f"max_value {params.max_value} must exceed min_value {params.min_value}")
    arr = np.asarray(values, dtype=np.float64)
    return (arr - params.min_value) / (params.max_value - params.min_value)


def denormalize(values: Sequence[float], params: NormParams) -> np.ndarray:
    if not params.max_value > params.min_value:
        raise InvalidParams(f"max_value {params.max_value} must exceed min_value {params.min_value}")
    arr = np.asarray(values, dtype=np.float64)
    return arr * (params.max_value - params.min_value) + params.min_value


def split_chronological(series: PriceSeries, train_fraction: float = config.TRAIN_FRACTION) -> Tuple[PriceSeries, PriceSeries]:
    if not 0.0 < train_fraction < 1.0:
        raise DegenerateSplit(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(series.bars)
    # 1e-9 absorbs float error such as 0.29 * 100 = 28.999999999999996
    n_train = int(math.floor(n * train_fraction + 1e-9))
    if n_train < 1 or n_train >= n:
        raise DegenerateSplit(f"Splitting {n} bars at {train_fraction} leaves an empty side")
    train = PriceSeries(ticker=series.ticker, bars=series.bars[:n_train])
    test = PriceSeries(ticker=series.ticker, bars=series.bars[n_train:])
    logger.info(f"{series.ticker}: split {n} bars into {len(train)} train / {len(test)} test")
    return train, test


def _epoch_seconds(day: date) -> int:
    return int(datetime(day.year, day.month, day.day, tzinfo=timezone.utc).timestamp())


def build_quote_url(endpoint: str, ticker: str, start: date, end: date) -> str:
    if "{ticker}" not in endpoint:
        raise ConfigError("Endpoint template must contain a {ticker} placeholder")
    if not any(p in endpoint for p in ("{start}", "{start_ts}")) or not any(p in endpoint for p in ("{end}", "{end_ts}")):
        raise ConfigError("Endpoint template must contain start and end placeholders")
    try:
        return endpoint.format(
            ticker=quote(ticker, safe=""),
            start=start.isoformat(),
            end=end.isoformat(),
            start_ts=_epoch_seconds(start),
            end_ts=_epoch_seconds(end),
        )
    except (KeyError, IndexError, ValueError) as e:
        raise ConfigError(f"Invalid endpoint template '{endpoint}': {e}") from e


def fetch_remote(
    ticker: str,
    start: date,
    end: date,
    endpoint: str,
    client: Optional[httpx.Client] = None,
    max_retries: int = config.FETCH_MAX_RETRIES,
    initial_delay: float = config.FETCH_INITIAL_DELAY,
) -> str:
    """Download raw quote CSV text. Nothing is written to disk."""
    url = build_quote_url(endpoint, ticker, start, end)
    owns_client = client is None
    if owns_client:
        client = httpx.Client(
            timeout=config.FETCH_TIMEOUT,
            headers={"User-Agent": config.FETCH_USER_AGENT},
            follow_redirects=True,
        )

    @_retry_with_exponential_backoff(max_retries=max_retries, initial_delay=initial_delay)
    def _download() -> str:
        response = client.get(url)
        if response.status_code != 200:
            raise HttpStatus(response.status_code, url)
        return response.text

    try:
        logger.info(f"Fetching {ticker} quotes {start}..{end}")
        body = _download()
        logger.info(f"Fetched {len(body)} characters for {ticker}")
        return body
    except httpx.TransportError as e:
        raise NetworkError(f"Could not reach quote endpoint for {ticker}: {e}") from e
    finally:
        if owns_client:
            client.close()
