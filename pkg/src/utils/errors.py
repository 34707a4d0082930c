from typing import Any, Optional


class ForecastError(Exception):
    """Base class for every error raised by the forecaster."""


class ConfigError(ForecastError):
    pass


# --- Data errors (CLI exit code 3) ---

class DataError(ForecastError):
    pass


class MissingColumn(DataError):
    def __init__(self, column: str):
        super().__init__(f"CSV header lacks required column '{column}'")
        self.column = column


class EmptySeries(DataError):
    pass


class MalformedRow(DataError):
    pass


class InvalidBars(DataError):
    pass


class DegenerateSeries(DataError):
    pass


class InvalidParams(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class TooShort(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ZeroDenominator(DataError):
    pass


class TargetOutOfRange(DataError):
    pass


class EmptyDataset(DataError):
    pass


# --- Shape errors (CLI exit code 3) ---

class ShapeError(ForecastError):
    pass


class ShapeMismatch(ShapeError):
    pass


class StaleCache(ShapeError):
    pass


class SignalTooShort(ShapeError):
    pass


# --- Remote fetch (CLI exit code 3) ---

class FetchError(ForecastError):
    pass


class NetworkError(FetchError):
    pass


class HttpStatus(FetchError):
    def __init__(self, status_code: int, url: str = ""):
        super().__init__(f"HTTP {status_code} from {url}" if url else f"HTTP {status_code}")
        self.status_code = status_code
        self.url = url


# --- Numerical failures ---

class NonFinite(ForecastError):
    pass


class DivergenceDetected(ForecastError):
    """Raised when a training loss turns non-finite; carries the epochs completed so far."""

    def __init__(self, message: str, history: Optional[Any] = None):
        super().__init__(message)
        self.history = history
