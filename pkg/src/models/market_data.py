from dataclasses import dataclass, field
from datetime import date
from typing import List, Optional

import numpy as np


@dataclass(frozen=True)
class PriceBar:
    """One daily OHLCV row. Invariants are checked by ingest_service.validate, not here."""
    date: date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: float


@dataclass
class PriceSeries:
    ticker: str
    bars: List[PriceBar]
    # Rows dropped by parse_csv (missing values, unparseable fields, duplicate dates)
    dropped_rows: int = 0

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> List[date]:
        return [b.date for b in self.bars]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(b, name) for b in self.bars], dtype=np.float64)


@dataclass(frozen=True)
class NormParams:
    min_value: float
    max_value: float
    feature: str = "close"

    def to_dict(self) -> dict:
        return {"min_value": self.min_value, "max_value": self.max_value, "feature": self.feature}

    @classmethod
    def from_dict(cls, data: dict) -> "NormParams":
        return cls(float(data["min_value"]), float(data["max_value"]), str(data.get("feature", "close")))


@dataclass(frozen=True)
class Violation:
    date: date
    rule: str
    detail: str = ""


@dataclass(frozen=True)
class DateGap:
    start: date
    end: date
    span_days: int


@dataclass
class ValidationReport:
    ticker: str
    n_bars: int
    violations: List[Violation] = field(default_factory=list)
    gaps: List[DateGap] = field(default_factory=list)
    max_span_days: int = 0
    mean_span_days: float = 0.0
    first_date: Optional[date] = None
    last_date: Optional[date] = None

    @property
    def is_valid(self) -> bool:
        return not self.violations
