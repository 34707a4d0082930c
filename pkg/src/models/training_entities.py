from dataclasses import asdict, dataclass, field
from datetime import date
from typing import List, Optional

import numpy as np

import config
from models.market_data import NormParams
from models.network_params import DiscriminatorParams, GeneratorParams, conv_output_length
from utils.errors import ConfigError, LengthMismatch, ShapeMismatch

MODEL_KINDS = ("gan", "lstm")
_KIND_ALIASES = {"lstm_baseline": "lstm", "baseline": "lstm"}


@dataclass(frozen=True)
class LossWeights:
    lambda_adv: float = config.LAMBDA_ADV
    lambda_p: float = config.LAMBDA_P
    lambda_dpl: float = config.LAMBDA_DPL
    p: int = config.P_NORM

    def validate(self) -> None:
        weights = (self.lambda_adv, self.lambda_p, self.lambda_dpl)
        if any(not np.isfinite(w) or w < 0 for w in weights):
            raise ConfigError(f"Loss weights must be finite and non-negative, got {weights}")
        if not any(w > 0 for w in weights):
            raise ConfigError("At least one loss weight must be positive")
        if self.p not in (1, 2):
            raise ConfigError(f"p must be 1 or 2, got {self.p}")


@dataclass(eq=False)
class PredictionPair:
    """Actual prices ``Y``, aligned predictions ``Y_prime`` and the last known price ``Y_T``."""
    Y: np.ndarray
    Y_prime: np.ndarray
    Y_T: float

    def __post_init__(self):
        self.Y = np.atleast_1d(np.asarray(self.Y, dtype=np.float64))
        self.Y_prime = np.atleast_1d(np.asarray(self.Y_prime, dtype=np.float64))
        if self.Y.shape != self.Y_prime.shape:
            raise LengthMismatch(f"Y has {self.Y.size} values, Y_prime has {self.Y_prime.size}")


@dataclass(frozen=True)
class GeneratorLossTerms:
    total: float
    adv: float
    p: float
    dpl: float


@dataclass
class TrainConfig:
    model_kind: str = config.MODEL_KIND
    rho_g: float = config.RHO_G
    rho_d: float = config.RHO_D
    weights: LossWeights = field(default_factory=LossWeights)
    batch_size: int = config.BATCH_SIZE
    epochs: int = config.EPOCHS
    window_size: int = config.WINDOW_SIZE
    delay: int = config.DELAY
    hidden_size: int = config.HIDDEN_SIZE
    num_layers: int = config.NUM_LAYERS
    peephole: bool = config.PEEPHOLE
    seed: int = config.SEED
    grad_clip: float = config.GRAD_CLIP
    d_channels: List[int] = field(default_factory=lambda: list(config.D_CONV_CHANNELS))
    d_kernel_width: int = config.D_KERNEL_WIDTH
    d_stride: int = config.D_STRIDE
    d_dense_units: List[int] = field(default_factory=lambda: list(config.D_DENSE_UNITS))
    features: List[str] = field(default_factory=lambda: list(config.FEATURES))
    train_fraction: float = config.TRAIN_FRACTION
    wavelet_levels: int = config.WAVELET_LEVELS
    wavelet_threshold: str = config.WAVELET_THRESHOLD
    wavelet_threshold_value: float = config.WAVELET_THRESHOLD_VALUE

    def __post_init__(self):
        self.model_kind = _KIND_ALIASES.get(self.model_kind, self.model_kind)

    def validate(self) -> None:
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"Unknown model kind '{self.model_kind}'; expected one of {MODEL_KINDS}")
        for name in ("rho_g", "rho_d"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be a positive learning rate, got {value}")
        for name in ("batch_size", "epochs", "window_size", "delay", "hidden_size", "num_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ConfigError(f"grad_clip must be positive, got {self.grad_clip}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if not self.features:
            raise ConfigError("At least one feature is required")
        unknown = [f for f in self.features if f not in config.FEATURE_COLUMNS]
        if unknown:
            raise ConfigError(f"Unknown features {unknown}; expected names from {sorted(config.FEATURE_COLUMNS)}")
        if self.wavelet_levels < 0:
            raise ConfigError(f"wavelet_levels must be >= 0, got {self.wavelet_levels}")
        self.weights.validate()
        if self.model_kind == "gan":
            self._validate_discriminator()

    def _validate_discriminator(self) -> None:
        if self.d_kernel_width < 1 or self.d_stride < 1:
            raise ConfigError(f"Discriminator kernel width and stride must be >= 1, got {self.d_kernel_width}/{self.d_stride}")
        if any(c < 1 for c in self.d_channels) or any(u < 1 for u in self.d_dense_units):
            raise ConfigError("Discriminator channel and unit counts must be >= 1")
        length = self.window_size + 1
        for k in range(len(self.d_channels)):
            if length < self.d_kernel_width:
                raise ConfigError(
                    f"Discriminator conv layer {k} (width {self.d_kernel_width}) does not fit a sequence of length {length}; "
                    f"reduce d_channels/d_kernel_width or raise window_size"
                )
            length = conv_output_length(length, self.d_kernel_width, self.d_stride)

    @property
    def input_size(self) -> int:
        return len(self.features)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        weights = data.pop("weights", None) or {}
        try:
            return cls(weights=LossWeights(**weights), **data)
        except TypeError as e:
            raise ConfigError(f"Invalid training configuration: {e}") from e


@dataclass
class EpochRecord:
    epoch: int
    g_loss: float
    g_adv: float
    g_p: float
    g_dpl: float
    d_loss: Optional[float]
    # Mean l_p for the GAN, mean squared error for the baseline
    forecast_loss: float
    seconds: float
    rho_g: float
    rho_d: Optional[float]


@dataclass
class TrainHistory:
    kind: str
    records: List[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict:
        return {
            "format_version": config.FORMAT_VERSION,
            "kind": self.kind,
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainHistory":
        return cls(kind=data["kind"], records=[EpochRecord(**r) for r in data.get("records", [])])


@dataclass(eq=False)
class TrainedModel:
    kind: str
    generator: GeneratorParams
    norm_params: List[NormParams]
    config: TrainConfig
    discriminator: Optional[DiscriminatorParams] = None

    @property
    def window_size(self) -> int:
        return self.config.window_size

    @property
    def target_norm(self) -> NormParams:
        return self.norm_params[0]

    def check(self) -> None:
        self.generator.check_shapes()
        if self.generator.input_size != len(self.norm_params):
            raise ShapeMismatch(f"Generator takes {self.generator.input_size} features, model stores {len(self.norm_params)} norm params")
        if self.generator.hidden_size != self.config.hidden_size or self.generator.num_layers != self.config.num_layers:
            raise ShapeMismatch("Generator shapes do not match the stored training configuration")
        if self.kind == "gan":
            if self.discriminator is None:
                raise ShapeMismatch("GAN model has no discriminator parameters")
            self.discriminator.check_shapes()
            if self.discriminator.input_length != self.window_size + 1:
                raise ShapeMismatch(f"Discriminator judges length {self.discriminator.input_length}, window size is {self.window_size}")

    def to_dict(self) -> dict:
        return {
            "format_version": config.FORMAT_VERSION,
            "kind": self.kind,
            "config": self.config.to_dict(),
            "norm_params": [n.to_dict() for n in self.norm_params],
            "generator": self.generator.to_dict(),
            "discriminator": self.discriminator.to_dict() if self.discriminator is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        version = data.get("format_version")
        if version != config.FORMAT_VERSION:
            raise ShapeMismatch(f"Unsupported model format version {version}; expected {config.FORMAT_VERSION}")
        try:
            model = cls(
                kind=data["kind"],
                generator=GeneratorParams.from_dict(data["generator"]),
                norm_params=[NormParams.from_dict(n) for n in data["norm_params"]],
                config=TrainConfig.from_dict(data["config"]),
                discriminator=DiscriminatorParams.from_dict(data["discriminator"]) if data.get("discriminator") else None,
            )
        except (KeyError, TypeError) as e:
            raise ShapeMismatch(f"Malformed model file: {e}") from e
        model.check()
        return model


@dataclass
class EvalReport:
    directional_accuracy_pct: float
    trend_da_pct: float
    rmse: float
    rmsre: float
    mrmse: float
    processing_time_s: float
    n_points: int

    TEXT_COLUMNS = ("Directional Accuracy", "Processing Time", "MRSE")

    def to_dict(self) -> dict:
        return {
            "directional_accuracy_pct": self.directional_accuracy_pct,
            "trend_da_pct": self.trend_da_pct,
            "rmse": self.rmse,
            "rmsre": self.rmsre,
            "mrmse": self.mrmse,
            "processing_time_s": self.processing_time_s,
            "n_points": self.n_points,
        }

    def to_text(self, label: str = "") -> str:
        header = f"{'Model':<12}{self.TEXT_COLUMNS[0]:>22}{self.TEXT_COLUMNS[1]:>18}{self.TEXT_COLUMNS[2]:>12}"
        row = f"{label:<12}{self.directional_accuracy_pct:>21.2f}%{self.processing_time_s:>17.2f}s{self.mrmse:>12.4f}"
        extra = f"trend DA {self.trend_da_pct:.2f}%  RMSE {self.rmse:.6f}  RMSRE {self.rmsre:.6f}  points {self.n_points}"
        return "\n".join([header, row, extra])


@dataclass(eq=False)
class WalkForwardResult:
    dates: List[date]
    actual: np.ndarray
    predicted: np.ndarray
    # Last known price before each predicted step
    previous: np.ndarray

    def __len__(self) -> int:
        return int(self.actual.shape[0])


@dataclass
class ComparisonRow:
    ticker: str
    baseline: EvalReport
    gan: EvalReport


@dataclass
class ComparisonReport:
    rows: List[ComparisonRow] = field(default_factory=list)

    def averages(self) -> ComparisonRow:
        if not self.rows:
            raise ValueError("Comparison report has no rows to average")
        return ComparisonRow("Average", _mean_report([r.baseline for r in self.rows]), _mean_report([r.gan for r in self.rows]))

    def to_dict(self) -> dict:
        avg = self.averages()
        return {
            "format_version": config.FORMAT_VERSION,
            "rows": [{"ticker": r.ticker, "baseline": r.baseline.to_dict(), "gan": r.gan.to_dict()} for r in self.rows],
            "averages": {"baseline": avg.baseline.to_dict(), "gan": avg.gan.to_dict()},
        }

    def to_text(self) -> str:
        cols = EvalReport.TEXT_COLUMNS
        lines = [
            f"{'':<12}{'Current LSTM':^42}{'Proposed GAN':^42}",
            f"{'Ticker':<12}" + f"{cols[0]:>22}{cols[1]:>12}{cols[2]:>8}" * 2,
        ]
        for row in self.rows + [self.averages()]:
            cells = "".join(
                f"{r.directional_accuracy_pct:>21.2f}%{r.processing_time_s:>11.2f}s{r.mrmse:>8.4f}"
                for r in (row.baseline, row.gan)
            )
            lines.append(f"{row.ticker:<12}{cells}")
        return "\n".join(lines)


def _mean_report(reports: List[EvalReport]) -> EvalReport:
    def mean(name: str) -> float:
        return float(np.mean([getattr(r, name) for r in reports]))

    return EvalReport(
        directional_accuracy_pct=mean("directional_accuracy_pct"),
        trend_da_pct=mean("trend_da_pct"),
        rmse=mean("rmse"),
        rmsre=mean("rmsre"),
        mrmse=mean("mrmse"),
        processing_time_s=mean("processing_time_s"),
        n_points=int(round(mean("n_points"))),
    )


@dataclass
class RunConfig:
    """Everything one CLI invocation resolved: training settings plus I/O."""
    train: TrainConfig = field(default_factory=TrainConfig)
    data_paths: List[str] = field(default_factory=list)
    ticker: Optional[str] = None
    out_dir: str = "."
    report_format: str = "text"
    no_timing: bool = False
    jobs: int = 1

    def validate(self) -> None:
        self.train.validate()
        if self.report_format not in config.REPORT_FORMATS:
            raise ConfigError(f"Unknown report format '{self.report_format}'; expected one of {config.REPORT_FORMATS}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def to_dict(self) -> dict:
        return asdict(self)
