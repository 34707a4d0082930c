from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

import config

THRESHOLD_RULES = ("universal", "fixed", "none")


@dataclass(frozen=True)
class WaveletConfig:
    levels: int = config.WAVELET_LEVELS
    threshold_rule: str = config.WAVELET_THRESHOLD
    threshold_value: float = config.WAVELET_THRESHOLD_VALUE
    mode: str = "soft"


@dataclass(eq=False)
class ReconstructedDataset:
    """Delay-embedded samples.

    ``x`` has shape (n, m) for a scalar signal or (n, m, n_features) for a
    multi-column signal; ``y`` holds the next value of the target column.
    """
    x: np.ndarray
    y: np.ndarray
    m: int
    tau: int

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def samples(self) -> List[Tuple[np.ndarray, float]]:
        return [(self.x[i], float(self.y[i])) for i in range(len(self))]

    @property
    def n_features(self) -> int:
        return 1 if self.x.ndim == 2 else int(self.x.shape[2])

    def target_windows(self, target_column: int = 0) -> np.ndarray:
        """The (n, m) windows of the target column only."""
        return self.x if self.x.ndim == 2 else self.x[:, :, target_column]
