"""Time-domain features of an RSSI trace.

Every function accepts either an :class:`~rssi_mobility.trace.RssiTrace`
or a plain 1-D sequence of dBm values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptyTrace, InsufficientSamples, ZeroVariance
from .trace import RssiTrace

TraceLike = Union[RssiTrace, Sequence[float], np.ndarray]

DEFAULT_MAX_LAG_CAP = 50


def _values(trace: TraceLike) -> np.ndarray:
    if isinstance(trace, RssiTrace):
        return trace.rssi
    return np.asarray(trace, dtype=float).ravel()


@dataclass(frozen=True)
class FeatureVector:
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    min: float
    max: float


@dataclass(frozen=True, eq=False)
class AcfSeries:
    """Autocorrelation coefficients indexed by integer sample lag."""

    lags: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        lags = np.array(self.lags, dtype=int).ravel()
        coef = np.array(self.coefficients, dtype=float).ravel()
        if lags.shape != coef.shape:
            raise ValueError("lags and coefficients must have the same length")
        lags.flags.writeable = False
        coef.flags.writeable = False
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "coefficients", coef)

    @property
    def max_lag(self) -> int:
        return int(self.lags[-1]) if self.lags.size else -1

    def at(self, lag: int) -> float:
        hit = np.nonzero(self.lags == lag)[0]
        if hit.size == 0:
            raise KeyError(lag)
        return float(self.coefficients[hit[0]])


def compute_mean(trace: TraceLike) -> float:
    x = _values(trace)
    if x.size == 0:
        raise EmptyTrace("mean of an empty trace")
    return float(np.mean(x))


def compute_min_max(trace: TraceLike) -> tuple[float, float]:
    """Exact (min, max) over the whole trace."""
    x = _values(trace)
    if x.size == 0:
        raise EmptyTrace("min/max of an empty trace")
    return float(np.min(x)), float(np.max(x))


def compute_moments(trace: TraceLike) -> tuple[float, float, float]:
    """Population variance, skewness and raw (non-excess) kurtosis."""
    x = _values(trace)
    if x.size == 0:
        raise EmptyTrace("moments of an empty trace")
    if x.size < 2:
        raise InsufficientSamples("moments need at least 2 samples")
    dev = x - x.mean()
    m2 = float(np.mean(dev**2))
    if m2 == 0.0:
        raise ZeroVariance("zero variance: skewness and kurtosis undefined")
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    return m2, m3 / m2**1.5, m4 / m2**2


def default_max_lag(n_samples: int) -> int:
    return int(min(DEFAULT_MAX_LAG_CAP, n_samples // 4))


def compute_acf(trace: TraceLike, max_lag: Optional[int] = None) -> AcfSeries:
    """Biased sample autocorrelation for lags ``0..max_lag``.

    r_k = sum_{t<N-k} (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2

    Dividing every lag by the full-series sum of squares keeps each
    coefficient inside [-1, 1].
    """
    x = _values(trace)
    n = x.size
    if max_lag is None:
        max_lag = default_max_lag(n)
    if max_lag < 1:
        raise InsufficientSamples(f"max_lag must be >= 1 (trace has {n} samples)")
    if n < max_lag + 2:
        raise InsufficientSamples(
            f"acf up to lag {max_lag} needs {max_lag + 2} samples, got {n}"
        )
    dev = x - x.mean()
    denom = float(np.dot(dev, dev))
    if denom == 0.0:
        raise ZeroVariance("zero variance: autocorrelation undefined")
    coef = np.empty(max_lag + 1)
    coef[0] = 1.0
    for k in range(1, max_lag + 1):
        coef[k] = np.dot(dev[:-k], dev[k:]) / denom
    return AcfSeries(np.arange(max_lag + 1), coef)


def extract_features(trace: TraceLike) -> FeatureVector:
    mean = compute_mean(trace)
    lo, hi = compute_min_max(trace)
    var, skew, kurt = compute_moments(trace)
    return FeatureVector(mean, var, skew, kurt, lo, hi)
