"""Synthetic RSSI traces for a receiver walking past an access point.

Geometry: a straight track of ``track_length`` metres with the AP at
``ap_position`` along it and ``lateral_offset`` metres to the side. The
mean received power follows log-distance path loss; shadowing is a
zero-mean Gaussian field over traveled distance with exponential
correlation ``exp(-delta/fading_coherence_distance)`` (an AR(1)/OU
process in distance).

The fading field is a property of the site, drawn from the seed alone,
so the same seed walked at different speeds sees the same environment.
Each reported sample is the mean of the field over the distance covered
during the receiver's integration time (by default one sample period).

Random numbers come from numpy's PCG64 via ``SeedSequence``; a trace is
reproducible from ``(seed, cfg)`` on any platform.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigInvalid
from .fitting import LinearModel, XYPoint
from .trace import RssiTrace, TrialMeta

REFERENCE_DISTANCE_M = 1.0


@dataclass(frozen=True)
class SimConfig:
    speed: float = 1.0
    track_length: float = 30.0
    ap_position: float = 15.0
    lateral_offset: float = 1.0
    sample_rate: float = 10.0
    tx_ref_power: float = -30.0
    path_loss_exponent: float = 2.7
    shadowing_sigma: float = 2.0
    fading_coherence_distance: float = 0.25
    # None -> one sample period; 0 -> instantaneous sampling of the field
    integration_time: Optional[float] = None
    fading_grid_step: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "integration_time" and value is None:
                continue
            if f.name == "seed":
                if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                    raise ConfigInvalid("seed", f"must be a non-negative integer, got {value!r}")
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigInvalid(f.name, f"must be a finite number, got {value!r}")
        positive = ("speed", "track_length", "lateral_offset", "sample_rate",
                    "fading_coherence_distance", "fading_grid_step")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigInvalid(name, f"must be > 0, got {getattr(self, name)}")
        if not 0 < self.ap_position < self.track_length:
            raise ConfigInvalid(
                "ap_position", f"must lie strictly inside (0, {self.track_length})"
            )
        if self.shadowing_sigma < 0:
            raise ConfigInvalid("shadowing_sigma", "must be >= 0")
        if self.integration_time is not None and self.integration_time < 0:
            raise ConfigInvalid("integration_time", "must be >= 0")

    @property
    def effective_integration_time(self) -> float:
        if self.integration_time is None:
            return 1.0 / self.sample_rate
        return self.integration_time

    def replace(self, **changes) -> "SimConfig":
        return SimConfig(**{**asdict(self), **changes})


def sample_count(cfg: SimConfig) -> int:
    return int(math.floor(cfg.track_length * cfg.sample_rate / cfg.speed)) + 1


def sample_positions(cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sample times (s) and along-track positions (m)."""
    k = np.arange(sample_count(cfg))
    return k / cfg.sample_rate, k * cfg.speed / cfg.sample_rate


def mean_path(cfg: SimConfig, positions: np.ndarray) -> np.ndarray:
    """Noiseless log-distance received power at the given track positions."""
    d = np.hypot(positions - cfg.ap_position, cfg.lateral_offset)
    return cfg.tx_ref_power - 10.0 * cfg.path_loss_exponent * np.log10(d / REFERENCE_DISTANCE_M)


def _ar1(rng: np.random.Generator, count: int, rho: float, sigma: float,
         start: Optional[float] = None) -> np.ndarray:
    innov = rng.standard_normal(count) * (sigma * math.sqrt(1.0 - rho * rho))
    if count == 0:
        return innov
    if start is None:
        innov[0] = sigma * rng.standard_normal()
    else:
        innov[0] += rho * start
    return lfilter([1.0], [1.0, -rho], innov)


def fading_field(cfg: SimConfig, behind: int = 0) -> np.ndarray:
    """Shadowing field on the grid ``-behind*step .. track_length``.

    The forward part (from position 0) depends only on the seed and channel
    parameters; the ``behind`` part extends it backwards from position 0
    with an independent stream, so it never perturbs the forward values.
    """
    step = cfg.fading_grid_step
    ahead = int(round(cfg.track_length / step)) + 1
    rho = math.exp(-step / cfg.fading_coherence_distance)
    fwd_seq, back_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    fwd = _ar1(np.random.default_rng(fwd_seq), ahead, rho, cfg.shadowing_sigma)
    back = _ar1(np.random.default_rng(back_seq), behind, rho, cfg.shadowing_sigma, fwd[0])
    return np.concatenate([back[::-1], fwd])


def simulate_trace(cfg: SimConfig, site_id: str = "site1", trial_id: str = "0") -> RssiTrace:
    t, x = sample_positions(cfg)
    power = mean_path(cfg, x)
    if cfg.shadowing_sigma > 0:
        step = cfg.fading_grid_step
        window = int(round(cfg.speed * cfg.effective_integration_time / step))
        field = fading_field(cfg, behind=window)
        idx = np.rint(x / step).astype(int) + window
        csum = np.concatenate([[0.0], np.cumsum(field)])
        # trailing mean over the grid cells swept during the integration time
        power = power + (csum[idx + 1] - csum[idx - window]) / (window + 1)
    return RssiTrace(t, power, TrialMeta(site_id, cfg.speed, trial_id))


def simulate_feature_points(
    model: LinearModel,
    speeds: Iterable[float],
    noise_sigma: float,
    trials_per_speed: int,
    seed: int,
) -> list[XYPoint]:
    """Noisy ``(v, a*v + b + noise)`` points, speed-major then trial order."""
    if trials_per_speed < 1:
        raise ConfigInvalid("trials_per_speed", "must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for v in speeds:
        v = float(v)
        eps = rng.normal(0.0, noise_sigma, trials_per_speed)
        mean = model.a * v + model.b
        out.extend(XYPoint(v, float(mean + e)) for e in eps)
    return out
