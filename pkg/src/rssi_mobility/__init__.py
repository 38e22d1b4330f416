"""Receiver speed estimation from RSSI time series."""

__version__ = "0.1.0"

from .channel_sim import SimConfig, simulate_feature_points, simulate_trace
from .estimation import (
    SiteModels,
    SpeedEstimate,
    builtin_registry,
    estimate_speed_from_max,
    estimate_speed_from_min,
    evaluate,
    rank_speeds_by_acf,
)
from .features import (
    AcfSeries,
    FeatureVector,
    compute_acf,
    compute_mean,
    compute_min_max,
    compute_moments,
    extract_features,
)
from .fitting import (
    GofStats,
    LinearModel,
    PowerLawModel,
    XYPoint,
    fit_linear,
    fit_power_law,
    goodness_of_fit,
)
from .trace import RssiSample, RssiTrace, TrialMeta, ValidationReport, validate_trace
