"""Least-squares fits for the two model families.

* linear feature-vs-speed: ``y = a*v + b`` by closed-form OLS
* power-law ACF decay: ``rho = a*x**b + c`` by damped Gauss-Newton
  (Levenberg-Marquardt) from a log-log initial guess

Both report SSE, R^2, adjusted R^2 and residual RMSE.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateX,
    InsufficientLags,
    LengthMismatch,
    NonConvergenceWarning,
    TooFewPoints,
    ZeroVarianceResponse,
)
from .features import AcfSeries


class XYPoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class GofStats:
    sse: float
    r_squared: float
    adj_r_squared: float
    rmse: float


@dataclass(frozen=True)
class LinearModel:
    a: float
    b: float
    gof: Optional[GofStats] = None
    n: int = 0

    def predict(self, x):
        return self.a * np.asarray(x, dtype=float) + self.b


@dataclass(frozen=True)
class PowerLawModel:
    a: float
    b: float
    c: float
    gof: Optional[GofStats] = None
    converged: bool = True
    degenerate: bool = False
    iterations: int = 0
    objective_history: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def predict(self, lag):
        return self.a * np.power(np.asarray(lag, dtype=float), self.b) + self.c

    @property
    def objective(self) -> float:
        return self.objective_history[-1] if self.objective_history else math.nan


def adjusted_r_squared(r_squared: float, n: int, m: int) -> float:
    return 1.0 - (1.0 - r_squared) * (n - 1) / (n - m)


def rmse_from_sse(sse: float, n: int, m: int) -> float:
    """Residual standard deviation, normalized by the residual degrees of freedom."""
    return math.sqrt(sse / (n - m))


def goodness_of_fit(predicted: Sequence[float], observed: Sequence[float], m: int) -> GofStats:
    yhat = np.asarray(predicted, dtype=float).ravel()
    y = np.asarray(observed, dtype=float).ravel()
    if yhat.shape != y.shape:
        raise LengthMismatch(f"{yhat.size} predictions for {y.size} observations")
    n = y.size
    if n < m + 1:
        raise TooFewPoints(f"need at least {m + 1} points for {m} coefficients, got {n}")
    sse = float(np.sum((y - yhat) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise ZeroVarianceResponse("observed values are constant; R^2 undefined")
    r2 = 1.0 - sse / sst
    return GofStats(sse, r2, adjusted_r_squared(r2, n, m), rmse_from_sse(sse, n, m))


def _gof_or_none(predicted, observed, m) -> Optional[GofStats]:
    try:
        return goodness_of_fit(predicted, observed, m)
    except ZeroVarianceResponse:
        return None


def _as_xy(points: Iterable) -> tuple[np.ndarray, np.ndarray]:
    pts = [(float(p[0]), float(p[1])) for p in points]
    if not pts:
        return np.empty(0), np.empty(0)
    arr = np.asarray(pts)
    return arr[:, 0], arr[:, 1]


def fit_linear(points: Iterable) -> LinearModel:
    """Ordinary least-squares line through ``(x, y)`` points.

    ``gof`` is ``None`` when every y is identical (R^2 undefined).
    """
    x, y = _as_xy(points)
    n = x.size
    if n < 3:
        raise TooFewPoints(f"linear fit needs at least 3 points, got {n}")
    dx = x - x.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise DegenerateX("all x values are equal")
    a = float(np.dot(dx, y - y.mean()) / sxx)
    b = float(y.mean() - a * x.mean())
    return LinearModel(a, b, _gof_or_none(a * x + b, y, 2), n)


# Levenberg-Marquardt settings for the power-law fit.
MAX_ITERATIONS = 200
RELATIVE_TOLERANCE = 1e-10
_LAMBDA0 = 1e-3
_LAMBDA_MAX = 1e16


def _power_law_init(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    # Offset c0 past the data so ln|c0 - y| exists, then fit a line in log-log.
    decreasing = y[0] >= y[-1]
    margin = abs(y[0] - y[1])
    if margin == 0.0:
        margin = max(np.ptp(y), 1e-6) * 0.1
    if decreasing:
        c0 = max(y[0], y.max()) + margin
        sign = -1.0
    else:
        c0 = min(y[0], y.min()) - margin
        sign = 1.0
    lx = np.log(x)
    ly = np.log(np.abs(c0 - y))
    dx = lx - lx.mean()
    sxx = float(np.dot(dx, dx))
    b0 = float(np.dot(dx, ly - ly.mean()) / sxx) if sxx > 0 else 0.0
    k = float(ly.mean() - b0 * lx.mean())
    return sign * math.exp(k), b0, c0


def _objective(p: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        r = y - (p[0] * np.power(x, p[1]) + p[2])
        val = float(np.dot(r, r))
    return val if math.isfinite(val) else math.inf


def _levenberg_marquardt(x, y, p0, max_iter, tol):
    p = np.array(p0, dtype=float)
    lx = np.log(x)
    obj = _objective(p, x, y)
    history = [obj]
    lam = _LAMBDA0
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        if obj == 0.0:
            converged = True
            break
        xb = np.power(x, p[1])
        r = y - (p[0] * xb + p[2])
        jac = np.column_stack([xb, p[0] * xb * lx, np.ones_like(x)])
        scale = np.sqrt(np.maximum(np.sum(jac * jac, axis=0), 1e-300))
        aug = np.vstack([jac, math.sqrt(lam) * np.diag(scale)])
        rhs = np.concatenate([r, np.zeros(3)])
        step = np.linalg.lstsq(aug, rhs, rcond=None)[0]
        trial = p + step
        new_obj = _objective(trial, x, y)
        if new_obj < obj:
            decrease = (obj - new_obj) / obj
            p, obj = trial, new_obj
            history.append(obj)
            lam = max(lam / 10.0, 1e-12)
            if decrease < tol:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > _LAMBDA_MAX:
                # no descent direction left at any damping: a stationary point
                converged = True
                break
    return p, converged, it, tuple(history)


def fit_power_law(
    acf: AcfSeries,
    lag_range: Optional[tuple[int, int]] = None,
    max_iter: int = MAX_ITERATIONS,
    tol: float = RELATIVE_TOLERANCE,
) -> PowerLawModel:
    """Fit ``rho(x) = a * x**b + c`` to ACF coefficients over lags ``lo..hi``.

    Lag 0 is always excluded (the ACF pins it to 1). A constant ACF yields
    ``a = 0`` with ``degenerate=True``; b is then meaningless. Hitting the
    iteration cap returns the best iterate with ``converged=False`` and a
    :class:`NonConvergenceWarning`.
    """
    lo, hi = lag_range if lag_range is not None else (1, acf.max_lag)
    if lo < 1:
        raise InsufficientLags("power-law fit requires lags >= 1")
    if hi - lo + 1 < 4:
        raise InsufficientLags(f"need at least 4 lags, got range {lo}..{hi}")
    wanted = np.arange(lo, hi + 1)
    lookup = dict(zip(acf.lags.tolist(), acf.coefficients.tolist()))
    missing = [int(k) for k in wanted if int(k) not in lookup]
    if missing:
        raise InsufficientLags(f"acf is missing lags {missing}")
    x = wanted.astype(float)
    y = np.array([lookup[int(k)] for k in wanted])

    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        c = float(np.mean(y))
        obj = float(np.sum((y - c) ** 2))
        return PowerLawModel(0.0, 0.0, c, None, True, True, 0, (obj,))

    p, converged, iterations, history = _levenberg_marquardt(
        x, y, _power_law_init(x, y), max_iter, tol
    )
    if not converged:
        warnings.warn(
            f"power-law fit stopped after {iterations} iterations "
            f"(objective {history[-1]:.3g})",
            NonConvergenceWarning,
            stacklevel=2,
        )
    a, b, c = (float(v) for v in p)
    pred = a * np.power(x, b) + c
    degenerate = abs(a) <= 1e-12 * max(1.0, abs(c))
    return PowerLawModel(
        a, b, c, _gof_or_none(pred, y, 3), converged, degenerate, iterations, history
    )
