"""RSSI trace value types and structural validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np

RSSI_MIN_DBM = -120.0
RSSI_MAX_DBM = 0.0


class RssiSample(NamedTuple):
    t: float
    s: float


@dataclass(frozen=True)
class TrialMeta:
    site_id: str = "site1"
    nominal_speed: Optional[float] = None
    trial_id: str = "0"


@dataclass(frozen=True, eq=False)
class RssiTrace:
    """An ordered run of RSSI samples (seconds, dBm) plus trial metadata.

    Samples are held as two read-only float arrays. Construction never
    checks invariants; use :func:`validate_trace` for that.
    """

    timestamps: np.ndarray
    rssi: np.ndarray
    meta: TrialMeta = field(default_factory=TrialMeta)

    def __post_init__(self):
        t = np.array(self.timestamps, dtype=float).ravel()
        s = np.array(self.rssi, dtype=float).ravel()
        if t.shape != s.shape:
            raise ValueError(
                f"timestamps and rssi differ in length ({t.size} != {s.size})"
            )
        t.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "rssi", s)

    @classmethod
    def from_samples(
        cls, samples: Iterable[tuple[float, float]], meta: TrialMeta | None = None
    ) -> "RssiTrace":
        pairs = list(samples)
        t = [p[0] for p in pairs]
        s = [p[1] for p in pairs]
        return cls(t, s, meta if meta is not None else TrialMeta())

    @property
    def samples(self) -> list[RssiSample]:
        return [RssiSample(float(t), float(s)) for t, s in zip(self.timestamps, self.rssi)]

    def __len__(self) -> int:
        return int(self.rssi.size)

    def __eq__(self, other):
        if not isinstance(other, RssiTrace):
            return NotImplemented
        return (
            self.meta == other.meta
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.rssi, other.rssi)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Violation:
    index: Optional[int]
    message: str

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]


def validate_trace(trace: RssiTrace) -> ValidationReport:
    """Report every structural invariant violation in ``trace``.

    Checks finite non-negative timestamps, strictly increasing time,
    RSSI within the physical dBm bound and a positive nominal speed.
    Sample-count requirements belong to the individual feature
    operations and are not checked here.
    """
    found: list[Violation] = []
    speed = trace.meta.nominal_speed
    if speed is not None and not (math.isfinite(speed) and speed > 0):
        found.append(Violation(None, f"nominal speed must be > 0, got {speed}"))

    t, s = trace.timestamps, trace.rssi
    for i in range(t.size):
        ti, si = t[i], s[i]
        if not math.isfinite(ti) or ti < 0:
            found.append(Violation(i, f"invalid timestamp at index {i}"))
        elif i > 0 and math.isfinite(t[i - 1]) and ti <= t[i - 1]:
            found.append(Violation(i, f"non-increasing timestamp at index {i}"))
        if not (math.isfinite(si) and RSSI_MIN_DBM <= si <= RSSI_MAX_DBM):
            found.append(Violation(i, f"rssi out of range at index {i}"))
    return ValidationReport(tuple(found))
