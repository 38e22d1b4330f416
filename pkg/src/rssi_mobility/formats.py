"""On-disk formats: trace CSV, manifest JSON and the feature table CSV.

All writers use LF line endings and the shortest round-trip float repr,
so a read-write cycle is bit-exact.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .features import AcfSeries, FeatureVector
from .trace import RssiTrace, TrialMeta

TRACE_HEADER = ("timestamp_s", "rssi_dbm")
FEATURE_COLUMNS = (
    "site_id", "trial_id", "speed",
    "mean", "variance", "skewness", "kurtosis", "min", "max",
)
WINDOW_SEPARATOR = "@w"


class FormatError(ValueError):
    pass


def fmt_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    return repr(float(value))


def parse_float(text: str) -> Optional[float]:
    text = text.strip()
    return None if text == "" else float(text)


def write_trace_csv(path: Path, trace: RssiTrace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for t, s in zip(trace.timestamps, trace.rssi):
            writer.writerow((fmt_float(t), fmt_float(s)))


def read_trace_csv(path: Path, meta: TrialMeta | None = None) -> RssiTrace:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != TRACE_HEADER:
        raise FormatError(f"{path}: expected header {','.join(TRACE_HEADER)}")
    t, s = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            t.append(float(row[0]))
            s.append(float(row[1]))
        except (IndexError, ValueError):
            raise FormatError(f"{path}:{lineno}: malformed row {row!r}") from None
    return RssiTrace(t, s, meta if meta is not None else TrialMeta())


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    site_id: str
    nominal_speed: Optional[float]
    trial_id: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    base_dir: Path = Path(".")
    sample_rate_hz: Optional[float] = None

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.base_dir / p


def write_manifest(path: Path, entries: Sequence[ManifestEntry],
                   sample_rate_hz: Optional[float] = None) -> None:
    doc = {
        "sample_rate_hz": sample_rate_hz,
        "entries": [
            {"path": e.path, "site_id": e.site_id,
             "nominal_speed": e.nominal_speed, "trial_id": e.trial_id}
            for e in entries
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_manifest(path: Path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        raw = doc["entries"] if isinstance(doc, dict) else doc
        entries = tuple(
            ManifestEntry(
                str(e["path"]),
                str(e["site_id"]),
                None if e.get("nominal_speed") is None else float(e["nominal_speed"]),
                str(e["trial_id"]),
            )
            for e in raw
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed manifest ({exc})") from None
    seen = set()
    for e in entries:
        if e.path in seen:
            raise FormatError(f"{path}: duplicate trace path {e.path!r}")
        seen.add(e.path)
    rate = doc.get("sample_rate_hz") if isinstance(doc, dict) else None
    return Manifest(entries, path.parent, None if rate is None else float(rate))


@dataclass(frozen=True)
class FeatureRow:
    site_id: str
    trial_id: str
    speed: Optional[float]
    features: FeatureVector
    acf: np.ndarray

    @property
    def base_trial_id(self) -> str:
        return self.trial_id.split(WINDOW_SEPARATOR, 1)[0]


def feature_header(max_lag: int) -> list[str]:
    return list(FEATURE_COLUMNS) + [f"acf_{k}" for k in range(max_lag + 1)]


def write_feature_table(path: Path, rows: Iterable[FeatureRow], max_lag: int) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(feature_header(max_lag))
        for r in rows:
            f = r.features
            writer.writerow(
                [r.site_id, r.trial_id, fmt_float(r.speed),
                 fmt_float(f.mean), fmt_float(f.variance), fmt_float(f.skewness),
                 fmt_float(f.kurtosis), fmt_float(f.min), fmt_float(f.max)]
                + [fmt_float(c) for c in r.acf]
            )


def read_feature_table(path: Path) -> tuple[list[FeatureRow], int]:
    """Parse a feature table; returns the rows and the table's max lag."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in FEATURE_COLUMNS if c not in header]
        if missing:
            raise FormatError(f"{path}: missing columns {missing}")
        acf_cols = [c for c in header if c.startswith("acf_")]
        max_lag = len(acf_cols) - 1
        if acf_cols != [f"acf_{k}" for k in range(max_lag + 1)]:
            raise FormatError(f"{path}: acf columns must run acf_0..acf_N contiguously")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                fv = FeatureVector(*(float(rec[c]) for c in FEATURE_COLUMNS[3:]))
                acf = np.array([float(rec[c]) for c in acf_cols])
                speed = parse_float(rec["speed"] or "")
            except (TypeError, ValueError):
                raise FormatError(f"{path}:{lineno}: malformed feature row") from None
            rows.append(FeatureRow(rec["site_id"], rec["trial_id"], speed, fv, acf))
    return rows, max_lag


def acf_series(row: FeatureRow) -> AcfSeries:
    return AcfSeries(np.arange(row.acf.size), row.acf)

