"""``rssi-mobility`` command line: simulate -> features -> fit -> estimate -> evaluate.

Exit codes: 0 success, 2 configuration, 3 trace, 4 fit, 5 model lookup,
6 join failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from collections import OrderedDict
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .channel_sim import SimConfig, simulate_trace
from .errors import ConfigInvalid, NonConvergenceWarning, RssiMobilityError
from .estimation import (
    SiteModels,
    builtin_registry,
    estimate_speed_from_max,
    estimate_speed_from_min,
    evaluate,
    registry_from_dict,
    registry_to_dict,
)
from .features import AcfSeries, compute_acf, default_max_lag, extract_features
from .fitting import XYPoint, fit_linear, fit_power_law
from .formats import (
    WINDOW_SEPARATOR,
    FeatureRow,
    FormatError,
    ManifestEntry,
    fmt_float,
    read_feature_table,
    read_manifest,
    read_trace_csv,
    write_feature_table,
    write_manifest,
    write_trace_csv,
)
from .trace import RssiTrace, TrialMeta, validate_trace

log = logging.getLogger("rssi_mobility")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRACE = 3
EXIT_FIT = 4
EXIT_MODEL = 5
EXIT_JOIN = 6

SEED_ENV = "RSSI_MOBILITY_SEED"
FIELD_SPEEDS = (0.6, 1.0, 1.42, 2.0, 3.0, 3.75)

DEFAULT_SIM_CONFIG = {
    "seed": 0,
    "speeds": list(FIELD_SPEEDS),
    "trials": 3,
    "sites": {"site1": {}},
    "channel": {},
}

_CHANNEL_KEYS = {f.name for f in fields(SimConfig)} - {"speed", "seed"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# -- simulate ----------------------------------------------------------------

def _load_sim_config(path: Optional[str]) -> dict:
    if path is None:
        doc = json.loads(json.dumps(DEFAULT_SIM_CONFIG))
    else:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_CONFIG, f"config: cannot read {path}: {exc}")
        if not isinstance(doc, dict):
            raise CliError(EXIT_CONFIG, "config: top level must be a JSON object")
    unknown = set(doc) - set(DEFAULT_SIM_CONFIG)
    if unknown:
        raise CliError(EXIT_CONFIG, f"config: unknown field(s) {sorted(unknown)}")
    cfg = {**DEFAULT_SIM_CONFIG, **doc}

    speeds = cfg["speeds"]
    if not isinstance(speeds, list) or not speeds:
        raise CliError(EXIT_CONFIG, "speeds: must be a non-empty list")
    for v in speeds:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise CliError(EXIT_CONFIG, f"speed: every speed must be > 0, got {v!r}")
    if len(set(speeds)) != len(speeds):
        raise CliError(EXIT_CONFIG, "speeds: duplicate speed values")
    trials = cfg["trials"]
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise CliError(EXIT_CONFIG, f"trials: must be an integer >= 1, got {trials!r}")
    if not isinstance(cfg["sites"], dict) or not cfg["sites"]:
        raise CliError(EXIT_CONFIG, "sites: must be a non-empty object")
    for block_name, block in [("channel", cfg["channel"])] + [
        (f"sites.{k}", v) for k, v in cfg["sites"].items()
    ]:
        if not isinstance(block, dict):
            raise CliError(EXIT_CONFIG, f"{block_name}: must be an object")
        bad = set(block) - _CHANNEL_KEYS
        if bad:
            raise CliError(EXIT_CONFIG, f"{block_name}: unknown field(s) {sorted(bad)}")
    return cfg


def _resolve_seed(cfg_seed, flag_seed: Optional[int]) -> int:
    if flag_seed is not None:
        seed = flag_seed
    elif os.environ.get(SEED_ENV, "").strip():
        raw = os.environ[SEED_ENV].strip()
        try:
            seed = int(raw)
        except ValueError:
            raise CliError(EXIT_CONFIG, f"seed: {SEED_ENV}={raw!r} is not an integer")
    else:
        seed = cfg_seed
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise CliError(EXIT_CONFIG, f"seed: must be a non-negative integer, got {seed!r}")
    return seed


def _trace_seed(base: int, site_index: int, trial: int) -> int:
    # Shared by every speed of a (site, trial): the same environment walked
    # at different speeds.
    return int(np.random.SeedSequence([base, site_index, trial]).generate_state(1)[0])


def _speed_tag(v: float) -> str:
    return format(float(v), "g")


def cmd_simulate(args) -> int:
    cfg = _load_sim_config(args.config)
    seed = _resolve_seed(cfg["seed"], args.seed)
    out = Path(args.out)
    traces_dir = out / "traces"
    jobs = []
    for site_index, (site_id, overrides) in enumerate(cfg["sites"].items()):
        for v in cfg["speeds"]:
            for trial in range(cfg["trials"]):
                params = {**cfg["channel"], **overrides, "speed": float(v),
                          "seed": _trace_seed(seed, site_index, trial)}
                try:
                    sim_cfg = SimConfig(**params)
                except ConfigInvalid as exc:
                    raise CliError(EXIT_CONFIG, f"{exc.field}: {exc} (site {site_id})")
                except TypeError as exc:
                    raise CliError(EXIT_CONFIG, f"channel: {exc}")
                trial_id = f"v{_speed_tag(v)}_t{trial}"
                jobs.append((site_id, trial_id, sim_cfg))

    rates = {j[2].sample_rate for j in jobs}
    try:
        traces_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"out: cannot create {traces_dir}: {exc}")
    entries = []
    for site_id, trial_id, sim_cfg in jobs:
        trace = simulate_trace(sim_cfg, site_id, trial_id)
        rel = Path("traces") / f"{site_id}_{trial_id}.csv"
        write_trace_csv(out / rel, trace)
        entries.append(ManifestEntry(rel.as_posix(), site_id, sim_cfg.speed, trial_id))
    write_manifest(out / "manifest.json", entries, rates.pop() if len(rates) == 1 else None)
    log.info("wrote %d traces to %s", len(entries), traces_dir)
    return EXIT_OK


# -- features ----------------------------------------------------------------

def split_windows(trace: RssiTrace, window_s: float) -> list[RssiTrace]:
    """Consecutive windows of ``window_s`` seconds; a trailing partial window
    (one the trace does not span to its end) is dropped."""
    t = trace.timestamps
    if t.size == 0:
        return []
    t0, t_end = t[0], t[-1]
    pieces = []
    k = 0
    while t0 + (k + 1) * window_s <= t_end + 1e-9 * window_s:
        lo, hi = t0 + k * window_s, t0 + (k + 1) * window_s
        mask = (t >= lo) & (t < hi)
        meta = TrialMeta(trace.meta.site_id, trace.meta.nominal_speed,
                         f"{trace.meta.trial_id}{WINDOW_SEPARATOR}{k}")
        pieces.append(RssiTrace(t[mask], trace.rssi[mask], meta))
        k += 1
    return pieces


def _load_manifest_traces(manifest_path: str) -> tuple[list[RssiTrace], Optional[float]]:
    try:
        manifest = read_manifest(Path(manifest_path))
    except (OSError, FormatError) as exc:
        raise CliError(EXIT_TRACE, f"manifest: {exc}")
    traces, problems = [], []
    for e in manifest.entries:
        meta = TrialMeta(e.site_id, e.nominal_speed, e.trial_id)
        try:
            traces.append(read_trace_csv(manifest.resolve(e), meta))
        except (OSError, FormatError) as exc:
            problems.append(f"{e.path}: {exc}")
    if problems:
        raise CliError(EXIT_TRACE, "invalid traces:\n  " + "\n  ".join(problems))
    return traces, manifest.sample_rate_hz


def cmd_features(args) -> int:
    traces, _ = _load_manifest_traces(args.manifest)
    if args.window is not None:
        if args.window <= 0:
            raise CliError(EXIT_CONFIG, "window: must be > 0 seconds")
        traces = [w for tr in traces for w in split_windows(tr, args.window)]
    if args.max_lag is not None and args.max_lag < 1:
        raise CliError(EXIT_CONFIG, "max-lag: must be >= 1")

    problems = []
    for tr in traces:
        report = validate_trace(tr)
        if not report.ok:
            problems.append(f"{tr.meta.site_id}/{tr.meta.trial_id}: " + "; ".join(report.messages()))
    if problems:
        raise CliError(EXIT_TRACE, "invalid traces:\n  " + "\n  ".join(problems))
    if not traces:
        raise CliError(EXIT_TRACE, "no traces to process")

    max_lag = args.max_lag
    if max_lag is None:
        max_lag = max(1, default_max_lag(min(len(tr) for tr in traces)))

    rows, problems = [], []
    for tr in traces:
        try:
            fv = extract_features(tr)
            acf = compute_acf(tr, max_lag)
        except RssiMobilityError as exc:
            problems.append(f"{tr.meta.site_id}/{tr.meta.trial_id}: {exc}")
            continue
        rows.append(FeatureRow(tr.meta.site_id, tr.meta.trial_id,
                               tr.meta.nominal_speed, fv, acf.coefficients))
    if problems:
        raise CliError(EXIT_TRACE, "invalid traces:\n  " + "\n  ".join(problems))
    write_feature_table(Path(args.out), rows, max_lag)
    return EXIT_OK


# -- fit ---------------------------------------------------------------------

def _read_table(path: str) -> tuple[list[FeatureRow], int]:
    try:
        return read_feature_table(Path(path))
    except (OSError, FormatError) as exc:
        raise CliError(EXIT_CONFIG, f"feature table: {exc}")


def _group_by_site(rows: Sequence[FeatureRow]) -> "OrderedDict[str, list[FeatureRow]]":
    groups: OrderedDict[str, list[FeatureRow]] = OrderedDict()
    for r in rows:
        groups.setdefault(r.site_id, []).append(r)
    return groups


def fit_site(rows: Sequence[FeatureRow], max_lag: int, per_trial: bool = False) -> SiteModels:
    unlabeled = [r.trial_id for r in rows if r.speed is None]
    if unlabeled:
        raise CliError(EXIT_FIT, f"rows without speed labels: {unlabeled}")
    by_speed: dict[float, list[FeatureRow]] = {}
    for r in rows:
        by_speed.setdefault(r.speed, []).append(r)
    speeds = sorted(by_speed)
    if len(speeds) < 3:
        raise CliError(EXIT_FIT, f"site {rows[0].site_id!r} has {len(speeds)} distinct speed(s); need >= 3")

    if per_trial:
        max_pts = [XYPoint(r.speed, r.features.max) for r in rows]
        min_pts = [XYPoint(r.speed, r.features.min) for r in rows]
    else:
        max_pts = [XYPoint(v, float(np.mean([r.features.max for r in by_speed[v]]))) for v in speeds]
        min_pts = [XYPoint(v, float(np.mean([r.features.min for r in by_speed[v]]))) for v in speeds]

    if max_lag < 4:
        raise CliError(EXIT_FIT, f"power-law fit needs max_lag >= 4, table has {max_lag}")
    acf_models = []
    for v in speeds:
        mean_acf = np.mean([r.acf for r in by_speed[v]], axis=0)
        acf_models.append(fit_power_law(AcfSeries(np.arange(max_lag + 1), mean_acf), (1, max_lag)))
    return SiteModels(fit_linear(max_pts), fit_linear(min_pts), tuple(acf_models), tuple(speeds))


def cmd_fit(args) -> int:
    rows, max_lag = _read_table(args.table)
    if not rows:
        raise CliError(EXIT_FIT, "feature table is empty")
    registry = OrderedDict()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergenceWarning)
        for site_id, site_rows in _group_by_site(rows).items():
            try:
                registry[site_id] = fit_site(site_rows, max_lag, args.per_trial)
            except RssiMobilityError as exc:
                raise CliError(EXIT_FIT, f"site {site_id!r}: {exc}")
    for w in caught:
        log.warning("%s", w.message)
    meta = {"max_lag": max_lag, "sample_rate_hz": args.sample_rate,
            "aggregation": "per_trial" if args.per_trial else "per_speed_mean"}
    doc = registry_to_dict(registry, meta)
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


# -- estimate ----------------------------------------------------------------

def load_registry(source: str) -> dict[str, SiteModels]:
    if source == "builtin":
        return builtin_registry()
    try:
        return registry_from_dict(json.loads(Path(source).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"model: cannot load {source}: {exc}")


ESTIMATE_HEADER = ("site_id", "trial_id", "speed", "feature", "value", "v_est", "out_of_domain")


def cmd_estimate(args) -> int:
    registry = load_registry(args.model)
    rows, _ = _read_table(args.table)
    missing = sorted({r.site_id for r in rows} - set(registry))
    if missing:
        raise CliError(EXIT_MODEL, f"site(s) not in model file: {missing}")
    out_rows = []
    for r in rows:
        sm = registry[r.site_id]
        try:
            if args.feature == "max":
                est = estimate_speed_from_max(r.features.max, sm.max_model, r.site_id)
                value = r.features.max
            else:
                est = estimate_speed_from_min(r.features.min, sm.min_model, r.site_id)
                value = r.features.min
        except RssiMobilityError as exc:
            raise CliError(EXIT_MODEL, f"site {r.site_id!r}: {exc}")
        out_rows.append((r.site_id, r.trial_id, fmt_float(r.speed), est.feature_used,
                         fmt_float(value), fmt_float(est.v), "true" if est.out_of_domain else "false"))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ESTIMATE_HEADER)
        writer.writerows(out_rows)
    return EXIT_OK


# -- evaluate ----------------------------------------------------------------

def _read_estimates(path: str) -> list[dict]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in ("site_id", "trial_id", "v_est") if c not in (reader.fieldnames or [])]
            if missing:
                raise CliError(EXIT_CONFIG, f"estimates: missing columns {missing}")
            return list(reader)
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"estimates: {exc}")


def cmd_evaluate(args) -> int:
    est_rows = _read_estimates(args.estimates)
    try:
        manifest = read_manifest(Path(args.manifest))
    except (OSError, FormatError) as exc:
        raise CliError(EXIT_CONFIG, f"manifest: {exc}")
    truth = {(e.site_id, e.trial_id): e.nominal_speed for e in manifest.entries}

    unmatched = []
    pairs = []
    for row in est_rows:
        key = (row["site_id"], row["trial_id"].split(WINDOW_SEPARATOR, 1)[0])
        speed = truth.get(key)
        if speed is None:
            unmatched.append(f"{key[0]}/{key[1]}")
            continue
        pairs.append((float(row["v_est"]), speed, row.get("out_of_domain", "false") == "true"))
    if unmatched:
        raise CliError(EXIT_JOIN, "unjoinable estimate rows (site/trial_id): " + ", ".join(unmatched))
    if not pairs:
        raise CliError(EXIT_JOIN, "no estimate rows to evaluate")

    est = [p[0] for p in pairs]
    true = [p[1] for p in pairs]
    rmse, mre = evaluate(est, true)
    per_speed = []
    for v in sorted(set(true)):
        sel = [i for i, t in enumerate(true) if t == v]
        r, m = evaluate([est[i] for i in sel], [true[i] for i in sel])
        per_speed.append({"speed": v, "n": len(sel), "rmse": r, "mean_relative_error": m})
    features = sorted({row.get("feature", "") for row in est_rows} - {""})
    doc = {
        "n": len(pairs),
        "rmse": rmse,
        "mean_relative_error": mre,
        "out_of_domain": sum(p[2] for p in pairs),
        "feature": features[0] if len(features) == 1 else features,
        "per_speed": per_speed,
    }
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rssi-mobility",
        description="Estimate receiver speed from RSSI time series.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic labelled traces")
    p.add_argument("--config", help="JSON simulation config (built-in default if omitted)")
    p.add_argument("--seed", type=int, help=f"overrides the config seed and ${SEED_ENV}")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("features", help="compute per-trace time-domain features")
    p.add_argument("manifest")
    p.add_argument("--max-lag", type=int, help="default: min(50, shortest trace length / 4)")
    p.add_argument("--window", type=float, help="split traces into windows of this many seconds")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("fit", help="fit linear and power-law models per site")
    p.add_argument("table")
    p.add_argument("--per-trial", action="store_true",
                   help="fit every trial as its own point instead of per-speed means")
    p.add_argument("--sample-rate", type=float, help="recorded in the model file meta")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("estimate", help="invert site models to estimate speed")
    p.add_argument("table")
    p.add_argument("--model", required=True, help="model JSON file, or 'builtin'")
    p.add_argument("--feature", choices=("max", "min"), default="max")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="score estimates against manifest speeds")
    p.add_argument("estimates")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
