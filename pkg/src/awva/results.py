"""CSV and JSON artifacts: run records, group aggregates, traces and run metadata."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from awva import __version__
from awva.estimators import lm_settings
from awva.models import (
    UNIT_INTENSITY,
    ExperimentPlan,
    FitResult,
    GroupAggregate,
    RunRecord,
    SensitivityRecord,
    Spectrum,
    TimeGrid,
    Trace,
)
from awva.noise_engine import PRNG_NAME

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = 1

RUN_COLUMNS: tuple[str, ...] = (
    "scheme",
    "tau_s",
    "snr_db_target",
    "snr_db_realized",
    "snr_star_db",
    "seed",
    "sigma2",
    "delta_t0_s",
    "se_t0_s",
    "delta_t_tau_s",
    "se_t_tau_s",
    "k1",
    "e1",
    "theta0",
    "theta_tau",
    "delta_theta",
    "k2_at_report",
    "k2_max",
    "t_at_max_s",
    "valid",
)

AGGREGATE_COLUMNS: tuple[str, ...] = (
    "tau_s",
    "snr_db_target",
    "n_runs",
    "mean_k2",
    "e2",
    "k2_reference",
    "k2_norm",
    "e2_norm",
    "invalid_wva",
    "invalid_awva",
    "mean_dt0_s",
    "e_t0_bar_s",
    "mean_dt_tau_s",
    "e_t_tau_bar_s",
    "delta_dt_bar_s",
    "k1_bar",
    "e1_bar",
    "k1_norm",
    "e1_norm",
    "mean_theta0",
    "e_c0_bar",
    "mean_theta_tau",
    "e_c_tau_bar",
    "delta_theta_bar",
    "k2_bar_bar",
    "e2_bar",
    "rel_rms_k1_valid",
    "rel_rms_k2",
)


class ResultsError(OSError):
    """Artifact file is unreadable or malformed."""


# ---------------------------------------------------------------------------
# Number formatting
# ---------------------------------------------------------------------------


def format_float(value: float | None) -> str:
    """17 significant digits; ``inf``/``-inf``/``nan`` for non-finite; empty for None."""
    if value is None:
        return ""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return "%.17g" % value


def _parse_float(text: str, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ResultsError(f"column {column}: {text!r} is not a number") from None


def _optional_float(text: str, column: str) -> float | None:
    return None if text == "" else _parse_float(text, column)


def _writer(handle: Any) -> Any:
    return csv.writer(handle, lineterminator="\n")


# ---------------------------------------------------------------------------
# Run records
# ---------------------------------------------------------------------------


def record_to_row(record: RunRecord) -> list[str]:
    return [
        record.scheme,
        format_float(record.tau),
        format_float(record.snr_db_target),
        format_float(record.snr_db_realized),
        format_float(record.snr_star_db),
        "" if record.seed is None else str(record.seed),
        format_float(record.sigma2_used),
        format_float(record.fit0.delta_t),
        format_float(record.fit0.se_delta_t),
        format_float(record.fit_tau.delta_t),
        format_float(record.fit_tau.se_delta_t),
        format_float(record.wva.k1),
        format_float(record.wva.e1),
        format_float(record.theta0),
        format_float(record.theta_tau),
        format_float(record.delta_theta),
        format_float(record.awva.k2_at_report),
        format_float(record.awva.k2_max),
        format_float(record.awva.t_at_max),
        "true" if record.wva.valid else "false",
    ]


def _loaded_fit(delta_t: float, se: float) -> FitResult:
    # only the centre and its error are persisted
    return FitResult(
        delta_t=delta_t,
        se_delta_t=se,
        amplitude=math.nan,
        width=math.nan,
        converged=math.isfinite(delta_t),
        iterations=0,
        residual_norm=math.nan,
    )


def record_from_row(row: dict[str, str]) -> RunRecord:
    """Rebuild a RunRecord; AWVA validity is recomputed as ``k2_at_report > 0``."""
    if row.get("valid") not in ("true", "false"):
        raise ResultsError(f"column valid: {row.get('valid')!r} is not true/false")
    seed_text = row["seed"]
    try:
        seed = None if seed_text == "" else int(seed_text)
    except ValueError:
        raise ResultsError(f"column seed: {seed_text!r} is not an integer") from None

    f = {c: _optional_float(row[c], c) for c in RUN_COLUMNS if c not in ("scheme", "seed", "valid")}

    def req(column: str) -> float:
        value = f[column]
        if value is None:
            raise ResultsError(f"column {column} is empty")
        return value

    k2_at_report = f["k2_at_report"]
    return RunRecord(
        tau=req("tau_s"),
        snr_db_target=f["snr_db_target"],
        snr_db_realized=f["snr_db_realized"],
        snr_star_db=f["snr_star_db"],
        seed=seed,
        sigma2_used=f["sigma2"],
        fit0=_loaded_fit(req("delta_t0_s"), req("se_t0_s")),
        fit_tau=_loaded_fit(req("delta_t_tau_s"), req("se_t_tau_s")),
        wva=SensitivityRecord(k1=f["k1"], e1=f["e1"], valid=row["valid"] == "true"),
        theta0=req("theta0"),
        theta_tau=req("theta_tau"),
        delta_theta=req("delta_theta"),
        awva=SensitivityRecord(
            k2_at_report=k2_at_report,
            k2_max=f["k2_max"],
            t_at_max=f["t_at_max_s"],
            valid=k2_at_report is not None and k2_at_report > 0,
        ),
        scheme=row["scheme"],
    )


def write_runs_csv(records: Sequence[RunRecord], path: Path) -> None:
    if not records:
        raise ValueError("no run records to write")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(RUN_COLUMNS)
        for record in records:
            writer.writerow(record_to_row(record))
    logger.info("Wrote %d run records to %s", len(records), path)


def read_runs_csv(path: Path) -> list[RunRecord]:
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != RUN_COLUMNS:
                raise ResultsError(f"{path}: header does not match the runs schema")
            return [record_from_row(row) for row in reader]
    except (KeyError, csv.Error) as exc:
        raise ResultsError(f"{path}: malformed runs file ({exc})") from exc


# ---------------------------------------------------------------------------
# Aggregates
# ---------------------------------------------------------------------------


def aggregate_to_row(agg: GroupAggregate) -> list[str]:
    cs = agg.cross_seed
    cross = (
        [
            cs.mean_dt0, cs.e_t0_bar, cs.mean_dt_tau, cs.e_t_tau_bar, cs.delta_dt_bar,
            cs.k1_bar, cs.e1_bar, agg.k1_norm, agg.e1_norm,
            cs.mean_theta0, cs.e_c0_bar, cs.mean_theta_tau, cs.e_c_tau_bar,
            cs.delta_theta_bar, cs.k2_bar_bar, cs.e2_bar,
        ]
        if cs is not None
        else [None] * 16
    )
    return [
        format_float(agg.tau),
        format_float(agg.snr_db_target),
        str(agg.n_runs),
        format_float(agg.ensemble.mean_k2),
        format_float(agg.ensemble.e2),
        format_float(agg.k2_reference),
        format_float(agg.k2_norm),
        format_float(agg.e2_norm),
        str(agg.invalid_wva),
        str(agg.invalid_awva),
        *(format_float(v) for v in cross),
        format_float(agg.headline.rel_rms_k1_valid),
        format_float(agg.headline.rel_rms_k2),
    ]


def write_aggregates_csv(aggregates: Sequence[GroupAggregate], path: Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for agg in aggregates:
            writer.writerow(aggregate_to_row(agg))
    logger.info("Wrote %d aggregate rows to %s", len(aggregates), path)


# ---------------------------------------------------------------------------
# Traces and spectra
# ---------------------------------------------------------------------------


def write_trace_csv(trace: Trace, path: Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(("t_s", "value"))
        for t, v in zip(trace.times, trace.values):
            writer.writerow((format_float(float(t)), format_float(float(v))))


def read_trace_csv(path: Path, unit: str = UNIT_INTENSITY) -> Trace:
    """Load a ``t_s,value`` file; the grid is rebuilt from the first/last sample times."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t_s", "value"]:
            raise ResultsError(f"{path}: expected header t_s,value")
        times: list[float] = []
        values: list[float] = []
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ResultsError(f"{path}:{reader.line_num}: expected two columns")
            times.append(_parse_float(row[0], "t_s"))
            values.append(_parse_float(row[1], "value"))
    if len(times) < 2:
        raise ResultsError(f"{path}: a trace needs at least two samples")

    t = np.asarray(times)
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if dt <= 0:
        raise ResultsError(f"{path}: sample times must increase")
    spacing = np.diff(t)
    if float(np.max(np.abs(spacing - dt))) > 1e-6 * dt:
        logger.warning("%s: irregular sample spacing; assuming uniform dt=%.6g", path, dt)
    grid = TimeGrid(t_start=float(t[0]), t_end=float(t[-1]), dt=float(dt))
    if grid.n != len(values):
        raise ResultsError(f"{path}: {len(values)} samples do not fit a uniform grid")
    try:
        return Trace(grid, np.asarray(values), unit)
    except ValueError as exc:
        raise ResultsError(f"{path}: {exc}") from exc


def write_spectrum_csv(spec: Spectrum, path: Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = _writer(fh)
        writer.writerow(("freq_hz", "psd", "magnitude"))
        for f, p, m in zip(spec.freqs, spec.psd, spec.magnitude):
            writer.writerow((format_float(float(f)), format_float(float(p)), format_float(float(m))))


# ---------------------------------------------------------------------------
# Metadata
# ---------------------------------------------------------------------------


def build_metadata(
    plan: ExperimentPlan | None, grid: TimeGrid | None = None, **extra: Any
) -> dict[str, Any]:
    """Reproduction block for one CLI run.

    Trace tools have no plan; they pass the grid of the trace they read.
    """
    if grid is None:
        if plan is None:
            raise ValueError("metadata needs a plan or a grid")
        grid = plan.grid
    return {
        "artifact_version": ARTIFACT_VERSION,
        "awva_version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "prng": PRNG_NAME,
        "dt": grid.dt,
        "grid": grid.to_dict(),
        "lm": lm_settings(),
        "plan": plan.to_dict() if plan is not None else None,
        **extra,
    }


def write_metadata(
    plan: ExperimentPlan | None, path: Path, grid: TimeGrid | None = None, **extra: Any
) -> None:
    path = Path(path)
    path.write_text(json.dumps(build_metadata(plan, grid, **extra), indent=2) + "\n", encoding="utf-8")


def read_metadata_plan(path: Path) -> ExperimentPlan:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data["plan"] is None:
            raise ResultsError(f"{path}: metadata holds no experiment plan")
        return ExperimentPlan.from_dict(data["plan"])
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise ResultsError(f"{path}: malformed metadata ({exc})") from exc
