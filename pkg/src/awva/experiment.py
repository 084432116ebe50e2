"""Monte Carlo orchestration: single runs, seed ensembles, cross-seed statistics, sweeps."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from awva.estimators import (
    DegenerateInputError,
    fit_gaussian,
    k1_sensitivity,
    k2_curve,
    sensitivity_from_curve,
    theta_curve,
)
from awva.models import (
    ConfigurationError,
    CouplingConfig,
    CrossSeedStats,
    EnsembleStats,
    ExperimentPlan,
    FitResult,
    GroupAggregate,
    HeadlineComparison,
    K2Statistic,
    NoisePairing,
    NoiseSpec,
    PointerConfig,
    RunRecord,
    SensitivityCurve,
    ThetaCurve,
    TimeGrid,
    Trace,
)
from awva.noise_engine import arm_factor, gen_noise, inject, resolve_noise, scale, snr_db
from awva.signal_model import synth_outputs, theoretical_k1, theoretical_k2

logger = logging.getLogger(__name__)

# Noise stream per detector role; with shared pairing every role reads stream 0.
STREAM_WVA_TAU = 0
STREAM_WVA_BASE = 1
STREAM_ARM21_TAU = 2
STREAM_ARM22_TAU = 3
STREAM_ARM21_BASE = 4
STREAM_ARM22_BASE = 5

NOISELESS = math.inf


class GroupingError(ValueError):
    """Records passed to a group statistic do not share (tau, SNR)."""


@dataclass(frozen=True, slots=True)
class RunArtifacts:
    """Noisy traces and curves behind one RunRecord."""

    record: RunRecord
    i1_base: Trace
    i1_tau: Trace
    arm21: Trace
    arm22: Trace
    noise: Trace | None
    theta0: ThetaCurve
    theta_tau: ThetaCurve
    k2: SensitivityCurve


@dataclass(frozen=True, slots=True)
class SweepResult:
    records: tuple[RunRecord, ...]
    aggregates: tuple[GroupAggregate, ...]

    @property
    def all_nonconverged(self) -> bool:
        noisy = [r for r in self.records if not r.is_baseline] or list(self.records)
        return bool(noisy) and not any(r.converged for r in noisy)


# ---------------------------------------------------------------------------
# Single run
# ---------------------------------------------------------------------------


class _NoiseSource:
    """Noise per detector role for one resolved NoiseSpec."""

    def __init__(self, grid: TimeGrid, spec: NoiseSpec, pairing: NoisePairing) -> None:
        self._grid = grid
        self._spec = spec
        self._pairing = pairing
        self._cache: dict[int, Trace] = {}

    def stream_for(self, role: int) -> int:
        return role if self._pairing is NoisePairing.INDEPENDENT else 0

    def trace(self, role: int) -> Trace:
        stream = self.stream_for(role)
        if stream not in self._cache:
            self._cache[stream] = gen_noise(self._grid, self._spec, stream)
        return self._cache[stream]

    def arm_trace(self, role: int) -> Trace:
        return scale(self.trace(role), arm_factor(self._spec))


def _safe_fit(trace: Trace, pointer: PointerConfig, offset: bool) -> FitResult:
    try:
        return fit_gaussian(trace, pointer, offset=offset)
    except DegenerateInputError as exc:
        logger.warning("Fit skipped: %s", exc)
        return FitResult.failed()


def simulate_run(
    plan: ExperimentPlan, tau: float, snr_db_target: float, seed: int | None
) -> RunArtifacts:
    """Synthesize, inject noise, and run both estimators for one (tau, SNR, seed).

    ``snr_db_target = inf`` (or ``seed = None``) is the noiseless baseline;
    any other target must be finite.
    """
    if math.isnan(snr_db_target) or snr_db_target == -math.inf:
        raise ConfigurationError("snr_db", "must be finite, or inf for a noiseless run")
    grid, pointer, selection = plan.grid, plan.pointer, plan.selection
    shifted = synth_outputs(grid, pointer, selection, CouplingConfig(tau))
    base = synth_outputs(grid, pointer, selection, CouplingConfig(0.0))

    i1_base, i1_tau = base.i1, shifted.i1
    arm21_base, arm22_base = base.i21, base.i22
    arm21, arm22 = shifted.i21, shifted.i22
    noise: Trace | None = None
    sigma2: float | None = None
    realized: float | None = None
    star: float | None = None
    target: float | None = None
    run_seed: int | None = None

    if seed is not None and snr_db_target != NOISELESS:
        target, run_seed = snr_db_target, seed
        request = NoiseSpec(seed=seed, target_snr_db=target, injection=plan.noise_injection)
        spec = resolve_noise(request, shifted.i1, stream=STREAM_WVA_TAU)
        sigma2 = spec.sigma2
        logger.info("tau=%g snr=%g seed=%d: sigma2=%.6g", tau, target, seed, sigma2)
        source = _NoiseSource(grid, spec, plan.noise_pairing)

        noise = source.trace(STREAM_WVA_TAU)
        i1_tau = inject(i1_tau, noise)
        i1_base = inject(i1_base, source.trace(STREAM_WVA_BASE))
        arm_noise = scale(noise, arm_factor(spec))
        arm21 = inject(arm21, source.arm_trace(STREAM_ARM21_TAU))
        arm22 = inject(arm22, source.arm_trace(STREAM_ARM22_TAU))
        arm21_base = inject(arm21_base, source.arm_trace(STREAM_ARM21_BASE))
        arm22_base = inject(arm22_base, source.arm_trace(STREAM_ARM22_BASE))

        realized = snr_db(shifted.i1, noise)
        star = snr_db(shifted.i21, arm_noise)

    fit0 = _safe_fit(i1_base, pointer, plan.fit_offset)
    fit_tau = _safe_fit(i1_tau, pointer, plan.fit_offset)
    wva = k1_sensitivity(fit0, fit_tau, tau)

    theta0 = theta_curve(arm21_base, arm22_base)
    theta_tau = theta_curve(arm21, arm22)
    curve = k2_curve(theta0, theta_tau, tau)
    awva = sensitivity_from_curve(curve, plan.report_time)

    if not wva.valid:
        logger.warning(
            "Invalid WVA run tau=%g snr=%s seed=%s: k1=%.4g e1=%.4g", tau, target, run_seed, wva.k1, wva.e1
        )

    theta0_at = theta0.at(plan.report_time)
    theta_tau_at = theta_tau.at(plan.report_time)
    record = RunRecord(
        tau=tau,
        snr_db_target=target,
        snr_db_realized=realized,
        snr_star_db=star,
        seed=run_seed,
        sigma2_used=sigma2,
        fit0=fit0,
        fit_tau=fit_tau,
        wva=wva,
        theta0=theta0_at,
        theta_tau=theta_tau_at,
        delta_theta=theta0_at - theta_tau_at,
        awva=awva,
    )
    return RunArtifacts(record, i1_base, i1_tau, arm21, arm22, noise, theta0, theta_tau, curve)


def run_single(plan: ExperimentPlan, tau: float, snr_db: float, seed: int | None) -> RunRecord:
    return simulate_run(plan, tau, snr_db, seed).record


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def _mean_and_max_dev(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(np.mean(arr))
    return mean, float(np.max(np.abs(arr - mean)))


def ensemble_stats(per_seed: Sequence[float]) -> EnsembleStats:
    """Mean of per-seed K2 values and the maximum absolute deviation from it."""
    if len(per_seed) == 0:
        raise ConfigurationError("seeds", "at least one seed is required")
    mean, dev = _mean_and_max_dev(per_seed)
    return EnsembleStats(mean_k2=mean, e2=dev, per_seed=tuple(float(v) for v in per_seed))


def ensemble_from_records(
    records: Sequence[RunRecord], statistic: K2Statistic = K2Statistic.AT_REPORT
) -> EnsembleStats:
    return ensemble_stats([r.awva.k2(statistic) for r in records])


def run_ensemble(plan: ExperimentPlan, tau: float, snr_db: float) -> EnsembleStats:
    if not plan.seeds:
        raise ConfigurationError("seeds", "at least one seed is required")
    records = [run_single(plan, tau, snr_db, seed) for seed in plan.seeds]
    return ensemble_from_records(records, plan.k2_statistic)


def _check_group(records: Sequence[RunRecord]) -> tuple[float, float | None]:
    keys = {r.group_key() for r in records}
    if len(keys) != 1:
        raise GroupingError(f"records span {len(keys)} (tau, snr) groups; expected one")
    return next(iter(keys))


def cross_seed_stats(records: Sequence[RunRecord]) -> CrossSeedStats:
    """Averages over seeds first, then differences and sensitivities of the means."""
    if len(records) < 2:
        raise GroupingError("cross-seed statistics need at least two records")
    tau, _ = _check_group(records)
    if tau == 0:
        raise ZeroDivisionError("tau must be nonzero to form a sensitivity")
    mean_dt0, e_t0 = _mean_and_max_dev([r.fit0.delta_t for r in records])
    mean_dt_tau, e_t_tau = _mean_and_max_dev([r.fit_tau.delta_t for r in records])
    mean_theta0, e_c0 = _mean_and_max_dev([r.theta0 for r in records])
    mean_theta_tau, e_c_tau = _mean_and_max_dev([r.theta_tau for r in records])
    delta_dt = mean_dt_tau - mean_dt0
    delta_theta = mean_theta0 - mean_theta_tau
    return CrossSeedStats(
        tau=tau,
        mean_dt0=mean_dt0,
        e_t0_bar=e_t0,
        mean_dt_tau=mean_dt_tau,
        e_t_tau_bar=e_t_tau,
        delta_dt_bar=delta_dt,
        k1_bar=delta_dt / tau,
        e1_bar=(e_t0 + e_t_tau) / abs(tau),
        mean_theta0=mean_theta0,
        e_c0_bar=e_c0,
        mean_theta_tau=mean_theta_tau,
        e_c_tau_bar=e_c_tau,
        delta_theta_bar=delta_theta,
        k2_bar_bar=delta_theta / tau,
        e2_bar=(e_c0 + e_c_tau) / abs(tau),
    )


def _rel_rms(values: Sequence[float], reference: float) -> float:
    if not values or reference == 0:
        return math.nan
    arr = np.asarray(values, dtype=np.float64)
    return float(np.sqrt(np.mean((arr - reference) ** 2)) / abs(reference))


def headline_comparison(
    records: Sequence[RunRecord],
    k2_reference: float,
    amplification: float,
    statistic: K2Statistic = K2Statistic.AT_REPORT,
) -> HeadlineComparison:
    """Relative RMS of K2 about *k2_reference* against valid-only K1 about G."""
    k2_values = [r.awva.k2(statistic) for r in records]
    k1_values = [r.wva.k1 for r in records if r.wva.valid and r.wva.k1 is not None]
    return HeadlineComparison(
        rel_rms_k2=_rel_rms(k2_values, k2_reference),
        rel_rms_k1_valid=_rel_rms(k1_values, amplification),
        n_valid_k1=len(k1_values),
        n_runs=len(records),
    )


def invalid_counts(records: Iterable[RunRecord]) -> tuple[int, int]:
    """``(invalid WVA runs, invalid AWVA runs)``."""
    wva = awva = 0
    for r in records:
        wva += not r.wva.valid
        awva += not r.awva.valid
    return wva, awva


def aggregate_group(
    records: Sequence[RunRecord],
    plan: ExperimentPlan,
    k2_reference: float | None = None,
) -> GroupAggregate:
    tau, snr = _check_group(records)
    if k2_reference is None:
        k2_reference = theoretical_k2(plan.grid, plan.pointer, plan.selection, tau, plan.report_time)
    g = theoretical_k1(plan.selection)
    invalid_wva, invalid_awva = invalid_counts(records)
    return GroupAggregate(
        tau=tau,
        snr_db_target=snr,
        n_runs=len(records),
        ensemble=ensemble_from_records(records, plan.k2_statistic),
        cross_seed=cross_seed_stats(records) if len(records) >= 2 else None,
        invalid_wva=invalid_wva,
        invalid_awva=invalid_awva,
        k2_reference=k2_reference,
        amplification=g,
        headline=headline_comparison(records, k2_reference, g, plan.k2_statistic),
    )


def aggregate(records: Sequence[RunRecord], plan: ExperimentPlan) -> tuple[GroupAggregate, ...]:
    """One aggregate per noisy (tau, SNR) group, in first-seen order.

    The noiseless baseline of a tau, when present, is the K2 reference;
    otherwise the closed form is used.
    """
    references: dict[float, float] = {}
    groups: dict[tuple[float, float | None], list[RunRecord]] = {}
    for r in records:
        if r.is_baseline:
            references[r.tau] = r.awva.k2(plan.k2_statistic)
        else:
            groups.setdefault(r.group_key(), []).append(r)
    return tuple(
        aggregate_group(group, plan, references.get(key[0])) for key, group in groups.items()
    )


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


def sweep_tasks(plan: ExperimentPlan) -> list[tuple[float, float, int | None]]:
    """Every (tau, snr, seed) of the plan: per tau the noiseless baseline, then the grid."""
    tasks: list[tuple[float, float, int | None]] = []
    for tau in plan.taus:
        tasks.append((tau, NOISELESS, None))
        for snr in plan.snr_targets_db:
            tasks.extend((tau, snr, seed) for seed in plan.seeds)
    return tasks


def _run_task(args: tuple[ExperimentPlan, float, float, int | None]) -> RunRecord:
    plan, tau, snr, seed = args
    return run_single(plan, tau, snr, seed)


def sweep(plan: ExperimentPlan, workers: int = 1) -> SweepResult:
    """Run the whole plan; record order is fixed by the plan, not by execution."""
    tasks = sweep_tasks(plan)
    logger.info("Sweep: %d runs on %d worker(s)", len(tasks), workers)
    results: list[RunRecord | None] = [None] * len(tasks)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_run_task, (plan, tau, snr, seed)): i
                for i, (tau, snr, seed) in enumerate(tasks)
            }
            for future in as_completed(futures):
                results[futures[future]] = future.result()
    else:
        for i, (tau, snr, seed) in enumerate(tasks):
            results[i] = run_single(plan, tau, snr, seed)
    records = tuple(r for r in results if r is not None)
    return SweepResult(records=records, aggregates=aggregate(records, plan))
