"""Shared test fixtures for awva tests."""

from __future__ import annotations

import math
from collections.abc import Callable
from pathlib import Path

import pytest

from awva.models import (
    ExperimentPlan,
    FitResult,
    PointerConfig,
    RunRecord,
    SelectionConfig,
    SensitivityRecord,
    TimeGrid,
)

# Reference measurement block at 6.6 dB, tau = 3e-9 s, seeds 0..600.
REFERENCE_DT0 = (9.20e-7, 1.25e-6, 2.33e-6, -1.30e-7, -2.90e-7, 2.99e-6, -7.90e-7)
REFERENCE_DT_TAU = (3.07e-5, 3.11e-5, 3.23e-5, 2.97e-5, 2.98e-5, 3.32e-5, 2.92e-5)
REFERENCE_THETA0 = (1.3979e-9, 1.4028e-9, 1.3603e-9, 1.4412e-9, 1.4050e-9, 1.3552e-9, 1.4176e-9)
REFERENCE_THETA_TAU = (1.3211e-9, 1.3255e-9, 1.2841e-9, 1.3623e-9, 1.3264e-9, 1.2784e-9, 1.3393e-9)
REFERENCE_K2 = (0.0256, 0.0257, 0.0254, 0.0263, 0.0262, 0.0256, 0.0261)

SMALL_CONFIG = """\
[time]
dt = 1e-6

[experiment]
taus = [3e-9, 6e-9]

[noise]
snr_targets_db = [6.6, -3.3]
seeds = [0, 100]
"""


@pytest.fixture()
def grid() -> TimeGrid:
    """Default 0..3 ms grid at dt = 1e-7 s."""
    return TimeGrid()


@pytest.fixture()
def coarse_grid() -> TimeGrid:
    return TimeGrid(dt=1.0e-6)


@pytest.fixture()
def pointer() -> PointerConfig:
    return PointerConfig()


@pytest.fixture()
def selection() -> SelectionConfig:
    return SelectionConfig()


@pytest.fixture()
def plan() -> ExperimentPlan:
    return ExperimentPlan()


@pytest.fixture()
def small_plan(coarse_grid: TimeGrid) -> ExperimentPlan:
    """Two taus, one SNR level, two seeds on a 1 us grid."""
    return ExperimentPlan(
        grid=coarse_grid,
        taus=(3.0e-9, 6.0e-9),
        snr_targets_db=(6.6,),
        seeds=(0, 100),
    )


@pytest.fixture()
def small_config(tmp_path: Path) -> Path:
    path = tmp_path / "small.toml"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


RecordFactory = Callable[..., RunRecord]


@pytest.fixture()
def make_record() -> RecordFactory:
    """Build a RunRecord from measured values, with converged fits."""

    def _make(
        *,
        tau: float = 3.0e-9,
        snr: float | None = 6.6,
        seed: int | None = 0,
        dt0: float = 0.0,
        dt_tau: float = 3.0e-5,
        se: float = 0.0,
        theta0: float = 1.2442e-9,
        theta_tau: float = 1.1666e-9,
        k2: float | None = None,
        k1_valid: bool | None = None,
    ) -> RunRecord:
        fit0 = FitResult(dt0, se, 1.0, 2e-4, True, 5, 0.0)
        fit_tau = FitResult(dt_tau, se, 1.0, 2e-4, True, 5, 0.0)
        k1 = (dt_tau - dt0) / tau
        e1 = 2 * se / tau
        k2_value = (theta0 - theta_tau) / tau if k2 is None else k2
        return RunRecord(
            tau=tau,
            snr_db_target=snr,
            snr_db_realized=snr,
            snr_star_db=None if snr is None else snr - 10 * math.log10(2),
            seed=seed,
            sigma2_used=None if seed is None else 1e-7,
            fit0=fit0,
            fit_tau=fit_tau,
            wva=SensitivityRecord(k1=k1, e1=e1, valid=(k1 - e1 > 0) if k1_valid is None else k1_valid),
            theta0=theta0,
            theta_tau=theta_tau,
            delta_theta=theta0 - theta_tau,
            awva=SensitivityRecord(
                k2_at_report=k2_value, k2_max=k2_value, t_at_max=1.515e-3, valid=k2_value > 0
            ),
        )

    return _make


@pytest.fixture()
def reference_block(make_record: RecordFactory) -> list[RunRecord]:
    """Seven records carrying the 6.6 dB reference measurements."""
    return [
        make_record(seed=100 * i, dt0=d0, dt_tau=dtt, theta0=th0, theta_tau=tht)
        for i, (d0, dtt, th0, tht) in enumerate(
            zip(REFERENCE_DT0, REFERENCE_DT_TAU, REFERENCE_THETA0, REFERENCE_THETA_TAU)
        )
    ]
