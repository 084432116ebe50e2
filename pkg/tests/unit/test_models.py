"""Tests for awva.models — grid, traces, configs and plan serialization."""

from __future__ import annotations

import math

import numpy as np
import pytest

from awva.models import (
    AmplificationMode,
    ConfigurationError,
    ExperimentPlan,
    FitResult,
    K2Statistic,
    NoiseSpec,
    SelectionConfig,
    SensitivityRecord,
    ShapeError,
    TimeGrid,
    Trace,
)


class TestTimeGrid:
    def test_default_sample_count(self) -> None:
        assert TimeGrid().n == 30001

    def test_times_computed_from_index(self) -> None:
        g = TimeGrid()
        k = np.arange(g.n)
        np.testing.assert_array_equal(g.times, g.t_start + k * g.dt)
        assert g.time_at(12345) == g.t_start + 12345 * g.dt

    def test_partial_last_step_is_floored(self) -> None:
        assert TimeGrid(0.0, 1.05e-6, 1e-7).n == 11

    def test_index_of_nearest(self) -> None:
        g = TimeGrid()
        assert g.index_of(1.5e-3) == 15000
        assert g.index_of(1.5e-3 + 0.4e-7) == 15000

    def test_index_outside_raises(self) -> None:
        with pytest.raises(ConfigurationError):
            TimeGrid().index_of(4e-3)

    def test_rejects_nonpositive_dt(self) -> None:
        with pytest.raises(ConfigurationError, match="dt"):
            TimeGrid(dt=0.0)

    def test_rejects_reversed_window(self) -> None:
        with pytest.raises(ConfigurationError, match="t_end"):
            TimeGrid(t_start=1e-3, t_end=0.0)

    def test_dict_round_trip(self) -> None:
        g = TimeGrid(t_start=1e-4, t_end=2e-3, dt=5e-7)
        assert TimeGrid.from_dict(g.to_dict()) == g


class TestTrace:
    def test_length_must_match_grid(self) -> None:
        with pytest.raises(ShapeError):
            Trace(TimeGrid(dt=1e-4), np.zeros(3))

    def test_non_finite_rejected(self) -> None:
        g = TimeGrid(t_end=1e-3, dt=1e-4)
        values = np.zeros(g.n)
        values[2] = np.nan
        with pytest.raises(ValueError):
            Trace(g, values)

    def test_values_are_read_only(self) -> None:
        g = TimeGrid(t_end=1e-3, dt=1e-4)
        trace = Trace(g, np.ones(g.n))
        with pytest.raises(ValueError):
            trace.values[0] = 2.0

    def test_unknown_unit_rejected(self) -> None:
        g = TimeGrid(t_end=1e-3, dt=1e-4)
        with pytest.raises(ConfigurationError):
            Trace(g, np.ones(g.n), "volts")


class TestSelectionConfig:
    def test_alpha_zero_names_constraint(self) -> None:
        with pytest.raises(ConfigurationError, match=r"\(0, pi/2\]"):
            SelectionConfig(alpha=0.0)

    def test_alpha_half_pi_allowed(self) -> None:
        assert SelectionConfig(alpha=math.pi / 2).probability == pytest.approx(1.0)

    def test_alpha_beyond_half_pi_rejected(self) -> None:
        with pytest.raises(ConfigurationError):
            SelectionConfig(alpha=2.0)

    def test_probability(self) -> None:
        assert SelectionConfig(alpha=0.01).probability == pytest.approx(9.99967e-5, rel=1e-6)

    def test_from_dict_parses_mode(self) -> None:
        s = SelectionConfig.from_dict({"amplification_mode": "from_alpha"})
        assert s.amplification_mode is AmplificationMode.FROM_ALPHA


class TestNoiseSpec:
    def test_requires_exactly_one_level(self) -> None:
        with pytest.raises(ConfigurationError):
            NoiseSpec(seed=0)
        with pytest.raises(ConfigurationError):
            NoiseSpec(seed=0, sigma2=1e-5, target_snr_db=3.0)

    def test_negative_seed_rejected(self) -> None:
        with pytest.raises(ConfigurationError):
            NoiseSpec(seed=-1, sigma2=1e-5)

    def test_infinite_target_rejected(self) -> None:
        with pytest.raises(ConfigurationError, match="target_snr_db"):
            NoiseSpec(seed=0, target_snr_db=-math.inf)


class TestSensitivityRecord:
    def test_k2_statistic_selects_field(self) -> None:
        rec = SensitivityRecord(k2_at_report=0.02, k2_max=0.03)
        assert rec.k2(K2Statistic.AT_REPORT) == 0.02
        assert rec.k2(K2Statistic.MAX) == 0.03

    def test_missing_k2_is_nan(self) -> None:
        assert math.isnan(SensitivityRecord(k1=1.0, e1=0.1).k2(K2Statistic.AT_REPORT))


class TestFitResult:
    def test_to_dict_keeps_every_field(self) -> None:
        fit = FitResult(3e-5, 1e-12, 4.4e-3, 2e-4, True, 7, 1e-15)
        assert fit.to_dict() == {
            "delta_t": 3e-5,
            "se_delta_t": 1e-12,
            "amplitude": 4.4e-3,
            "width": 2e-4,
            "converged": True,
            "iterations": 7,
            "residual_norm": 1e-15,
            "offset": 0.0,
        }

    def test_failed_is_not_converged(self) -> None:
        failed = FitResult.failed()
        assert not failed.converged
        assert math.isinf(failed.se_delta_t)


class TestExperimentPlan:
    def test_defaults(self) -> None:
        plan = ExperimentPlan()
        assert plan.taus == (3e-9, 6e-9, 9e-9, 12e-9, 15e-9)
        assert plan.snr_targets_db == (6.6, 1.4, -3.3, -6.3)
        assert plan.seeds == (0, 100, 200, 300, 400, 500, 600)
        assert plan.report_time == 1.5e-3

    def test_dict_round_trip(self) -> None:
        plan = ExperimentPlan(taus=(3e-9,), seeds=(1, 2), snr_targets_db=(-6.3, 0.0))
        assert ExperimentPlan.from_dict(plan.to_dict()) == plan

    def test_empty_taus_rejected(self) -> None:
        with pytest.raises(ConfigurationError, match="taus"):
            ExperimentPlan(taus=())

    def test_zero_tau_rejected(self) -> None:
        with pytest.raises(ConfigurationError, match="taus"):
            ExperimentPlan(taus=(0.0,))

    @pytest.mark.parametrize("target", [math.inf, -math.inf, math.nan])
    def test_non_finite_snr_target_rejected(self, target: float) -> None:
        with pytest.raises(ConfigurationError, match="snr_targets_db"):
            ExperimentPlan(snr_targets_db=(target, 6.6))

    def test_empty_seeds_rejected(self) -> None:
        with pytest.raises(ConfigurationError, match="seeds"):
            ExperimentPlan(seeds=())

    def test_report_time_outside_grid_rejected(self) -> None:
        with pytest.raises(ConfigurationError, match="report_time"):
            ExperimentPlan(report_time=5e-3)
