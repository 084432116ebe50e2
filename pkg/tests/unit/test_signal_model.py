"""Tests for awva.signal_model — weak value, pointer and scheme traces."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from awva.models import (
    AmplificationMode,
    ConfigurationError,
    CouplingConfig,
    PointerConfig,
    SelectionConfig,
    TimeGrid,
)
from awva.signal_model import (
    effective_amplification,
    pointer_amplitude,
    pointer_shift,
    synth_outputs,
    synth_pointer,
    theoretical_k1,
    theoretical_k2,
    theta_closed_form,
    weak_value,
)

FROM_ALPHA = SelectionConfig(alpha=0.01, amplification_mode=AmplificationMode.FROM_ALPHA)


class TestWeakValue:
    def test_quarter_pi(self) -> None:
        assert weak_value(SelectionConfig(alpha=math.pi / 4)) == pytest.approx(-1.0, rel=1e-12)

    def test_half_pi(self) -> None:
        assert weak_value(SelectionConfig(alpha=math.pi / 2)) == pytest.approx(0.0, abs=1e-15)

    def test_small_angle(self) -> None:
        assert weak_value(SelectionConfig(alpha=0.01)) == pytest.approx(-99.996667, abs=1e-6)


class TestPointerShift:
    def test_fixed_amplification(self, selection: SelectionConfig) -> None:
        assert pointer_shift(CouplingConfig(3e-9), selection) == pytest.approx(3.0e-5, rel=1e-12)

    def test_zero_tau(self, selection: SelectionConfig) -> None:
        assert pointer_shift(CouplingConfig(0.0), selection) == 0.0

    def test_from_alpha(self) -> None:
        assert pointer_shift(CouplingConfig(3e-9), FROM_ALPHA) == pytest.approx(2.99990e-7, rel=1e-5)

    def test_theoretical_k1_is_amplification(self, selection: SelectionConfig) -> None:
        assert theoretical_k1(selection) == effective_amplification(selection) == 1e4


class TestSynthPointer:
    def test_peak_value(self, grid: TimeGrid, pointer: PointerConfig) -> None:
        trace = synth_pointer(grid, pointer)
        peak = trace.at(pointer.t0)
        assert peak == pytest.approx((2 * math.pi * pointer.omega**2) ** -0.25, rel=1e-12)
        assert peak == pytest.approx(44.6684, rel=2e-4)

    def test_even_symmetry(self, grid: TimeGrid, pointer: PointerConfig) -> None:
        v = synth_pointer(grid, pointer).values
        k0 = grid.index_of(pointer.t0)
        np.testing.assert_allclose(v[k0 + 1 : k0 + 5000], v[k0 - 1 : k0 - 5000 : -1], rtol=1e-9)

    def test_two_omega_is_one_over_e(self, grid: TimeGrid, pointer: PointerConfig) -> None:
        trace = synth_pointer(grid, pointer)
        ratio = trace.at(pointer.t0 + 2 * pointer.omega) / trace.at(pointer.t0)
        assert ratio == pytest.approx(math.exp(-1), rel=1e-9)

    def test_pure(self, grid: TimeGrid, pointer: PointerConfig) -> None:
        a = synth_pointer(grid, pointer).values
        b = synth_pointer(grid, pointer).values
        np.testing.assert_array_equal(a, b)


class TestSynthOutputs:
    def test_i1_peak_and_location(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        i1, _, _ = synth_outputs(grid, pointer, selection, CouplingConfig(3e-9))
        k = int(np.argmax(i1.values))
        assert abs(grid.time_at(k) - (pointer.t0 + 3e-5)) <= grid.dt
        assert i1.values[k] == pytest.approx(selection.probability * pointer_amplitude(pointer), rel=1e-12)
        assert i1.values[k] == pytest.approx(4.4668e-3, rel=2e-4)

    def test_post_selection_ratio(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        i1, _, _ = synth_outputs(grid, pointer, selection, CouplingConfig(0.0))
        ratio = i1.peak() / synth_pointer(grid, pointer).peak()
        assert ratio == pytest.approx(9.99967e-5, rel=1e-6)

    def test_i21_is_exactly_half_of_i1(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        i1, i21, _ = synth_outputs(grid, pointer, selection, CouplingConfig(7e-9))
        np.testing.assert_array_equal(i21.values, i1.values * 0.5)

    def test_zero_tau_arms_identical(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        _, i21, i22 = synth_outputs(grid, pointer, selection, CouplingConfig(0.0))
        np.testing.assert_array_equal(i21.values, i22.values)

    def test_negative_tau_shifts_left(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        i1, _, _ = synth_outputs(grid, pointer, selection, CouplingConfig(-3e-9))
        assert abs(grid.time_at(int(np.argmax(i1.values))) - (pointer.t0 - 3e-5)) <= grid.dt

    def test_weak_regime_enforced(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        with pytest.raises(ConfigurationError, match="tau"):
            synth_outputs(grid, pointer, selection, CouplingConfig(3e-8))

    def test_reference_arm_full_integral(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        _, _, i22 = synth_outputs(grid, pointer, selection, CouplingConfig(0.0))
        expected = 0.5 * selection.probability * pointer_amplitude(pointer) * pointer.omega * 2 * math.sqrt(math.pi)
        assert trapezoid(i22.values, dx=grid.dt) == pytest.approx(expected, rel=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(tau=st.floats(min_value=-1.9e-8, max_value=1.9e-8, allow_nan=False))
    def test_argmax_within_one_step(self, tau: float) -> None:
        grid = TimeGrid(dt=1e-6)
        pointer, selection = PointerConfig(), SelectionConfig()
        i1, _, _ = synth_outputs(grid, pointer, selection, CouplingConfig(tau))
        expected = pointer.t0 + tau * selection.g
        assert abs(grid.time_at(int(np.argmax(i1.values))) - expected) <= grid.dt


class TestClosedForm:
    def test_noiseless_theta_values(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        theta0 = theta_closed_form(grid, pointer, selection, 0.0, 1.5e-3)
        theta_tau = theta_closed_form(grid, pointer, selection, 3e-9, 1.5e-3)
        assert theta0 == pytest.approx(1.2442e-9, rel=0.01)
        assert theta_tau == pytest.approx(1.1666e-9, rel=0.01)

    def test_full_window_ratio(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        wide = TimeGrid(t_start=-5e-3, t_end=8e-3, dt=1e-7)
        theta0 = theta_closed_form(wide, pointer, selection, 0.0, 8e-3)
        theta_tau = theta_closed_form(wide, pointer, selection, 3e-9, 8e-3)
        shift = 3e-5
        assert theta0 / theta_tau == pytest.approx(math.exp(shift**2 / (8 * pointer.omega**2)), rel=1e-12)

    def test_theoretical_k2(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        assert theoretical_k2(grid, pointer, selection, 3e-9, 1.5e-3) == pytest.approx(0.0258, rel=0.015)

    def test_theoretical_k2_zero_tau(
        self, grid: TimeGrid, pointer: PointerConfig, selection: SelectionConfig
    ) -> None:
        with pytest.raises(ZeroDivisionError):
            theoretical_k2(grid, pointer, selection, 0.0, 1.5e-3)
