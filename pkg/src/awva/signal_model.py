"""Noiseless detector traces of the WVA and AWVA schemes.

Pure functions of the pointer, post-selection and coupling parameters. The
closed forms at the bottom give the exact Gaussian-product integrals used as
theoretical references for the AWVA estimator.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from awva.models import (
    AmplificationMode,
    ConfigurationError,
    CouplingConfig,
    FloatArray,
    PointerConfig,
    SelectionConfig,
    TimeGrid,
    Trace,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


class SchemeTraces(NamedTuple):
    """Detector outputs: WVA trace ``i1`` and the two AWVA arms."""

    i1: Trace
    i21: Trace
    i22: Trace


def weak_value(selection: SelectionConfig) -> float:
    """Real part of the weak value, ``-cot(alpha)``."""
    return -math.cos(selection.alpha) / math.sin(selection.alpha)


def effective_amplification(selection: SelectionConfig) -> float:
    if selection.amplification_mode is AmplificationMode.FROM_ALPHA:
        return -weak_value(selection)
    return selection.g


def pointer_shift(coupling: CouplingConfig, selection: SelectionConfig) -> float:
    """Peak shift ``delta_t = tau * G`` of the post-selected pulse."""
    return coupling.tau * effective_amplification(selection)


def pointer_amplitude(pointer: PointerConfig) -> float:
    return pointer.i0 * (2.0 * math.pi * pointer.omega**2) ** -0.25


def check_weak_regime(
    coupling: CouplingConfig, selection: SelectionConfig, pointer: PointerConfig
) -> None:
    shift = pointer_shift(coupling, selection)
    if not abs(shift) < pointer.omega:
        raise ConfigurationError(
            "tau", f"|tau*G| = {abs(shift):.6g} s must stay below omega = {pointer.omega:.6g} s"
        )


def _profile(times: FloatArray, center: float, pointer: PointerConfig, scale: float) -> FloatArray:
    amp = scale * pointer_amplitude(pointer)
    return amp * np.exp(-((times - center) ** 2) / (4.0 * pointer.omega**2))


def synth_pointer(grid: TimeGrid, pointer: PointerConfig) -> Trace:
    """Initial Gaussian pointer centred on t0."""
    return Trace(grid, _profile(grid.times, pointer.t0, pointer, 1.0))


def synth_outputs(
    grid: TimeGrid,
    pointer: PointerConfig,
    selection: SelectionConfig,
    coupling: CouplingConfig,
) -> SchemeTraces:
    """Post-selected WVA trace and the two beam-splitter arms.

    ``i21`` is exactly half of ``i1``; ``i22`` is the unshifted reference arm.
    """
    check_weak_regime(coupling, selection, pointer)
    times = grid.times
    shift = pointer_shift(coupling, selection)
    p = selection.probability
    shifted = _profile(times, pointer.t0 + shift, pointer, p)
    reference = _profile(times, pointer.t0, pointer, p)
    return SchemeTraces(
        i1=Trace(grid, shifted),
        i21=Trace(grid, shifted * 0.5),
        i22=Trace(grid, reference * 0.5),
    )


# ---------------------------------------------------------------------------
# Closed-form references
# ---------------------------------------------------------------------------


def theta_closed_form(
    grid: TimeGrid,
    pointer: PointerConfig,
    selection: SelectionConfig,
    tau: float,
    t: float,
) -> float:
    """Exact integral of ``i21 * i22`` from ``grid.t_start`` to *t* for delay *tau*."""
    shift = tau * effective_amplification(selection)
    amp = 0.5 * selection.probability * pointer_amplitude(pointer)
    center = pointer.t0 + shift / 2.0
    w = pointer.omega
    mass = ndtr((t - center) / w) - ndtr((grid.t_start - center) / w)
    return float(amp**2 * math.exp(-(shift**2) / (8.0 * w**2)) * w * SQRT_2PI * mass)


def theoretical_k2(
    grid: TimeGrid,
    pointer: PointerConfig,
    selection: SelectionConfig,
    tau: float,
    t: float,
) -> float:
    """Noiseless ``(Theta_0(t) - Theta_tau(t)) / tau``."""
    if tau == 0:
        raise ZeroDivisionError("tau must be nonzero to form a sensitivity")
    theta0 = theta_closed_form(grid, pointer, selection, 0.0, t)
    theta_tau = theta_closed_form(grid, pointer, selection, tau, t)
    return (theta0 - theta_tau) / tau


def theoretical_k1(selection: SelectionConfig) -> float:
    """Noiseless WVA sensitivity, equal to the amplification G."""
    return effective_amplification(selection)
