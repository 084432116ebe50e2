"""Delay estimators: Gaussian peak fit (WVA) and auto-correlative intensity (AWVA)."""

from __future__ import annotations

import logging
import math
from typing import Any

import numpy as np
from scipy import linalg
from scipy.integrate import cumulative_trapezoid

from awva.models import (
    FitResult,
    FloatArray,
    PointerConfig,
    SensitivityCurve,
    SensitivityRecord,
    ShapeError,
    ThetaCurve,
    Trace,
)

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
INITIAL_LAMBDA = 1e-3
LAMBDA_FACTOR = 10.0
LAMBDA_CEILING = 1e16
STEP_TOLERANCE = 1e-12
RESIDUAL_TOLERANCE = 1e-12
# residual floor for exact data, relative to ||y||
_ROUNDOFF_FLOOR = 1e3 * np.finfo(np.float64).eps


class DegenerateInputError(ValueError):
    """Trace cannot seed a Gaussian fit (all zero, non-finite or no positive peak)."""


def lm_settings() -> dict[str, Any]:
    return {
        "max_iterations": MAX_ITERATIONS,
        "initial_lambda": INITIAL_LAMBDA,
        "lambda_up": LAMBDA_FACTOR,
        "lambda_down": LAMBDA_FACTOR,
        "step_tolerance": STEP_TOLERANCE,
        "residual_tolerance": RESIDUAL_TOLERANCE,
    }


# ---------------------------------------------------------------------------
# Gaussian fit
# ---------------------------------------------------------------------------


def _model(x: FloatArray, p: FloatArray, with_offset: bool) -> FloatArray:
    a, m, s = p[0], p[1], p[2]
    y = a * np.exp(-((x - m) ** 2) / (4.0 * s * s))
    if with_offset:
        y = y + p[3]
    return y


def _jacobian(x: FloatArray, p: FloatArray, with_offset: bool) -> FloatArray:
    a, m, s = p[0], p[1], p[2]
    d = x - m
    e = np.exp(-(d**2) / (4.0 * s * s))
    columns = [e, a * e * d / (2.0 * s * s), a * e * d**2 / (2.0 * s**3)]
    if with_offset:
        columns.append(np.ones_like(x))
    return np.column_stack(columns)


def _initial_guess(times: FloatArray, y: FloatArray, dt: float) -> tuple[float, float, float]:
    k = int(np.argmax(y))
    peak = float(y[k])
    if peak <= 0:
        raise DegenerateInputError("trace has no positive peak to fit")
    weights = np.clip(y, 0.0, None)
    total = float(np.sum(weights))
    mean = float(np.sum(weights * times)) / total
    var = float(np.sum(weights * (times - mean) ** 2)) / total
    width = max(math.sqrt(var / 2.0), dt)
    return float(times[k]), peak, width


def fit_gaussian(trace: Trace, pointer: PointerConfig, *, offset: bool = False) -> FitResult:
    """Levenberg-Marquardt fit of ``A*exp(-(t-mu)^2/(4w^2))`` (+ ``c`` if *offset*).

    The problem is solved in coordinates normalised by the initial guess
    (time in units of w0 about mu0, amplitude in units of A0). Non-convergence
    is reported through ``FitResult.converged``.
    """
    y_raw = trace.values
    if not np.all(np.isfinite(y_raw)):
        raise DegenerateInputError("trace contains non-finite samples")
    if not np.any(y_raw):
        raise DegenerateInputError("trace is identically zero")

    times = trace.times
    mu0, a0, w0 = _initial_guess(times, y_raw, trace.grid.dt)
    x = (times - mu0) / w0
    y = y_raw / a0
    p = np.array([1.0, 0.0, 1.0] + ([0.0] if offset else []))
    n_params = p.size

    floor = (_ROUNDOFF_FLOOR * float(np.linalg.norm(y))) ** 2
    residual = y - _model(x, p, offset)
    ssr = float(residual @ residual)
    lam = INITIAL_LAMBDA
    converged = ssr <= floor
    iterations = 0

    while not converged and iterations < MAX_ITERATIONS:
        iterations += 1
        jac = _jacobian(x, p, offset)
        jtj = jac.T @ jac
        grad = jac.T @ residual
        try:
            step = linalg.solve(jtj + lam * np.diag(np.diag(jtj)), grad, assume_a="sym")
        except (linalg.LinAlgError, ValueError):
            step = np.full(n_params, np.nan)
        if not np.all(np.isfinite(step)):
            lam *= LAMBDA_FACTOR
            if lam > LAMBDA_CEILING:
                break
            continue

        trial = p + step
        trial_residual = y - _model(x, trial, offset)
        trial_ssr = float(trial_residual @ trial_residual)
        rel_step = float(np.max(np.abs(step) / (np.abs(p) + 1.0)))
        rel_change = abs(ssr - trial_ssr) / max(ssr, np.finfo(np.float64).tiny)

        if math.isfinite(trial_ssr) and trial_ssr <= ssr:
            p, residual, ssr = trial, trial_residual, trial_ssr
            lam /= LAMBDA_FACTOR
        else:
            lam *= LAMBDA_FACTOR

        if (rel_step < STEP_TOLERANCE and rel_change < RESIDUAL_TOLERANCE) or ssr <= floor:
            converged = True
        elif lam > LAMBDA_CEILING:
            break

    amplitude = float(p[0]) * a0
    center = mu0 + float(p[1]) * w0
    width = abs(float(p[2])) * w0
    se = _center_standard_error(x, p, offset, ssr, w0)
    if not converged:
        logger.warning(
            "Gaussian fit did not converge after %d iterations (lambda=%.3g)", iterations, lam
        )
    return FitResult(
        delta_t=center - pointer.t0,
        se_delta_t=se,
        amplitude=amplitude,
        width=width,
        converged=converged,
        iterations=iterations,
        residual_norm=math.sqrt(ssr) * a0,
        offset=float(p[3]) * a0 if offset else 0.0,
    )


def _center_standard_error(
    x: FloatArray, p: FloatArray, offset: bool, ssr: float, w0: float
) -> float:
    dof = x.size - p.size
    if dof <= 0 or not np.all(np.isfinite(p)):
        return math.inf
    jac = _jacobian(x, p, offset)
    try:
        cov = linalg.inv(jac.T @ jac) * (ssr / dof)
    except (linalg.LinAlgError, ValueError):
        return math.inf
    var_mu = float(cov[1, 1])
    if not math.isfinite(var_mu) or var_mu < 0:
        return math.inf
    return math.sqrt(var_mu) * w0


# ---------------------------------------------------------------------------
# Auto-correlative intensity
# ---------------------------------------------------------------------------


def theta_curve(a: Trace, b: Trace) -> ThetaCurve:
    """Running trapezoid integral of ``a*b`` from the grid start."""
    if a.grid != b.grid:
        raise ShapeError("theta_curve needs both traces on the same grid")
    values = cumulative_trapezoid(a.values * b.values, dx=a.grid.dt, initial=0.0)
    return ThetaCurve(a.grid, np.asarray(values, dtype=np.float64))


def k1_sensitivity(fit0: FitResult, fit_tau: FitResult, tau: float) -> SensitivityRecord:
    """WVA sensitivity ``(dt_tau - dt_0)/tau`` with propagated error.

    A run is valid only when both fits converged and ``k1 - e1 > 0``.
    """
    if tau == 0:
        raise ZeroDivisionError("tau must be nonzero to form a sensitivity")
    k1 = (fit_tau.delta_t - fit0.delta_t) / tau
    e1 = (abs(fit_tau.se_delta_t) + abs(fit0.se_delta_t)) / abs(tau)
    valid = fit0.converged and fit_tau.converged and bool(k1 - e1 > 0)
    return SensitivityRecord(k1=k1, e1=e1, valid=valid)


def k2_curve(theta0: ThetaCurve, theta_tau: ThetaCurve, tau: float) -> SensitivityCurve:
    if tau == 0:
        raise ZeroDivisionError("tau must be nonzero to form a sensitivity")
    if theta0.grid != theta_tau.grid:
        raise ShapeError("theta curves must share a grid")
    return SensitivityCurve(theta0.grid, (theta0.values - theta_tau.values) / tau, tau)


def k2_sensitivity(
    theta0: ThetaCurve, theta_tau: ThetaCurve, tau: float, report_time: float
) -> SensitivityRecord:
    curve = k2_curve(theta0, theta_tau, tau)
    return sensitivity_from_curve(curve, report_time)


def sensitivity_from_curve(curve: SensitivityCurve, report_time: float) -> SensitivityRecord:
    k_max = curve.argmax()
    at_report = curve.at(report_time)
    return SensitivityRecord(
        k2_at_report=at_report,
        k2_max=float(curve.values[k_max]),
        t_at_max=curve.grid.time_at(k_max),
        valid=at_report > 0,
    )
