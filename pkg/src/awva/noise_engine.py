"""Seeded Gaussian white noise, injection, SNR and spectral diagnostics."""

from __future__ import annotations

import logging
import math

import numpy as np

from awva.models import (
    ConfigurationError,
    FloatArray,
    NoiseInjection,
    NoiseSpec,
    ShapeError,
    Spectrum,
    TimeGrid,
    Trace,
)

logger = logging.getLogger(__name__)

PRNG_NAME = "PCG64+Box-Muller"


class UndefinedSnrError(ValueError):
    """SNR requested with an all-zero signal or noise trace."""


def _generator(seed: int, stream: int) -> np.random.Generator:
    bit_generator = np.random.PCG64(seed)
    if stream:
        bit_generator = bit_generator.jumped(stream)
    return np.random.Generator(bit_generator)


def standard_normal(n: int, seed: int, stream: int = 0) -> FloatArray:
    """Box-Muller samples from a PCG64 stream.

    Uniforms are consumed in pairs (u1, u2); each pair yields the cosine then
    the sine branch. Stream 0 is the seed itself, stream k is the seed jumped
    k times.
    """
    pairs = (n + 1) // 2
    u = _generator(seed, stream).random(2 * pairs)
    u1 = 1.0 - u[0::2]  # (0, 1]
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    z = np.empty(2 * pairs, dtype=np.float64)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]


def unit_noise(grid: TimeGrid, seed: int, stream: int = 0) -> Trace:
    return Trace(grid, standard_normal(grid.n, seed, stream))


def gen_noise(grid: TimeGrid, spec: NoiseSpec, stream: int = 0) -> Trace:
    """White noise with per-sample variance ``spec.sigma2``."""
    if spec.sigma2 is None:
        raise ConfigurationError("sigma2", "resolve target_snr_db with resolve_noise first")
    return Trace(grid, math.sqrt(spec.sigma2) * standard_normal(grid.n, spec.seed, stream))


def resolve_noise(spec: NoiseSpec, signal: Trace, stream: int = 0) -> NoiseSpec:
    """Turn a target-SNR request into a concrete variance for *signal*."""
    if spec.sigma2 is not None:
        return spec
    assert spec.target_snr_db is not None
    sigma2 = calibrate_sigma(spec.target_snr_db, signal, signal.grid, spec.seed, stream=stream)
    return NoiseSpec(seed=spec.seed, sigma2=sigma2, injection=spec.injection)


def arm_factor(spec: NoiseSpec) -> float:
    """Amplitude reaching each beam-splitter arm; noise injected before the BS is split in half."""
    return 0.5 if spec.injection is NoiseInjection.BEFORE_BS else 1.0


def scale(trace: Trace, factor: float) -> Trace:
    return Trace(trace.grid, trace.values * factor, trace.unit)


def inject(trace: Trace, noise: Trace) -> Trace:
    if trace.grid != noise.grid:
        raise ShapeError("cannot inject noise sampled on a different grid")
    return Trace(trace.grid, trace.values + noise.values, trace.unit)


def snr_db_from_peaks(signal_peak: float, noise_peak: float) -> float:
    if noise_peak <= 0:
        raise UndefinedSnrError("noise amplitude is zero")
    if signal_peak <= 0:
        raise UndefinedSnrError("signal amplitude is zero")
    return 10.0 * math.log10(signal_peak / noise_peak)


def snr_db(signal: Trace, noise: Trace) -> float:
    """``10*log10(max|signal| / max|noise|)`` over the full window."""
    if signal.grid != noise.grid:
        raise ShapeError("signal and noise must share a grid")
    return snr_db_from_peaks(signal.peak(), noise.peak())


def calibrate_sigma(
    target_snr_db: float, signal: Trace, grid: TimeGrid, seed: int, stream: int = 0
) -> float:
    """Variance that puts this seed's noise exactly at *target_snr_db*."""
    signal_peak = signal.peak()
    if signal_peak == 0:
        raise UndefinedSnrError("cannot calibrate noise against a zero signal")
    unit_peak = unit_noise(grid, seed, stream).peak()
    noise_peak = signal_peak * 10.0 ** (-target_snr_db / 10.0)
    return (noise_peak / unit_peak) ** 2


def spectrum(trace: Trace) -> Spectrum:
    """Periodogram ``|X|^2 * dt / n`` and FFT magnitude.

    The trace is padded to the next power of two with its own mean, so the
    mean of the padded sequence equals the mean of the trace.
    """
    n = trace.grid.n
    if n < 2:
        raise ShapeError("spectrum needs at least two samples")
    padded = 1 << (n - 1).bit_length()
    values = np.full(padded, float(np.mean(trace.values)))
    values[:n] = trace.values
    transform = np.fft.rfft(values)
    magnitude = np.abs(transform)
    return Spectrum(
        freqs=np.fft.rfftfreq(padded, d=trace.grid.dt),
        psd=magnitude**2 * trace.grid.dt / n,
        magnitude=magnitude,
        padded_length=padded,
    )
