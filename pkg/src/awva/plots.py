"""Static SVG figures: traces, Theta curves, spectra and sensitivities with error bars."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import matplotlib

matplotlib.use("agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from awva.models import (  # noqa: E402
    FloatArray,
    GroupAggregate,
    SensitivityCurve,
    Spectrum,
    ThetaCurve,
    Trace,
)

logger = logging.getLogger(__name__)

# fixed salt and no date keep identical inputs byte-identical on disk
_SVG_RC = {"svg.hashsalt": "awva", "svg.fonttype": "none", "path.simplify": False}


class PlotKind(Enum):
    """Figure layouts understood by :func:`render_svg`."""

    TRACE = "trace"
    THETA = "theta"
    SENSITIVITY = "sensitivity"
    SENSITIVITY_CURVE = "sensitivity_curve"
    SPECTRUM = "spectrum"


_AXES: dict[PlotKind, tuple[str, str, str]] = {
    PlotKind.TRACE: ("t (s)", "intensity (I0)", "Detector traces"),
    PlotKind.THETA: ("t (s)", "Theta (I0^2 s)", "Auto-correlative intensity"),
    PlotKind.SENSITIVITY: ("SNR (dB)", "normalized sensitivity", "Sensitivity vs SNR"),
    PlotKind.SENSITIVITY_CURVE: ("integration time (s)", "K2 (I0^2)", "K2 vs integration time"),
    PlotKind.SPECTRUM: ("frequency (Hz)", "PSD", "Power spectral density"),
}


@dataclass(frozen=True, slots=True, eq=False)
class PlotSeries:
    label: str
    x: FloatArray
    y: FloatArray
    yerr: FloatArray | None = None

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError(f"series {self.label!r}: x and y must be 1-D of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.yerr is not None:
            yerr = np.asarray(self.yerr, dtype=np.float64)
            if yerr.shape != y.shape:
                raise ValueError(f"series {self.label!r}: yerr must match y")
            object.__setattr__(self, "yerr", yerr)


def render_svg(series: Sequence[PlotSeries], kind: PlotKind, path: Path) -> None:
    """Write a standalone SVG.

    Element ids: ``series-N`` for lines, ``points-N`` / ``bars-N`` / ``caps-N``
    for error-bar series.
    """
    if not series:
        raise ValueError("render_svg needs at least one series")
    xlabel, ylabel, title = _AXES[kind]
    with matplotlib.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        try:
            for i, s in enumerate(series):
                if s.yerr is not None:
                    points, caps, bars = ax.errorbar(
                        s.x, s.y, yerr=s.yerr, fmt="o", capsize=3, label=s.label
                    )
                    points.set_gid(f"points-{i}")
                    for cap in caps:
                        cap.set_gid(f"caps-{i}")
                    for bar in bars:
                        bar.set_gid(f"bars-{i}")
                elif kind is PlotKind.SPECTRUM:
                    (line,) = ax.semilogy(s.x, s.y, label=s.label)
                    line.set_gid(f"series-{i}")
                else:
                    (line,) = ax.plot(s.x, s.y, label=s.label)
                    line.set_gid(f"series-{i}")
            if kind is PlotKind.SENSITIVITY:
                ax.axhline(0.0, color="0.6", linewidth=0.8, linestyle="--")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            ax.set_title(title)
            ax.legend()
            fig.tight_layout()
            fig.savefig(Path(path), format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.info("Wrote %s plot to %s", kind.value, path)


# ---------------------------------------------------------------------------
# Series builders
# ---------------------------------------------------------------------------


def trace_series(label: str, trace: Trace) -> PlotSeries:
    return PlotSeries(label, trace.times, trace.values)


def theta_series(label: str, curve: ThetaCurve) -> PlotSeries:
    return PlotSeries(label, curve.grid.times, curve.values)


def sensitivity_curve_series(label: str, curve: SensitivityCurve) -> PlotSeries:
    return PlotSeries(label, curve.grid.times, curve.values)


def spectrum_series(label: str, spec: Spectrum) -> PlotSeries:
    # drop the DC bin on the log axis
    return PlotSeries(label, spec.freqs[1:], spec.psd[1:])


def sensitivity_series(aggregates: Sequence[GroupAggregate]) -> list[PlotSeries]:
    """Normalized K2 and K1 against target SNR for one tau."""
    noisy = [a for a in aggregates if a.snr_db_target is not None]
    snr = np.array([a.snr_db_target for a in noisy], dtype=np.float64)
    k2 = PlotSeries(
        "AWVA K2/K2_theory",
        snr,
        np.array([a.k2_norm for a in noisy]),
        np.array([a.e2_norm for a in noisy]),
    )
    k1 = PlotSeries(
        "WVA K1/G",
        snr,
        np.array([a.k1_norm for a in noisy]),
        np.array([a.e1_norm for a in noisy]),
    )
    return [k2, k1]
