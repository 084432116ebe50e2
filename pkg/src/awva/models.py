"""Data models for the weak-value amplification simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]

UNIT_INTENSITY = "I0"
UNIT_THETA = "I0^2·s"
UNIT_DIMENSIONLESS = "dimensionless"
UNITS = (UNIT_INTENSITY, UNIT_THETA, UNIT_DIMENSIONLESS)

DEFAULT_TAUS: tuple[float, ...] = (3.0e-9, 6.0e-9, 9.0e-9, 12.0e-9, 15.0e-9)
DEFAULT_SNR_TARGETS_DB: tuple[float, ...] = (6.6, 1.4, -3.3, -6.3)
DEFAULT_SEEDS: tuple[int, ...] = (0, 100, 200, 300, 400, 500, 600)


class ConfigurationError(ValueError):
    """A configuration value violates its constraint."""

    def __init__(self, key: str, constraint: str) -> None:
        super().__init__(f"{key}: {constraint}")
        self.key = key
        self.constraint = constraint


class ShapeError(ValueError):
    """Traces that must share a grid do not."""


class AmplificationMode(Enum):
    """How the effective amplification G is obtained."""

    FIXED = "fixed"
    FROM_ALPHA = "from_alpha"


class NoiseInjection(Enum):
    """Where noise enters the optical path."""

    AFTER_BS = "after_bs"
    BEFORE_BS = "before_bs"


class NoisePairing(Enum):
    """Whether detectors and baseline share one noise realization per seed."""

    SHARED = "shared"
    INDEPENDENT = "independent"


class K2Statistic(Enum):
    """Which per-seed K2 value feeds the ensemble average."""

    AT_REPORT = "at_report"
    MAX = "max"


def _finite(key: str, value: float) -> None:
    if not math.isfinite(value):
        raise ConfigurationError(key, "must be finite")


# ---------------------------------------------------------------------------
# Grid and traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TimeGrid:
    """Uniform sampling grid; sample k sits at ``t_start + k*dt``."""

    t_start: float = 0.0
    t_end: float = 3.0e-3
    dt: float = 1.0e-7
    n: int = field(init=False)

    def __post_init__(self) -> None:
        for key in ("t_start", "t_end", "dt"):
            _finite(key, getattr(self, key))
        if self.dt <= 0:
            raise ConfigurationError("dt", "must be > 0")
        if self.t_end <= self.t_start:
            raise ConfigurationError("t_end", "must be > t_start")
        span = (self.t_end - self.t_start) / self.dt
        nearest = round(span)
        steps = nearest if abs(span - nearest) < 1e-6 else math.floor(span)
        object.__setattr__(self, "n", int(steps) + 1)

    @property
    def times(self) -> FloatArray:
        return self.t_start + np.arange(self.n, dtype=np.float64) * self.dt

    def time_at(self, index: int) -> float:
        return self.t_start + index * self.dt

    def contains(self, t: float) -> bool:
        k = round((t - self.t_start) / self.dt)
        return 0 <= k < self.n

    def index_of(self, t: float) -> int:
        """Nearest grid index for time *t*."""
        k = round((t - self.t_start) / self.dt)
        if not 0 <= k < self.n:
            raise ConfigurationError("time", f"{t!r} lies outside [{self.t_start!r}, {self.t_end!r}]")
        return int(k)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TimeGrid:
        return cls(
            t_start=float(data.get("t_start", 0.0)),
            t_end=float(data.get("t_end", 3.0e-3)),
            dt=float(data.get("dt", 1.0e-7)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"t_start": self.t_start, "t_end": self.t_end, "dt": self.dt}


@dataclass(frozen=True, slots=True, eq=False)
class Trace:
    """Uniformly sampled real series on a TimeGrid."""

    grid: TimeGrid
    values: FloatArray
    unit: str = UNIT_INTENSITY

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] != self.grid.n:
            raise ShapeError(f"trace has {values.size} samples, grid has {self.grid.n}")
        if not np.all(np.isfinite(values)):
            raise ValueError("trace values must be finite")
        if self.unit not in UNITS:
            raise ConfigurationError("unit", f"must be one of {', '.join(UNITS)}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> FloatArray:
        return self.grid.times

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])

    def peak(self) -> float:
        return float(np.max(np.abs(self.values)))


# ---------------------------------------------------------------------------
# Optical configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PointerConfig:
    """Gaussian temporal pointer."""

    i0: float = 1.0
    t0: float = 1.5e-3
    omega: float = 2.0e-4

    def __post_init__(self) -> None:
        for key in ("i0", "t0", "omega"):
            _finite(key, getattr(self, key))
        if self.omega <= 0:
            raise ConfigurationError("omega", "must be > 0")
        if self.i0 <= 0:
            raise ConfigurationError("i0", "must be > 0")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PointerConfig:
        return cls(
            i0=float(data.get("i0", 1.0)),
            t0=float(data.get("t0", 1.5e-3)),
            omega=float(data.get("omega", 2.0e-4)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"i0": self.i0, "t0": self.t0, "omega": self.omega}


@dataclass(frozen=True, slots=True)
class SelectionConfig:
    """Post-selection angle and amplification mode.

    ``alpha`` must lie in (0, pi/2]; at pi/2 the weak value is zero and the
    post-selection probability is one.
    """

    alpha: float = 0.01
    amplification_mode: AmplificationMode = AmplificationMode.FIXED
    g: float = 1.0e4

    def __post_init__(self) -> None:
        _finite("alpha", self.alpha)
        _finite("g", self.g)
        if not 0.0 < self.alpha <= math.pi / 2:
            raise ConfigurationError("alpha", "must lie in (0, pi/2]")
        if self.g <= 0:
            raise ConfigurationError("g", "must be > 0")

    @property
    def probability(self) -> float:
        """Post-selection success probability sin^2(alpha)."""
        return math.sin(self.alpha) ** 2

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SelectionConfig:
        return cls(
            alpha=float(data.get("alpha", 0.01)),
            amplification_mode=AmplificationMode(data.get("amplification_mode", "fixed")),
            g=float(data.get("g", 1.0e4)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "amplification_mode": self.amplification_mode.value,
            "g": self.g,
        }


@dataclass(frozen=True, slots=True)
class CouplingConfig:
    """Time delay imparted by the coupling."""

    tau: float = 3.0e-9

    def __post_init__(self) -> None:
        _finite("tau", self.tau)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CouplingConfig:
        return cls(tau=float(data.get("tau", 3.0e-9)))

    def to_dict(self) -> dict[str, Any]:
        return {"tau": self.tau}


@dataclass(frozen=True, slots=True)
class NoiseSpec:
    """Noise request: exactly one of ``sigma2`` / ``target_snr_db`` is set."""

    seed: int
    sigma2: float | None = None
    target_snr_db: float | None = None
    injection: NoiseInjection = NoiseInjection.AFTER_BS

    def __post_init__(self) -> None:
        if (self.sigma2 is None) == (self.target_snr_db is None):
            raise ConfigurationError("noise", "exactly one of sigma2 / target_snr_db must be set")
        if self.sigma2 is not None and not (math.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise ConfigurationError("sigma2", "must be finite and >= 0")
        if self.target_snr_db is not None and not math.isfinite(self.target_snr_db):
            raise ConfigurationError("target_snr_db", "must be finite")
        if self.seed < 0:
            raise ConfigurationError("seed", "must be a nonnegative integer")


# ---------------------------------------------------------------------------
# Estimator outputs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class Spectrum:
    """One-sided periodogram and FFT magnitude of a trace."""

    freqs: FloatArray
    psd: FloatArray
    magnitude: FloatArray
    padded_length: int


@dataclass(frozen=True, slots=True)
class FitResult:
    """Gaussian peak fit; ``delta_t`` is the fitted centre minus t0."""

    delta_t: float
    se_delta_t: float
    amplitude: float
    width: float
    converged: bool
    iterations: int
    residual_norm: float
    offset: float = 0.0

    @classmethod
    def failed(cls, iterations: int = 0) -> FitResult:
        nan = math.nan
        return cls(nan, math.inf, nan, nan, False, iterations, nan)

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta_t": self.delta_t,
            "se_delta_t": self.se_delta_t,
            "amplitude": self.amplitude,
            "width": self.width,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "offset": self.offset,
        }


@dataclass(frozen=True, slots=True, eq=False)
class ThetaCurve:
    """Running integral of a trace product; ``values[0] == 0``."""

    grid: TimeGrid
    values: FloatArray

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])

    def to_trace(self) -> Trace:
        return Trace(self.grid, self.values, UNIT_THETA)


@dataclass(frozen=True, slots=True, eq=False)
class SensitivityCurve:
    """K2(t) = (Theta_0(t) - Theta_tau(t)) / tau over the whole grid."""

    grid: TimeGrid
    values: FloatArray
    tau: float

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])

    def argmax(self) -> int:
        # np.argmax returns the first index on ties
        return int(np.argmax(self.values))


@dataclass(frozen=True, slots=True)
class SensitivityRecord:
    """Sensitivity of one run. WVA records fill k1/e1, AWVA records the K2 fields."""

    k1: float | None = None
    e1: float | None = None
    k2_at_report: float | None = None
    k2_max: float | None = None
    t_at_max: float | None = None
    valid: bool = False

    def k2(self, statistic: K2Statistic) -> float:
        value = self.k2_max if statistic is K2Statistic.MAX else self.k2_at_report
        return math.nan if value is None else value

    def to_dict(self) -> dict[str, Any]:
        return {
            "k1": self.k1,
            "e1": self.e1,
            "k2_at_report": self.k2_at_report,
            "k2_max": self.k2_max,
            "t_at_max": self.t_at_max,
            "valid": self.valid,
        }


# ---------------------------------------------------------------------------
# Runs and aggregates
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class RunRecord:
    """Outcome of one (tau, SNR, seed) run for both schemes.

    Noiseless baseline runs carry ``None`` for the SNR fields, seed and sigma2.
    """

    tau: float
    snr_db_target: float | None
    snr_db_realized: float | None
    snr_star_db: float | None
    seed: int | None
    sigma2_used: float | None
    fit0: FitResult
    fit_tau: FitResult
    wva: SensitivityRecord
    theta0: float
    theta_tau: float
    delta_theta: float
    awva: SensitivityRecord
    scheme: str = "wva+awva"

    @property
    def is_baseline(self) -> bool:
        return self.seed is None

    @property
    def converged(self) -> bool:
        return self.fit0.converged and self.fit_tau.converged

    def group_key(self) -> tuple[float, float | None]:
        return (self.tau, self.snr_db_target)


@dataclass(frozen=True, slots=True)
class EnsembleStats:
    """Seed-ensemble mean of K2 with its maximum absolute deviation."""

    mean_k2: float
    e2: float
    per_seed: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class CrossSeedStats:
    """Multi-measurement statistics: means over seeds, Ē = max deviation from each mean."""

    tau: float
    mean_dt0: float
    e_t0_bar: float
    mean_dt_tau: float
    e_t_tau_bar: float
    delta_dt_bar: float
    k1_bar: float
    e1_bar: float
    mean_theta0: float
    e_c0_bar: float
    mean_theta_tau: float
    e_c_tau_bar: float
    delta_theta_bar: float
    k2_bar_bar: float
    e2_bar: float


@dataclass(frozen=True, slots=True)
class HeadlineComparison:
    """Relative RMS error of K2 about its noiseless value vs valid-only K1 about G."""

    rel_rms_k2: float
    rel_rms_k1_valid: float
    n_valid_k1: int
    n_runs: int

    @property
    def awva_more_accurate(self) -> bool:
        if self.n_valid_k1 == 0:
            return True
        return self.rel_rms_k2 < self.rel_rms_k1_valid


@dataclass(frozen=True, slots=True)
class GroupAggregate:
    """Per-(tau, SNR) summary attached to a sweep."""

    tau: float
    snr_db_target: float | None
    n_runs: int
    ensemble: EnsembleStats
    cross_seed: CrossSeedStats | None
    invalid_wva: int
    invalid_awva: int
    k2_reference: float
    amplification: float
    headline: HeadlineComparison

    @property
    def k2_norm(self) -> float:
        return self.ensemble.mean_k2 / self.k2_reference if self.k2_reference else math.nan

    @property
    def e2_norm(self) -> float:
        return self.ensemble.e2 / abs(self.k2_reference) if self.k2_reference else math.nan

    @property
    def k1_norm(self) -> float:
        if self.cross_seed is None:
            return math.nan
        return self.cross_seed.k1_bar / self.amplification

    @property
    def e1_norm(self) -> float:
        if self.cross_seed is None:
            return math.nan
        return self.cross_seed.e1_bar / self.amplification


# ---------------------------------------------------------------------------
# Experiment plan
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ExperimentPlan:
    """Full configuration of a sweep: optics, noise axes, seeds and report time."""

    grid: TimeGrid = field(default_factory=TimeGrid)
    pointer: PointerConfig = field(default_factory=PointerConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    taus: tuple[float, ...] = DEFAULT_TAUS
    snr_targets_db: tuple[float, ...] = DEFAULT_SNR_TARGETS_DB
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    noise_injection: NoiseInjection = NoiseInjection.AFTER_BS
    noise_pairing: NoisePairing = NoisePairing.SHARED
    report_time: float = 1.5e-3
    k2_statistic: K2Statistic = K2Statistic.AT_REPORT
    fit_offset: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "snr_targets_db", tuple(float(s) for s in self.snr_targets_db))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.taus:
            raise ConfigurationError("taus", "must not be empty")
        if any(t == 0.0 or not math.isfinite(t) for t in self.taus):
            raise ConfigurationError("taus", "every tau must be finite and nonzero")
        if not self.seeds:
            raise ConfigurationError("seeds", "must not be empty")
        if any(s < 0 for s in self.seeds):
            raise ConfigurationError("seeds", "must be nonnegative integers")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds", "must be distinct")
        if not all(math.isfinite(s) for s in self.snr_targets_db):
            raise ConfigurationError("snr_targets_db", "every target must be finite")
        if not self.grid.contains(self.report_time):
            raise ConfigurationError("report_time", "must lie within the time grid")
        if not self.grid.contains(self.pointer.t0):
            raise ConfigurationError("t0", "must lie within the time grid")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentPlan:
        """Rebuild a plan from the sectioned layout produced by :meth:`to_dict`."""
        noise = data.get("noise", {})
        experiment = data.get("experiment", {})
        return cls(
            grid=TimeGrid.from_dict(data.get("time", {})),
            pointer=PointerConfig.from_dict(data.get("pointer", {})),
            selection=SelectionConfig.from_dict(data.get("selection", {})),
            coupling=CouplingConfig.from_dict(data.get("coupling", {})),
            taus=tuple(experiment.get("taus", DEFAULT_TAUS)),
            snr_targets_db=tuple(noise.get("snr_targets_db", DEFAULT_SNR_TARGETS_DB)),
            seeds=tuple(noise.get("seeds", DEFAULT_SEEDS)),
            noise_injection=NoiseInjection(noise.get("injection", "after_bs")),
            noise_pairing=NoisePairing(noise.get("pairing", "shared")),
            report_time=float(experiment.get("report_time", 1.5e-3)),
            k2_statistic=K2Statistic(experiment.get("k2_statistic", "at_report")),
            fit_offset=bool(experiment.get("fit_offset", False)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "time": self.grid.to_dict(),
            "pointer": self.pointer.to_dict(),
            "selection": self.selection.to_dict(),
            "coupling": self.coupling.to_dict(),
            "noise": {
                "injection": self.noise_injection.value,
                "pairing": self.noise_pairing.value,
                "snr_targets_db": list(self.snr_targets_db),
                "seeds": list(self.seeds),
            },
            "experiment": {
                "taus": list(self.taus),
                "report_time": self.report_time,
                "k2_statistic": self.k2_statistic.value,
                "fit_offset": self.fit_offset,
            },
        }
