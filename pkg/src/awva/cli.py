"""awva CLI — click command group for simulation, sweeps and trace tools."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import TYPE_CHECKING

import click

from awva import __version__
from awva.config import ConfigDocument, load_document
from awva.models import ConfigurationError

if TYPE_CHECKING:
    from awva.experiment import RunArtifacts
    from awva.models import GroupAggregate

logging.basicConfig(level=logging.WARNING)


class ConfigError(click.ClickException):
    """Invalid configuration (exit code 1)."""

    exit_code = 1

    def __init__(self, message: str) -> None:
        super().__init__(message)


class NumericalFailureError(click.ClickException):
    """Every fit failed to converge (exit code 2)."""

    exit_code = 2

    def __init__(self, message: str) -> None:
        super().__init__(message)


class OutputError(click.ClickException):
    """Artifact could not be read or written (exit code 3)."""

    exit_code = 3

    def __init__(self, message: str) -> None:
        super().__init__(message)


@contextmanager
def _errors() -> Iterator[None]:
    """Map library errors onto CLI exit codes."""
    from awva.experiment import GroupingError

    try:
        yield
    except (ConfigurationError, GroupingError) as exc:
        raise ConfigError(str(exc)) from exc
    except OSError as exc:
        raise OutputError(str(exc)) from exc


def _document(config: str | None) -> ConfigDocument:
    if config is None:
        return ConfigDocument()
    return load_document(Path(config))


def _out_dir(option: str | None, document: ConfigDocument) -> Path:
    out = Path(option or document.output.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sidecar(option: str | None, input_path: str, command: str) -> Path:
    """Metadata path for a trace tool: *option*, else ``<input stem>.<command>.json`` beside the input."""
    if option is not None:
        return Path(option)
    source = Path(input_path)
    return source.with_name(f"{source.stem}.{command}.json")


@click.group()
@click.version_option(version=__version__, prog_name="awva")
@click.option("-v", "--verbose", is_flag=True, default=False, help="Log progress at INFO level.")
def cli(verbose: bool) -> None:
    """Weak-value amplification simulator: WVA and AWVA delay estimation under noise."""
    if verbose:
        logging.getLogger().setLevel(logging.INFO)


@cli.command()
@click.option("--tau", type=float, default=None, help="Time delay in seconds (default: coupling.tau).")
@click.option("--snr-db", type=float, default=math.inf, show_default=True, help="Target SNR; inf runs noiseless.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True, help="Noise seed.")
@click.option("--config", type=click.Path(), default=None, help="TOML configuration document.")
@click.option("--out-dir", type=click.Path(), default=None, help="Output directory.")
@click.option("--plots/--no-plots", default=None, help="Write SVG figures.")
def simulate(
    tau: float | None,
    snr_db: float,
    seed: int,
    config: str | None,
    out_dir: str | None,
    plots: bool | None,
) -> None:
    """Run one (tau, SNR, seed) experiment and write its record and traces."""
    from awva.experiment import simulate_run
    from awva.results import write_metadata, write_runs_csv, write_trace_csv

    with _errors():
        document = _document(config)
        plan = document.plan
        tau_value = plan.coupling.tau if tau is None else tau
        if tau_value == 0:
            raise ConfigurationError("tau", "must be nonzero")
        out = _out_dir(out_dir, document)
        artifacts = simulate_run(plan, tau_value, snr_db, seed)
        record = artifacts.record

        write_runs_csv([record], out / "runs.csv")
        write_trace_csv(artifacts.i1_tau, out / "i1.csv")
        write_trace_csv(artifacts.arm21, out / "i21.csv")
        write_trace_csv(artifacts.arm22, out / "i22.csv")
        write_trace_csv(artifacts.theta0.to_trace(), out / "theta0.csv")
        write_trace_csv(artifacts.theta_tau.to_trace(), out / "theta_tau.csv")
        write_metadata(plan, out / "metadata.json", command="simulate", tau=tau_value, snr_db=snr_db, seed=seed)
        if plots if plots is not None else document.output.plots:
            _plot_run(artifacts, out)

    click.echo(f"tau={tau_value:.6g} s  snr_target={snr_db:g} dB  seed={seed}")
    click.echo(
        f"WVA   dt0={record.fit0.delta_t:.6g} dt_tau={record.fit_tau.delta_t:.6g} "
        f"K1={record.wva.k1:.6g} ± {record.wva.e1:.3g} valid={record.wva.valid}"
    )
    click.echo(
        f"AWVA  theta0={record.theta0:.6g} theta_tau={record.theta_tau:.6g} "
        f"K2={record.awva.k2_at_report:.6g} K2max={record.awva.k2_max:.6g} "
        f"valid={record.awva.valid}"
    )
    click.echo(f"Wrote artifacts to {out}")
    if not record.converged:
        raise NumericalFailureError("Gaussian fits did not converge")


def _plot_run(artifacts: RunArtifacts, out: Path) -> None:
    from awva.noise_engine import spectrum
    from awva.plots import (
        PlotKind,
        render_svg,
        sensitivity_curve_series,
        spectrum_series,
        theta_series,
        trace_series,
    )

    render_svg(
        [
            trace_series("I1 (tau)", artifacts.i1_tau),
            trace_series("I21", artifacts.arm21),
            trace_series("I22", artifacts.arm22),
        ],
        PlotKind.TRACE,
        out / "traces.svg",
    )
    render_svg(
        [theta_series("Theta_0", artifacts.theta0), theta_series("Theta_tau", artifacts.theta_tau)],
        PlotKind.THETA,
        out / "theta.svg",
    )
    render_svg([sensitivity_curve_series("K2(t)", artifacts.k2)], PlotKind.SENSITIVITY_CURVE, out / "k2_curve.svg")
    if artifacts.noise is not None:
        render_svg([spectrum_series("noise", spectrum(artifacts.noise))], PlotKind.SPECTRUM, out / "noise_psd.svg")


def _plot_aggregates(aggregates: Sequence[GroupAggregate], out: Path) -> None:
    from awva.plots import PlotKind, render_svg, sensitivity_series

    for tau in dict.fromkeys(a.tau for a in aggregates):
        group = [a for a in aggregates if a.tau == tau]
        if group:
            render_svg(sensitivity_series(group), PlotKind.SENSITIVITY, out / f"sensitivity_tau_{tau:.3g}.svg")


@cli.command()
@click.option("--config", type=click.Path(), default=None, help="TOML configuration document.")
@click.option("--out-dir", type=click.Path(), default=None, help="Output directory.")
@click.option("--plots/--no-plots", default=None, help="Write SVG figures.")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Parallel worker processes.")
def sweep(config: str | None, out_dir: str | None, plots: bool | None, workers: int | None) -> None:
    """Run every (tau, SNR, seed) of the plan and write runs and aggregates."""
    from awva.experiment import sweep as run_sweep
    from awva.results import write_aggregates_csv, write_metadata, write_runs_csv

    with _errors():
        document = _document(config)
        plan = document.plan
        out = _out_dir(out_dir, document)
        result = run_sweep(plan, workers=workers or document.output.workers)
        write_runs_csv(result.records, out / "runs.csv")
        write_aggregates_csv(result.aggregates, out / "aggregates.csv")
        write_metadata(plan, out / "metadata.json", command="sweep")
        if plots if plots is not None else document.output.plots:
            _plot_aggregates(result.aggregates, out)

    click.echo(f"{'TAU':<12}{'SNR':>7}{'K2_NORM':>10}{'E2_NORM':>10}{'K1_NORM':>10}{'INVALID':>9}")
    for agg in result.aggregates:
        click.echo(
            f"{agg.tau:<12.3g}{agg.snr_db_target:>7.1f}{agg.k2_norm:>10.4f}"
            f"{agg.e2_norm:>10.4f}{agg.k1_norm:>10.4f}{agg.invalid_wva:>9d}"
        )
    click.echo(f"Wrote {len(result.records)} runs to {out}")
    if result.all_nonconverged:
        raise NumericalFailureError("every Gaussian fit failed to converge")


@cli.command()
@click.option("--input", "input_path", type=click.Path(), required=True, help="Trace CSV (t_s,value).")
@click.option("--t0", type=float, default=1.5e-3, show_default=True, help="Reference centre in seconds.")
@click.option("--omega", type=float, default=2.0e-4, show_default=True, help="Pointer spread in seconds.")
@click.option("--offset", is_flag=True, default=False, help="Fit a constant baseline as well.")
@click.option("--metadata", type=click.Path(), default=None, help="Result JSON (default: <input>.fit.json).")
def fit(input_path: str, t0: float, omega: float, offset: bool, metadata: str | None) -> None:
    """Fit a Gaussian pulse to a trace and print the centre shift."""
    from awva.estimators import DegenerateInputError, fit_gaussian
    from awva.models import PointerConfig
    from awva.results import read_trace_csv, write_metadata

    with _errors():
        trace = read_trace_csv(Path(input_path))
        pointer = PointerConfig(t0=t0, omega=omega)
        try:
            result = fit_gaussian(trace, pointer, offset=offset)
        except DegenerateInputError as exc:
            raise NumericalFailureError(str(exc)) from exc
        write_metadata(
            None,
            _sidecar(metadata, input_path, "fit"),
            trace.grid,
            command="fit",
            input=input_path,
            pointer=pointer.to_dict(),
            offset=offset,
            fit=result.to_dict(),
        )

    click.echo(f"delta_t={result.delta_t:.10g}")
    click.echo(f"se_delta_t={result.se_delta_t:.6g}")
    click.echo(f"amplitude={result.amplitude:.10g}")
    click.echo(f"width={result.width:.10g}")
    click.echo(f"converged={str(result.converged).lower()} iterations={result.iterations}")
    if not result.converged:
        raise NumericalFailureError("Gaussian fit did not converge")


@cli.command()
@click.option("--input-a", type=click.Path(), required=True, help="First trace CSV.")
@click.option("--input-b", type=click.Path(), required=True, help="Second trace CSV.")
@click.option("--out", type=click.Path(), default=None, help="Write the Theta curve as CSV.")
@click.option("--at", "at_time", type=float, default=None, help="Report Theta at this time (default: end).")
@click.option("--metadata", type=click.Path(), default=None, help="Result JSON (default: <input-a>.theta.json).")
def theta(input_a: str, input_b: str, out: str | None, at_time: float | None, metadata: str | None) -> None:
    """Running integral of the product of two traces."""
    from awva.estimators import theta_curve
    from awva.models import ShapeError
    from awva.results import read_trace_csv, write_metadata, write_trace_csv

    with _errors():
        a = read_trace_csv(Path(input_a))
        b = read_trace_csv(Path(input_b))
        try:
            curve = theta_curve(a, b)
        except ShapeError as exc:
            raise ConfigError(str(exc)) from exc
        t = a.grid.time_at(a.grid.n - 1) if at_time is None else at_time
        value = curve.at(t)
        if out is not None:
            write_trace_csv(curve.to_trace(), Path(out))
        write_metadata(
            None,
            _sidecar(metadata, input_a, "theta"),
            a.grid,
            command="theta",
            input_a=input_a,
            input_b=input_b,
            at=t,
            theta=value,
        )

    click.echo(f"theta({t:.6g})={value:.10g}")


@cli.command()
@click.option("--input", "input_path", type=click.Path(), required=True, help="Trace CSV (t_s,value).")
@click.option("--out", type=click.Path(), default=None, help="Write freq_hz,psd,magnitude CSV.")
@click.option("--plot", type=click.Path(), default=None, help="Write an SVG of the PSD.")
@click.option("--metadata", type=click.Path(), default=None, help="Result JSON (default: <input>.spectrum.json).")
def spectrum(input_path: str, out: str | None, plot: str | None, metadata: str | None) -> None:
    """Periodogram and FFT magnitude of a trace."""
    from awva.noise_engine import spectrum as compute_spectrum
    from awva.plots import PlotKind, render_svg, spectrum_series
    from awva.results import read_trace_csv, write_metadata, write_spectrum_csv

    with _errors():
        trace = read_trace_csv(Path(input_path))
        spec = compute_spectrum(trace)
        if out is not None:
            write_spectrum_csv(spec, Path(out))
        if plot is not None:
            render_svg([spectrum_series(Path(input_path).stem, spec)], PlotKind.SPECTRUM, Path(plot))
        write_metadata(
            None,
            _sidecar(metadata, input_path, "spectrum"),
            trace.grid,
            command="spectrum",
            input=input_path,
            bins=int(spec.freqs.size),
            padded_length=spec.padded_length,
        )

    click.echo(f"bins={spec.freqs.size} padded_length={spec.padded_length}")
    click.echo(f"mean_psd={float(spec.psd[1:].mean()):.6g}")


@cli.command()
@click.option("--runs", type=click.Path(), required=True, help="runs.csv from simulate or sweep.")
@click.option(
    "--config",
    type=click.Path(),
    default=None,
    help="Plan used for references (default: metadata.json beside the runs file).",
)
@click.option("--out-dir", type=click.Path(), default=None, help="Output directory (default: next to runs).")
@click.option("--plots", is_flag=True, default=False, help="Write sensitivity SVGs.")
def report(runs: str, config: str | None, out_dir: str | None, plots: bool) -> None:
    """Recompute group aggregates from a runs file."""
    from awva.experiment import aggregate
    from awva.results import read_metadata_plan, read_runs_csv, write_aggregates_csv, write_metadata

    with _errors():
        records = read_runs_csv(Path(runs))
        sweep_metadata = Path(runs).with_name("metadata.json")
        if config is None and sweep_metadata.exists():
            plan = read_metadata_plan(sweep_metadata)
        else:
            plan = _document(config).plan
        if not records:
            raise ConfigurationError("runs", "file holds no records")
        out = Path(out_dir) if out_dir else Path(runs).parent
        out.mkdir(parents=True, exist_ok=True)
        aggregates = aggregate(records, plan)
        write_aggregates_csv(aggregates, out / "aggregates.csv")
        write_metadata(plan, out / "report_metadata.json", command="report", runs=runs)
        if plots:
            _plot_aggregates(aggregates, out)

    click.echo(f"{len(records)} runs, {len(aggregates)} groups")
    for agg in aggregates:
        hl = agg.headline
        click.echo(
            f"tau={agg.tau:.3g} snr={agg.snr_db_target:g}: K2/K2th={agg.k2_norm:.4f}±{agg.e2_norm:.4f} "
            f"invalid_wva={agg.invalid_wva} rms_k2={hl.rel_rms_k2:.4g} rms_k1_valid={hl.rel_rms_k1_valid:.4g}"
        )
