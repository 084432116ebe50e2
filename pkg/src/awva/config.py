"""Sectioned TOML configuration documents for experiment plans."""

from __future__ import annotations

import logging
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from awva.models import (
    AmplificationMode,
    ConfigurationError,
    ExperimentPlan,
    K2Statistic,
    NoiseInjection,
    NoisePairing,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class OutputSettings:
    out_dir: str = "awva-out"
    plots: bool = False
    workers: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {"out_dir": self.out_dir, "plots": self.plots, "workers": self.workers}


DEFAULT_CONFIG: dict[str, Any] = {
    **ExperimentPlan().to_dict(),
    "output": OutputSettings().to_dict(),
}

_ENUMS: dict[str, type[Any]] = {
    "selection.amplification_mode": AmplificationMode,
    "noise.injection": NoiseInjection,
    "noise.pairing": NoisePairing,
    "experiment.k2_statistic": K2Statistic,
}

# dataclass field name -> document key, for errors raised by the models
_FIELD_KEYS: dict[str, str] = {
    "t_start": "time.t_start",
    "t_end": "time.t_end",
    "dt": "time.dt",
    "i0": "pointer.i0",
    "t0": "pointer.t0",
    "omega": "pointer.omega",
    "alpha": "selection.alpha",
    "g": "selection.g",
    "tau": "coupling.tau",
    "taus": "experiment.taus",
    "report_time": "experiment.report_time",
    "seeds": "noise.seeds",
    "snr_targets_db": "noise.snr_targets_db",
}


class ConfigDocumentError(ConfigurationError):
    """Invalid configuration document, anchored to a line when one is known."""

    def __init__(self, key: str, constraint: str, path: Path | None = None, line: int | None = None) -> None:
        super().__init__(key, constraint)
        self.path = path
        self.line = line

    def __str__(self) -> str:
        where = str(self.path) if self.path is not None else "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        return f"{where}: {self.key}: {self.constraint}"


@dataclass(frozen=True, slots=True)
class ConfigDocument:
    """Parsed document: the experiment plan plus output settings."""

    plan: ExperimentPlan = field(default_factory=ExperimentPlan)
    output: OutputSettings = field(default_factory=OutputSettings)
    path: Path | None = None


def _locate(text: str, dotted_key: str) -> int | None:
    """1-based line of ``key = ...`` inside ``[section]``, else of the section header."""
    section, _, key = dotted_key.partition(".")
    current = ""
    header_line: int | None = None
    key_re = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped.strip("[] ")
            if current == section:
                header_line = lineno
            continue
        if current == section and key and key_re.match(raw):
            return lineno
    return header_line


def _number(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(key, "must be a number")
    return float(value)


def _validate(doc: dict[str, Any]) -> dict[str, Any]:
    """Type-check the document and return it merged over the defaults."""
    merged: dict[str, Any] = {}
    for section, defaults in DEFAULT_CONFIG.items():
        given = doc.get(section, {})
        if not isinstance(given, dict):
            raise ConfigurationError(section, "must be a [section] table")
        unknown = sorted(set(given) - set(defaults))
        if unknown:
            raise ConfigurationError(f"{section}.{unknown[0]}", "unknown key")
        merged[section] = {**defaults, **given}
    unknown_sections = sorted(set(doc) - set(DEFAULT_CONFIG))
    if unknown_sections:
        raise ConfigurationError(unknown_sections[0], "unknown section")

    for dotted, enum_type in _ENUMS.items():
        section, key = dotted.split(".")
        value = merged[section][key]
        allowed = [m.value for m in enum_type]
        if value not in allowed:
            raise ConfigurationError(dotted, f"must be one of {', '.join(map(repr, allowed))}")

    for section in ("time", "pointer", "coupling"):
        for key, value in merged[section].items():
            merged[section][key] = _number(f"{section}.{key}", value)
    for key in ("alpha", "g"):
        merged["selection"][key] = _number(f"selection.{key}", merged["selection"][key])
    merged["experiment"]["report_time"] = _number(
        "experiment.report_time", merged["experiment"]["report_time"]
    )

    for dotted in ("experiment.taus", "noise.snr_targets_db", "noise.seeds"):
        section, key = dotted.split(".")
        value = merged[section][key]
        if not isinstance(value, list):
            raise ConfigurationError(dotted, "must be a list")
        if key == "seeds":
            if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in value):
                raise ConfigurationError(dotted, "must be nonnegative integers")
        else:
            merged[section][key] = [_number(dotted, v) for v in value]

    for dotted in ("experiment.fit_offset", "output.plots"):
        section, key = dotted.split(".")
        if not isinstance(merged[section][key], bool):
            raise ConfigurationError(dotted, "must be true or false")
    workers = merged["output"]["workers"]
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigurationError("output.workers", "must be an integer >= 1")
    if not isinstance(merged["output"]["out_dir"], str) or not merged["output"]["out_dir"]:
        raise ConfigurationError("output.out_dir", "must be a nonempty string")
    if not all(math.isfinite(v) for v in merged["noise"]["snr_targets_db"]):
        raise ConfigurationError("noise.snr_targets_db", "every target must be finite")
    return merged


def parse_document(text: str, path: Path | None = None) -> ConfigDocument:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        line = int(match.group(1)) if match else None
        raise ConfigDocumentError("document", f"invalid TOML ({exc})", path, line) from exc

    try:
        merged = _validate(doc)
        plan = ExperimentPlan.from_dict(merged)
    except ConfigurationError as exc:
        key = _FIELD_KEYS.get(exc.key, exc.key)
        raise ConfigDocumentError(key, exc.constraint, path, _locate(text, key)) from exc

    output = OutputSettings(**merged["output"])
    return ConfigDocument(plan=plan, output=output, path=path)


def load_document(path: Path) -> ConfigDocument:
    """Read and validate a configuration document; missing files raise ``OSError``."""
    text = Path(path).read_text(encoding="utf-8")
    document = parse_document(text, Path(path))
    logger.info("Loaded configuration from %s", path)
    return document


def load_config(path: Path) -> ExperimentPlan:
    return load_document(path).plan
