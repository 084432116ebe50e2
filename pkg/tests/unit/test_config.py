"""Tests for awva.config — TOML documents, validation and error locations."""

from __future__ import annotations

from pathlib import Path

import pytest

from awva.config import (
    DEFAULT_CONFIG,
    ConfigDocumentError,
    load_config,
    load_document,
    parse_document,
)
from awva.models import ExperimentPlan, NoiseInjection, NoisePairing


class TestDefaults:
    def test_empty_document_is_default_plan(self) -> None:
        doc = parse_document("")
        assert doc.plan == ExperimentPlan()
        assert doc.output.workers == 1
        assert doc.output.plots is False

    def test_default_config_sections(self) -> None:
        assert set(DEFAULT_CONFIG) == {
            "time", "pointer", "selection", "coupling", "noise", "experiment", "output"
        }
        assert DEFAULT_CONFIG["time"]["dt"] == 1e-7


class TestParse:
    def test_overrides(self, small_config: Path) -> None:
        plan = load_config(small_config)
        assert plan.grid.dt == 1e-6
        assert plan.taus == (3e-9, 6e-9)
        assert plan.snr_targets_db == (6.6, -3.3)
        assert plan.seeds == (0, 100)
        assert plan.pointer.omega == 2e-4

    def test_enums_and_output(self) -> None:
        doc = parse_document(
            '[noise]\ninjection = "before_bs"\npairing = "independent"\n\n'
            '[output]\nworkers = 4\nplots = true\nout_dir = "runs"\n'
        )
        assert doc.plan.noise_injection is NoiseInjection.BEFORE_BS
        assert doc.plan.noise_pairing is NoisePairing.INDEPENDENT
        assert doc.output.workers == 4
        assert doc.output.plots
        assert doc.output.out_dir == "runs"

    def test_integers_accepted_as_floats(self) -> None:
        plan = parse_document("[selection]\ng = 10000\n").plan
        assert plan.selection.g == 1e4

    def test_negative_snr_targets(self) -> None:
        plan = parse_document("[noise]\nsnr_targets_db = [-3.3, -6.3]\n").plan
        assert plan.snr_targets_db == (-3.3, -6.3)

    def test_taus_echo_through_metadata(self, tmp_path: Path) -> None:
        from awva.results import read_metadata_plan, write_metadata

        plan = parse_document("[experiment]\ntaus = [3e-9, 6e-9, 9e-9, 12e-9, 15e-9]\n").plan
        write_metadata(plan, tmp_path / "metadata.json")
        echoed = read_metadata_plan(tmp_path / "metadata.json")
        assert echoed == plan
        assert echoed.taus == (3e-9, 6e-9, 9e-9, 12e-9, 15e-9)

    def test_path_recorded(self, small_config: Path) -> None:
        assert load_document(small_config).path == small_config


class TestErrors:
    def test_alpha_zero_names_key_line_and_constraint(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.toml"
        path.write_text("[time]\ndt = 1e-7\n\n[selection]\nalpha = 0\n", encoding="utf-8")
        with pytest.raises(ConfigDocumentError) as info:
            load_document(path)
        err = info.value
        assert err.key == "selection.alpha"
        assert err.line == 5
        assert "(0, pi/2]" in str(err)
        assert str(err).startswith(f"{path}:5: selection.alpha:")

    def test_unknown_key(self) -> None:
        with pytest.raises(ConfigDocumentError) as info:
            parse_document("[pointer]\nsigma = 1.0\n")
        assert info.value.key == "pointer.sigma"
        assert info.value.constraint == "unknown key"
        assert info.value.line == 2

    def test_unknown_section(self) -> None:
        with pytest.raises(ConfigDocumentError) as info:
            parse_document("[plotting]\ncolor = 'red'\n")
        assert info.value.key == "plotting"
        assert info.value.line == 1

    def test_bad_enum(self) -> None:
        with pytest.raises(ConfigDocumentError, match="after_bs"):
            parse_document('[noise]\ninjection = "sideways"\n')

    def test_string_where_number_expected(self) -> None:
        with pytest.raises(ConfigDocumentError, match="must be a number"):
            parse_document('[time]\ndt = "fast"\n')

    def test_boolean_seed_rejected(self) -> None:
        with pytest.raises(ConfigDocumentError, match="noise.seeds"):
            parse_document("[noise]\nseeds = [true]\n")

    def test_duplicate_seeds(self) -> None:
        with pytest.raises(ConfigDocumentError) as info:
            parse_document("[noise]\nseeds = [1, 1]\n")
        assert info.value.key == "noise.seeds"
        assert info.value.line == 2

    @pytest.mark.parametrize("value", ["inf", "-inf", "nan"])
    def test_non_finite_snr_target(self, value: str) -> None:
        with pytest.raises(ConfigDocumentError) as info:
            parse_document(f"[noise]\nsnr_targets_db = [{value}, 6.6]\n")
        assert info.value.key == "noise.snr_targets_db"
        assert info.value.constraint == "every target must be finite"
        assert info.value.line == 2

    def test_zero_workers(self) -> None:
        with pytest.raises(ConfigDocumentError, match="output.workers"):
            parse_document("[output]\nworkers = 0\n")

    def test_invalid_toml_reports_line(self) -> None:
        with pytest.raises(ConfigDocumentError) as info:
            parse_document("[time]\ndt = \n")
        assert info.value.line == 2
        assert "invalid TOML" in str(info.value)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(OSError):
            load_document(tmp_path / "absent.toml")

    def test_weak_regime_is_not_a_document_error(self) -> None:
        # tau range is checked at synthesis time, not parse time
        plan = parse_document("[experiment]\ntaus = [3e-8]\n").plan
        assert plan.taus == (3e-8,)
