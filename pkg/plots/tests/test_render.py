"""Render checks against CSVs produced by the pdtrunc CLI.

The fixtures call the pdtrunc command-line interface (the documented
external surface) to generate all six figure presets at reduced sample
size; rendering must then succeed on every one of them.
"""

import json
import subprocess
import sys

import pytest

from pdtrunc_plots import SchemaError, load_series, render

PRESETS = (
    "fig1-left",
    "fig1-right",
    "fig2-left",
    "fig2-right",
    "fig3-left",
    "fig3-right",
)


@pytest.fixture(scope="session")
def preset_outputs(tmp_path_factory):
    """Six preset CSVs + manifests from the pdtrunc CLI at desk-test scale."""
    out_dir = tmp_path_factory.mktemp("sweeps")
    for preset in PRESETS:
        subprocess.run(
            [
                sys.executable,
                "-m",
                "pdtrunc",
                "figure",
                "--preset",
                preset,
                "--out",
                str(out_dir),
                "--n",
                "100",
                "--seed",
                "7",
                "--workers",
                "2",
            ],
            check=True,
        )
    return out_dir


def _paths(out_dir, preset):
    return out_dir / f"{preset}.csv", out_dir / f"{preset}.manifest.json"


class TestRenderPresets:
    def test_all_six_presets_render(self, preset_outputs, tmp_path):
        for preset in PRESETS:
            csv_path, manifest_path = _paths(preset_outputs, preset)
            images = render(csv_path, manifest_path, tmp_path)
            assert all(p.exists() and p.stat().st_size > 0 for p in images)
            assert {p.suffix for p in images} == {".png", ".svg"}

    def test_fig1_left_has_exactly_five_series(self, preset_outputs):
        csv_path, manifest_path = _paths(preset_outputs, "fig1-left")
        preset, series = load_series(csv_path, manifest_path)
        assert preset == "fig1-left"
        assert len(series) == 5
        assert all(len(s.k) == len(series[0].k) for s in series)

    def test_legend_labels_come_from_manifest(self, preset_outputs):
        csv_path, manifest_path = _paths(preset_outputs, "fig2-left")
        manifest = json.loads(manifest_path.read_text())
        _, series = load_series(csv_path, manifest_path)
        assert [s.label for s in series] == manifest["series_labels"]

    def test_bound_columns_are_optional(self, preset_outputs):
        # fig3 presets carry no analytic bounds; rendering must not require them
        csv_path, manifest_path = _paths(preset_outputs, "fig3-right")
        _, series = load_series(csv_path, manifest_path)
        assert all(v is None for s in series for v in s.lower_bound)

    def test_repeat_render_is_byte_identical(self, preset_outputs, tmp_path):
        csv_path, manifest_path = _paths(preset_outputs, "fig1-left")
        first = render(csv_path, manifest_path, tmp_path / "a")
        second = render(csv_path, manifest_path, tmp_path / "b")
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()


class TestSchemaValidation:
    def test_header_only_csv_is_rejected(self, preset_outputs, tmp_path):
        _, manifest_path = _paths(preset_outputs, "fig1-left")
        empty = tmp_path / "empty.csv"
        empty.write_text(
            "k,delta,sigma,eta,n,c_hat,se,ci_low,ci_high,lower_bound,upper_bound,method,seed\n"
        )
        with pytest.raises(SchemaError, match="no data rows"):
            load_series(empty, manifest_path)

    def test_missing_columns_are_listed(self, preset_outputs, tmp_path):
        _, manifest_path = _paths(preset_outputs, "fig1-left")
        bad = tmp_path / "bad.csv"
        bad.write_text("k,c_hat\n2,0.5\n")
        with pytest.raises(SchemaError, match="ci_low"):
            load_series(bad, manifest_path)

    def test_cli_exit_codes(self, preset_outputs, tmp_path):
        csv_path, manifest_path = _paths(preset_outputs, "fig1-left")
        ok = subprocess.run(
            [
                sys.executable,
                "-m",
                "pdtrunc_plots.render",
                "--csv",
                str(csv_path),
                "--manifest",
                str(manifest_path),
                "--out",
                str(tmp_path),
            ],
            capture_output=True,
        )
        assert ok.returncode == 0
        bad = tmp_path / "bad.csv"
        bad.write_text("k\n")
        err = subprocess.run(
            [
                sys.executable,
                "-m",
                "pdtrunc_plots.render",
                "--csv",
                str(bad),
                "--manifest",
                str(manifest_path),
                "--out",
                str(tmp_path),
            ],
            capture_output=True,
        )
        assert err.returncode != 0
        assert b"schema error" in err.stderr
