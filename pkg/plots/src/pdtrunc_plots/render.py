"""Render sweep CSV output as figure panels.

Input is the pdtrunc sweep interface: a CSV with the fixed column set

    k,delta,sigma,eta,n,c_hat,se,ci_low,ci_high,lower_bound,upper_bound,method,seed

in k-major row order (series inner), and a manifest JSON carrying the
series count, verbatim legend labels, and the preset name.  This module
only reads, groups and draws; it recomputes nothing.

Rendering is deterministic: fixed styling, a fixed SVG hash salt and no
timestamp metadata make repeated runs byte-identical for identical inputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED_COLUMNS = [
    "k",
    "delta",
    "sigma",
    "eta",
    "n",
    "c_hat",
    "se",
    "ci_low",
    "ci_high",
    "lower_bound",
    "upper_bound",
    "method",
    "seed",
]

_DPI = 150


class SchemaError(Exception):
    """The CSV or manifest does not match the documented sweep schema."""


@dataclass
class Series:
    label: str
    k: List[int]
    c_hat: List[float]
    ci_low: List[float]
    ci_high: List[float]
    lower_bound: List[Optional[float]]
    upper_bound: List[Optional[float]]


def _float_or_none(cell: str) -> Optional[float]:
    return None if cell == "" else float(cell)


def load_series(csv_path: Path, manifest_path: Path):
    """Parse and group the sweep rows; returns (preset name, series list)."""
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read manifest {manifest_path}: {exc}") from exc
    for field in ("n_series", "series_labels", "columns"):
        if field not in manifest:
            raise SchemaError(f"manifest is missing the {field!r} field")
    n_series = int(manifest["n_series"])
    labels = list(manifest["series_labels"])
    if len(labels) != n_series:
        raise SchemaError("manifest series_labels length disagrees with n_series")
    preset = manifest.get("preset") or Path(csv_path).stem

    try:
        with open(csv_path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError("CSV is empty (no header row)") from None
            missing = [name for name in EXPECTED_COLUMNS if name not in header]
            if missing:
                raise SchemaError(f"CSV is missing columns: {', '.join(missing)}")
            index = {name: header.index(name) for name in EXPECTED_COLUMNS}
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read CSV {csv_path}: {exc}") from exc

    if not rows:
        raise SchemaError("CSV has a header but no data rows")
    if len(rows) % n_series != 0:
        raise SchemaError(
            f"row count {len(rows)} is not a multiple of n_series={n_series}"
        )

    series = [
        Series(label, [], [], [], [], [], []) for label in labels
    ]
    for row_idx, row in enumerate(rows):
        target = series[row_idx % n_series]  # rows are k-major, series inner
        cell = lambda name: row[index[name]]
        if cell("c_hat") == "":
            raise SchemaError(f"row {row_idx + 1} has no c_hat estimate")
        target.k.append(int(cell("k")))
        target.c_hat.append(float(cell("c_hat")))
        target.ci_low.append(float(cell("ci_low")))
        target.ci_high.append(float(cell("ci_high")))
        target.lower_bound.append(_float_or_none(cell("lower_bound")))
        target.upper_bound.append(_float_or_none(cell("upper_bound")))
    return preset, series


def render(csv_path, manifest_path, out_dir) -> List[Path]:
    """Draw one panel (PNG and SVG) from a sweep CSV and its manifest."""
    preset, series = load_series(Path(csv_path), Path(manifest_path))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    plt.rcParams["svg.hashsalt"] = "pdtrunc-plots"
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for idx, s in enumerate(series):
        color = colors[idx % len(colors)]
        ax.plot(s.k, s.c_hat, marker="o", markersize=3.5, linewidth=1.4, color=color, label=s.label)
        ax.fill_between(s.k, s.ci_low, s.ci_high, color=color, alpha=0.18, linewidth=0)
        if any(v is not None for v in s.lower_bound):
            ks = [k for k, v in zip(s.k, s.lower_bound) if v is not None]
            vs = [v for v in s.lower_bound if v is not None]
            ax.plot(ks, vs, linestyle="--", linewidth=0.9, color=color, alpha=0.7)
        if any(v is not None for v in s.upper_bound):
            ks = [k for k, v in zip(s.k, s.upper_bound) if v is not None]
            vs = [v for v in s.upper_bound if v is not None]
            ax.plot(ks, vs, linestyle="--", linewidth=0.9, color=color, alpha=0.7)
    ax.set_xlabel("matrix dimension k")
    ax.set_ylabel("estimated probability of positive definiteness")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(preset)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()

    png_path = out_dir / f"{preset}.png"
    svg_path = out_dir / f"{preset}.svg"
    fig.savefig(png_path, dpi=_DPI, metadata={"Software": "pdtrunc-plots"})
    fig.savefig(svg_path, metadata={"Date": None})
    plt.close(fig)
    return [png_path, svg_path]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render a pdtrunc sweep CSV as a figure panel."
    )
    parser.add_argument("--csv", required=True, help="sweep CSV path")
    parser.add_argument("--manifest", required=True, help="sweep manifest JSON path")
    parser.add_argument("--out", required=True, help="output directory for PNG/SVG")
    args = parser.parse_args(argv)
    try:
        paths = render(args.csv, args.manifest, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
