"""Configuration-driven sweeps, figure presets, and the command-line front end.

Sweeps emit one CSV row per (k, series) point with the fixed column set

    k,delta,sigma,eta,n,c_hat,se,ci_low,ci_high,lower_bound,upper_bound,method,seed

plus a manifest JSON recording the full configuration, per-series labels and
the row ordering (k-major, series inner), which is what the plotting
component keys on.  Absent quantities are empty fields, never zeros.
Re-running any sweep with the same seed yields a byte-identical CSV.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

from . import __version__
from . import bounds as bounds_mod
from . import calibrate as calibrate_mod
from .errors import ConfigError, PdtruncError, UnknownPreset
from .estimators import (
    estimate_c,
    estimate_c_cond,
    estimate_c_given_z,
    estimate_marginal_tv,
    estimate_mean_min_eig,
    structure_ratio,
)
from .model import (
    BernoulliSparsity,
    Dense,
    ExponentialDiagonal,
    FixedDiagonal,
    GammaDiagonal,
    GaussianSlab,
    PriorSpec,
    StructureMatrix,
    diagonal_from_json,
)
from .numerics import QuadratureSpec
from .rng import MASK64
from .schedules import Const, Power, Schedule, schedule_from_json

CSV_COLUMNS = (
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
)

OUTPUT_KINDS = ("mc-estimate", "sandwich", "bernstein", "distances", "classify")

SERIES_PARAMS = ("delta", "sigma", "eta")

DEFAULT_PRESET_SEED = 20250801
DEFAULT_PRESET_N = 2000
PRESET_K_GRID = (2, 5, 10, 25, 50, 75, 100, 150, 200)
# The exponential/gamma-diagonal panels start at k = 5: at k = 2 the
# slowest-decaying scale schedule is still large relative to the typical
# smallest diagonal, and the truncation constant genuinely sits below the
# close-to-1 regime those panels illustrate.
PRESET_K_GRID_STOCHASTIC_DIAG = (5, 10, 25, 50, 75, 100, 150, 200)

PRESET_NAMES = (
    "fig1-left",
    "fig1-right",
    "fig2-left",
    "fig2-right",
    "fig3-left",
    "fig3-right",
)


@dataclass(frozen=True)
class SweepConfig:
    """Grid over k with one free schedule among sigma(k), delta(k), eta(k).

    ``series`` lists the schedule settings of the free parameter, one CSV
    series each.  delta- and eta-driven sweeps resolve the scale through the
    edge-margin rule sigma = mu / ((2+delta) sqrt(eta k)) and therefore need
    a fixed diagonal; sigma-driven sweeps set the Gaussian slab scale
    directly.
    """

    k_grid: Tuple[int, ...]
    n: int
    seed: int
    diagonal: object
    series_param: str
    series: Tuple[Schedule, ...]
    eta: Optional[Schedule] = None
    delta: Optional[Schedule] = None
    outputs: Tuple[str, ...] = ("mc-estimate",)
    level: float = 0.95

    def __post_init__(self) -> None:
        if not self.k_grid:
            raise ConfigError("k_grid: must be nonempty")
        if list(self.k_grid) != sorted(set(self.k_grid)):
            raise ConfigError("k_grid: must be strictly ascending")
        if min(self.k_grid) < 2:
            raise ConfigError("k_grid: entries must be >= 2")
        if self.n < 100:
            raise ConfigError("n: must be >= 100")
        if self.series_param not in SERIES_PARAMS:
            raise ConfigError(f"series.param: unknown parameter {self.series_param!r}")
        if not self.series:
            raise ConfigError("series.schedules: must be nonempty")
        for out in self.outputs:
            if out not in OUTPUT_KINDS:
                raise ConfigError(f"outputs: unknown output kind {out!r}")
        if "sandwich" in self.outputs and "bernstein" in self.outputs:
            raise ConfigError("outputs: choose at most one of sandwich/bernstein")
        if self.series_param in ("delta", "eta") and not isinstance(
            self.diagonal, FixedDiagonal
        ):
            raise ConfigError(
                "series.param: delta- and eta-driven sweeps need a fixed diagonal"
            )
        if self.series_param == "eta" and self.delta is None:
            raise ConfigError("delta: eta-driven sweeps need a fixed delta schedule")

    def to_json(self) -> dict:
        return {
            "k_grid": list(self.k_grid),
            "n": self.n,
            "seed": self.seed,
            "diagonal": self.diagonal.to_json(),
            "series": {
                "param": self.series_param,
                "schedules": [s.to_json() for s in self.series],
            },
            "eta": self.eta.to_json() if self.eta is not None else None,
            "delta": self.delta.to_json() if self.delta is not None else None,
            "outputs": list(self.outputs),
            "level": self.level,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SweepConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config: expected a JSON object")
        try:
            k_grid = tuple(int(k) for k in obj["k_grid"])
            n = int(obj["n"])
            seed = int(obj["seed"])
            diagonal = diagonal_from_json(obj["diagonal"])
            series_obj = obj["series"]
            series_param = series_obj["param"]
            series = tuple(
                schedule_from_json(s, f"series.schedules[{i}]")
                for i, s in enumerate(series_obj["schedules"])
            )
        except KeyError as exc:
            raise ConfigError(f"config: missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config: {exc}") from exc
        eta = obj.get("eta")
        delta = obj.get("delta")
        return cls(
            k_grid=k_grid,
            n=n,
            seed=seed,
            diagonal=diagonal,
            series_param=series_param,
            series=series,
            eta=schedule_from_json(eta, "eta") if eta else None,
            delta=schedule_from_json(delta, "delta") if delta else None,
            outputs=tuple(obj.get("outputs", ["mc-estimate"])),
            level=float(obj.get("level", 0.95)),
        )

    def series_labels(self) -> list:
        return [f"{self.series_param}={s.label()}" for s in self.series]


def _resolve_point(config: SweepConfig, schedule: Schedule, k: int):
    """Resolve (delta, sigma, eta, spec) for one grid point."""
    eta_val = config.eta.at(k) if config.eta is not None else None
    delta_val = None
    if config.series_param == "delta":
        delta_val = schedule.at(k)
        sigma = calibrate_mod.wigner_threshold(
            config.diagonal.mu, k, delta_val, eta_val if eta_val is not None else 1.0
        )
    elif config.series_param == "sigma":
        sigma = schedule.at(k)
        if not sigma > 0.0:
            raise ConfigError(f"series: sigma schedule produced {sigma} at k={k}")
    else:  # eta-driven
        eta_val = schedule.at(k)
        delta_val = config.delta.at(k)
        sigma = calibrate_mod.wigner_threshold(config.diagonal.mu, k, delta_val, eta_val)
    if eta_val is not None and not 0.0 <= eta_val <= 1.0:
        raise ConfigError(f"eta schedule produced {eta_val} at k={k}")
    sparsity = Dense() if eta_val is None else BernoulliSparsity(eta_val)
    spec = PriorSpec(k, config.diagonal, GaussianSlab(sigma), sparsity)
    return delta_val, sigma, eta_val, spec


def _row_bounds(config: SweepConfig, spec: PriorSpec, sigma: float, k: int):
    """Optional analytic bounds for a sweep row."""
    if "sandwich" in config.outputs:
        if not isinstance(spec.sparsity, Dense):
            raise ConfigError("outputs: sandwich bounds need dense sparsity")
        res = bounds_mod.dense_sandwich(config.diagonal, sigma, k)
        return res.lower, res.upper, res.method
    if "bernstein" in config.outputs:
        if isinstance(config.diagonal, FixedDiagonal):
            res = bounds_mod.bernstein_lower(
                bounds_mod.BERNSTEIN_GAUSS_FIXED, config.diagonal.mu, sigma, k - 1, k
            )
        elif isinstance(config.diagonal, ExponentialDiagonal):
            res = bounds_mod.bernstein_lower(
                bounds_mod.BERNSTEIN_GAUSS_EXPDIAG,
                1.0 / config.diagonal.rate,
                sigma,
                k - 1,
                k,
            )
        else:
            raise ConfigError("outputs: bernstein bounds need a fixed or exponential diagonal")
        return res.lower, res.upper, res.method
    return None, None, None


def _sweep_row(args):
    config, k_index, series_index = args
    k = config.k_grid[k_index]
    schedule = config.series[series_index]
    row_index = k_index * len(config.series) + series_index
    row_seed = (config.seed + row_index) & MASK64
    delta_val, sigma, eta_val, spec = _resolve_point(config, schedule, k)

    row = {name: None for name in CSV_COLUMNS}
    row["k"] = k
    row["delta"] = delta_val
    row["sigma"] = sigma
    row["eta"] = eta_val
    row["n"] = config.n
    row["seed"] = row_seed
    methods = []
    extras = {}

    if "mc-estimate" in config.outputs:
        est = estimate_c(spec, config.n, row_seed, workers=1, level=config.level)
        row["c_hat"] = est.value
        row["se"] = est.se
        row["ci_low"] = est.ci_low
        row["ci_high"] = est.ci_high
        methods.append("mc")
        if "distances" in config.outputs and est.value > 0.0:
            dist = bounds_mod.truncation_distances(est.value).to_json()
            dist.update(bounds_mod.marginal_distance_bounds(est.value, k, iid=True).to_json())
            extras["distances"] = dist

    lower, upper, bound_method = _row_bounds(config, spec, sigma, k)
    if bound_method is not None:
        row["lower_bound"] = lower
        row["upper_bound"] = upper
        methods.append(bound_method)

    row["method"] = "+".join(methods) if methods else "none"
    return row_index, row, extras


def run_sweep(config: SweepConfig, workers: int = 1):
    """Evaluate every (k, series) point; returns (rows, manifest).

    Rows come back in deterministic k-major order with the series inner,
    regardless of scheduling; each row re-derives its own master seed from
    (config.seed, row index).
    """
    tasks = [
        (config, ki, si)
        for ki in range(len(config.k_grid))
        for si in range(len(config.series))
    ]
    if workers <= 1:
        results = [_sweep_row(t) for t in tasks]
    else:
        from .estimators import _limit_worker_blas

        with ProcessPoolExecutor(max_workers=workers, initializer=_limit_worker_blas) as executor:
            results = list(executor.map(_sweep_row, tasks))
    results.sort(key=lambda item: item[0])
    rows = [row for _, row, _ in results]
    extras = {}
    for idx, _, extra in results:
        if extra:
            extras[str(idx)] = extra

    if "classify" in config.outputs:
        extras["classify"] = _classify_series(config)

    manifest = {
        "library": {"name": "pdtrunc", "version": __version__},
        "preset": None,
        "config": config.to_json(),
        "columns": list(CSV_COLUMNS),
        "series_param": config.series_param,
        "series_labels": config.series_labels(),
        "n_series": len(config.series),
        "k_grid": list(config.k_grid),
        "row_order": "k-major, series inner",
    }
    if extras:
        manifest["extras"] = extras
    return rows, manifest


def _classify_series(config: SweepConfig) -> list:
    out = []
    for schedule in config.series:
        if config.series_param == "delta":
            if config.eta is None:
                verdict = bounds_mod.classify_limit("dense-fixed", delta=schedule)
            else:
                verdict = bounds_mod.classify_limit(
                    "sparse-fixed", delta=schedule, eta=config.eta
                )
        elif config.series_param == "eta":
            verdict = bounds_mod.classify_limit(
                "sparse-fixed", delta=config.delta, eta=schedule
            )
        else:  # sigma-driven
            if isinstance(config.diagonal, ExponentialDiagonal):
                verdict = bounds_mod.classify_limit("dense-stochastic-exp", sigma=schedule)
            elif isinstance(config.diagonal, GammaDiagonal):
                if config.diagonal.shape != config.diagonal.rate:
                    raise ConfigError(
                        "classify: the gamma-diagonal rule needs shape == rate"
                    )
                verdict = bounds_mod.classify_limit(
                    "dense-stochastic-gamma", sigma=schedule, alpha=config.diagonal.shape
                )
            else:
                raise ConfigError(
                    "classify: sigma-driven classification needs a stochastic diagonal"
                )
        out.append(verdict.to_json())
    return out


# ---------------------------------------------------------------------------
# CSV / manifest emission
# ---------------------------------------------------------------------------


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt_cell(row[name]) for name in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_sweep_outputs(rows, manifest, csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8", newline="\n")
    manifest_path = csv_path.with_suffix(".manifest.json")
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )
    return manifest_path


# ---------------------------------------------------------------------------
# Figure presets
# ---------------------------------------------------------------------------


def figure_preset(name: str, n: Optional[int] = None, seed: Optional[int] = None) -> SweepConfig:
    """Frozen sweep configurations reproducing the reference experiments.

    fig1: fixed unit diagonal, dense Gaussian off-diagonals; edge margin
    delta constant (left) or decaying with k (right).  fig2: exponential
    (left) / Gamma(2,2) (right) diagonals with direct scale schedules.
    fig3: fixed unit diagonal with Bernoulli sparsity eta = 0.5 k^-1/4
    (left) or 0.5 k^-1/2 (right), the latter below the sparse-edge validity
    threshold.
    """
    n = DEFAULT_PRESET_N if n is None else n
    seed = DEFAULT_PRESET_SEED if seed is None else seed
    const_deltas = tuple(Const(v) for v in (-0.1, -0.05, 0.0, 0.05, 0.1))
    sigma_schedules = tuple(
        Power(1.0, e) for e in (-2.0, -1.5, -1.25, -1.125, -1.0)
    )
    common = dict(n=n, seed=seed, level=0.95)

    if name == "fig1-left":
        return SweepConfig(
            k_grid=PRESET_K_GRID,
            diagonal=FixedDiagonal(1.0),
            series_param="delta",
            series=const_deltas,
            outputs=("mc-estimate", "sandwich"),
            **common,
        )
    if name == "fig1-right":
        return SweepConfig(
            k_grid=PRESET_K_GRID,
            diagonal=FixedDiagonal(1.0),
            series_param="delta",
            series=tuple(Power(1.0, e) for e in (-0.5, -2.0 / 3.0, -1.0, -2.0)),
            outputs=("mc-estimate", "sandwich"),
            **common,
        )
    if name == "fig2-left":
        return SweepConfig(
            k_grid=PRESET_K_GRID_STOCHASTIC_DIAG,
            diagonal=ExponentialDiagonal(1.0),
            series_param="sigma",
            series=sigma_schedules,
            outputs=("mc-estimate", "sandwich"),
            **common,
        )
    if name == "fig2-right":
        return SweepConfig(
            k_grid=PRESET_K_GRID_STOCHASTIC_DIAG,
            diagonal=GammaDiagonal(2.0, 2.0),
            series_param="sigma",
            series=sigma_schedules,
            outputs=("mc-estimate", "sandwich"),
            **common,
        )
    if name == "fig3-left":
        return SweepConfig(
            k_grid=PRESET_K_GRID,
            diagonal=FixedDiagonal(1.0),
            series_param="delta",
            series=const_deltas,
            eta=Power(0.5, -0.25),
            outputs=("mc-estimate",),
            **common,
        )
    if name == "fig3-right":
        return SweepConfig(
            k_grid=PRESET_K_GRID,
            diagonal=FixedDiagonal(1.0),
            series_param="delta",
            series=const_deltas,
            eta=Power(0.5, -0.5),
            outputs=("mc-estimate",),
            **common,
        )
    raise UnknownPreset(f"unknown preset {name!r}; choose one of {PRESET_NAMES}")


def run_figure_preset(name: str, out_dir: Path, n=None, seed=None, workers: int = 1):
    """Run a preset and write <preset>.csv plus <preset>.manifest.json."""
    config = figure_preset(name, n=n, seed=seed)
    rows, manifest = run_sweep(config, workers=workers)
    manifest["preset"] = name
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    write_sweep_outputs(rows, manifest, csv_path)
    return csv_path


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: invalid JSON in {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("--config: top level must be a JSON object")
    return obj


def _emit(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _require_field(cfg: dict, name: str):
    if name not in cfg:
        raise ConfigError(f"config.{name}: required field is missing")
    return cfg[name]


def _pattern_from(cfg: dict, name: str) -> StructureMatrix:
    obj = _require_field(cfg, name)
    try:
        return StructureMatrix.from_edges(int(obj["k"]), obj["edges"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"config.{name}: expected {{k, edges}}: {exc}") from exc


def _cmd_estimate(args) -> None:
    cfg = _load_config(args.config)
    spec = PriorSpec.from_json(_require_field(cfg, "spec"))
    op = cfg.get("op", "c")
    n = args.n if args.n is not None else int(cfg.get("n", 1000))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    workers = args.workers if args.workers is not None else int(cfg.get("workers", 1))
    if op == "c":
        result = estimate_c(spec, n, seed, workers).to_json()
    elif op == "c-given-z":
        result = estimate_c_given_z(spec, _pattern_from(cfg, "pattern"), n, seed, workers).to_json()
    elif op == "c-cond":
        pair = tuple(int(v) for v in _require_field(cfg, "pair"))
        result = estimate_c_cond(spec, pair, float(_require_field(cfg, "x")), n, seed).to_json()
    elif op == "mean-min-eig":
        pattern = _pattern_from(cfg, "pattern") if "pattern" in cfg else None
        result = estimate_mean_min_eig(spec, pattern, n, seed, workers).to_json()
    elif op == "marginal-tv":
        pair = tuple(int(v) for v in _require_field(cfg, "pair"))
        result = estimate_marginal_tv(spec, pair, n, int(cfg.get("bins", 0)), seed).to_json()
    elif op == "structure-ratio":
        result = structure_ratio(
            spec, _pattern_from(cfg, "pattern"), _pattern_from(cfg, "pattern2"), n, seed, workers
        ).to_json()
    else:
        raise ConfigError(f"config.op: unknown estimator {op!r}")
    _emit({"op": op, "result": result}, args.out)


def _quad_from(cfg: dict) -> QuadratureSpec:
    obj = cfg.get("quad")
    if not obj:
        return QuadratureSpec()
    return QuadratureSpec(
        method=obj.get("method", "adaptive-simpson"),
        abs_tol=float(obj.get("abs_tol", 1e-10)),
        max_subdivisions=int(obj.get("max_subdivisions", 4096)),
    )


def _cmd_bound(args) -> None:
    cfg = _load_config(args.config)
    kind = _require_field(cfg, "bound")
    k = int(_require_field(cfg, "k"))
    if kind == "sandwich":
        diag = diagonal_from_json(_require_field(cfg, "diagonal"))
        res = bounds_mod.dense_sandwich(
            diag,
            float(_require_field(cfg, "sigma")),
            k,
            int(cfg["m"]) if "m" in cfg else None,
            _quad_from(cfg),
        )
    else:
        res = bounds_mod.bernstein_lower(
            kind,
            float(_require_field(cfg, "mu")),
            float(_require_field(cfg, "sigma")),
            int(_require_field(cfg, "d")),
            k,
            a=float(cfg["a"]) if "a" in cfg else None,
            t=float(cfg["t"]) if "t" in cfg else None,
        )
    _emit({"bound": kind, "result": res.to_json()}, args.out)


def _cmd_distances(args) -> None:
    cfg = _load_config(args.config)
    mode = cfg.get("mode", "truncation")
    if mode == "truncation":
        res = bounds_mod.truncation_distances(float(_require_field(cfg, "c")))
    elif mode == "marginal":
        res = bounds_mod.marginal_distance_bounds(
            float(_require_field(cfg, "c")),
            int(_require_field(cfg, "k")),
            bool(cfg.get("iid", True)),
        )
    elif mode == "sparse":
        res = bounds_mod.sparse_marginal_bounds(
            float(_require_field(cfg, "b")),
            int(_require_field(cfg, "k")),
            float(cfg.get("eta", 1.0)),
        )
    else:
        raise ConfigError(f"config.mode: unknown distances mode {mode!r}")
    _emit({"mode": mode, "result": res.to_json()}, args.out)


def _cmd_calibrate(args) -> None:
    cfg = _load_config(args.config)
    method = cfg.get("method", "mc")
    target = float(_require_field(cfg, "target_c"))
    if method == "mc":
        spec = PriorSpec.from_json(_require_field(cfg, "spec"))
        n = args.n if args.n is not None else int(cfg.get("n", 10000))
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        report = calibrate_mod.sigma_from_mc(
            spec, target, n, float(cfg.get("tol_c", 0.01)), seed
        )
    elif method == "bound":
        kind = _require_field(cfg, "bound")
        kwargs = dict(k=int(_require_field(cfg, "k")), tol=float(cfg.get("tol", 1e-9)))
        if kind == calibrate_mod.SANDWICH_LOWER:
            kwargs["diag"] = diagonal_from_json(_require_field(cfg, "diagonal"))
            if "m" in cfg:
                kwargs["m"] = int(cfg["m"])
            kwargs["quad"] = _quad_from(cfg)
        else:
            kwargs["mu"] = float(_require_field(cfg, "mu"))
            kwargs["d"] = int(_require_field(cfg, "d"))
            if "a" in cfg:
                kwargs["a"] = float(cfg["a"])
            if "t" in cfg:
                kwargs["t"] = float(cfg["t"])
        report = calibrate_mod.sigma_from_bound(target, kind, **kwargs)
    else:
        raise ConfigError(f"config.method: unknown calibration method {method!r}")
    _emit({"method": method, "result": report.to_json()}, args.out)


def _cmd_classify(args) -> None:
    cfg = _load_config(args.config)
    family = _require_field(cfg, "family")
    kwargs = {}
    for name in ("delta", "sigma", "eta"):
        if cfg.get(name):
            kwargs[name] = schedule_from_json(cfg[name], name)
    if "alpha" in cfg:
        kwargs["alpha"] = float(cfg["alpha"])
    verdict = bounds_mod.classify_limit(family, **kwargs)
    _emit({"family": family, "result": verdict.to_json()}, args.out)


def _cmd_sweep(args) -> None:
    cfg = _load_config(args.config)
    if args.n is not None:
        cfg["n"] = args.n
    if args.seed is not None:
        cfg["seed"] = args.seed
    config = SweepConfig.from_json(cfg)
    rows, manifest = run_sweep(config, workers=args.workers or 1)
    if args.out is None:
        raise ConfigError("--out: sweep needs a CSV output path")
    write_sweep_outputs(rows, manifest, Path(args.out))


def _cmd_figure(args) -> None:
    if args.preset is None:
        raise ConfigError("--preset: figure needs a preset name")
    out_dir = Path(args.out) if args.out else Path.cwd()
    run_figure_preset(
        args.preset, out_dir, n=args.n, seed=args.seed, workers=args.workers or 1
    )


_COMMANDS = {
    "estimate": _cmd_estimate,
    "bound": _cmd_bound,
    "distances": _cmd_distances,
    "calibrate": _cmd_calibrate,
    "classify": _cmd_classify,
    "sweep": _cmd_sweep,
    "figure": _cmd_figure,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdtrunc",
        description="Quantify, bound and calibrate positive-definite prior truncation.",
    )
    parser.add_argument("--version", action="version", version=f"pdtrunc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", type=str, default=None, help="JSON configuration file")
        cmd.add_argument("--out", type=str, default=None, help="output path (JSON/CSV/dir)")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--n", type=int, default=None)
        cmd.add_argument("--workers", type=int, default=None)
        if name == "figure":
            cmd.add_argument("--preset", type=str, default=None, choices=PRESET_NAMES)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PdtruncError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
