"""Command-line interface: configuration, orchestration, and file output.

Subcommands
-----------
simulate        split-step Monte-Carlo run; writes ensemble moments in the
                binary tensor format plus a JSON run manifest
evolve-kernel   integrate a moment kernel read from a binary tensor file;
                writes snapshots and a CSV of conserved-quantity diagnostics
states          Fock-state Wigner/generating-function sweep (CSV), or the
                Gaussian stationarity residual table with --stationarity
screens         with --validate: screen-statistics tables as CSV
spectrum-table  CSV of the transverse PSD over a log-spaced range
validate        full cross-validation suite; JSON + text report

Common flags: --config <path>, --seed <u64>, --threads <n>, --out <dir>.
IPFE_THREADS is the fallback for --threads.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import validation
from .arrayio import grid_metadata, read_array, write_array
from .grid import FrequencyGrid, Spectrum
from .moments import (MomentKernel, boundary_mass_fraction, evolve_kernel,
                      hermiticity_residual, kernel_trace)
from .phase_screen import screen_statistics
from .spectrum import (SpectrumKind, TurbulenceModel, lambda_grid,
                       psd_transverse)
from .splitstep import PropagationPlan, ensemble_moments
from .states import FockSpec, GaussianState, fock_generating, fock_wigner, \
    gaussian_drift


class ConfigError(ValueError):
    """Schema or guard violation in a run configuration."""


_SCHEMA = {
    "grid": {
        "dim": int,
        "n": int,
        "delta_a": float,
        "wavelength": float,
    },
    "model": {
        "kind": str,
        "cn2": float,
        "outer_scale": float,
        "inner_scale": float,
    },
    "plan": {
        "z_total": float,
        "n_slabs": int,
        "n_realizations": int,
        "master_seed": int,
    },
    "source": {
        "type": str,
        "sigma_a": float,
        "amplitude": float,
    },
    "task": str,
    "output_dir": str,
    "tolerances": dict,
}

_REQUIRED = {
    "grid": ("dim", "n", "delta_a", "wavelength"),
    "model": ("kind", "cn2"),
    "plan": ("z_total",),
}

_PLAN_DEFAULTS = {"n_slabs": 64, "n_realizations": 500, "master_seed": 0}


@dataclass
class RunConfig:
    grid: FrequencyGrid
    model: TurbulenceModel
    z_total: float
    n_slabs: int
    n_realizations: int
    master_seed: int
    source_sigma_a: float
    source_amplitude: float
    task: str | None = None
    output_dir: str = "."
    tolerances: dict = field(default_factory=dict)

    def plan(self) -> PropagationPlan:
        return PropagationPlan(self.grid, self.model, self.z_total,
                               self.n_slabs, self.n_realizations,
                               self.master_seed)

    def source(self) -> Spectrum:
        values = self.source_amplitude * np.exp(
            -self.grid.freq_sq() / (2.0 * self.source_sigma_a ** 2))
        return Spectrum(self.grid, values.astype(np.complex128))


def _check_type(value, expected, path):
    if expected is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if expected is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, expected):
        raise ConfigError(
            f"{path}: expected {expected.__name__}, got {value!r}")
    return value


def _check_section(data, schema, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    out = {}
    for key, value in data.items():
        if key not in schema:
            raise ConfigError(f"{path}.{key}: unknown field")
        out[key] = _check_type(value, schema[key], f"{path}.{key}")
    return out


def load_config(path) -> RunConfig:
    """Load and validate a JSON run configuration (strict schema)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    for key in raw:
        if key not in _SCHEMA:
            raise ConfigError(f"{key}: unknown field")
    for section, keys in _REQUIRED.items():
        if section not in raw:
            raise ConfigError(f"{section}: required section missing")
        for key in keys:
            if key not in raw[section]:
                raise ConfigError(f"{section}.{key}: required field missing")

    grid_raw = _check_section(raw["grid"], _SCHEMA["grid"], "grid")
    model_raw = _check_section(raw["model"], _SCHEMA["model"], "model")
    plan_raw = dict(_PLAN_DEFAULTS)
    plan_raw.update(_check_section(raw["plan"], _SCHEMA["plan"], "plan"))
    source_raw = _check_section(raw.get("source", {}), _SCHEMA["source"],
                                "source")

    try:
        grid = FrequencyGrid(grid_raw["dim"], grid_raw["n"],
                             grid_raw["delta_a"], grid_raw["wavelength"])
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc

    kinds = {k.value: k for k in SpectrumKind}
    if model_raw["kind"] not in kinds:
        raise ConfigError(
            f"model.kind: unknown kind {model_raw['kind']!r}; expected one "
            f"of {sorted(kinds)}")
    if model_raw["cn2"] < 0.0:
        raise ConfigError("model.cn2: must be >= 0")
    try:
        model = TurbulenceModel(kinds[model_raw["kind"]], model_raw["cn2"],
                                model_raw.get("outer_scale"),
                                model_raw.get("inner_scale", 0.0))
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    if (model.kind is SpectrumKind.VON_KARMAN
            and model.outer_scale > 1.0 / grid.delta_a):
        warnings.warn("outer scale exceeds grid support (L0 > 1/delta_a)",
                      stacklevel=2)

    cfg = RunConfig(
        grid=grid,
        model=model,
        z_total=plan_raw["z_total"],
        n_slabs=plan_raw["n_slabs"],
        n_realizations=plan_raw["n_realizations"],
        master_seed=plan_raw["master_seed"],
        source_sigma_a=source_raw.get("sigma_a",
                                      grid.n * grid.delta_a / 8.0),
        source_amplitude=source_raw.get("amplitude", 1.0),
        task=raw.get("task"),
        output_dir=raw.get("output_dir", "."),
        tolerances=raw.get("tolerances", {}),
    )
    try:
        cfg.plan().check_guards()
    except ValueError as exc:
        raise ConfigError(f"plan: {exc}") from exc
    return cfg


def resolve_threads(arg_value) -> int | None:
    """--threads flag, falling back to the IPFE_THREADS environment
    variable; applied to the numba threading layer when available."""
    value = arg_value
    if value is None:
        env = os.environ.get("IPFE_THREADS")
        if env is not None:
            try:
                value = int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"IPFE_THREADS: expected an integer, got {env!r}") \
                    from exc
    if value is None:
        return None
    if value < 1:
        raise ConfigError("threads must be >= 1")
    try:
        import numba
        numba.set_num_threads(value)
    except ImportError:
        pass
    return value


def _out_dir(args, cfg: RunConfig | None) -> Path:
    if args.out is not None:
        path = Path(args.out)
    elif cfg is not None:
        path = Path(cfg.output_dir)
    else:
        path = Path(".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_seed(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.master_seed = args.seed
    return cfg


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    cfg = _apply_seed(load_config(args.config), args)
    threads = resolve_threads(args.threads)
    out = _out_dir(args, cfg)
    plan = cfg.plan()
    t0 = time.perf_counter()
    stats = ensemble_moments(cfg.source(), plan)
    wall = time.perf_counter() - t0

    meta = grid_metadata(cfg.grid, master_seed=cfg.master_seed)
    write_array(out / "mean_field.bin", stats.mean_field, meta)
    write_array(out / "mean_field_se.bin",
                stats.mean_field_se.astype(np.complex128), meta)
    write_array(out / "second_moment.bin", stats.second_moment, meta)
    write_array(out / "second_moment_se.bin",
                stats.second_moment_se.astype(np.complex128), meta)
    write_array(out / "anomalous.bin", stats.anomalous, meta)

    a_max_sq = float(np.max(cfg.grid.freq_sq()))
    manifest = {
        "master_seed": cfg.master_seed,
        "n_realizations": cfg.n_realizations,
        "n_slabs": cfg.n_slabs,
        "z_total_m": cfg.z_total,
        "threads": threads,
        "wall_time_s": wall,
        "guards": {
            "sampling": np.pi * cfg.grid.wavelength * plan.dz * a_max_sq,
            "weak_scattering": (cfg.grid.wavenumber ** 2
                                * lambda_grid(cfg.model, cfg.grid)
                                * plan.dz),
        },
        "grid": meta["grid"],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote ensemble moments for {cfg.n_realizations} realizations "
          f"to {out} ({wall:.1f} s)")
    return 0


def cmd_evolve_kernel(args) -> int:
    cfg = _apply_seed(load_config(args.config), args)
    resolve_threads(args.threads)
    out = _out_dir(args, cfg)
    values, _ = read_array(args.input)
    m, n = (int(x) for x in args.orders.split(","))
    kernel = MomentKernel((m, n), cfg.grid, values)

    z_values = sorted(float(z) for z in args.z_list.split(","))
    if z_values[0] < 0:
        raise ConfigError("z values must be >= 0")
    rows = []
    current = kernel
    z_prev = 0.0
    meta = grid_metadata(cfg.grid, orders=[m, n])
    for z in z_values:
        span = z - z_prev
        if span > 0:
            dz_cfg = cfg.z_total / cfg.n_slabs if cfg.z_total > 0 else span
            steps = max(1, int(np.ceil(span / dz_cfg)))
            current = evolve_kernel(current, cfg.model, span, steps)
        z_prev = z
        write_array(out / f"kernel_z{z:g}.bin", current.values, meta)
        trace = kernel_trace(current).real if m == n else float("nan")
        herm = hermiticity_residual(current) if m == n else float("nan")
        rows.append([z, trace, herm, boundary_mass_fraction(current)])
    _write_csv(out / "kernel_evolution.csv",
               ["z_m", "trace", "hermiticity_residual",
                "boundary_mass_fraction"], rows)
    print(f"wrote {len(z_values)} kernel snapshots to {out}")
    return 0


def cmd_states(args) -> int:
    cfg = _apply_seed(load_config(args.config), args)
    resolve_threads(args.threads)
    out = _out_dir(args, cfg)
    grid = cfg.grid

    if args.stationarity:
        rows = []
        for width in (2.0, 1.0, 3.0, 5.0):
            state = GaussianState.thermal(grid, width)
            rhs, fourth = gaussian_drift(state, cfg.model)
            rows.append([width, float(np.max(np.abs(rhs))), fourth])
        _write_csv(out / "stationarity.csv",
                   ["kernel_width", "second_order_max_abs",
                    "fourth_order_residual"], rows)
        print(f"wrote stationarity table to {out}")
        return 0

    prof = np.exp(-grid.freq_sq()
                  / (2.0 * cfg.source_sigma_a ** 2)).astype(np.complex128)
    fock = FockSpec.normalized(grid, prof)
    rows = []
    for r in np.linspace(0.0, 2.0, 101):
        alpha = Spectrum(grid, r * fock.profile)
        row = [r]
        for order in range(4):
            row.append(fock_wigner(order, fock, alpha))
        row.append(fock_generating(0.5, fock, alpha).real)
        rows.append(row)
    _write_csv(out / "fock_sweep.csv",
               ["alpha_scale", "w0", "w1", "w2", "w3",
                "generating_eta_0.5"], rows)
    print(f"wrote Fock-state sweep to {out}")
    return 0


def cmd_screens(args) -> int:
    cfg = _apply_seed(load_config(args.config), args)
    resolve_threads(args.threads)
    if not args.validate:
        print("nothing to do: pass --validate for the statistics tables",
              file=sys.stderr)
        return 2
    out = _out_dir(args, cfg)
    dz = cfg.z_total / cfg.n_slabs
    stats = screen_statistics(cfg.model, cfg.grid, dz, args.samples,
                              cfg.master_seed)
    freqs = cfg.grid.axis_frequencies()
    target = stats.target_variance.ravel()
    sample = stats.sample_variance.ravel()
    se = stats.variance_se.ravel()
    rows = []
    for i in range(target.size):
        rel = sample[i] / target[i] - 1.0 if target[i] > 0 else 0.0
        rows.append([i, freqs[i % cfg.grid.n], target[i], sample[i],
                     se[i], rel])
    _write_csv(out / "screens_variance.csv",
               ["site", "frequency_cyc_per_m", "target_variance_m2",
                "sample_variance_m2", "standard_error_m2",
                "relative_deviation"], rows)
    _write_csv(out / "screens_cross.csv",
               ["site_a", "site_b", "abs_covariance_m2",
                "standard_error_m2"],
               [[a, b, mag, serr] for a, b, mag, serr in stats.cross_pairs])
    print(f"wrote screen statistics over {stats.n_samples} draws to {out}; "
          f"max relative variance deviation {stats.max_rel_deviation:.3e}, "
          f"max cross-mode sigma {stats.max_cross_sigma:.2f}")
    return 0


def cmd_spectrum_table(args) -> int:
    cfg = _apply_seed(load_config(args.config), args)
    out = _out_dir(args, cfg)
    a_lo = cfg.grid.delta_a / 10.0
    a_hi = 10.0 * cfg.grid.n * cfg.grid.delta_a / 2.0
    rows = []
    for a in np.geomspace(a_lo, a_hi, args.points):
        rows.append([a, psd_transverse(cfg.model, a)])
    _write_csv(out / "spectrum_table.csv",
               ["a_cyc_per_m", "psd_transverse_m3"], rows)
    print(f"wrote {args.points}-point PSD table to {out}")
    return 0


def cmd_validate(args) -> int:
    overrides = {}
    cfg = None
    if args.config is not None:
        cfg = _apply_seed(load_config(args.config), args)
        overrides = {
            "wavelength": cfg.grid.wavelength,
            "dim": cfg.grid.dim,
            "n": cfg.grid.n,
            "delta_a": cfg.grid.delta_a,
            "cn2": cfg.model.cn2,
            "outer_scale": cfg.model.outer_scale,
            "inner_scale": cfg.model.inner_scale,
            "z_total": cfg.z_total,
            "n_slabs": cfg.n_slabs,
            "n_realizations": cfg.n_realizations,
            "master_seed": cfg.master_seed,
            "source_sigma_a": cfg.source_sigma_a,
        }
    elif args.seed is not None:
        overrides["master_seed"] = args.seed
    threads = resolve_threads(args.threads)
    out = _out_dir(args, cfg)
    report = validation.run_validate(overrides, threads=threads)
    with open(out / "validation_report.json", "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    text = report.to_text()
    with open(out / "validation_report.txt", "w") as fh:
        fh.write(text + "\n")
    print(text)
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------

def _add_common(parser, config_required=True) -> None:
    parser.add_argument("--config", required=config_required,
                        help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker thread count (default: IPFE_THREADS "
                             "or library default)")
    parser.add_argument("--out", default=None,
                        help="output directory (default: config output_dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipfe",
        description="moment-kernel evolution through turbulence with a "
                    "split-step Monte-Carlo cross-check")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate",
                       help="split-step ensemble run (binary moments + "
                            "manifest)")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evolve-kernel",
                       help="integrate a moment kernel from a binary file")
    _add_common(p)
    p.add_argument("--input", required=True,
                   help="binary tensor file with the initial kernel")
    p.add_argument("--orders", default="1,1",
                   help="kernel orders as m,n (default 1,1)")
    p.add_argument("--z-list", default="0,500,1000", dest="z_list",
                   help="comma-separated snapshot distances in meters")
    p.set_defaults(func=cmd_evolve_kernel)

    p = sub.add_parser("states",
                       help="Fock-state sweep CSV, or --stationarity table")
    _add_common(p)
    p.add_argument("--stationarity", action="store_true",
                   help="emit the Gaussian stationarity residual table")
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("screens", help="phase-screen statistics")
    _add_common(p)
    p.add_argument("--validate", action="store_true",
                   help="emit the screen statistics tables as CSV")
    p.add_argument("--samples", type=int, default=10000,
                   help="number of screens to draw (default 10000)")
    p.set_defaults(func=cmd_screens)

    p = sub.add_parser("spectrum-table",
                       help="transverse PSD over a log-spaced range (CSV)")
    _add_common(p)
    p.add_argument("--points", type=int, default=200,
                   help="number of table rows (default 200)")
    p.set_defaults(func=cmd_spectrum_table)

    p = sub.add_parser("validate",
                       help="run the full cross-validation suite")
    _add_common(p, config_required=False)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
