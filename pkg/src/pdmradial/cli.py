"""Command-line front end with reproducible CSV/JSON output.

Commands
--------
solve     solve one configuration (ordering/method selectable)
compare   run both orderings through both solvers and report gaps
sweep     cartesian sweep over lambda and ell lists
converge  observed accuracy orders on a 1:2:4 grid ladder

Outputs are byte-deterministic for a given configuration: fixed field
order, shortest round-trip float formatting, and no timestamps inside
the data files.  The timestamp lives in a sidecar ``*.manifest.json``
reproducibility manifest next to the data file.  If the environment
variable ``PDMRADIAL_OUTDIR`` is set, relative output paths are placed
under it.

Exit codes: 0 success, 1 bad arguments or config, 2 numerical failure
(partial results are still written, failure rows flagged), 3 I/O
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import compare_orderings, convergence_order
from .discretize import Spectrum, build_grid, refine_and_extrapolate
from .errors import (
    BracketError,
    ConfigError,
    ContinuumError,
    PdmError,
    ShootingConvergenceError,
)
from .model import ModelParams, Ordering, nu_label
from .shooting import ShootSpec, eigenfunction, find_eigenvalue, numerov_sweep, shooting_form

CSV_HEADER = "ordering,method,N,l,n,nu,lambda,omega,E,error_estimate,residual,trusted,r_max,grid_points"

_ORDERING_CHOICES = ("naive", "bdd", "both")
_METHOD_CHOICES = ("fd", "shoot", "both")
_FORMAT_CHOICES = ("csv", "json")
_COMMANDS = ("solve", "compare", "sweep", "converge")

OUTDIR_ENV = "PDMRADIAL_OUTDIR"


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one run (flags > file > defaults)."""

    command: str
    dim: int = 3
    ell: int = 0
    lam: float = 0.1
    omega: float = 1.0
    levels: int = 6
    ordering: str = "both"
    method: str = "both"
    r_max: float | None = None
    grid_points: int | None = None
    output: str | None = None
    format: str = "csv"
    lambda_list: tuple[float, ...] | None = None
    ell_list: tuple[int, ...] | None = None
    dump_eigenfunctions: bool = False
    shoot_tol: float = 1e-9

    def model_params(self, lam: float | None = None, ell: int | None = None) -> ModelParams:
        try:
            return ModelParams(
                dim=self.dim,
                ell=self.ell if ell is None else ell,
                lam=self.lam if lam is None else lam,
                omega=self.omega,
                levels=self.levels,
            )
        except ValueError as exc:
            raise ConfigError(str(exc))

    def orderings(self) -> tuple[Ordering, ...]:
        if self.ordering == "naive":
            return (Ordering.NAIVE,)
        if self.ordering == "bdd":
            return (Ordering.BENDANIEL_DUKE,)
        return (Ordering.NAIVE, Ordering.BENDANIEL_DUKE)

    def methods(self) -> tuple[str, ...]:
        return ("fd", "shoot") if self.method == "both" else (self.method,)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _parse_float(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: malformed number {text!r}")
    if math.isnan(value):
        raise ConfigError(f"{key}: malformed number {text!r}")
    return value


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: malformed integer {text!r}")


def _parse_bool(key: str, text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_float_list(key: str, text: str) -> tuple[float, ...]:
    items = [s for s in (part.strip() for part in text.split(",")) if s]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return tuple(_parse_float(key, s) for s in items)


def _parse_int_list(key: str, text: str) -> tuple[int, ...]:
    items = [s for s in (part.strip() for part in text.split(",")) if s]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return tuple(_parse_int(key, s) for s in items)


_FILE_PARSERS = {
    "dim": _parse_int,
    "ell": _parse_int,
    "lambda": _parse_float,
    "omega": _parse_float,
    "levels": _parse_int,
    "ordering": lambda k, v: v.strip(),
    "method": lambda k, v: v.strip(),
    "r_max": _parse_float,
    "grid_points": _parse_int,
    "output": lambda k, v: v.strip(),
    "format": lambda k, v: v.strip(),
    "lambda_list": _parse_float_list,
    "ell_list": _parse_int_list,
    "dump_eigenfunctions": _parse_bool,
    "shoot_tol": _parse_float,
}

_KEY_TO_FIELD = {key: ("lam" if key == "lambda" else key) for key in _FILE_PARSERS}


def _read_config_file(path: str) -> dict:
    """Parse a plain-text key=value config document ('#' comments)."""
    values: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror or exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FILE_PARSERS:
            raise ConfigError(f"unknown config key: {key}")
        values[_KEY_TO_FIELD[key]] = _FILE_PARSERS[key](key, value.strip())
    return values


def _validate(config: RunConfig) -> RunConfig:
    if config.command not in _COMMANDS:
        raise ConfigError(f"command: unknown command {config.command!r}")
    if config.ordering not in _ORDERING_CHOICES:
        raise ConfigError(f"ordering: must be one of {', '.join(_ORDERING_CHOICES)}")
    if config.method not in _METHOD_CHOICES:
        raise ConfigError(f"method: must be one of {', '.join(_METHOD_CHOICES)}")
    if config.format not in _FORMAT_CHOICES:
        raise ConfigError(f"format: must be one of {', '.join(_FORMAT_CHOICES)}")
    if config.r_max is not None and config.r_max <= 0:
        raise ConfigError("r_max: must be > 0")
    if config.grid_points is not None and config.grid_points < 64:
        raise ConfigError("grid_points: must be >= 64")
    if config.shoot_tol <= 0:
        raise ConfigError("shoot_tol: must be > 0")
    if config.lambda_list is not None and any(v < 0 for v in config.lambda_list):
        raise ConfigError("lambda_list: lambda must be >= 0")
    if config.ell_list is not None and any(v < 0 for v in config.ell_list):
        raise ConfigError("ell_list: ell must be >= 0")
    config.model_params()  # validates dim/ell/lambda/omega/levels
    return config


def load_config(path: str | None, flag_values: dict, command: str) -> RunConfig:
    """Merge defaults, config-file values and explicit flags.

    Precedence: flags > file > defaults.  Unknown keys, malformed
    numbers and invariant violations raise ConfigError with a one-line
    diagnostic naming the offending key.
    """
    merged: dict = {}
    if path is not None:
        merged.update(_read_config_file(path))
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    valid_fields = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - valid_fields
    if unknown:
        raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
    return _validate(RunConfig(command=command, **merged))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return "nan"
    return repr(float(value))


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    return value


_ROW_FIELDS = ("ordering", "method", "N", "l", "n", "nu", "lambda", "omega",
               "E", "error_estimate", "residual", "trusted", "r_max", "grid_points")


def _row(params: ModelParams, ordering: Ordering, method: str, n: int,
         energy: float | None, error_estimate: float | None, residual: float | None,
         trusted: bool, r_max: float, grid_points: int, converged: bool,
         tags: tuple[str, ...]) -> dict:
    return {
        "ordering": ordering.value,
        "method": method,
        "N": params.dim,
        "l": params.ell,
        "n": n,
        "nu": nu_label(n, params),
        "lambda": params.lam,
        "omega": params.omega,
        "E": energy,
        "error_estimate": error_estimate,
        "residual": residual,
        "trusted": trusted,
        "r_max": r_max,
        "grid_points": grid_points,
        "converged": converged,
        "tags": list(tags),
    }


def _rows_from_spectrum(spectrum: Spectrum) -> list[dict]:
    return [
        _row(spectrum.params, spectrum.ordering, spectrum.method, lv.n, lv.energy,
             lv.error_estimate, lv.residual, lv.trusted, spectrum.grid.r_max,
             spectrum.grid.num_interior, lv.converged, spectrum.quality_tags)
        for lv in spectrum.levels
    ]


_ORDER_RANK = {"naive": 0, "bdd": 1}
_METHOD_RANK = {"fd": 0, "shoot": 1}


def _sort_rows(rows: list[dict]) -> list[dict]:
    return sorted(
        rows,
        key=lambda r: (r["lambda"], r["l"], r["n"],
                       _ORDER_RANK[r["ordering"]], _METHOD_RANK[r["method"]]),
    )


def _csv_text(rows: list[dict]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join(_fmt_value(row[name]) for name in _ROW_FIELDS))
    return "\n".join(lines) + "\n"


def _json_text(rows: list[dict], comparisons: dict, notes: list[str], config: RunConfig) -> str:
    doc = {
        "manifest": {
            "tool_version": __version__,
            "effective_config": _config_echo(config),
        },
        "results": _json_safe(rows),
        "comparisons": _json_safe(comparisons),
        "notes": list(notes),
    }
    return json.dumps(doc, indent=2) + "\n"


def _config_echo(config: RunConfig) -> dict:
    echo = {}
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        key = "lambda" if f.name == "lam" else f.name
        echo[key] = _json_safe(value)
    echo["hbar"] = 1.0
    return echo


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def _solve_rows(config: RunConfig, params: ModelParams) -> tuple[list[dict], bool]:
    """Rows for one parameter set; returns (rows, any_failure)."""
    failure = False
    rows: list[dict] = []
    k = config.levels
    grid = build_grid(params, k, r_max=config.r_max, num_points=config.grid_points)
    tags = ("reduced-accuracy-boundary",) if params.reduced_accuracy_boundary else ()
    for ordering in config.orderings():
        if "fd" in config.methods():
            spectrum = refine_and_extrapolate(params, ordering, k, grid=grid)
            rows.extend(_rows_from_spectrum(spectrum))
            failure = failure or not all(lv.converged for lv in spectrum.levels)
        if "shoot" in config.methods():
            spec = ShootSpec(shooting_form(params, ordering), grid)
            for n in range(k):
                try:
                    energy = find_eigenvalue(spec, n, tol=config.shoot_tol)
                    residual = abs(numerov_sweep(spec, energy).mismatch)
                    thr = params.threshold
                    margin = max(10.0 * config.shoot_tol, 1e-6 * thr) if math.isfinite(thr) else 0.0
                    trusted = energy < thr - margin if math.isfinite(thr) else True
                    rows.append(_row(params, ordering, "shoot", n, energy, config.shoot_tol,
                                     residual, trusted, grid.r_max, grid.num_interior,
                                     True, tags))
                except (BracketError, ShootingConvergenceError):
                    failure = True
                    rows.append(_row(params, ordering, "shoot", n, None, None, None,
                                     False, grid.r_max, grid.num_interior, False,
                                     tags + ("unconverged",)))
    return rows, failure


def _dump_eigenfunctions(config: RunConfig, params: ModelParams, out_stem: Path) -> list[Path]:
    written = []
    k = config.levels
    grid = build_grid(params, k, r_max=config.r_max, num_points=config.grid_points)
    for ordering in config.orderings():
        if "fd" in config.methods():
            spectrum = refine_and_extrapolate(params, ordering, k, grid=grid)
            r = spectrum.grid.nodes()
            for lv in spectrum.levels:
                path = out_stem.parent / (
                    f"{out_stem.name}-eigf-lam{_fmt_value(params.lam)}-l{params.ell}"
                    f"-{ordering.value}-fd-n{lv.n}.csv"
                )
                lines = ["r,R"] + [
                    f"{_fmt_value(ri)},{_fmt_value(vi)}"
                    for ri, vi in zip(r, spectrum.vectors[:, lv.n])
                ]
                path.write_text("\n".join(lines) + "\n")
                written.append(path)
        if "shoot" in config.methods():
            spec = ShootSpec(shooting_form(params, ordering), grid)
            for n in range(k):
                try:
                    energy = find_eigenvalue(spec, n, tol=config.shoot_tol)
                    solution = eigenfunction(spec, energy)
                except PdmError:
                    continue
                path = out_stem.parent / (
                    f"{out_stem.name}-eigf-lam{_fmt_value(params.lam)}-l{params.ell}"
                    f"-{ordering.value}-shoot-n{n}.csv"
                )
                lines = ["r,R"] + [
                    f"{_fmt_value(ri)},{_fmt_value(vi)}"
                    for ri, vi in zip(solution.grid.nodes(), solution.radial)
                ]
                path.write_text("\n".join(lines) + "\n")
                written.append(path)
    return written


def _comparisons_compare(config: RunConfig, params: ModelParams) -> tuple[list[dict], dict, list[str], bool]:
    report = compare_orderings(params, config.levels, shoot_tol=config.shoot_tol)
    rows: list[dict] = []
    failure = False
    for ordering in (Ordering.NAIVE, Ordering.BENDANIEL_DUKE):
        spectrum = report.fd_spectra[ordering.value]
        rows.extend(_rows_from_spectrum(spectrum))
        grid = report.grid  # shooting ran on the shared coarse grid
        tags = spectrum.quality_tags
        for n in range(config.levels):
            energy = report.shoot_energies[ordering.value][n]
            residual = report.shoot_residuals[ordering.value][n]
            if energy is None:
                failure = True
                rows.append(_row(params, ordering, "shoot", n, None, None, None,
                                 False, grid.r_max, grid.num_interior, False,
                                 tags + ("unconverged",)))
            else:
                thr = params.threshold
                margin = max(10.0 * config.shoot_tol, 1e-6 * thr) if math.isfinite(thr) else 0.0
                trusted = energy < thr - margin if math.isfinite(thr) else True
                rows.append(_row(params, ordering, "shoot", n, energy, config.shoot_tol,
                                 residual, trusted, grid.r_max, grid.num_interior,
                                 True, tags))
    comparisons = {
        "threshold": params.threshold if math.isfinite(params.threshold) else None,
        "threshold_unbounded": not math.isfinite(params.threshold),
        "levels": [
            {
                "n": rec.n,
                "l": rec.ell,
                "nu": rec.nu,
                "E_naive_fd": rec.e_naive_fd,
                "E_naive_shoot": rec.e_naive_shoot,
                "E_naive_closed": rec.e_naive_closed,
                "E_bdd_fd": rec.e_bdd_fd,
                "E_bdd_shoot": rec.e_bdd_shoot,
                "naive_method_gap": rec.naive_method_gap,
                "bdd_method_gap": rec.bdd_method_gap,
                "naive_reliable": rec.naive_reliable,
                "bdd_reliable": rec.bdd_reliable,
                "cross_ordering_gap": rec.cross_ordering_gap,
                "cross_ordering_error": rec.cross_ordering_error,
                "orderings_differ": rec.orderings_differ,
            }
            for rec in report.records
        ],
        "provenance": report.provenance,
    }
    if report.accumulation is not None:
        profile = report.accumulation
        comparisons["accumulation"] = {
            "energies": list(profile.energies),
            "gaps": list(profile.gaps),
            "closed_form_overlay": list(profile.closed_form),
            "threshold": profile.threshold,
            "trusted_count": profile.trusted_count,
            "strictly_increasing": profile.strictly_increasing,
            "below_threshold": profile.below_threshold,
            "gaps_strictly_decreasing": profile.gaps_strictly_decreasing,
        }
    return rows, comparisons, list(report.notes), failure


def _converge_rows(config: RunConfig) -> tuple[list[dict], dict, bool]:
    params = config.model_params()
    grids = (1000, 2000, 4000)
    comparisons: dict = {"convergence": {}}
    rows: list[dict] = []
    failure = False
    for ordering in config.orderings():
        study = convergence_order(params, ordering, grids=grids, shoot_tol=1e-13)
        entry = {
            "grids": list(study.grids),
            "h": list(study.h_values),
            "fd_energies": list(study.fd_energies),
            "shoot_energies": list(study.shoot_energies),
            "fd_order": study.fd_order,
            "shoot_order": study.shoot_order,
            "fd_order_reason": study.fd_order_reason,
            "shoot_order_reason": study.shoot_order_reason,
        }
        comparisons["convergence"][ordering.value] = entry
        for m, h, e_fd, e_sh in zip(study.grids, study.h_values, study.fd_energies,
                                    study.shoot_energies):
            box = h * (m + 1)
            if "fd" in config.methods():
                rows.append(_row(params, ordering, "fd", 0, e_fd, None, None, True,
                                 box, m, True, ()))
            if "shoot" in config.methods():
                rows.append(_row(params, ordering, "shoot", 0, e_sh, 1e-13, None, True,
                                 box, m, True, ()))
    return rows, comparisons, failure


# ---------------------------------------------------------------------------
# run + output
# ---------------------------------------------------------------------------

def _resolve_output(config: RunConfig) -> Path:
    name = config.output or f"pdmradial_results.{config.format}"
    path = Path(name)
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir and not path.is_absolute():
        path = Path(outdir) / path
    return path


def emit_outputs(rows: list[dict], comparisons: dict, notes: list[str],
                 config: RunConfig) -> list[Path]:
    """Write the data file and the sidecar reproducibility manifest.

    The data file (CSV or JSON) is byte-deterministic; the manifest
    carries the timestamp, the tool version and the full effective
    config.
    """
    out_path = _resolve_output(config)
    if config.format == "csv":
        out_path.write_text(_csv_text(rows))
    else:
        out_path.write_text(_json_text(rows, comparisons, notes, config))
    manifest_path = out_path.parent / (out_path.stem + ".manifest.json")
    manifest = {
        "tool_version": __version__,
        "effective_config": _config_echo(config),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "data_files": [out_path.name],
        "row_count": len(rows),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    written = [out_path, manifest_path]
    if config.dump_eigenfunctions and config.command in ("solve", "compare", "sweep"):
        stem = out_path.parent / out_path.stem
        lam_values = config.lambda_list or (config.lam,)
        ell_values = config.ell_list or (config.ell,)
        if config.command != "sweep":
            lam_values, ell_values = (config.lam,), (config.ell,)
        for lam in lam_values:
            for ell in ell_values:
                written.extend(_dump_eigenfunctions(config, config.model_params(lam, ell), stem))
    return written


def run(config: RunConfig) -> int:
    """Execute the configured pipeline; returns the process exit code."""
    rows: list[dict] = []
    comparisons: dict = {}
    notes: list[str] = []
    failure = False
    try:
        if config.command == "solve":
            rows, failure = _solve_rows(config, config.model_params())
        elif config.command == "compare":
            rows, comparisons, notes, failure = _comparisons_compare(config, config.model_params())
        elif config.command == "sweep":
            lam_values = config.lambda_list or (config.lam,)
            ell_values = config.ell_list or (config.ell,)
            for lam in lam_values:
                for ell in ell_values:
                    sub_rows, sub_fail = _solve_rows(config, config.model_params(lam, ell))
                    rows.extend(sub_rows)
                    failure = failure or sub_fail
        elif config.command == "converge":
            rows, comparisons, failure = _converge_rows(config)
    except ContinuumError as exc:
        notes.append(f"numerical failure: {exc}")
        failure = True
    rows = _sort_rows(rows)
    try:
        written = emit_outputs(rows, comparisons, notes, config)
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(f"wrote {path}")
    if failure:
        print("numerical failure: one or more levels did not converge "
              "(failure rows flagged)", file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the CLI contract says 1.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pdmradial", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve one configuration"),
        ("compare", "cross-ordering / cross-method comparison"),
        ("sweep", "sweep over lambda and ell lists"),
        ("converge", "observed convergence orders"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="FILE", help="key=value config file")
        p.add_argument("--dim", type=int, help="spatial dimension N (default 3)")
        p.add_argument("--ell", type=int, help="angular momentum l (default 0)")
        p.add_argument("--lambda", dest="lam", type=float,
                       help="mass deformation lambda >= 0 (default 0.1)")
        p.add_argument("--omega", type=float, help="oscillator frequency (default 1.0)")
        p.add_argument("--levels", type=int, help="number of levels (default 6)")
        p.add_argument("--ordering", choices=_ORDERING_CHOICES,
                       help="kinetic ordering (default both)")
        p.add_argument("--method", choices=_METHOD_CHOICES,
                       help="solver path (default both)")
        p.add_argument("--r-max", dest="r_max", type=float, help="override box size")
        p.add_argument("--grid-points", dest="grid_points", type=int,
                       help="override interior grid points (default 4000)")
        p.add_argument("--output", help="output data file path")
        p.add_argument("--format", choices=_FORMAT_CHOICES, help="output format (default csv)")
        p.add_argument("--shoot-tol", dest="shoot_tol", type=float,
                       help="shooting refinement tolerance (default 1e-9)")
        p.add_argument("--dump-eigenfunctions", action="store_const", const=True,
                       default=None, help="also write (r, R) eigenfunction CSVs")
        if name == "sweep":
            p.add_argument("--lambda-list", dest="lambda_list",
                           type=lambda s: _parse_float_list("lambda_list", s),
                           help="comma-separated lambda values")
            p.add_argument("--ell-list", dest="ell_list",
                           type=lambda s: _parse_int_list("ell_list", s),
                           help="comma-separated ell values")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        namespace = _build_parser().parse_args(argv)
        flags = {k: v for k, v in vars(namespace).items()
                 if k not in ("command", "config") and v is not None}
        config = load_config(namespace.config, flags, namespace.command)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
