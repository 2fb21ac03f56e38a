"""Command-line surface: point, sweep, boundary, analytic and compare."""
import argparse
import logging
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import __version__
from .analytic import adiabatic_gap, adiabatic_rate, analytic_summary, critical_zj
from .exceptions import ConfigError, ParameterError, RabiHubbardError
from .meanfield import Phase, classify_point, solve_fixed_point, steady_state_map
from .operators import expectation_values
from .output import read_grid, write_boundary, write_grid, write_json, write_table
from .plots import phase_diagram_figure, write_figure
from .schemas import AxisSpec, ModelParams, RunConfig, SweepSpec
from .sweep import GRID_COLUMNS, PhaseDiagram, RowResult, analytic_boundaries, extract_boundary, run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4
EXIT_INTERRUPTED = 130

ENV_WORKERS = "RABI_HUBBARD_WORKERS"
ENV_OUTPUT_DIR = "RABI_HUBBARD_OUTPUT_DIR"

# flag dest -> dotted RunConfig key
FLAG_KEYS = {
    "g": "point.g",
    "zj": "point.zj",
    "seed": "point.seed",
    "temp": "bath.temp",
    "gamma_q": "bath.gamma_q",
    "gamma_c": "bath.gamma_c",
    "z": "model.z",
    "fock_dim": "model.fock_dim",
    "tol": "solver.tolerance",
    "max_iter": "solver.max_iter",
    "threshold": "solver.psi_threshold",
    "master_equation": "solver.master_equation",
    "workers": "sweep.workers",
    "lme_dim": "analytic.lme_dim",
    "out": "output.out",
    "heatmap": "output.heatmap",
    "from_csv": "output.from_csv",
    "strict": "output.strict",
}


# --- configuration ----------------------------------------------------------

def _set_key(tree: Dict[str, Any], dotted: str, value: Any) -> None:
    section, key = dotted.split(".", 1)
    node = tree.setdefault(section, {})
    if not isinstance(node, dict):
        raise ConfigError(f"[{section}] must be a table", key=section)
    node[key] = value


def _read_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}", key="--config") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"cannot parse {path}: {e}", key="--config") from e


def _env_overrides(tree: Dict[str, Any]) -> None:
    workers = os.environ.get(ENV_WORKERS)
    if workers:
        try:
            _set_key(tree, "sweep.workers", int(workers))
        except ValueError as e:
            raise ConfigError(f"{ENV_WORKERS} must be an integer, got {workers!r}", key=ENV_WORKERS) from e
    output_dir = os.environ.get(ENV_OUTPUT_DIR)
    if output_dir:
        _set_key(tree, "output.directory", output_dir)


def _validation_key(error: ValidationError, section: str = "config") -> str:
    loc = error.errors()[0]["loc"]
    return ".".join(str(part) for part in loc) if loc else section


def load_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < environment < command-line flags."""
    tree: Dict[str, Any] = _read_config_file(args.config) if args.config else {}
    _env_overrides(tree)
    for dest, dotted in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            _set_key(tree, dotted, value)
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as e:
        key = _validation_key(e)
        raise ConfigError(f"invalid configuration at {key}: {e.errors()[0]['msg']}", key=key) from e


def _require(value: Optional[float], key: str, flag: str) -> float:
    if value is None:
        raise ConfigError(f"missing required setting {key} (or {flag})", key=key)
    return value


def _point_inputs(cfg: RunConfig):
    g = _require(cfg.point.g, "point.g", "--g")
    zj = _require(cfg.point.zj, "point.zj", "--zj")
    if not cfg.bath.temperature_given:
        raise ConfigError("missing required setting bath.temp (or --temp)", key="bath.temp")
    try:
        p = cfg.model.params(g)
        b = cfg.bath.params()
    except ValidationError as e:
        key = _validation_key(e, "model" if e.title == "ModelParams" else "bath")
        raise ConfigError(f"invalid parameters at {key}: {e.errors()[0]['msg']}", key=key) from e
    return p, zj, b


def _sweep_spec(cfg: RunConfig, progress: bool) -> SweepSpec:
    try:
        spec = cfg.sweep_spec()
    except ValidationError as e:
        key = _validation_key(e)
        raise ConfigError(f"invalid sweep configuration at {key}: {e.errors()[0]['msg']}", key=key) from e
    return spec.model_copy(update={"progress": progress})


def _output_path(cfg: RunConfig, default_name: str) -> Path:
    if cfg.output.out:
        return Path(cfg.output.out)
    return Path(cfg.output.directory) / default_name


def _analytic_comparators(p: ModelParams, b, temp: float) -> Dict[str, Optional[float]]:
    if not b.is_ohmic:
        return {"delta": adiabatic_gap(p), "gamma_delta": None, "zJc": None}
    return {
        "delta": adiabatic_gap(p),
        "gamma_delta": adiabatic_rate(p, b),
        "zJc": critical_zj(p, b, temp) if p.g > 0 else None,
    }


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.6g}"


# --- commands ---------------------------------------------------------------

def cmd_point(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Solve one (g, zJ, T) point and report psi next to the two-level comparators."""
    p, zj, b = _point_inputs(cfg)
    opts = cfg.solver
    if cfg.point.seed is not None:
        result = solve_fixed_point(p, zj, b, cfg.point.seed, opts)
        delocalized = result.converged and result.abs_psi > opts.psi_threshold
        phase = Phase.DELOCALIZED if delocalized else Phase.LOCALIZED
        psi, abs_psi = result.psi, result.abs_psi
        converged, iterations, residual = result.converged, result.iterations, result.residual
    else:
        result = classify_point(p, zj, b, opts)
        phase, psi, abs_psi = result.phase, result.psi, result.abs_psi
        converged, iterations = result.converged, result.iterations
        residual = min(r.residual for r in result.branches)
    if phase is Phase.LOCALIZED and converged:
        psi, abs_psi = 0j, 0.0

    comparators = _analytic_comparators(p, b, b.temp_c)
    print(f"{'✅' if converged else '⚠️'} g/ω0={p.g:.6g}  zJ/ω0={zj:.6g}  T_q={b.temp_q:.6g}  T_c={b.temp_c:.6g}")
    print(f"   phase      : {phase.value}")
    print(f"   ψ          : {psi.real:.10g}{psi.imag:+.3g}j")
    print(f"   |ψ|        : {abs_psi:.10g}")
    print(f"   iterations : {iterations}  (converged={converged}, residual={residual:.3e})")
    print(f"   Fock dim N : {p.truncation}")
    print(f"   Δ          : {_fmt(comparators['delta'])}")
    print(f"   Γ(Δ)       : {_fmt(comparators['gamma_delta'])}")
    print(f"   zJc        : {_fmt(comparators['zJc'])}")

    if cfg.output.out:
        record = {
            "command": "point",
            "version": __version__,
            "config": cfg.model_dump(mode="json"),
            "g_over_w0": p.g,
            "zJ_over_w0": zj,
            "phase": phase.value,
            "psi": psi,
            "abs_psi": abs_psi,
            "converged": converged,
            "iterations": iterations,
            "residual": residual,
            "fock_dim": p.truncation,
            "analytic": comparators,
        }
        write_json(record, cfg.output.out)

    if not converged:
        print("🚨 Fixed-point iteration did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _partial_frame(spec: SweepSpec, rows: List[RowResult]) -> pd.DataFrame:
    zj_values = spec.zj_axis.values()
    records = []
    for row in sorted(rows, key=lambda r: r.g_index):
        for zj, cell in zip(zj_values, row.cells):
            records.append({
                "g_over_w0": row.g,
                "zJ_over_w0": float(zj),
                "abs_psi": cell.abs_psi,
                "converged": cell.converged,
                "iterations": cell.iterations,
            })
    return pd.DataFrame(records, columns=GRID_COLUMNS)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def _write_heatmap(diagram: PhaseDiagram, target: str) -> None:
    try:
        write_figure(phase_diagram_figure(diagram), target)
    except (ImportError, ValueError) as e:
        # static export needs kaleido; sweeps still succeed without it
        logger.warning("Heatmap %s not written: %s", target, e)
        print(f"⚠️ Heatmap not written ({e})")


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Scan the (g, zJ) grid; write grid CSV, boundary CSV, metadata and optional heatmap."""
    spec = _sweep_spec(cfg, progress=not args.quiet)
    grid_path = _output_path(cfg, "sweep.csv")
    meta_path = _sibling(grid_path, ".json")
    finished: List[RowResult] = []

    try:
        diagram = run_sweep(spec, on_row=finished.append)
    except KeyboardInterrupt:
        write_table(_partial_frame(spec, finished), grid_path)
        write_json({
            "command": "sweep",
            "config": cfg.model_dump(mode="json"),
            "interrupted": True,
            "completed_rows": sorted(r.g for r in finished),
        }, meta_path)
        print(f"🛑 Interrupted; {len(finished)} completed g row(s) written to {grid_path}")
        return EXIT_INTERRUPTED

    write_grid(diagram, grid_path)
    write_boundary(diagram, _sibling(grid_path, "_boundary.csv"))
    write_json({
        "command": "sweep",
        "config": cfg.model_dump(mode="json"),
        "interrupted": False,
        "threshold": diagram.threshold,
        **diagram.metadata,
    }, meta_path)
    if cfg.output.heatmap:
        _write_heatmap(diagram, cfg.output.heatmap)

    unconverged = diagram.metadata["unconverged_cells"]
    failures = len(diagram.metadata["failures"])
    status = "✅" if unconverged == 0 and failures == 0 else "⚠️"
    print(f"{status} Sweep of {diagram.g_values.size} x {diagram.zj_values.size} cells written to {grid_path}")
    print(f"   unconverged cells: {unconverged}, failed cells: {failures}, "
          f"wall time: {diagram.metadata['wall_time_s']} s")
    if cfg.output.strict and (unconverged or failures):
        print("🚨 --strict: sweep contains unconverged or failed cells")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _diagram_from_csv(cfg: RunConfig, path: str):
    diagram = PhaseDiagram.from_frame(read_grid(path), threshold=cfg.solver.psi_threshold)
    g, zj = diagram.g_values, diagram.zj_values
    try:
        spec = SweepSpec(
            g_axis=AxisSpec(min=float(g[0]), max=float(g[-1]), count=g.size),
            zj_axis=AxisSpec(min=float(zj[0]), max=float(zj[-1]), count=zj.size, scale=diagram.zj_scale),
            model=cfg.model.params(float(g[0])),
            bath=cfg.bath.params(),
            solver=cfg.solver,
            lme_dim=cfg.analytic.lme_dim,
        )
    except ValidationError as e:
        raise ConfigError(f"cached grid {path} cannot be re-analysed: {e.errors()[0]['msg']}",
                          key="output.from_csv") from e
    diagram.boundary_numeric = extract_boundary(diagram, diagram.threshold).values
    diagram.boundary_analytic, diagram.boundary_lme = analytic_boundaries(spec, g)
    return diagram


def cmd_boundary(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Numeric, two-level and Lindblad boundaries per g, from a cached grid or a fresh sweep."""
    if cfg.output.from_csv:
        diagram = _diagram_from_csv(cfg, cfg.output.from_csv)
    else:
        diagram = run_sweep(_sweep_spec(cfg, progress=not args.quiet))
    path = _output_path(cfg, "boundary.csv")
    frame = diagram.boundary_frame()
    write_boundary(diagram, path)
    if cfg.output.heatmap:
        _write_heatmap(diagram, cfg.output.heatmap)

    absent = int(frame["zJc_numeric"].isna().sum())
    print(f"✅ Boundary for {len(frame)} g values written to {path}")
    if absent:
        print(f"⚠️ {absent} g value(s) have no numeric crossing inside the zJ range")
    return EXIT_OK


def cmd_analytic(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Tabulate Δ, Γ(Δ), n_B(Δ), zJc(T), J_crit and |ψ|(zJ) from the two-level closed forms."""
    section = cfg.analytic
    if cfg.point.g is not None:
        g_values = np.array([cfg.point.g])
    else:
        if section.g_count < 1 or section.g_min > section.g_max or section.g_min < 0:
            raise ConfigError(
                f"invalid g range [{section.g_min}, {section.g_max}] x {section.g_count}", key="analytic.g_min"
            )
        g_values = np.linspace(section.g_min, section.g_max, section.g_count)
    zj_values = [cfg.point.zj] if cfg.point.zj is not None else list(section.zj_values)
    if any(zj < 0 for zj in zj_values):
        raise ConfigError("zJ values must be non-negative", key="analytic.zj_values")

    b = cfg.bath.params()
    temp = b.temp_c
    rows = []
    for g in g_values:
        p = cfg.model.params(float(g))
        for zj in zj_values:
            row = analytic_summary(p, b, temp, zj=zj, lme_dim=section.lme_dim)
            row["zJ_over_w0"] = zj
            rows.append(row)
    frame = pd.DataFrame(rows, columns=[
        "g_over_w0", "delta", "gamma_delta", "n_bose", "zJc", "J_crit_lme", "zJ_over_w0", "abs_psi",
    ])
    with pd.option_context("display.float_format", "{:.6g}".format, "display.width", 140):
        print(frame.to_string(index=False))
    if cfg.output.out:
        write_table(frame, cfg.output.out)
    return EXIT_OK


def _steady_state_observables(p, zj, b, cfg: RunConfig, master_equation: str) -> Dict[str, Any]:
    opts = cfg.solver.model_copy(update={"master_equation": master_equation})
    result = classify_point(p, zj, b, opts)
    _, state, rho = steady_state_map(p, zj, b, result.psi, opts)
    if rho is None:
        rho = state.density_matrix()
    values = expectation_values(rho)
    return {
        "phase": result.phase.value,
        "converged": result.converged,
        "psi": result.psi,
        "abs_psi": result.abs_psi,
        "a": values["a"],
        "n": values["n"],
        "sz": values["sz"],
    }


def cmd_compare(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Self-consistent DME and local-Lindblad steady states at one point."""
    p, zj, b = _point_inputs(cfg)
    results = {
        "dme": _steady_state_observables(p, zj, b, cfg, "dme"),
        "lme": _steady_state_observables(p, zj, b, cfg, "lme"),
    }
    print(f"g/ω0={p.g:.6g}  zJ/ω0={zj:.6g}  N={p.truncation}")
    print(f"{'':6}{'phase':>13}{'Re<a>':>14}{'Im<a>':>14}{'<a†a>':>14}{'<σz>':>14}")
    for name, r in results.items():
        marker = "✅" if r["converged"] else "⚠️"
        print(f"{marker} {name:<4}{r['phase']:>13}{r['a'].real:>14.6g}{r['a'].imag:>14.6g}"
              f"{r['n']:>14.6g}{r['sz']:>14.6g}")
    if cfg.output.out:
        write_json({
            "command": "compare",
            "config": cfg.model_dump(mode="json"),
            "g_over_w0": p.g,
            "zJ_over_w0": zj,
            "fock_dim": p.truncation,
            **results,
        }, cfg.output.out)
    converged = all(r["converged"] for r in results.values())
    if cfg.output.strict and not converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


COMMANDS = {
    "point": cmd_point,
    "sweep": cmd_sweep,
    "boundary": cmd_boundary,
    "analytic": cmd_analytic,
    "compare": cmd_compare,
}


# --- parser -----------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--g", type=float, help="qubit-photon coupling g/ω0")
    common.add_argument("--zj", type=float, help="tunneling scale zJ/ω0")
    common.add_argument("--temp", type=float, help="temperature of both baths (units of ω0)")
    common.add_argument("--gamma-q", type=float, help="qubit dissipation strength")
    common.add_argument("--gamma-c", type=float, help="cavity dissipation strength")
    common.add_argument("--z", type=int, help="coordination number")
    common.add_argument("--fock-dim", type=int, help="Fock truncation N (default: truncation rule)")
    common.add_argument("--tol", type=float, help="fixed-point tolerance")
    common.add_argument("--max-iter", type=int, help="fixed-point iteration cap")
    common.add_argument("--threshold", type=float, help="|ψ| above which a point is delocalized")
    common.add_argument("--seed", type=float, help="single seed instead of the seed protocol (point)")
    common.add_argument("--master-equation", choices=["dme", "lme"], help="steady-state solver (point)")
    common.add_argument("--workers", type=int, help="sweep worker processes")
    common.add_argument("--lme-dim", type=int, help="lattice dimension d of the Lindblad boundary")
    common.add_argument("--out", help="output file")
    common.add_argument("--heatmap", help="heatmap file (.svg, .pdf, .png or .html)")
    common.add_argument("--from-csv", help="reuse a sweep grid CSV (boundary)")
    common.add_argument("--strict", action="store_true", default=None,
                        help="exit 3 when any cell or branch fails to converge")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only, no progress bar")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabihubbard",
        description="Mean-field phase diagrams of the dissipative Rabi-Hubbard lattice.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    for name, handler in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(handler.__doc__ or "").strip().splitlines()[0])
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ParameterError) as e:
        print(f"🚨 {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as e:
        print(f"🚨 invalid parameters at {_validation_key(e)}: {e.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"🚨 I/O failure: {e}", file=sys.stderr)
        return EXIT_IO
    except KeyboardInterrupt:
        print("🛑 Interrupted", file=sys.stderr)
        return EXIT_INTERRUPTED
    except RabiHubbardError as e:
        logger.error("Numerical failure: %s", e)
        print(f"🚨 {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
