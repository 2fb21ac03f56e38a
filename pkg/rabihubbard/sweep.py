"""Parallel (g, zJ) phase-diagram scans and boundary extraction."""
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import __version__
from .analytic import critical_zj, lme_boundary
from .exceptions import ParameterError, RabiHubbardError
from .meanfield import Phase, classify_point
from .schemas import SweepSpec

logger = logging.getLogger(__name__)

GRID_COLUMNS = ["g_over_w0", "zJ_over_w0", "abs_psi", "converged", "iterations"]
BOUNDARY_COLUMNS = ["g_over_w0", "zJc_numeric", "zJc_analytic", "J_crit_lme"]


@dataclass(frozen=True)
class CellResult:
    abs_psi: float
    converged: bool
    iterations: int
    phase: str
    error: Optional[str] = None


@dataclass
class RowResult:
    g_index: int
    g: float
    fock_dim: int
    cells: List[CellResult]


@dataclass
class BoundaryExtraction:
    """Per-g critical zJ (None where no crossing), plus the rows that needed flags."""

    values: List[Optional[float]]
    non_monotone: List[int] = field(default_factory=list)
    absent: List[int] = field(default_factory=list)


@dataclass
class PhaseDiagram:
    g_values: np.ndarray
    zj_values: np.ndarray
    zj_scale: str
    abs_psi: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    threshold: float
    boundary_numeric: List[Optional[float]] = field(default_factory=list)
    boundary_analytic: List[Optional[float]] = field(default_factory=list)
    boundary_lme: List[Optional[float]] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        """Long-form grid, rows ordered by g then zJ."""
        g_grid, zj_grid = np.meshgrid(self.g_values, self.zj_values, indexing="ij")
        return pd.DataFrame({
            "g_over_w0": g_grid.ravel(),
            "zJ_over_w0": zj_grid.ravel(),
            "abs_psi": self.abs_psi.ravel(),
            "converged": self.converged.ravel(),
            "iterations": self.iterations.ravel(),
        })[GRID_COLUMNS]

    def boundary_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "g_over_w0": self.g_values,
            "zJc_numeric": _nullable(self.boundary_numeric),
            "zJc_analytic": _nullable(self.boundary_analytic),
            "J_crit_lme": _nullable(self.boundary_lme),
        })[BOUNDARY_COLUMNS]

    @classmethod
    def from_frame(cls, df: pd.DataFrame, threshold: float, zj_scale: Optional[str] = None) -> "PhaseDiagram":
        """Rebuild a diagram from a grid frame written by to_frame()."""
        missing = [c for c in GRID_COLUMNS if c not in df.columns]
        if missing:
            raise ParameterError(f"grid table is missing columns: {missing}")
        df = df.sort_values(["g_over_w0", "zJ_over_w0"])
        g_values = np.unique(df["g_over_w0"].to_numpy())
        zj_values = np.unique(df["zJ_over_w0"].to_numpy())
        shape = (g_values.size, zj_values.size)
        if len(df) != shape[0] * shape[1]:
            raise ParameterError(f"grid table has {len(df)} rows, expected {shape[0]} x {shape[1]}")
        if zj_scale is None:
            zj_scale = _guess_scale(zj_values)
        return cls(
            g_values=g_values,
            zj_values=zj_values,
            zj_scale=zj_scale,
            abs_psi=df["abs_psi"].to_numpy(dtype=float).reshape(shape),
            converged=df["converged"].to_numpy(dtype=bool).reshape(shape),
            iterations=df["iterations"].to_numpy(dtype=int).reshape(shape),
            threshold=threshold,
        )


def _nullable(values: List[Optional[float]]) -> pd.Series:
    return pd.Series([np.nan if v is None else v for v in values], dtype=float)


def _guess_scale(values: np.ndarray) -> str:
    if values.size > 2 and values.min() > 0:
        ratios = values[1:] / values[:-1]
        if np.allclose(ratios, ratios[0], rtol=1e-6):
            return "log"
    return "linear"


def _scan_row(spec: SweepSpec, g_index: int, g: float) -> RowResult:
    """Scan one g row in increasing zJ, warm-starting from the previous cell."""
    p = spec.model_at(g)
    cells: List[CellResult] = []
    previous: Optional[complex] = None
    for zj in spec.zj_axis.values():
        extra = [previous] if (spec.warm_start and previous is not None) else []
        try:
            result = classify_point(p, float(zj), spec.bath, spec.solver, extra_seeds=extra)
        except RabiHubbardError as e:
            logger.error("Cell g=%.4g zJ=%.4g failed: %s", g, zj, e)
            cells.append(CellResult(abs_psi=0.0, converged=False, iterations=0,
                                    phase=Phase.LOCALIZED.value, error=str(e)))
            previous = None
            continue
        cells.append(CellResult(abs_psi=result.abs_psi, converged=result.converged,
                                iterations=result.iterations, phase=result.phase.value))
        previous = result.psi if result.phase is Phase.DELOCALIZED else None
    logger.info("Row g=%.4f done (N=%d, %d delocalized cells)", g, p.truncation,
                sum(c.phase == Phase.DELOCALIZED.value for c in cells))
    return RowResult(g_index=g_index, g=float(g), fock_dim=p.truncation, cells=cells)


def _scan_row_task(args) -> RowResult:
    return _scan_row(*args)


def extract_boundary(diagram: PhaseDiagram, threshold: float) -> BoundaryExtraction:
    """First upward crossing of |psi| = threshold along zJ, per g row.

    Interpolation is linear in the scanned coordinate (log10 zJ on log axes).
    Rows whose |psi| drops back below the threshold are flagged.
    """
    log_axis = diagram.zj_scale == "log"
    coords = np.log10(diagram.zj_values) if log_axis else np.asarray(diagram.zj_values, dtype=float)
    extraction = BoundaryExtraction(values=[])
    for i, row in enumerate(diagram.abs_psi):
        above = row > threshold
        rises = np.flatnonzero(~above[:-1] & above[1:])
        falls = np.flatnonzero(above[:-1] & ~above[1:])
        if rises.size == 0:
            extraction.values.append(None)
            extraction.absent.append(i)
            continue
        k = int(rises[0])
        if falls.size > 0:
            extraction.non_monotone.append(i)
            logger.warning("Non-monotone onset at g=%.4g; reporting the first crossing",
                           diagram.g_values[i])
        v0, v1 = row[k], row[k + 1]
        t = (threshold - v0) / (v1 - v0)
        u = coords[k] + t * (coords[k + 1] - coords[k])
        extraction.values.append(float(10.0 ** u) if log_axis else float(u))
    return extraction


def analytic_boundaries(spec: SweepSpec, g_values: np.ndarray):
    """zJ_c from the two-level closed form and J_crit of the local Lindblad picture."""
    temp = spec.bath.temp_c
    if spec.bath.temp_q != spec.bath.temp_c:
        logger.warning("Analytic boundary assumes T_q = T_c; using T = T_c = %.4g", temp)
    analytic: List[Optional[float]] = []
    lme: List[Optional[float]] = []
    for g in g_values:
        p = spec.model.at_coupling(float(g))
        if spec.bath.is_ohmic and g > 0:
            analytic.append(critical_zj(p, spec.bath, temp))
        else:
            analytic.append(None)
        lme.append(lme_boundary(p, spec.bath, spec.lme_dim) if g > 0 else None)
    return analytic, lme


def _versions() -> Dict[str, str]:
    import pydantic
    import scipy

    return {
        "rabihubbard": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


def run_sweep(spec: SweepSpec, on_row: Optional[Callable[[RowResult], None]] = None) -> PhaseDiagram:
    """Evaluate classify_point on the whole grid; identical output for any worker count."""
    g_values = spec.g_axis.values()
    zj_values = spec.zj_axis.values()
    try:
        truncation = {f"{g:.10g}": spec.model_at(g).truncation for g in g_values}
    except ValueError as e:
        raise ParameterError(f"invalid sweep spec: {e}") from e

    logger.info("Sweeping %d x %d grid with %d worker(s)", g_values.size, zj_values.size, spec.workers)
    started = time.perf_counter()
    tasks = [(spec, i, float(g)) for i, g in enumerate(g_values)]
    rows: List[Optional[RowResult]] = [None] * len(tasks)
    progress = tqdm(total=len(tasks), desc="g rows", disable=not spec.progress)

    def collect(row: RowResult) -> None:
        rows[row.g_index] = row
        progress.update(1)
        if on_row is not None:
            on_row(row)

    try:
        if spec.workers == 1:
            for task in tasks:
                collect(_scan_row_task(task))
        else:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                for row in pool.map(_scan_row_task, tasks):
                    collect(row)
    finally:
        progress.close()

    shape = (g_values.size, zj_values.size)
    abs_psi = np.zeros(shape)
    converged = np.zeros(shape, dtype=bool)
    iterations = np.zeros(shape, dtype=int)
    failures = []
    for row in rows:
        for j, cell in enumerate(row.cells):
            abs_psi[row.g_index, j] = cell.abs_psi
            converged[row.g_index, j] = cell.converged
            iterations[row.g_index, j] = cell.iterations
            if cell.error is not None:
                failures.append({"g": row.g, "zJ": float(zj_values[j]), "error": cell.error})

    threshold = spec.solver.psi_threshold
    diagram = PhaseDiagram(
        g_values=g_values, zj_values=zj_values, zj_scale=spec.zj_axis.scale,
        abs_psi=abs_psi, converged=converged, iterations=iterations, threshold=threshold,
    )
    extraction = extract_boundary(diagram, threshold)
    diagram.boundary_numeric = extraction.values
    diagram.boundary_analytic, diagram.boundary_lme = analytic_boundaries(spec, g_values)
    diagram.metadata = {
        "spec": spec.model_dump(mode="json"),
        "truncation": truncation,
        "versions": _versions(),
        "wall_time_s": round(time.perf_counter() - started, 3),
        "unconverged_cells": int((~converged).sum()),
        "failures": failures,
        "non_monotone_rows": [float(g_values[i]) for i in extraction.non_monotone],
        "absent_crossings": [float(g_values[i]) for i in extraction.absent],
    }
    if failures:
        logger.warning("%d cell(s) failed; see metadata", len(failures))
    return diagram

