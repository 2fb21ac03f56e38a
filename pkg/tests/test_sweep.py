import math

import numpy as np
import pandas as pd
import pytest

from rabihubbard.analytic import critical_zj, lme_boundary
from rabihubbard.exceptions import ParameterError
from rabihubbard.schemas import AxisSpec, BathParams, ModelParams, SweepSpec
from rabihubbard.sweep import BOUNDARY_COLUMNS, GRID_COLUMNS, PhaseDiagram, extract_boundary, run_sweep


def _diagram(zj_values, rows, scale="linear", threshold=1e-3):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return PhaseDiagram(
        g_values=np.linspace(1.0, 2.0, rows.shape[0]),
        zj_values=np.asarray(zj_values, dtype=float),
        zj_scale=scale,
        abs_psi=rows,
        converged=np.ones(rows.shape, dtype=bool),
        iterations=np.ones(rows.shape, dtype=int),
        threshold=threshold,
    )


def test_linear_crossing_is_interpolated():
    zj = np.linspace(0.0, 1.0, 101)
    diagram = _diagram(zj, np.clip(zj - 0.5, 0.0, None))
    extraction = extract_boundary(diagram, 1e-3)
    assert extraction.values[0] == pytest.approx(0.501, abs=1e-9)
    assert not extraction.non_monotone
    assert not extraction.absent


def test_log_crossing_is_interpolated_in_log_coordinate():
    zj = np.geomspace(1e-4, 1.0, 41)
    ramp = np.clip(np.log10(zj) + 2.0, 0.0, None)
    ramp[np.abs(ramp) < 1e-12] = 0.0
    extraction = extract_boundary(_diagram(zj, ramp, scale="log"), 1e-3)
    assert extraction.values[0] == pytest.approx(10 ** (-2.0 + 1e-3), rel=1e-9)


def test_non_monotone_and_absent_rows_are_flagged(caplog):
    zj = np.linspace(0.0, 0.3, 4)
    rows = [[0.0, 0.5, 0.0, 0.5], [0.0, 0.0, 0.0, 0.0]]
    extraction = extract_boundary(_diagram(zj, rows), 1e-3)
    assert extraction.values[0] == pytest.approx(0.1 * 1e-3 / 0.5)
    assert extraction.values[1] is None
    assert extraction.non_monotone == [0]
    assert extraction.absent == [1]
    assert "Non-monotone" in caplog.text


def test_grid_frame_layout_and_reload():
    zj = np.geomspace(1e-4, 1e-1, 4)
    rows = np.arange(12, dtype=float).reshape(3, 4) / 100
    diagram = _diagram(zj, rows, scale="log")
    df = diagram.to_frame()
    assert list(df.columns) == GRID_COLUMNS
    assert len(df) == 12
    assert df["g_over_w0"].is_monotonic_increasing
    assert df["abs_psi"].tolist() == rows.ravel().tolist()

    reloaded = PhaseDiagram.from_frame(df.sample(frac=1.0, random_state=3), threshold=1e-3)
    assert reloaded.zj_scale == "log"
    np.testing.assert_array_equal(reloaded.abs_psi, rows)
    np.testing.assert_allclose(reloaded.zj_values, zj)


def test_reload_rejects_incomplete_tables():
    df = _diagram(np.linspace(0.0, 1.0, 3), np.zeros((2, 3))).to_frame()
    with pytest.raises(ParameterError, match="missing"):
        PhaseDiagram.from_frame(df.drop(columns=["iterations"]), threshold=1e-3)
    with pytest.raises(ParameterError, match="rows"):
        PhaseDiagram.from_frame(df.iloc[:-1], threshold=1e-3)


def test_boundary_frame_keeps_missing_values_empty():
    diagram = _diagram(np.linspace(0.0, 1.0, 3), np.zeros((2, 3)))
    diagram.boundary_numeric = [None, 0.2]
    diagram.boundary_analytic = [1e-3, None]
    diagram.boundary_lme = [0.1, 0.05]
    df = diagram.boundary_frame()
    assert list(df.columns) == BOUNDARY_COLUMNS
    assert math.isnan(df["zJc_numeric"][0])
    assert df["zJc_numeric"][1] == 0.2
    assert math.isnan(df["zJc_analytic"][1])


def _small_spec(**kwargs):
    return SweepSpec(
        g_axis=AxisSpec(min=0.3, max=0.5, count=2),
        zj_axis=AxisSpec(min=1e-5, max=1e-4, count=2, scale="log"),
        **kwargs,
    )


def test_localized_corner_of_the_diagram():
    diagram = run_sweep(_small_spec())
    assert diagram.abs_psi.shape == (2, 2)
    assert np.all(diagram.abs_psi < 1e-6)
    assert diagram.converged.all()
    assert diagram.boundary_numeric == [None, None]
    assert all(v is not None and v > 1e-4 for v in diagram.boundary_analytic)
    assert diagram.boundary_lme[0] == pytest.approx(lme_boundary(ModelParams(g=0.3), BathParams(), 3))
    meta = diagram.metadata
    assert meta["truncation"] == {"0.3": 13, "0.5": 15}
    assert meta["unconverged_cells"] == 0
    assert meta["failures"] == []
    assert meta["absent_crossings"] == [0.3, 0.5]
    assert set(meta["versions"]) >= {"rabihubbard", "numpy", "scipy"}


def test_rows_are_reported_in_grid_order():
    seen = []
    run_sweep(_small_spec(), on_row=lambda row: seen.append(row.g_index))
    assert sorted(seen) == [0, 1]


def test_worker_count_does_not_change_results():
    serial = run_sweep(_small_spec(workers=1)).to_frame()
    parallel = run_sweep(_small_spec(workers=2)).to_frame()
    pd.testing.assert_frame_equal(serial, parallel)


def test_fock_multiplier_scales_truncation_without_moving_psi():
    axes = dict(g_axis=AxisSpec(min=1.5, max=2.0, count=2),
                zj_axis=AxisSpec(min=2e-3, max=3e-3, count=2, scale="log"))
    base = run_sweep(SweepSpec(**axes))
    doubled = run_sweep(SweepSpec(fock_multiplier=2, **axes))
    assert base.metadata["truncation"] == {"1.5": 25, "2": 30}
    assert doubled.metadata["truncation"] == {"1.5": 50, "2": 60}
    assert np.all(base.abs_psi > 0.5)
    np.testing.assert_allclose(doubled.abs_psi, base.abs_psi, atol=1e-6, rtol=0)


def test_non_ohmic_bath_has_no_analytic_boundary():
    spec = _small_spec(bath=BathParams(spectrum_kind="super_ohmic", exponent=3.0, cutoff=5.0))
    diagram = run_sweep(spec)
    assert diagram.boundary_analytic == [None, None]


def test_invalid_truncation_rejected_before_scanning():
    spec = SweepSpec(
        g_axis=AxisSpec(min=0.0, max=0.5, count=3),
        zj_axis=AxisSpec(min=1e-4, max=1e-3, count=2, scale="log"),
        model=ModelParams(fock_dim=12),
    )
    with pytest.raises(ParameterError, match="truncation"):
        run_sweep(spec)


@pytest.mark.slow
def test_numeric_boundary_tracks_closed_form():
    axes = dict(g_axis=AxisSpec(min=1.2, max=2.0, count=5),
                zj_axis=AxisSpec(min=1e-5, max=3e-2, count=120, scale="log"),
                workers=3)
    cold_bath = BathParams()
    cold = run_sweep(SweepSpec(bath=cold_bath, **axes))
    warm = run_sweep(SweepSpec(bath=cold_bath.with_temperature(0.05), **axes))
    assert cold.metadata["non_monotone_rows"] == []
    assert warm.metadata["non_monotone_rows"] == []

    numeric = cold.boundary_numeric
    assert None not in numeric
    assert np.all(np.diff(numeric) < 0)
    for g, value in zip(cold.g_values, numeric):
        expected = critical_zj(ModelParams(g=g), cold_bath)
        assert abs(value - expected) / expected < 0.15

    assert None not in warm.boundary_numeric
    assert all(w > c for w, c in zip(warm.boundary_numeric, numeric))
    for g, value in zip(warm.g_values, warm.boundary_numeric):
        expected = critical_zj(ModelParams(g=g), cold_bath, 0.05)
        assert abs(value - expected) / expected < 0.25

    assert numeric[-1] < lme_boundary(ModelParams(g=2.0), cold_bath, 3)
