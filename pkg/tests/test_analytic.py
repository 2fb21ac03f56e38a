import math

import numpy as np
import pytest

from rabihubbard.analytic import (
    TwoLevelReduction,
    adiabatic_gap,
    adiabatic_rate,
    analytic_summary,
    critical_zj,
    lme_boundary,
    lme_boundary_minimum,
    psi_closed_form,
    two_level_dynamics,
)
from rabihubbard.dissipation import bose_occupation
from rabihubbard.exceptions import ParameterError
from rabihubbard.schemas import BathParams, ModelParams

DELTA_15 = math.exp(-4.5)


def test_adiabatic_gap_values():
    assert adiabatic_gap(ModelParams(g=0.0, epsilon=0.7)) == 0.7
    assert adiabatic_gap(ModelParams(g=1.0)) == pytest.approx(0.135335, rel=1e-5)
    assert adiabatic_gap(ModelParams(g=2.0)) == pytest.approx(3.3546e-4, rel=1e-4)
    assert adiabatic_gap(ModelParams(g=1.5)) == pytest.approx(1.1109e-2, rel=1e-4)


def test_adiabatic_rate_values(deep_strong, bath):
    assert adiabatic_rate(deep_strong, bath) == pytest.approx(1.1109e-5, rel=1e-4)
    assert adiabatic_rate(deep_strong, BathParams(gamma_q=0.0, gamma_c=0.0)) == 0.0
    qubit_only = BathParams(gamma_q=2e-4, gamma_c=0.0)
    assert adiabatic_rate(deep_strong, qubit_only) == pytest.approx(DELTA_15 * 2e-4, rel=1e-12)


def test_closed_forms_are_ohmic_only(deep_strong):
    super_ohmic = BathParams(spectrum_kind="super_ohmic", exponent=3.0)
    with pytest.raises(ParameterError):
        adiabatic_rate(deep_strong, super_ohmic)
    with pytest.raises(ParameterError):
        critical_zj(deep_strong, super_ohmic)


def test_order_parameter_closed_form(deep_strong, bath):
    assert psi_closed_form(deep_strong, 1.5e-3, bath) == pytest.approx(0.810, abs=1e-3)
    assert psi_closed_form(deep_strong, 1e-4, bath) == 0.0
    assert psi_closed_form(ModelParams(g=0.0), 1.0, bath) == 0.0


def test_critical_tunneling_zero_temperature(deep_strong, bath):
    assert critical_zj(deep_strong, bath) == pytest.approx(1.2343e-3, rel=1e-4)
    assert critical_zj(ModelParams(g=0.0), bath) == math.inf


def test_critical_tunneling_finite_temperature(deep_strong, bath):
    cold = critical_zj(deep_strong, bath, 0.0)
    warm = critical_zj(deep_strong, bath, 0.05)
    c = 2 * bose_occupation(DELTA_15, 0.05) + 1
    assert c == pytest.approx(9.04, abs=0.01)
    assert warm == pytest.approx(1.116e-2, rel=1e-3)
    damping = 2 * 1.5 ** 2 * 1e-4 + 1e-4 / 2
    assert warm / cold == pytest.approx(c * (1 + c ** 2 * damping ** 2) / (1 + damping ** 2), rel=1e-12)
    assert warm / cold == pytest.approx(c, rel=1e-4)


def test_dissipation_free_limit():
    free = BathParams(gamma_q=0.0, gamma_c=0.0)
    for g in (0.5, 1.0, 1.5, 2.5):
        p = ModelParams(g=g)
        assert critical_zj(p, free) == pytest.approx(adiabatic_gap(p) / (4 * g ** 2), rel=1e-15)


def test_zero_temperature_limit_is_continuous(deep_strong, bath):
    assert critical_zj(deep_strong, bath, 1e-9) == pytest.approx(critical_zj(deep_strong, bath, 0.0), rel=1e-6)
    assert critical_zj(deep_strong, bath, 1e-4) == pytest.approx(critical_zj(deep_strong, bath, 0.0), rel=1e-6)


@pytest.mark.parametrize("g", [1.0, 1.5, 2.0])
@pytest.mark.parametrize("temp", [0.0, 0.05])
def test_onset_coincides_with_critical_tunneling(g, temp, bath):
    p = ModelParams(g=g)
    zjc = critical_zj(p, bath, temp)
    assert psi_closed_form(p, zjc * (1 + 1e-9), bath, temp) > 0
    assert psi_closed_form(p, zjc * (1 - 1e-9), bath, temp) == 0.0


def test_boundary_vanishes_at_zero_temperature(bath):
    values = [critical_zj(ModelParams(g=g), bath) for g in np.geomspace(0.3, 4.0, 40)]
    assert np.all(np.diff(values) < 0)
    assert values[-1] < 1e-14


def test_boundary_diverges_at_finite_temperature(bath):
    values = [critical_zj(ModelParams(g=g), bath, 0.05) for g in (2.0, 2.5, 3.0, 3.5, 4.0)]
    assert np.all(np.diff(values) > 0)
    assert values[2] > 100 * values[0]


def test_lindblad_boundary(bath):
    p = ModelParams(g=1.5)
    expected = (1e-8 * 2.25 + 1 / (16 * 2.25)) / 3
    assert lme_boundary(p, bath, 3) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ParameterError):
        lme_boundary(ModelParams(g=0.0), bath, 3)
    with pytest.raises(ParameterError):
        lme_boundary(p, bath, 0)


def test_lindblad_boundary_minimum(bath):
    minimum, g_star = lme_boundary_minimum(bath, 3)
    assert minimum == pytest.approx(1.6667e-5, rel=1e-4)
    assert g_star == pytest.approx(50.0)
    assert lme_boundary(ModelParams(g=g_star), bath, 3) == pytest.approx(minimum, abs=1e-12)
    grid = [lme_boundary(ModelParams(g=g), bath, 3) for g in np.geomspace(1.0, 2500.0, 4001)]
    assert min(grid) >= minimum - 1e-15
    assert min(grid) == pytest.approx(minimum, rel=1e-4)
    assert lme_boundary(ModelParams(g=1e4), bath, 3) > 100 * minimum


def test_two_level_reduction_closure(deep_strong, bath):
    red = TwoLevelReduction.from_params(deep_strong, bath)
    assert red.delta == pytest.approx(DELTA_15)
    assert red.alpha == 1.5
    assert red.beta(0.2, 1e-3) == pytest.approx(-2 * 2.25 * 1e-3 * 0.2)
    assert red.psi(0.2) == pytest.approx(0.3)


def test_two_level_pure_decay():
    red = TwoLevelReduction(delta=1.0, gamma_delta=0.1, alpha=1.0)
    traj = two_level_dynamics(red, zj=0.0, temp=0.0, psi0=0.6, horizon=200.0, polish=False)
    x0 = 0.3
    half = len(traj.times) // 2
    expected = x0 * math.exp(-0.5 * red.gamma_delta * traj.times[half])
    assert abs(traj.rho10[half]) == pytest.approx(expected, rel=1e-6)
    assert traj.rho00[-1] == pytest.approx(1.0, abs=1e-6)
    assert abs(traj.rho10[-1]) < 1e-4


def test_two_level_rejects_bad_input():
    red = TwoLevelReduction(delta=1.0, gamma_delta=0.1, alpha=1.0)
    with pytest.raises(ParameterError):
        two_level_dynamics(red, zj=0.0, temp=0.0, psi0=0.5, horizon=0.0)
    with pytest.raises(ParameterError):
        two_level_dynamics(red, zj=0.0, temp=0.0, psi0=1.5, horizon=1.0)


@pytest.mark.slow
def test_closed_form_ode_and_numeric_triangle(deep_strong, bath):
    from rabihubbard.meanfield import solve_fixed_point

    red = TwoLevelReduction.from_params(deep_strong, bath)
    zj = 1.5 * critical_zj(deep_strong, bath)
    traj = two_level_dynamics(red, zj=zj, temp=0.0, psi0=0.5, horizon=40.0 / red.gamma_delta)
    closed = psi_closed_form(deep_strong, zj, bath)
    assert traj.abs_psi == pytest.approx(closed, abs=1e-4)

    x = traj.fixed_rho10.real
    assert traj.fixed_rho10.imag == pytest.approx(red.gamma_delta * x / (2 * red.delta), abs=1e-8)

    numeric = solve_fixed_point(deep_strong, 1.5e-3, bath, 1.0)
    reference = psi_closed_form(deep_strong, 1.5e-3, bath)
    assert abs(numeric.abs_psi - reference) / reference < 0.20


def test_analytic_summary_row(deep_strong, bath):
    row = analytic_summary(deep_strong, bath, 0.0, zj=1.5e-3)
    assert row["delta"] == pytest.approx(1.1109e-2, rel=1e-4)
    assert row["gamma_delta"] == pytest.approx(1.1109e-5, rel=1e-4)
    assert row["n_bose"] == 0.0
    assert row["zJc"] == pytest.approx(1.2343e-3, rel=1e-4)
    assert row["J_crit_lme"] == pytest.approx(lme_boundary(deep_strong, bath, 3))
    assert row["abs_psi"] == pytest.approx(0.810, abs=1e-3)
