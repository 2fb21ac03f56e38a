"""Closed forms of the two-dressed-state approximation.

In the deep-strong coupling regime the mean-field site is confined to the
two lowest Rabi eigenstates, built from qubit-conditioned coherent states
|+-alpha>, alpha = g/omega0. Everything here is Ohmic, T_q = T_c = T.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from .dissipation import bose_occupation
from .exceptions import IntegrationError, ParameterError
from .schemas import BathParams, ModelParams

logger = logging.getLogger(__name__)


def adiabatic_gap(p: ModelParams) -> float:
    """Delta = epsilon exp(-2 g^2 / omega0^2)."""
    return p.epsilon * math.exp(-2.0 * p.g ** 2 / p.omega0 ** 2)


def adiabatic_rate(p: ModelParams, b: BathParams) -> float:
    """Gamma(Delta) = Delta (4 g^2 gamma_c / omega0^3 + gamma_q / epsilon)."""
    if not b.is_ohmic:
        raise ParameterError("the two-level rate formula is only defined for Ohmic baths")
    delta = adiabatic_gap(p)
    return delta * (4.0 * p.g ** 2 * b.gamma_c / p.omega0 ** 3 + b.gamma_q / p.epsilon)


def _thermal_factor(delta: float, temp: float) -> float:
    return 2.0 * bose_occupation(delta, temp) + 1.0


def psi_closed_form(p: ModelParams, zj: float, b: BathParams, temp: float = 0.0) -> float:
    """|psi| of the two-level steady state, 0 in the localized phase."""
    if zj <= 0 or p.g == 0:
        return 0.0
    delta = adiabatic_gap(p)
    gamma = adiabatic_rate(p, b)
    c = _thermal_factor(delta, temp)
    radicand = (4.0 * p.g ** 2 * zj * delta / (c * p.omega0 ** 2)
                - delta ** 2 - (c * gamma) ** 2 / 4.0)
    if radicand <= 0:
        return 0.0
    return p.omega0 / (2.0 * math.sqrt(2.0) * p.g * zj) * math.sqrt(radicand)


def critical_zj(p: ModelParams, b: BathParams, temp: float = 0.0) -> float:
    """Critical tunneling zJ_c; reduces to omega0^2 Delta / (4 g^2) without dissipation."""
    if not b.is_ohmic:
        raise ParameterError("the critical tunneling formula is only defined for Ohmic baths")
    if p.g == 0:
        return math.inf
    delta = adiabatic_gap(p)
    c = _thermal_factor(delta, temp)
    damping = 2.0 * p.g ** 2 * b.gamma_c / p.omega0 ** 3 + b.gamma_q / (2.0 * p.epsilon)
    return p.omega0 ** 2 * delta / (4.0 * p.g ** 2) * c * (1.0 + c ** 2 * damping ** 2)


def lme_boundary(p: ModelParams, b: BathParams, d: int) -> float:
    """Local-Lindblad critical tunneling J_crit = [gamma_c^2 g^2/omega0^3 + omega0^3/(16 g^2)] / d."""
    if d < 1:
        raise ParameterError(f"lattice dimension must be >= 1, got {d}")
    if p.g <= 0:
        raise ParameterError("the Lindblad boundary diverges at g = 0")
    return (b.gamma_c ** 2 * p.g ** 2 / p.omega0 ** 3 + p.omega0 ** 3 / (16.0 * p.g ** 2)) / d


def lme_boundary_minimum(b: BathParams, d: int, omega0: float = 1.0) -> Tuple[float, float]:
    """(min_g J_crit, argmin g) = (gamma_c / 2d, sqrt(omega0^3 / (4 gamma_c)))."""
    if b.gamma_c == 0:
        return 0.0, math.inf
    return b.gamma_c / (2.0 * d), math.sqrt(omega0 ** 3 / (4.0 * b.gamma_c))


@dataclass(frozen=True)
class TwoLevelReduction:
    """Two lowest dressed states: gap, decay rate and the beta_psi closure."""

    delta: float
    gamma_delta: float
    alpha: float
    omega0: float = 1.0

    @classmethod
    def from_params(cls, p: ModelParams, b: BathParams) -> "TwoLevelReduction":
        return cls(delta=adiabatic_gap(p), gamma_delta=adiabatic_rate(p, b),
                   alpha=p.g / p.omega0, omega0=p.omega0)

    def beta(self, coherence_sum: float, zj: float) -> float:
        """beta_psi = -2 g^2 zJ (rho_01 + rho_10) / omega0^2."""
        return -2.0 * self.alpha ** 2 * zj * coherence_sum

    def psi(self, coherence_sum: float) -> float:
        """psi = g (rho_01 + rho_10) / omega0."""
        return self.alpha * coherence_sum


@dataclass(frozen=True)
class TwoLevelTrajectory:
    times: np.ndarray
    rho00: np.ndarray
    rho10: np.ndarray
    fixed_rho00: float
    fixed_rho10: complex
    abs_psi: float
    polished: bool


def _two_level_rhs(red: TwoLevelReduction, zj: float, c: float):
    kappa = 0.5 * red.gamma_delta * c

    def rhs(_t, y):
        x, v, r00 = y  # Re rho_10, Im rho_10, rho_00
        beta = red.beta(2.0 * x, zj)
        w = 2.0 * r00 - 1.0
        return [
            -kappa * x + red.delta * v,
            -beta * w - kappa * v - red.delta * x,
            2.0 * beta * v + 0.5 * red.gamma_delta * (1.0 - c * w),
        ]

    return rhs


def two_level_dynamics(red: TwoLevelReduction, zj: float, temp: float, psi0: float,
                       horizon: float, n_points: int = 2001, rtol: float = 1e-10,
                       atol: float = 1e-13, polish: bool = True) -> TwoLevelTrajectory:
    """Integrate the reduced dressed master equation with self-consistent beta_psi.

    The start is the pure state with psi = psi0 (|psi0| <= alpha). The late-time
    state is refined by a root solve of the right-hand side unless polish is off.
    """
    if horizon <= 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    x0 = psi0 / (2.0 * red.alpha) if red.alpha > 0 else 0.0
    if abs(x0) > 0.5:
        raise ParameterError(f"|psi0| = {abs(psi0)} exceeds the two-level maximum alpha = {red.alpha}")
    r00 = 0.5 * (1.0 + math.sqrt(1.0 - 4.0 * x0 ** 2))

    c = _thermal_factor(red.delta, temp)
    rhs = _two_level_rhs(red, zj, c)
    times = np.linspace(0.0, horizon, n_points)
    sol = solve_ivp(rhs, (0.0, horizon), [x0, 0.0, r00], method="DOP853",
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"two-level integration failed: {sol.message}")

    end = sol.y[:, -1]
    fixed = end
    polished = False
    if polish:
        refined = root(lambda y: rhs(0.0, y), end, method="hybr", tol=1e-12)
        if refined.success and np.linalg.norm(refined.x - end) < 0.05 * (1.0 + np.linalg.norm(end)):
            fixed = refined.x
            polished = True
        else:
            logger.warning("Root polish of the two-level state did not stay near the trajectory end")

    x, v, r00_end = fixed
    return TwoLevelTrajectory(
        times=sol.t,
        rho00=sol.y[2],
        rho10=sol.y[0] + 1j * sol.y[1],
        fixed_rho00=float(r00_end),
        fixed_rho10=complex(x, v),
        abs_psi=abs(red.psi(2.0 * x)),
        polished=polished,
    )


def analytic_summary(p: ModelParams, b: BathParams, temp: float, zj: Optional[float] = None,
                     lme_dim: int = 3) -> dict:
    """Delta, Gamma(Delta), n_B(Delta), zJ_c(T), J_crit (LME) and optionally |psi|(zJ)."""
    delta = adiabatic_gap(p)
    row = {
        "g_over_w0": p.g / p.omega0,
        "delta": delta,
        "gamma_delta": adiabatic_rate(p, b),
        "n_bose": bose_occupation(delta, temp),
        "zJc": critical_zj(p, b, temp),
        "J_crit_lme": lme_boundary(p, b, lme_dim) if p.g > 0 else math.inf,
    }
    if zj is not None:
        row["abs_psi"] = psi_closed_form(p, zj, b, temp)
    return row
