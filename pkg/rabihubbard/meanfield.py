"""Self-consistent order parameter psi = Tr{rho_ss a} and phase classification."""
import cmath
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .dissipation import DensityState, dme_rates, dme_steady_state, lme_steady_state
from .exceptions import ParameterError, SteadyStateError
from .operators import Spectrum, build_meanfield_hamiltonian, diagonalize, site_operators
from .schemas import BathParams, ModelParams, SolverOptions

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    LOCALIZED = "localized"
    DELOCALIZED = "delocalized"


@dataclass(frozen=True)
class Branch:
    """Where an iteration started: exactly zero, or a nonzero seed."""

    seed: complex

    @property
    def kind(self) -> str:
        return "from_zero" if self.seed == 0 else "from_seed"

    def __str__(self) -> str:
        return self.kind if self.seed == 0 else f"from_seed({self.seed.real:g})"


@dataclass(frozen=True)
class FixedPointResult:
    """Outcome of one self-consistent iteration.

    residual is |F(psi) - psi| at the returned psi, which bounds the last
    mixed step |psi_{k+1} - psi_k| from above.
    """

    psi: complex
    abs_psi: float
    iterations: int
    converged: bool
    residual: float
    branch: Branch
    populations: Optional[DensityState] = None
    density_matrix: Optional[np.ndarray] = None
    oscillation: bool = False
    raw_psi: complex = 0j


@dataclass(frozen=True)
class PointClassification:
    phase: Phase
    abs_psi: float
    psi: complex
    converged: bool
    iterations: int
    warning: bool
    branches: Tuple[FixedPointResult, ...] = field(default_factory=tuple)


def order_parameter(state: DensityState, s: Spectrum) -> complex:
    """psi = sum_n P_n <phi_n|a|phi_n> (= Tr{rho a} for a diagonal steady state)."""
    if state.populations.shape[0] != s.dim:
        raise ParameterError(
            f"basis mismatch: {state.populations.shape[0]} populations for a {s.dim}-state spectrum"
        )
    if state.spectrum is not None and state.spectrum is not s:
        raise ParameterError("basis mismatch: state was computed in a different eigenbasis")
    if state.coherences is not None:
        a = site_operators(s.fock_dim)["a"]
        return complex(np.trace(state.density_matrix() @ a))
    return complex(np.dot(state.populations, s.a_diag))


def steady_state_map(p: ModelParams, zj: float, b: BathParams, psi: complex,
                     opts: SolverOptions = SolverOptions()):
    """One application of F: psi -> Tr{rho_ss(H_MF(psi)) a}.

    Returns (new psi, DensityState or None, product-basis density matrix or None).
    """
    h = build_meanfield_hamiltonian(p, zj, psi)
    if opts.master_equation == "lme":
        rho = lme_steady_state(h, p, b, dim_cap=opts.lme_dim_cap)
        a = site_operators(p.truncation)["a"]
        return complex(np.trace(rho @ a)), None, rho
    spectrum = diagonalize(h)
    state = dme_steady_state(dme_rates(spectrum, p, b), full_liouvillian=opts.full_liouvillian)
    return order_parameter(state, spectrum), state, None


def _real_axis(psi: complex) -> complex:
    """Rotate psi onto the real axis, keeping the sign of its real part."""
    if psi.imag == 0.0:
        return complex(psi.real, 0.0)
    magnitude = abs(psi)
    return complex(magnitude if psi.real >= 0 else -magnitude, 0.0)


def solve_fixed_point(p: ModelParams, zj: float, b: BathParams, seed: complex,
                      opts: SolverOptions = SolverOptions()) -> FixedPointResult:
    """Damped iteration psi_{k+1} = (1 - m) F(psi_k) + m psi_k from a seed."""
    seed = complex(seed)
    if not cmath.isfinite(seed):
        raise ParameterError(f"seed must be finite, got {seed}")

    branch = Branch(seed=seed)
    mixing = opts.mixing
    oscillation = False
    psi = seed
    history: List[complex] = [psi]
    residual = float("inf")
    state, rho = None, None

    for iteration in range(1, opts.max_iter + 1):
        try:
            image, state, rho = steady_state_map(p, zj, b, psi, opts)
        except SteadyStateError as e:
            logger.warning("No steady state at g=%.4g zJ=%.4g, psi=%.3g: %s", p.g, zj, abs(psi), e)
            break
        if not cmath.isfinite(image):
            logger.warning("F(psi) is not finite at zJ=%.4g, g=%.4g; stopping", zj, p.g)
            break
        residual = abs(image - psi)
        if residual < opts.tolerance:
            if abs(psi) < opts.tolerance:
                psi = 0j  # trivial fixed point; F(0) = 0 by parity
            logger.debug("Converged at g=%.4g zJ=%.4g after %d iterations (|psi|=%.3e)",
                         p.g, zj, iteration, abs(psi))
            return FixedPointResult(
                psi=_real_axis(psi), abs_psi=abs(psi), iterations=iteration, converged=True,
                residual=residual, branch=branch, populations=state, density_matrix=rho,
                oscillation=oscillation, raw_psi=psi,
            )

        psi = (1.0 - mixing) * image + mixing * psi
        history.append(psi)
        if not oscillation and len(history) >= 3:
            step = abs(history[-1] - history[-2])
            if abs(history[-1] - history[-3]) < 0.1 * step:
                oscillation = True
                mixing = max(mixing, opts.oscillation_mixing)
                logger.warning("Period-2 oscillation at g=%.4g zJ=%.4g; mixing raised to %.2f",
                               p.g, zj, mixing)

    logger.warning("No convergence at g=%.4g zJ=%.4g from %s (residual %.2e after %d iterations)",
                   p.g, zj, branch, residual, iteration)
    return FixedPointResult(
        psi=_real_axis(psi), abs_psi=abs(psi), iterations=iteration, converged=False,
        residual=residual, branch=branch, populations=state, density_matrix=rho,
        oscillation=oscillation, raw_psi=psi,
    )


def default_seeds(p: ModelParams, opts: SolverOptions) -> List[complex]:
    seeds = opts.seeds if opts.seeds is not None else [0.1, 1.0, p.g / p.omega0]
    if opts.check_symmetry:
        seeds = list(seeds) + [-s for s in seeds]
    unique: List[complex] = []
    for s in seeds:
        if complex(s) not in unique:
            unique.append(complex(s))
    return unique


def classify_point(p: ModelParams, zj: float, b: BathParams,
                   opts: SolverOptions = SolverOptions(),
                   extra_seeds: Iterable[complex] = ()) -> PointClassification:
    """Localized or delocalized, from a fixed protocol of seeds.

    Extra seeds (warm starts) are tried first. Unless the symmetry check is
    on, the scan stops at the first converged branch above psi_threshold.
    """
    seeds: List[complex] = []
    for s in list(extra_seeds) + default_seeds(p, opts):
        if complex(s) not in seeds:
            seeds.append(complex(s))

    branches: List[FixedPointResult] = []
    for seed in seeds:
        result = solve_fixed_point(p, zj, b, seed, opts)
        branches.append(result)
        if result.converged and result.abs_psi > opts.psi_threshold and not opts.check_symmetry:
            break

    iterations = sum(r.iterations for r in branches)
    converged = [r for r in branches if r.converged]
    delocalized = [r for r in converged if r.abs_psi > opts.psi_threshold]
    if delocalized:
        best = delocalized[0]
        return PointClassification(
            phase=Phase.DELOCALIZED, abs_psi=best.abs_psi, psi=best.psi, converged=True,
            iterations=iterations, warning=False, branches=tuple(branches),
        )

    warning = len(converged) < len(branches)
    if converged:
        best = max(converged, key=lambda r: r.abs_psi)
    else:
        best = min(branches, key=lambda r: r.abs_psi)
    if warning:
        logger.warning("g=%.4g zJ=%.4g classified localized with %d unconverged branch(es)",
                       p.g, zj, len(branches) - len(converged))
    return PointClassification(
        phase=Phase.LOCALIZED, abs_psi=best.abs_psi, psi=best.psi, converged=not warning,
        iterations=iterations, warning=warning, branches=tuple(branches),
    )
