# Rabi-Hubbard mean-field phase diagrams under the dressed master equation
__version__ = "1.0.0"

from .analytic import (
    TwoLevelReduction,
    adiabatic_gap,
    adiabatic_rate,
    critical_zj,
    lme_boundary,
    lme_boundary_minimum,
    psi_closed_form,
    two_level_dynamics,
)
from .dissipation import bose_occupation, dme_rates, dme_steady_state, lme_steady_state
from .exceptions import (
    ConfigError,
    IntegrationError,
    LiouvillianError,
    ParameterError,
    RabiHubbardError,
    SpectrumError,
    SteadyStateError,
)
from .meanfield import FixedPointResult, Phase, classify_point, order_parameter, solve_fixed_point
from .operators import (
    Spectrum,
    build_meanfield_hamiltonian,
    build_rabi_hamiltonian,
    diagonalize,
)
from .schemas import AxisSpec, BathParams, ModelParams, SolverOptions, SweepSpec
from .sweep import PhaseDiagram, extract_boundary, run_sweep
