"""Dressed-master-equation rates, Pauli steady state and Lindblad steady state.

Rates follow the dressed (eigenbasis) master equation: for every pair k > j
the downward rate k -> j is sum_u Gamma_u^{kj} (1 + n_u(Delta_kj)) and the
upward rate j -> k is sum_u Gamma_u^{kj} n_u(Delta_kj), with
Gamma_u^{kj} = G_u(Delta_kj) |<phi_j|A_u|phi_k>|^2, A_q = sigma_x,
A_c = a + a^dag.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .exceptions import LiouvillianError, ParameterError, SteadyStateError
from .operators import Spectrum, site_operators
from .schemas import BathParams, ModelParams

logger = logging.getLogger(__name__)


def bose_occupation(delta: float, temp: float) -> float:
    """Bose-Einstein occupation 1/(exp(delta/temp) - 1); zero at temp = 0."""
    if delta < 0:
        raise ParameterError(f"gap must be oriented upward (delta >= 0), got {delta}")
    if temp < 0:
        raise ParameterError(f"temperature must be non-negative, got {temp}")
    if temp == 0:
        return 0.0
    if delta == 0:
        return math.inf
    x = delta / temp
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def _bose_array(delta: np.ndarray, temp: float) -> np.ndarray:
    if temp == 0:
        return np.zeros_like(delta)
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(delta / temp)


def _channels(p: ModelParams, b: BathParams):
    """(gamma, temperature, frequency scale, elements attribute) per bath."""
    return (
        (b.gamma_q, b.temp_q, p.epsilon, "sx_elems"),
        (b.gamma_c, b.temp_c, p.omega0, "x_elems"),
    )


def spectral_function(omega: np.ndarray, gamma: float, scale: float, b: BathParams) -> np.ndarray:
    """G(omega) = gamma (omega/scale)^s exp(-omega/omega_c)."""
    omega = np.asarray(omega, dtype=float)
    g = gamma * (omega / scale) ** b.s
    if b.cutoff is not None:
        g = g * np.exp(-omega / b.cutoff)
    return g


def _thermal_limit(gamma: float, temp: float, scale: float, b: BathParams) -> float:
    """lim_{omega -> 0} G(omega) n(omega); finite only for the Ohmic exponent."""
    if b.s == 1.0:
        return gamma * temp / scale
    return 0.0


@dataclass(frozen=True)
class RateMatrix:
    """Lower-triangular rate tables: down[k, j] is k -> j, up[k, j] is j -> k (k > j)."""

    down: np.ndarray
    up: np.ndarray
    spectrum: Optional[Spectrum] = None

    @property
    def dims(self) -> int:
        return self.down.shape[0]

    def transitions(self) -> np.ndarray:
        """W[to, from] for every pair of eigenstates."""
        return self.down.T + self.up

    def generator(self) -> np.ndarray:
        """Pauli generator M with dP/dt = M P; columns sum to zero."""
        w = self.transitions()
        return w - np.diag(w.sum(axis=0))


@dataclass(frozen=True)
class DensityState:
    """Steady state in the eigenbasis: populations, plus coherences when known."""

    populations: np.ndarray
    spectrum: Optional[Spectrum] = None
    coherences: Optional[np.ndarray] = None

    def eigenbasis_matrix(self) -> np.ndarray:
        if self.coherences is not None:
            return self.coherences
        return np.diag(self.populations).astype(complex)

    def density_matrix(self) -> np.ndarray:
        """Density matrix in the qubit (x) Fock product basis."""
        if self.spectrum is None:
            raise SteadyStateError("state carries no basis; cannot embed it in the product basis")
        return self.spectrum.to_product_basis(self.eigenbasis_matrix())


def dme_rates(s: Spectrum, p: ModelParams, b: BathParams) -> RateMatrix:
    """Dressed-state transition rates between all eigenstate pairs."""
    dim = s.dim
    gaps = s.gaps()
    lower = np.tril(np.ones((dim, dim), dtype=bool), k=-1)
    regular = lower & (gaps >= b.gap_floor)
    degenerate = lower & (gaps < b.gap_floor)

    down = np.zeros((dim, dim))
    up = np.zeros((dim, dim))
    delta = gaps[regular]
    for gamma, temp, scale, attr in _channels(p, b):
        if gamma == 0:
            continue
        weight = np.abs(getattr(s, attr)) ** 2
        rate = spectral_function(delta, gamma, scale, b) * weight[regular]
        occupation = _bose_array(delta, temp)
        down[regular] += rate * (1.0 + occupation)
        up[regular] += rate * occupation
        if degenerate.any():
            limit = _thermal_limit(gamma, temp, scale, b) * weight[degenerate]
            down[degenerate] += limit
            up[degenerate] += limit

    down.flags.writeable = False
    up.flags.writeable = False
    return RateMatrix(down=down, up=up, spectrum=s)


def closed_class(w: np.ndarray) -> np.ndarray:
    """States of the unique closed communicating class of the rate graph W[to, from].

    Every other state is transient and carries no steady-state weight.
    """
    edges = w.T > 0  # edges[from, to]
    np.fill_diagonal(edges, False)
    n_components, labels = connected_components(sp.csr_matrix(edges), directed=True, connection="strong")
    leaving = np.zeros(n_components, dtype=bool)
    src, dst = np.nonzero(edges)
    leaving[labels[src[labels[src] != labels[dst]]]] = True
    closed = np.flatnonzero(~leaving)
    if closed.size > 1:
        groups = [np.flatnonzero(labels == c).tolist() for c in closed[:4]]
        raise SteadyStateError(
            f"rate graph has {closed.size} closed components, the steady state is not unique: "
            f"{groups}{' ...' if closed.size > 4 else ''}"
        )
    return np.flatnonzero(labels == closed[0])


def _state_reduction(q: np.ndarray) -> np.ndarray:
    """Stationary vector of an irreducible chain with rates q[from, to] (GTH state reduction).

    Only sums and products of non-negative numbers are formed, so rates many
    orders of magnitude apart keep their relative accuracy.
    """
    q = np.array(q, dtype=float)
    n = q.shape[0]
    for k in range(n - 1, 0, -1):
        outflow = q[k, :k].sum()
        if outflow <= 0:
            raise SteadyStateError(f"state reduction lost all outflow at state {k} (rate underflow)")
        q[:k, k] /= outflow
        q[:k, :k] += np.outer(q[:k, k], q[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ q[:k, k]
    return pi / pi.sum()


def dme_steady_state(r: RateMatrix, full_liouvillian: bool = False) -> DensityState:
    """Stationary distribution of the dressed Pauli master equation."""
    if full_liouvillian:
        rho = dme_liouvillian_steady_state(r)
        populations = np.clip(np.diag(rho).real, 0.0, None)
        return DensityState(populations=populations / populations.sum(), spectrum=r.spectrum,
                            coherences=rho)

    w = r.transitions()
    members = closed_class(w)
    populations = np.zeros(r.dims)
    if members.size == 1:
        populations[members[0]] = 1.0
    else:
        populations[members] = _state_reduction(w[np.ix_(members, members)].T)
    if members.size < r.dims:
        logger.debug("%d transient state(s) dropped from the steady state", r.dims - members.size)
    populations.flags.writeable = False
    return DensityState(populations=populations, spectrum=r.spectrum)


# --- vectorized Liouvillian -------------------------------------------------

def lindblad_liouvillian(h, jumps: Iterable) -> sp.csr_matrix:
    """Sparse superoperator for column-stacked rho: vec(A rho B) = (B^T kron A) vec(rho)."""
    h = sp.csr_matrix(h)
    dim = h.shape[0]
    eye = sp.identity(dim, format="csr", dtype=complex)
    liouvillian = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    gain = sp.csr_matrix((dim * dim, dim * dim), dtype=complex)
    loss = sp.csr_matrix((dim, dim), dtype=complex)
    for c in jumps:
        c = sp.csr_matrix(c)
        if c.nnz == 0:
            continue
        gain = gain + sp.kron(c.conj(), c)
        loss = loss + c.conj().T @ c
    liouvillian = liouvillian + gain - 0.5 * (sp.kron(eye, loss) + sp.kron(loss.T, eye))
    return liouvillian.tocsr()


def liouvillian_residual(liouvillian: sp.spmatrix, rho: np.ndarray) -> float:
    return float(np.linalg.norm(liouvillian @ rho.reshape(-1, order="F")))


def solve_liouvillian(liouvillian: sp.spmatrix, dim: int, residual_tol: float = 1e-10) -> np.ndarray:
    """Steady state of a Liouvillian: one population equation replaced by Tr rho = 1."""
    system = sp.lil_matrix(liouvillian)
    trace_row = np.zeros(dim * dim, dtype=complex)
    trace_row[:: dim + 1] = 1.0
    system[0, :] = trace_row
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0
    try:
        solution = spla.splu(system.tocsc()).solve(rhs)
    except RuntimeError as e:
        raise LiouvillianError(f"Liouvillian is singular: {e}") from e

    rho = solution.reshape((dim, dim), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = liouvillian_residual(liouvillian, rho)
    if not np.isfinite(residual) or residual > residual_tol:
        raise LiouvillianError(f"steady-state residual {residual:.3e} exceeds {residual_tol:.1e}")
    logger.debug("Liouvillian steady state solved (dim=%d, residual=%.2e)", dim, residual)
    return rho


def dme_liouvillian_steady_state(r: RateMatrix, residual_tol: float = 1e-10) -> np.ndarray:
    """Full DME steady state in the eigenbasis, dissipators |phi_j><phi_k| for all pairs."""
    if r.spectrum is None:
        raise SteadyStateError("the Liouvillian path needs the eigen-energies of the rate matrix")
    dim = r.dims
    w = r.transitions()
    to_idx, from_idx = np.nonzero(w)
    jumps = (
        sp.csr_matrix(([math.sqrt(w[i, j])], ([i], [j])), shape=(dim, dim))
        for i, j in zip(to_idx, from_idx)
        if i != j
    )
    liouvillian = lindblad_liouvillian(np.diag(r.spectrum.energies), jumps)
    return solve_liouvillian(liouvillian, dim, residual_tol)


def lme_jump_operators(p: ModelParams, b: BathParams) -> list:
    """Local Lindblad jumps: a, a^dag at omega0 and sigma_-, sigma_+ at epsilon."""
    ops = site_operators(p.truncation)
    a, sm = ops["a"], ops["sm"]
    n_c = bose_occupation(p.omega0, b.temp_c)
    n_q = bose_occupation(p.epsilon, b.temp_q)
    rated = (
        (b.gamma_c * (1.0 + n_c), a),
        (b.gamma_c * n_c, a.T),
        (b.gamma_q * (1.0 + n_q), sm),
        (b.gamma_q * n_q, sm.T),
    )
    return [math.sqrt(rate) * op for rate, op in rated if rate > 0]


def lme_steady_state(h: np.ndarray, p: ModelParams, b: BathParams, dim_cap: int = 70,
                     residual_tol: float = 1e-10) -> np.ndarray:
    """Steady state of the local Lindblad equation, product basis, coherences kept."""
    dim = h.shape[0]
    if dim != p.dim:
        raise ParameterError(f"Hamiltonian dimension {dim} does not match 2N = {p.dim}")
    if dim > dim_cap:
        raise LiouvillianError(f"Hilbert dimension {dim} exceeds the Liouvillian cap {dim_cap}")
    liouvillian = lindblad_liouvillian(h, lme_jump_operators(p, b))
    return solve_liouvillian(liouvillian, dim, residual_tol)
