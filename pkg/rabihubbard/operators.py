"""Truncated qubit-cavity Hilbert space, Rabi and mean-field Hamiltonians, spectra.

Basis ordering is the product basis |qubit> (x) |n> with the qubit index
slowest: index = q * N + n, q = 0 is the sigma_z = +1 state.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.linalg as la

from .exceptions import ParameterError, SpectrumError
from .schemas import ModelParams, default_fock_dim

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]])  # |down><up| with up = index 0

__all__ = [
    "Spectrum",
    "default_fock_dim",
    "annihilation",
    "site_operators",
    "parity_operator",
    "build_rabi_hamiltonian",
    "build_meanfield_hamiltonian",
    "diagonalize",
    "rabi_gap",
    "expectation_values",
    "truncation_converged",
]


def annihilation(fock_dim: int) -> np.ndarray:
    """Photon annihilation operator on the Fock states 0..fock_dim-1."""
    if fock_dim < 1:
        raise ParameterError(f"fock_dim must be positive, got {fock_dim}")
    return np.diag(np.sqrt(np.arange(1, fock_dim, dtype=float)), k=1)


@lru_cache(maxsize=32)
def _cached_site_operators(fock_dim: int) -> Tuple[np.ndarray, ...]:
    a = annihilation(fock_dim)
    eye_q = np.eye(2)
    eye_c = np.eye(fock_dim)
    ops = (
        np.kron(eye_q, a),                  # a
        np.kron(eye_q, a.T @ a),            # a^dag a
        np.kron(eye_q, a + a.T),            # a + a^dag
        np.kron(SIGMA_X, eye_c),            # sigma_x
        np.kron(SIGMA_Z, eye_c),            # sigma_z
        np.kron(SIGMA_MINUS, eye_c),        # sigma_-
    )
    for op in ops:
        op.flags.writeable = False
    return ops


def site_operators(fock_dim: int) -> dict:
    """Single-site operators on the 2N-dimensional product space (read-only arrays)."""
    a, n, x, sx, sz, sm = _cached_site_operators(fock_dim)
    return {"a": a, "n": n, "x": x, "sx": sx, "sz": sz, "sm": sm}


def parity_operator(fock_dim: int) -> np.ndarray:
    """Z2 parity sigma_z (x) (-1)^(a^dag a) of the Rabi model."""
    signs = (-1.0) ** np.arange(fock_dim)
    return np.kron(SIGMA_Z, np.diag(signs))


def build_rabi_hamiltonian(p: ModelParams) -> np.ndarray:
    """omega0 a^dag a + (epsilon/2) sigma_z + g sigma_x (a + a^dag)."""
    fock_dim = p.truncation
    if fock_dim < 2:
        raise ParameterError(f"fock_dim must be at least 2, got {fock_dim}")
    ops = site_operators(fock_dim)
    return p.omega0 * ops["n"] + 0.5 * p.epsilon * ops["sz"] + p.g * ops["sx"] @ ops["x"]


def build_meanfield_hamiltonian(p: ModelParams, zj: float, psi: complex) -> np.ndarray:
    """H_Rabi - zJ (psi^* a + psi a^dag) + zJ |psi|^2.

    For real psi this is exactly H_Rabi - zJ psi (a + a^dag) + zJ psi^2; the
    matrix stays real in that case.
    """
    if zj < 0:
        raise ParameterError(f"zJ must be non-negative, got {zj}")
    h = build_rabi_hamiltonian(p)
    if psi == 0 or zj == 0:
        return h
    a = site_operators(p.truncation)["a"]
    psi = complex(psi)
    shift = zj * abs(psi) ** 2 * np.eye(h.shape[0])
    if psi.imag == 0.0:
        return h - zj * psi.real * (a + a.T) + shift
    drive = np.conj(psi) * a + psi * a.T
    return h - zj * drive + shift


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a 2N x 2N site Hamiltonian.

    x_elems[j, k] = <phi_j|(a + a^dag)|phi_k>, sx_elems[j, k] = <phi_j|sigma_x|phi_k>,
    a_diag[n] = <phi_n|a|phi_n>.
    """

    energies: np.ndarray
    states: np.ndarray
    x_elems: np.ndarray
    sx_elems: np.ndarray
    a_diag: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    @property
    def fock_dim(self) -> int:
        return self.dim // 2

    def gaps(self) -> np.ndarray:
        """gaps[k, j] = E_k - E_j."""
        return self.energies[:, None] - self.energies[None, :]

    def to_product_basis(self, rho_eigen: np.ndarray) -> np.ndarray:
        """Rotate an eigenbasis density matrix into the qubit (x) Fock basis."""
        return self.states @ rho_eigen @ self.states.conj().T


def _check_hermitian(h: np.ndarray) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise SpectrumError(f"expected a square matrix, got shape {h.shape}")
    if h.shape[0] % 2:
        raise SpectrumError(f"dimension {h.shape[0]} is not 2N for a qubit (x) Fock space")
    scale = max(1.0, float(np.max(np.abs(h))))
    deviation = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if deviation > HERMITIAN_TOL * scale:
        raise SpectrumError(f"matrix is not Hermitian (max |H - H^dag| = {deviation:.3e})")


def diagonalize(h: np.ndarray) -> Spectrum:
    """Full spectral decomposition with ascending energies and transition elements."""
    h = np.asarray(h)
    _check_hermitian(h)
    try:
        energies, states = la.eigh(h)
    except (la.LinAlgError, ValueError) as e:
        raise SpectrumError(f"eigensolver failed: {e}") from e

    ops = site_operators(h.shape[0] // 2)
    v_dag = states.conj().T
    x_elems = v_dag @ ops["x"] @ states
    sx_elems = v_dag @ ops["sx"] @ states
    # a_diag only needs the diagonal of V^dag a V
    a_diag = np.einsum("in,ij,jn->n", states.conj(), ops["a"], states)
    if np.isrealobj(states):
        a_diag = a_diag.real

    for arr in (energies, states, x_elems, sx_elems, a_diag):
        arr.flags.writeable = False
    return Spectrum(energies=energies, states=states, x_elems=x_elems, sx_elems=sx_elems, a_diag=a_diag)


def rabi_gap(p: ModelParams) -> float:
    """Exact first excitation energy E1 - E0 of the truncated Rabi model."""
    energies = la.eigh(build_rabi_hamiltonian(p), eigvals_only=True, subset_by_index=[0, 1])
    return float(energies[1] - energies[0])


def expectation_values(rho: np.ndarray) -> dict:
    """<a>, <a^dag a>, <sigma_z>, <sigma_x> of a product-basis density matrix."""
    ops = site_operators(rho.shape[0] // 2)
    return {
        "a": complex(np.trace(rho @ ops["a"])),
        "n": float(np.trace(rho @ ops["n"]).real),
        "sz": float(np.trace(rho @ ops["sz"]).real),
        "sx": float(np.trace(rho @ ops["sx"]).real),
    }


def truncation_converged(p: ModelParams, observable, tol: float = 1e-6) -> bool:
    """Doubling test: observable(p) and observable(p with 2N Fock states) agree to tol."""
    doubled = p.with_fock_dim(2 * p.truncation)
    delta = abs(observable(p) - observable(doubled))
    logger.debug("Truncation doubling N=%d -> %d changes observable by %.3e",
                 p.truncation, doubled.truncation, delta)
    return delta < tol
