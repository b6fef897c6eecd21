"""Brute-force numerical references for every closed form in the package.

Nothing here uses the analytic Floquet, echo or rotation formulas: states are
propagated with matrix exponentials built from eigendecompositions of the bare
2x2 BdG kernels.  Spinors live in the pair basis {a_k^+ a_-k^+ |0>, |0>}.
"""

from __future__ import annotations

import numpy as np

from .floquet import EPS_DEG
from .model import PAULI, ChainParams, field_vector


class OracleError(ValueError):
    pass


def hamiltonian(params: ChainParams, k: float, segment: int) -> np.ndarray:
    d = field_vector(params, float(k), segment)
    return np.einsum("i,ijk->jk", d, PAULI)


def mat_exp(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian 2x2 ``h`` via eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if np.linalg.norm(h - h.conj().T) > 1e-10 * max(1.0, np.linalg.norm(h)):
        raise OracleError("mat_exp expects a Hermitian matrix")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def mat_log_su2(U: np.ndarray, T: float):
    """Principal generator of U = exp(-i xi_eff T n.sigma).

    Returns ``(xi_eff, n_hat, degenerate)``; ``n_hat`` is None when U = +-I.
    """
    U = np.asarray(U, dtype=complex)
    U = U / np.sqrt(np.linalg.det(U))
    angle = np.arccos(np.clip(np.trace(U).real / 2, -1.0, 1.0))
    s = np.sin(angle)
    if abs(s) < EPS_DEG:
        return angle / T, None, True
    # U = cos a I - i sin a n.sigma  =>  n_j = i tr(U sigma_j) / (2 sin a)
    n = np.array([1j * np.trace(U @ p) / (2 * s) for p in PAULI])
    return angle / T, n.real, False


def ground_state(matrix: np.ndarray, unitary: bool = False) -> np.ndarray:
    """Ground spinor of a 2x2 Hamiltonian, or of a Floquet operator.

    For a Hamiltonian this is the lowest eigenvector.  For a unitary
    U = exp(-i h_eff T) it is the eigenvector with eigenphase +xi_eff T in
    (0, pi), i.e. quasienergy -xi_eff.  The |0_k 0_-k> amplitude (second
    component) is made real and non-negative.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if unitary:
        w, v = np.linalg.eig(matrix)
        if abs(w[0] - w[1]) < EPS_DEG:
            raise OracleError("degenerate Floquet operator has no unique ground state")
        phases = np.angle(w)
        vec = v[:, int(np.argmax(phases))]
    else:
        w, v = np.linalg.eigh(matrix)
        if abs(w[1] - w[0]) < EPS_DEG:
            raise OracleError("degenerate Hamiltonian has no unique ground state")
        vec = v[:, 0]
    vec = vec / np.linalg.norm(vec)
    amp = vec[1]
    if abs(amp) > 1e-14:
        vec = vec * (abs(amp) / amp)
    return vec


def propagator(params: ChainParams, k: float, t: float) -> np.ndarray:
    """Piecewise micromotion propagator U_k(t) from matrix exponentials only."""
    if not 0 <= t < params.T:
        raise OracleError(f"t must lie in [0, T) = [0, {params.T}), got {t}")
    h1 = hamiltonian(params, k, 1)
    if t < params.T1:
        return mat_exp(h1, t)
    h2 = hamiltonian(params, k, 2)
    return mat_exp(h2, t - params.T1) @ mat_exp(h1, params.T1)


def floquet_operator(params: ChainParams, k: float) -> np.ndarray:
    return mat_exp(hamiltonian(params, k, 2), params.T2) @ mat_exp(
        hamiltonian(params, k, 1), params.T1
    )


def propagate(params: ChainParams, k: float, t: float, psi0: np.ndarray) -> np.ndarray:
    return propagator(params, k, t) @ np.asarray(psi0, dtype=complex)


def effective_ground_state(params: ChainParams, k: float) -> np.ndarray:
    return ground_state(floquet_operator(params, k), unitary=True)


def segment_ground_state(params: ChainParams, k: float, segment: int) -> np.ndarray:
    return ground_state(hamiltonian(params, k, segment))


def return_amplitude(params: ChainParams, k: float, t: float) -> complex:
    """<G_eff| U_k(t) |G_eff> by direct propagation."""
    g = effective_ground_state(params, k)
    return complex(np.vdot(g, propagate(params, k, t, g)))


def bloch_vector(psi: np.ndarray) -> np.ndarray:
    """d_hat of rho = (1 - d_hat.sigma)/2, i.e. minus the expectation of sigma."""
    psi = np.asarray(psi, dtype=complex)
    return -np.array([np.vdot(psi, p @ psi).real for p in PAULI])
