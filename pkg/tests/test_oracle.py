import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import chain_params, momenta
from fdqpt import oracle
from fdqpt.model import PAULI, ChainParams


def taylor_exp(a: np.ndarray, terms: int = 20) -> np.ndarray:
    """exp(a) by scaling, a truncated series and repeated squaring."""
    s = max(0, int(np.ceil(np.log2(max(np.linalg.norm(a, 2), 1e-300)))) + 1)
    b = a / 2**s
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for n in range(1, terms):
        term = term @ b / n
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


hermitian = arrays(np.float64, (4,), elements=st.floats(-3, 3)).map(
    lambda c: c[0] * np.eye(2) + np.einsum("i,ijk->jk", c[1:], PAULI))


def test_mat_exp_trivial_cases():
    np.testing.assert_allclose(oracle.mat_exp(np.zeros((2, 2)), 1.7), np.eye(2), atol=1e-15)
    xi, t = 0.8, 2.3
    np.testing.assert_allclose(oracle.mat_exp(np.diag([xi, -xi]), t),
                               np.diag([np.exp(-1j * xi * t), np.exp(1j * xi * t)]), atol=1e-14)


@given(hermitian, st.floats(-4, 4))
def test_mat_exp_matches_taylor_series(h, t):
    u = oracle.mat_exp(h, t)
    np.testing.assert_allclose(u, taylor_exp(-1j * h * t), atol=1e-12)
    assert np.linalg.norm(u.conj().T @ u - np.eye(2)) < 1e-12


def test_mat_exp_rejects_non_hermitian():
    with pytest.raises(oracle.OracleError):
        oracle.mat_exp(np.array([[0, 1], [0, 0]]), 1.0)


@given(arrays(np.float64, (3,), elements=st.floats(-1, 1)), st.floats(1e-3, math.pi - 1e-3),
       st.floats(0.5, 7))
def test_mat_log_inverts_construction(v, angle, T):
    if np.linalg.norm(v) < 1e-3:
        v = np.array([0.0, 0.0, 1.0])
    d = v / np.linalg.norm(v)
    U = oracle.mat_exp(np.einsum("i,ijk->jk", d, PAULI), angle)
    xe, n, degenerate = oracle.mat_log_su2(U, T)
    assert not degenerate
    assert xe == pytest.approx(angle / T, abs=1e-10)
    np.testing.assert_allclose(n, d, atol=1e-8)


@pytest.mark.parametrize("U", [np.eye(2), -np.eye(2)])
def test_mat_log_flags_identity(U):
    _, n, degenerate = oracle.mat_log_su2(U.astype(complex), 2.0)
    assert degenerate and n is None


def test_ground_state_of_diagonal():
    np.testing.assert_allclose(oracle.ground_state(np.diag([0.7, -0.7])), [0, 1], atol=1e-15)


def test_ground_state_degenerate_raises():
    with pytest.raises(oracle.OracleError):
        oracle.ground_state(np.eye(2))


@given(chain_params(), momenta())
def test_ground_state_phase_convention(p, k):
    g = oracle.segment_ground_state(p, k, 1)
    assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-12)
    assert abs(g[1].imag) < 1e-14 and g[1].real >= 0
    # lowest eigenvalue -xi
    h = oracle.hamiltonian(p, k, 1)
    xi = np.linalg.eigvalsh(h)[1]
    np.testing.assert_allclose(h @ g, -xi * g, atol=1e-12)


def test_floquet_ground_state_has_negative_quasienergy():
    p = ChainParams(lam=0.8, phi1=math.pi, phi2=0.0, T1=0.8 * math.pi, T2=1.2 * math.pi)
    k = 1.0
    U = oracle.floquet_operator(p, k)
    xe, _, _ = oracle.mat_log_su2(U, p.T)
    g = oracle.effective_ground_state(p, k)
    np.testing.assert_allclose(U @ g, np.exp(1j * xe * p.T) * g, atol=1e-12)


def test_propagate_boundaries():
    p = ChainParams(T1=1.1, T2=2.0)
    k = 0.9
    psi = np.array([0.6, 0.8j])
    np.testing.assert_allclose(oracle.propagate(p, k, 0.0, psi), psi, atol=1e-15)
    np.testing.assert_allclose(oracle.propagate(p, k, p.T1, psi),
                               oracle.mat_exp(oracle.hamiltonian(p, k, 1), p.T1) @ psi, atol=1e-14)
    for t in (-0.1, p.T):
        with pytest.raises(oracle.OracleError):
            oracle.propagate(p, k, t, psi)


def test_bloch_vector_sign_convention():
    # |0> has <sigma_z> = -1, so its Bloch vector under rho = (1 - d.sigma)/2 is +z
    np.testing.assert_allclose(oracle.bloch_vector(np.array([0, 1])), [0, 0, 1], atol=1e-15)
