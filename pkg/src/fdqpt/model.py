"""Chain parameters and the static per-mode geometry of the two segment Hamiltonians.

Each momentum sector k of the even-parity (APBC) chain reduces to a 2x2 block
in the pair basis {a_k^+ a_-k^+ |0>, |0>}:

    h_k(phi) = d_k(phi) . sigma,
    d_k(phi) = (gamma sin k sin phi, -gamma sin k cos phi, J cos k + lambda).

The flux only rotates the xy part of d_k, so |d_k| = xi_k is shared by both
segments.  All functions accept a scalar momentum or a numpy array of momenta.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

DEFAULT_DENSE_NK = 2001


class InvalidParameterError(ValueError):
    """Raised for physically or numerically invalid chain parameters."""


class DegenerateModeError(ValueError):
    """Raised when a momentum sector is gapless (xi_k = 0)."""


@dataclass(frozen=True)
class ChainParams:
    """Physical and protocol parameters of the flux-quenched chain.

    Phases are stored reduced mod 2*pi.  ``gamma >= 0`` is the documented
    regime; negative values are accepted and simply flip the Bogoliubov angle.
    """

    J: float = 1.0
    gamma: float = 1.0
    lam: float = 0.6
    phi1: float = 0.0
    phi2: float = np.pi / 4
    T1: float = np.pi
    T2: float = np.pi
    L: int = 1000

    def __post_init__(self):
        for name in ("J", "gamma", "lam", "phi1", "phi2", "T1", "T2"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.T1 <= 0 or self.T2 <= 0:
            raise InvalidParameterError(
                f"segment durations must be positive, got T1={self.T1}, T2={self.T2}"
            )
        if int(self.L) != self.L or self.L < 2 or int(self.L) % 2:
            raise InvalidParameterError(f"L must be an even integer >= 2, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "phi1", float(np.mod(self.phi1, 2 * np.pi)))
        object.__setattr__(self, "phi2", float(np.mod(self.phi2, 2 * np.pi)))

    @property
    def T(self) -> float:
        return self.T1 + self.T2

    @property
    def delta_phi(self) -> float:
        return self.phi1 - self.phi2

    def phi(self, segment: int) -> float:
        if segment == 1:
            return self.phi1
        if segment == 2:
            return self.phi2
        raise InvalidParameterError(f"segment must be 1 or 2, got {segment!r}")

    def shifted(self, c: float) -> "ChainParams":
        """Same protocol with both fluxes shifted by ``c``."""
        return replace(self, phi1=self.phi1 + c, phi2=self.phi2 + c)

    def as_dict(self) -> dict:
        return {
            "J": self.J,
            "gamma": self.gamma,
            "lambda": self.lam,
            "phi1": self.phi1,
            "phi2": self.phi2,
            "T1": self.T1,
            "T2": self.T2,
            "L": self.L,
        }


@dataclass(frozen=True)
class MomentumGrid:
    ks: np.ndarray
    dense: bool = False

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=float)
        if ks.ndim != 1 or ks.size == 0:
            raise InvalidParameterError("momentum grid must be a non-empty 1-D array")
        if np.any(ks <= 0) or np.any(ks >= np.pi):
            raise InvalidParameterError("all momenta must lie strictly inside (0, pi)")
        if np.any(np.diff(ks) <= 0):
            raise InvalidParameterError("momenta must be strictly increasing")
        object.__setattr__(self, "ks", ks)

    def __len__(self):
        return self.ks.size

    @property
    def weight(self) -> float:
        """Quadrature weight dk of the uniform grid."""
        return np.pi / self.ks.size


def momentum_grid(params: ChainParams) -> MomentumGrid:
    """The allowed momenta k = (2n-1) pi / L, n = 1..L/2."""
    L = params.L
    if L < 2 or L % 2:
        raise InvalidParameterError(f"L must be even and >= 2, got {L}")
    n = np.arange(1, L // 2 + 1)
    return MomentumGrid((2 * n - 1) * np.pi / L)


def dense_grid(nk: int = DEFAULT_DENSE_NK) -> MomentumGrid:
    """Uniform midpoint grid of ``nk`` momenta in (0, pi).

    k_j = (j - 1/2) pi / nk.  Integrands over k are even about 0 and pi, so a
    plain weighted sum on this grid is the trapezoid rule of the periodic
    extension.  With nk = L/2 it coincides with the finite-chain grid.
    """
    nk = int(nk)
    if nk < 1:
        raise InvalidParameterError(f"nk must be positive, got {nk}")
    j = np.arange(1, nk + 1)
    return MomentumGrid((j - 0.5) * np.pi / nk, dense=True)


@dataclass(frozen=True)
class ModeGeometry:
    """Static data of momentum sector(s) k.  Fields broadcast over k."""

    k: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    d1_hat: np.ndarray
    d2_hat: np.ndarray

    def d_hat(self, segment: int) -> np.ndarray:
        if segment == 1:
            return self.d1_hat
        if segment == 2:
            return self.d2_hat
        raise InvalidParameterError(f"segment must be 1 or 2, got {segment!r}")

    def d(self, segment: int) -> np.ndarray:
        return self.d_hat(segment) * np.asarray(self.xi)[..., None]

    def __getitem__(self, idx) -> "ModeGeometry":
        return ModeGeometry(
            k=self.k[idx],
            xi=self.xi[idx],
            theta=self.theta[idx],
            d1_hat=self.d1_hat[idx],
            d2_hat=self.d2_hat[idx],
        )


def field_vector(params: ChainParams, k, segment: int) -> np.ndarray:
    """Effective magnetic field d_{alpha,k}, shape ``k.shape + (3,)``."""
    k = np.asarray(k, dtype=float)
    phi = params.phi(segment)
    pairing = params.gamma * np.sin(k)
    return np.stack(
        [
            pairing * np.sin(phi),
            -pairing * np.cos(phi),
            params.J * np.cos(k) + params.lam,
        ],
        axis=-1,
    )


def dispersion(params: ChainParams, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return np.hypot(params.J * np.cos(k) + params.lam, params.gamma * np.sin(k))


def mode_geometry(params: ChainParams, k) -> ModeGeometry:
    """Dispersion, Bogoliubov angle and unit field directions at momentum k.

    theta_k = atan2(gamma sin k, J cos k + lambda), which lies in (0, pi) for
    gamma sin k > 0 and stays continuous where J cos k + lambda changes sign.
    """
    k = np.asarray(k, dtype=float)
    eps = params.J * np.cos(k) + params.lam
    delta = params.gamma * np.sin(k)
    xi = np.hypot(eps, delta)
    if np.any(xi == 0):
        bad = np.atleast_1d(k)[np.atleast_1d(xi) == 0]
        raise DegenerateModeError(f"gapless mode (xi_k = 0) at k = {bad.tolist()}")
    theta = np.arctan2(delta, eps)
    d1 = field_vector(params, k, 1) / xi[..., None]
    d2 = field_vector(params, k, 2) / xi[..., None]
    return ModeGeometry(k=k, xi=xi, theta=theta, d1_hat=d1, d2_hat=d2)


def kernel_hamiltonian(geom: ModeGeometry, segment: int) -> np.ndarray:
    """BdG kernel d_{alpha,k} . sigma, shape ``k.shape + (2, 2)``."""
    d = geom.d(segment)
    return np.einsum("...i,ijk->...jk", d, PAULI)
