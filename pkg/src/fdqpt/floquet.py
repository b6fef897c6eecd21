"""One-period Floquet operator and the effective Hamiltonian of each mode.

U_k(T) = exp(-i h_k(phi2) T2) exp(-i h_k(phi1) T1) = exp(-i xi_eff n_eff.sigma T)

The quasienergy is taken on the principal branch xi_eff T in [0, pi]; the
effective "ground state" is always the -xi_eff eigenvector, i.e. the
eigenvector of U_k(T) with eigenvalue exp(+i xi_eff T).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    IDENTITY,
    PAULI,
    ChainParams,
    ModeGeometry,
    mode_geometry,
)

EPS_DEG = 1e-9
# Offset used to sample a neighbour when a lone mode is degenerate.
_PROBE_DK = 1e-7


@dataclass(frozen=True)
class EffectiveMode:
    k: np.ndarray
    xi_eff: np.ndarray
    n_eff: np.ndarray
    theta_eff: np.ndarray
    phi_eff: np.ndarray
    degenerate: np.ndarray

    def __getitem__(self, idx) -> "EffectiveMode":
        return EffectiveMode(
            k=self.k[idx],
            xi_eff=self.xi_eff[idx],
            n_eff=self.n_eff[idx],
            theta_eff=self.theta_eff[idx],
            phi_eff=self.phi_eff[idx],
            degenerate=self.degenerate[idx],
        )


@dataclass(frozen=True)
class Overlaps:
    u1: np.ndarray
    u2: np.ndarray
    F1: np.ndarray
    F2: np.ndarray

    def u(self, segment: int) -> np.ndarray:
        return self.u1 if segment == 1 else self.u2

    def F(self, segment: int) -> np.ndarray:
        return self.F1 if segment == 1 else self.F2

    def __getitem__(self, idx) -> "Overlaps":
        return Overlaps(self.u1[idx], self.u2[idx], self.F1[idx], self.F2[idx])


def _su2(xi, d_hat, duration):
    # exp(-i xi tau d.sigma) = cos(xi tau) I - i sin(xi tau) d.sigma
    angle = np.asarray(xi) * duration
    c = np.cos(angle)[..., None, None]
    s = np.sin(angle)[..., None, None]
    return c * IDENTITY - 1j * s * np.einsum("...i,ijk->...jk", d_hat, PAULI)


def segment_propagator(geom: ModeGeometry, segment: int, duration) -> np.ndarray:
    """Closed-form exp(-i h_k(phi_alpha) tau)."""
    if np.any(np.asarray(duration) < 0):
        raise ValueError(f"duration must be non-negative, got {duration!r}")
    return _su2(geom.xi, geom.d_hat(segment), duration)


def floquet_operator(params: ChainParams, geom: ModeGeometry) -> np.ndarray:
    u1 = segment_propagator(geom, 1, params.T1)
    u2 = segment_propagator(geom, 2, params.T2)
    return u2 @ u1


def _closed_form(params: ChainParams, geom: ModeGeometry):
    """Quasienergy and unnormalised-by-construction n_eff from the closed forms."""
    T1, T2, T = params.T1, params.T2, params.T
    p1, p2 = params.phi1, params.phi2
    th = np.asarray(geom.theta)
    xi = np.asarray(geom.xi)
    sa, ca = np.sin(xi * T1), np.cos(xi * T1)
    sb, cb = np.sin(xi * T2), np.cos(xi * T2)
    st, ct = np.sin(th), np.cos(th)

    cos_eff = ca * cb - (st**2 * np.cos(p1 - p2) + ct**2) * sa * sb
    cos_eff = np.clip(cos_eff, -1.0, 1.0)
    xi_eff = np.arccos(cos_eff) / T
    s_eff = np.sin(xi_eff * T)

    num_x = st * (np.sin(p1) * sa * cb + np.sin(p2) * sb * ca
                  + ct * (np.cos(p1) - np.cos(p2)) * sa * sb)
    num_y = st * (-np.cos(p1) * sa * cb - np.cos(p2) * sb * ca
                  + ct * (np.sin(p1) - np.sin(p2)) * sa * sb)
    num_z = ct * np.sin(xi * T) + st**2 * np.sin(p1 - p2) * sa * sb
    num = np.stack([num_x, num_y, num_z], axis=-1)

    degenerate = np.abs(s_eff) < EPS_DEG
    with np.errstate(divide="ignore", invalid="ignore"):
        n = num / s_eff[..., None]
    return xi_eff, n, degenerate


def _probe_direction(params: ChainParams, k: float, fallback: np.ndarray) -> np.ndarray:
    for dk in (-_PROBE_DK, _PROBE_DK):
        kk = k + dk
        if not 0 < kk < np.pi:
            continue
        _, n, deg = _closed_form(params, mode_geometry(params, kk))
        if not deg:
            return n / np.linalg.norm(n)
    return fallback


def _fill_degenerate(params, geom, n, degenerate):
    """Give degenerate modes the direction of their nearest regular neighbour.

    At U = +-I the axis is arbitrary; the lower-k neighbour wins ties, and a
    lone degenerate mode is probed at k -+ 1e-7.  If every candidate is
    degenerate the segment-1 field direction is used.
    """
    flat_n = n.reshape(-1, 3).copy()
    flat_deg = degenerate.reshape(-1)
    flat_k = np.asarray(geom.k, dtype=float).reshape(-1)
    flat_d1 = np.asarray(geom.d1_hat).reshape(-1, 3)
    good = np.flatnonzero(~flat_deg)
    for i in np.flatnonzero(flat_deg):
        if good.size:
            pos = np.searchsorted(good, i)
            left = good[pos - 1] if pos > 0 else None
            right = good[pos] if pos < good.size else None
            if left is not None and (right is None or i - left <= right - i):
                flat_n[i] = flat_n[left]
            else:
                flat_n[i] = flat_n[right]
        else:
            flat_n[i] = _probe_direction(params, flat_k[i], flat_d1[i])
    return flat_n.reshape(n.shape)


def effective_mode(params: ChainParams, geom: ModeGeometry) -> EffectiveMode:
    """Quasienergy, Bloch direction and spherical angles of h_eff per mode."""
    xi_eff, n, degenerate = _closed_form(params, geom)
    if np.any(degenerate):
        n = _fill_degenerate(params, geom, np.asarray(n), np.asarray(degenerate))
    # renormalise to absorb rounding (closed form is exact unit length analytically)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    theta_eff = np.arctan2(np.hypot(n[..., 0], n[..., 1]), n[..., 2])
    phi_eff = np.arctan2(n[..., 1], n[..., 0])
    return EffectiveMode(
        k=np.asarray(geom.k),
        xi_eff=np.asarray(xi_eff),
        n_eff=n,
        theta_eff=theta_eff,
        phi_eff=phi_eff,
        degenerate=np.asarray(degenerate),
    )


def overlaps(params: ChainParams, geom: ModeGeometry, eff: EffectiveMode) -> Overlaps:
    """Quench parameters u_{alpha,k} and Floquet quench fidelities F_{alpha,k}."""
    ch, sh = np.cos(geom.theta / 2), np.sin(geom.theta / 2)
    ce, se = np.cos(eff.theta_eff / 2), np.sin(eff.theta_eff / 2)
    out = []
    for phi in (params.phi1, params.phi2):
        u = ch * se * np.exp(-1j * eff.phi_eff) - 1j * sh * ce * np.exp(-1j * phi)
        F = np.abs(ce * ch + 1j * se * sh * np.exp(1j * (eff.phi_eff - phi)))
        out.append((u, np.minimum(F, 1.0)))
    (u1, F1), (u2, F2) = out
    return Overlaps(u1=u1, u2=u2, F1=F1, F2=F2)


@dataclass(frozen=True)
class Modes:
    """Everything the dynamics needs about a set of momenta."""

    params: ChainParams
    geom: ModeGeometry
    eff: EffectiveMode
    ov: Overlaps

    @property
    def k(self) -> np.ndarray:
        return self.geom.k

    def alignment(self, segment: int) -> np.ndarray:
        """n_eff . d_hat_alpha = F^2 - |u|^2 = 1 - 2|u|^2."""
        return np.sum(self.eff.n_eff * self.geom.d_hat(segment), axis=-1)

    def __getitem__(self, idx) -> "Modes":
        return Modes(self.params, self.geom[idx], self.eff[idx], self.ov[idx])


def floquet_modes(params: ChainParams, k) -> Modes:
    geom = mode_geometry(params, k)
    eff = effective_mode(params, geom)
    return Modes(params, geom, eff, overlaps(params, geom, eff))


def effective_ground_spinor(eff: EffectiveMode) -> np.ndarray:
    """|G_eff> in the pair basis, -1 eigenvector of n_eff . sigma.

    cos(theta_eff/2)|0> - exp(-i phi_eff) sin(theta_eff/2) a_k^+ a_-k^+ |0>.
    """
    ce, se = np.cos(eff.theta_eff / 2), np.sin(eff.theta_eff / 2)
    return np.stack([-np.exp(-1j * eff.phi_eff) * se, ce + 0j], axis=-1)


def segment_ground_spinor(params: ChainParams, geom: ModeGeometry, segment: int) -> np.ndarray:
    """|G_alpha> in the pair basis, -1 eigenvector of d_hat_alpha . sigma."""
    ch, sh = np.cos(geom.theta / 2), np.sin(geom.theta / 2)
    phi = params.phi(segment)
    return np.stack([-1j * np.exp(-1j * phi) * sh, ch + 0j], axis=-1)


def effective_annihilator(eff: EffectiveMode) -> np.ndarray:
    """Coefficients (on a_k, a_-k^+) of the quasiparticle that kills |G_eff>."""
    ce, se = np.cos(eff.theta_eff / 2), np.sin(eff.theta_eff / 2)
    return np.stack([ce + 0j, np.exp(-1j * eff.phi_eff) * se], axis=-1)
