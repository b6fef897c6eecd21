"""Floquet quench fidelity criterion and the segment-window filter.

A momentum k_c hosts an echo zero in segment alpha when

  (i)  F_{alpha,k_c} = sqrt(2)/2, equivalently n_eff . d_hat_alpha = 0, and
  (ii) one of its critical times falls inside that segment's window,
       [0, T1) for segment 1 and [T1, T) for segment 2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .floquet import Modes, Overlaps, floquet_modes
from .model import PAULI, ChainParams, MomentumGrid, dense_grid, kernel_hamiltonian

log = logging.getLogger(__name__)

SQRT_HALF = math.sqrt(0.5)
DEFAULT_ROOT_GRID = 4001
# |F - sqrt(2)/2| above this after bisection means the bracket held a jump
JUMP_RESIDUAL = 1e-8
TANGENT_RESIDUAL = 1e-8
# critical times this close to T1 are snapped onto the boundary
WINDOW_TOL = 1e-9


@dataclass(frozen=True)
class FidelityProfile:
    ks: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    degenerate: np.ndarray

    def F(self, segment: int) -> np.ndarray:
        return self.F1 if segment == 1 else self.F2

    def echo_minimum(self, segment: int) -> np.ndarray:
        return (1 - 2 * self.F(segment) ** 2) ** 2


@dataclass
class CriticalMode:
    k_c: float
    segment: int
    fidelity_residual: float
    critical_times: list[float]
    realized: bool
    echo_min: float
    tangent: bool = False
    # zeros of the segment formula anywhere in [0, T), in-window or not
    candidate_times: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "k_c": self.k_c,
            "k_c_over_pi": self.k_c / np.pi,
            "segment": self.segment,
            "fidelity_residual": self.fidelity_residual,
            "critical_times": list(self.critical_times),
            "candidate_times": list(self.candidate_times),
            "realized": self.realized,
            "echo_min": self.echo_min,
            "tangent": self.tangent,
        }


def fidelity_profile(params: ChainParams, grid: MomentumGrid | np.ndarray) -> FidelityProfile:
    ks = grid.ks if isinstance(grid, MomentumGrid) else np.asarray(grid, dtype=float)
    modes = floquet_modes(params, ks)
    if np.any(modes.eff.degenerate):
        log.debug("degenerate Floquet modes at k/pi = %s", ks[modes.eff.degenerate] / np.pi)
    return FidelityProfile(ks=ks, F1=modes.ov.F1, F2=modes.ov.F2, degenerate=modes.eff.degenerate)


def echo_minimum(ov: Overlaps, segment: int):
    """L*_{alpha,k} = (1 - 2 F^2)^2, the minimum over unconstrained t."""
    F = ov.F(segment)
    return (1 - 2 * F**2) ** 2


def _window(segment: int, T1: float, T: float) -> tuple[float, float]:
    return (0.0, T1) if segment == 1 else (T1, T)


def formula_zeros(xi: float, segment: int, T1: float, T2: float) -> list[float]:
    """All t in [0, T) where the segment-alpha phase factor e^{-2i xi s} = -1."""
    T = T1 + T2
    if xi <= 0:
        raise ValueError("critical times need xi > 0")
    offset = 0.0 if segment == 1 else T
    half = math.pi / (2 * xi)
    n_lo = math.floor(((0.0 - offset) / half - 1) / 2) - 1
    n_hi = math.ceil(((T - offset) / half - 1) / 2) + 1
    out = []
    for n in range(n_lo, n_hi + 1):
        t = (2 * n + 1) * half + offset
        if -WINDOW_TOL * T <= t < T - WINDOW_TOL * T:
            out.append(max(t, 0.0))
    return out


def critical_times(xi: float, segment: int, T1: float, T2: float) -> list[float]:
    """In-window critical times t_c = (2n+1) pi/(2 xi) [+ T for segment 2].

    Every integer n is considered.  A candidate within ``WINDOW_TOL * T`` of a
    window edge is snapped onto it, so a zero at T1 always counts for
    segment 2 and never for segment 1.
    """
    T = T1 + T2
    lo, hi = _window(segment, T1, T)
    tol = WINDOW_TOL * T
    out = []
    for t in formula_zeros(xi, segment, T1, T2):
        if lo - tol <= t < hi - tol:
            out.append(lo if abs(t - lo) <= tol else t)
    return sorted(out)


def _alignment(params: ChainParams, k: float, segment: int) -> float:
    return float(floquet_modes(params, k).alignment(segment))


def _bisect(f, a: float, b: float, fa: float, tol: float = 1e-15, maxiter: int = 200) -> float:
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        if b - a <= tol or m in (a, b):
            break
        fm = f(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _make_mode(params: ChainParams, k: float, segment: int, tangent: bool = False) -> CriticalMode:
    modes = floquet_modes(params, k)
    F = float(modes.ov.F(segment))
    xi = float(modes.geom.xi)
    times = critical_times(xi, segment, params.T1, params.T2)
    return CriticalMode(
        k_c=k,
        segment=segment,
        fidelity_residual=abs(F - SQRT_HALF),
        critical_times=times,
        realized=bool(times),
        echo_min=float(echo_minimum(modes.ov, segment)),
        tangent=tangent,
        candidate_times=formula_zeros(xi, segment, params.T1, params.T2),
    )


def fidelity_roots(params: ChainParams, segment: int, grid_resolution: int = DEFAULT_ROOT_GRID):
    """Momenta where F_alpha(k) crosses or touches sqrt(2)/2.

    Returns ``(k, tangent)`` pairs.  Sign changes of n_eff . d_hat_alpha are
    bisected; brackets whose refined residual stays large straddle a
    quasienergy folding point (n_eff flips sign) and are dropped.
    """
    ks = dense_grid(grid_resolution).ks
    modes = floquet_modes(params, ks)
    f = modes.alignment(segment)
    F = modes.ov.F(segment)
    roots: list[tuple[float, bool]] = []
    g = lambda k: _alignment(params, k, segment)  # noqa: E731

    exact = np.flatnonzero(f == 0)
    for i in exact:
        roots.append((float(ks[i]), False))
    cross = np.flatnonzero((f[:-1] * f[1:]) < 0)
    for i in cross:
        k = _bisect(g, ks[i], ks[i + 1], f[i])
        resid = abs(float(floquet_modes(params, k).ov.F(segment)) - SQRT_HALF)
        if resid > JUMP_RESIDUAL:
            log.debug("segment %d: sign change at k/pi=%.6f is a folding jump", segment, k / np.pi)
            continue
        roots.append((k, False))

    # touching roots: local minima of |F - sqrt(2)/2| without a sign change
    r = np.abs(F - SQRT_HALF)
    for i in range(1, ks.size - 1):
        if r[i] > 1e-2 or not (r[i] <= r[i - 1] and r[i] <= r[i + 1]):
            continue
        if f[i - 1] * f[i] <= 0 or f[i] * f[i + 1] <= 0:
            continue
        res = minimize_scalar(
            lambda k: abs(float(floquet_modes(params, k).ov.F(segment)) - SQRT_HALF),
            bounds=(ks[i - 1], ks[i + 1]), method="bounded", options={"xatol": 1e-13},
        )
        if res.fun < TANGENT_RESIDUAL:
            roots.append((float(res.x), True))
    roots.sort()
    return roots


def find_fdqpts(params: ChainParams, grid_resolution: int = DEFAULT_ROOT_GRID) -> list[CriticalMode]:
    """All fidelity roots of both segments with their window verdicts, sorted by k."""
    out = []
    for segment in (1, 2):
        for k, tangent in fidelity_roots(params, segment, grid_resolution):
            out.append(_make_mode(params, k, segment, tangent))
    out.sort(key=lambda m: (m.k_c, m.segment))
    return out


def realized_modes(modes: list[CriticalMode]) -> list[CriticalMode]:
    return [m for m in modes if m.realized]


def realized_times(modes: list[CriticalMode]) -> np.ndarray:
    return np.array(sorted(t for m in modes if m.realized for t in m.critical_times))


def anticommutator_norm(params: ChainParams, k: float, segment: int) -> float:
    """Frobenius norm of {h_eff,k, h_alpha,k}.

    Equals 2 sqrt(2) xi_eff xi_k |n_eff . d_hat_alpha|, which vanishes exactly
    at the fidelity roots.
    """
    m: Modes = floquet_modes(params, k)
    h_eff = float(m.eff.xi_eff) * np.einsum("i,ijk->jk", m.eff.n_eff, PAULI)
    h_a = kernel_hamiltonian(m.geom, segment)
    return float(np.linalg.norm(h_eff @ h_a + h_a @ h_eff))
