"""Bloch-sphere micromotion of rho_k(t) = (1 - d_hat_k(t) . sigma) / 2.

The vector starts at n_eff, precesses about d_hat_1 at angular rate 2 xi_k
until T1, then about d_hat_2 for the elapsed time tau = t - T1.  An FDQPT is
the instant it reaches the antipode -n_eff, since 1 + d_hat . n_eff = 2 L_k(t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .criticality import WINDOW_TOL
from .dynamics import TimeGrid, _as_times
from .floquet import Modes, floquet_modes
from .model import ChainParams

EVENT_TOL = 1e-6
EVENT_CANDIDATE = 1e-2


def rotate(v: np.ndarray, axis: np.ndarray, angle) -> np.ndarray:
    """Rodrigues rotation of ``v`` about unit ``axis``; broadcasts over angle."""
    angle = np.asarray(angle, dtype=float)[..., None]
    c, s = np.cos(angle), np.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * np.dot(axis, v) * (1 - c)


def _single(modes: Modes) -> Modes:
    if np.ndim(modes.k) != 0:
        raise ValueError("Bloch trajectories are computed one momentum at a time")
    return modes


def bloch_vector_at(modes: Modes, t) -> np.ndarray:
    """d_hat_k(t) for a single mode, shape ``t.shape + (3,)``."""
    m = _single(modes)
    p = m.params
    t = _as_times(p, t)
    xi = float(m.geom.xi)
    n = np.asarray(m.eff.n_eff, dtype=float)
    d1, d2 = np.asarray(m.geom.d1_hat), np.asarray(m.geom.d2_hat)
    at_t1 = rotate(n, d1, 2 * xi * p.T1)
    stage1 = rotate(n, d1, 2 * xi * t)
    stage2 = rotate(at_t1, d2, 2 * xi * np.maximum(t - p.T1, 0.0))
    return np.where((t < p.T1)[..., None], stage1, stage2)


@dataclass
class BlochTrajectory:
    modes: Modes
    times: np.ndarray
    vectors: np.ndarray
    events: list[float] = field(default_factory=list)

    @property
    def k(self) -> float:
        return float(self.modes.k)

    @property
    def n_eff(self) -> np.ndarray:
        return np.asarray(self.modes.eff.n_eff)

    def at(self, t) -> np.ndarray:
        return bloch_vector_at(self.modes, t)

    def antipodal_distance(self) -> np.ndarray:
        """1 + d_hat(t) . n_eff at every sample."""
        return 1 + self.vectors @ self.n_eff

    def segment(self) -> np.ndarray:
        return np.where(self.times < self.modes.params.T1, 1, 2)

    def events_in(self, segment: int) -> list[float]:
        T1 = self.modes.params.T1
        return [t for t in self.events if (t < T1) == (segment == 1)]


def trajectory(params: ChainParams, k: float, tgrid: TimeGrid | np.ndarray,
               find_events: bool = True) -> BlochTrajectory:
    ts = tgrid.samples if isinstance(tgrid, TimeGrid) else _as_times(params, tgrid)
    modes = floquet_modes(params, float(k))
    traj = BlochTrajectory(modes=modes, times=ts, vectors=bloch_vector_at(modes, ts))
    if find_events:
        traj.events = antiparallel_events(traj)
    return traj


def _gap(modes: Modes, t: float) -> float:
    # |d_hat + n_eff|^2 = 2 (1 + d_hat . n_eff), without cancellation near the antipode
    v = bloch_vector_at(modes, t) + modes.eff.n_eff
    return float(v @ v)


def antiparallel_events(traj: BlochTrajectory, tol: float = EVENT_TOL,
                        candidate: float = EVENT_CANDIDATE) -> list[float]:
    """Times where d_hat . n_eff < -1 + tol, refined by bounded minimisation.

    Each segment is scanned over its own half-open window so an event at T1
    is attributed to segment 2.
    """
    p = traj.modes.params
    ts = traj.times
    c = traj.antipodal_distance()
    t_hi = np.nextafter(p.T, 0)
    snap = WINDOW_TOL * p.T
    events: list[float] = []
    for lo, hi in ((0.0, p.T1), (p.T1, p.T)):
        idx = np.flatnonzero((ts >= lo) & (ts < hi))
        if idx.size == 0:
            continue
        cs = c[idx]
        for j, i in enumerate(idx):
            if cs[j] > candidate:
                continue
            if (j > 0 and cs[j - 1] < cs[j]) or (j + 1 < idx.size and cs[j + 1] < cs[j]):
                continue
            if j + 1 == idx.size and hi < p.T and _gap(traj.modes, hi) <= 2 * cs[j]:
                # still descending at T1: the minimum belongs to the next window
                continue
            a = ts[idx[j - 1]] if j > 0 else lo
            b = ts[idx[j + 1]] if j + 1 < idx.size else min(hi, t_hi)
            if _gap(traj.modes, ts[i]) == 0.0:
                t = float(ts[i])
            else:
                res = minimize_scalar(lambda x: _gap(traj.modes, x), bounds=(a, b),
                                      method="bounded", options={"xatol": 1e-13})
                t = float(res.x)
                # bounded search never probes an endpoint exactly
                for edge in (a, b):
                    if edge < hi and _gap(traj.modes, edge) < _gap(traj.modes, t):
                        t = float(edge)
            if abs(t - p.T1) <= snap:
                t = p.T1
            if not lo <= t < hi - snap:
                continue
            if 0.5 * _gap(traj.modes, t) >= tol:
                continue
            if any(abs(t - e) < 1e-9 for e in events):
                continue
            events.append(t)
    return sorted(events)
