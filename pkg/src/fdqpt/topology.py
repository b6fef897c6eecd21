"""Pancharatnam geometric phase and the dynamical topological order parameter.

Within segment alpha the return amplitude is, up to a modulus,

    G_1 = cos(xi t) + i (n_eff . d1) sin(xi t)
    G_2 = e^{i xi_eff T} [cos(xi (t-T)) + i (n_eff . d2) sin(xi (t-T))]

so the total phase has an exact continuous lift in t and never needs
numerical unwrapping along the time axis.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .criticality import find_fdqpts, realized_times
from .dynamics import TimeGrid, _as_times, _outer, loschmidt_amplitude
from .floquet import Modes, floquet_modes
from .model import DEFAULT_DENSE_NK, ChainParams, dense_grid

log = logging.getLogger(__name__)

QUANTIZATION_TOL = 0.05
# |G| below this makes the total phase ill-conditioned
PHASE_MASK = 1e-6


class QuantizationWarning(RuntimeWarning):
    pass


def _lift(x, a):
    """Continuous branch of arg(cos x + i a sin x) with value 0 at x = 0."""
    return np.arctan(a * np.tan(x)) + np.sign(a) * np.pi * np.round(x / np.pi)


def total_phase(modes: Modes, t) -> np.ndarray:
    """Phase of G_k(t), continuous in t across [0, T) and across T1.

    Shape ``k.shape + t.shape``.  At an exact echo zero the phase has a pi
    jump; that is the singular point the DTOP detects.
    """
    p = modes.params
    t = _as_times(p, t)
    xi = _outer(modes.geom.xi, t)
    xe = _outer(modes.eff.xi_eff, t)
    a1 = _outer(modes.alignment(1), t)
    a2 = _outer(modes.alignment(2), t)
    phi1 = _lift(xi * t, a1)

    def seg2(tt):
        return xe * p.T + _lift(xi * (tt - p.T), a2)

    # shift segment 2 by the multiple of 2 pi that makes it meet segment 1 at T1
    m = np.round((_lift(xi * p.T1, a1) - seg2(p.T1)) / (2 * np.pi))
    phi2 = seg2(t) + 2 * np.pi * m
    return np.where(t < p.T1, phi1, phi2)


def dynamical_phase(modes: Modes, segment: int, t) -> np.ndarray:
    """xi_k (1 - 2|u_alpha|^2) t, the printed closed form for segment alpha."""
    t = np.asarray(t, dtype=float)
    slope = modes.geom.xi * (1 - 2 * np.abs(modes.ov.u(segment)) ** 2)
    return _outer(slope, t) * t


def geometric_phase(modes: Modes, t) -> np.ndarray:
    """Phi^G = Phi - Phi^D with the dynamical phase of the active segment."""
    p = modes.params
    t = _as_times(p, t)
    seg = np.where(t < p.T1, 1, 2)
    phid = np.where(seg == 1, dynamical_phase(modes, 1, t), dynamical_phase(modes, 2, t))
    return total_phase(modes, t) - phid


@dataclass(frozen=True)
class PhaseSeries:
    k: float
    times: np.ndarray
    total_phase: np.ndarray
    dynamical_phase: np.ndarray
    geometric_phase: np.ndarray


def phase_series(params: ChainParams, k: float, tgrid: TimeGrid | np.ndarray) -> PhaseSeries:
    ts = tgrid.samples if isinstance(tgrid, TimeGrid) else _as_times(params, tgrid)
    modes = floquet_modes(params, float(k))
    tot = total_phase(modes, ts)
    geo = geometric_phase(modes, ts)
    return PhaseSeries(k=float(k), times=ts, total_phase=tot, dynamical_phase=tot - geo,
                       geometric_phase=geo)


@dataclass(frozen=True)
class DtopSeries:
    times: np.ndarray
    nu: np.ndarray
    nu_rounded: np.ndarray
    quantization_error: np.ndarray
    # momenta dropped per time sample because |G| < PHASE_MASK
    n_skipped: np.ndarray

    def jumps(self) -> list[tuple[float, int]]:
        """(time, step) for every change of the rounded DTOP."""
        d = np.diff(self.nu_rounded)
        idx = np.flatnonzero(d)
        return [(float(self.times[i + 1]), int(d[i])) for i in idx]


def _winding(ks: np.ndarray, phase: np.ndarray, keep: np.ndarray) -> float:
    """(1/2 pi) int dk d(Phi^G)/dk for one time slice."""
    if keep.sum() < 2:
        return float("nan")
    if not keep.all():
        u = np.unwrap(phase[keep])
        u = np.interp(ks, ks[keep], u)
    else:
        u = np.unwrap(phase)
    return float(np.trapezoid(np.gradient(u, ks), ks)) / (2 * np.pi)


def dtop(params: ChainParams, tgrid: TimeGrid | np.ndarray, nk: int = DEFAULT_DENSE_NK,
         chunk: int = 128, check: bool = True) -> DtopSeries:
    """nu(t) on a dense midpoint k-grid of ``nk`` momenta.

    With ``check`` the plateaus are compared with the realized critical times
    of :func:`find_fdqpts` and a :class:`QuantizationWarning` is raised for
    non-integer values more than one time step away from all of them.
    """
    if nk < 256:
        raise ValueError(f"nk must be >= 256, got {nk}")
    ts = tgrid.samples if isinstance(tgrid, TimeGrid) else _as_times(params, tgrid)
    ks = dense_grid(nk).ks
    modes = floquet_modes(params, ks)
    nu = np.empty(ts.size)
    skipped = np.zeros(ts.size, dtype=int)
    for start in range(0, ts.size, chunk):
        sl = slice(start, start + chunk)
        pg = geometric_phase(modes, ts[sl])
        keep = np.abs(loschmidt_amplitude(modes, ts[sl])) >= PHASE_MASK
        for j in range(pg.shape[1]):
            nu[start + j] = _winding(ks, pg[:, j], keep[:, j])
            skipped[start + j] = int((~keep[:, j]).sum())
    rounded = np.rint(nu).astype(int)
    err = np.abs(nu - rounded)
    out = DtopSeries(times=ts, nu=nu, nu_rounded=rounded, quantization_error=err, n_skipped=skipped)
    if check:
        _check_quantization(params, out)
    return out


def _check_quantization(params: ChainParams, series: DtopSeries) -> None:
    ts = series.times
    step = float(np.max(np.diff(ts))) if ts.size > 1 else params.T
    tc = realized_times(find_fdqpts(params))
    bad = series.quantization_error >= QUANTIZATION_TOL
    if tc.size:
        far = np.min(np.abs(ts[:, None] - tc[None, :]), axis=1) > step
        bad &= far
    if np.any(bad):
        i = int(np.argmax(np.where(bad, series.quantization_error, -1)))
        msg = (f"DTOP not quantized at {int(bad.sum())} samples; worst nu={series.nu[i]:.6f} "
               f"at t={ts[i]:.6f} (critical times {np.round(tc, 6).tolist()})")
        log.warning(msg)
        warnings.warn(msg, QuantizationWarning, stacklevel=3)
