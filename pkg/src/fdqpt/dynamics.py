"""Micromotion within one period: return amplitudes, echoes and the rate function.

The initial state is the effective ground state, so the micromotion repeats
identically every period and only t in [0, T) is considered.  Arrays returned
by the amplitude functions have shape ``k.shape + t.shape``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import minimize

from .criticality import WINDOW_TOL
from .floquet import Modes, floquet_modes
from .model import DEFAULT_DENSE_NK, ChainParams, MomentumGrid, dense_grid

log = logging.getLogger(__name__)

DEFAULT_NT = 2000
ZERO_THRESHOLD = 1e-6
# Sampled local minima below this are refined; only refined values decide.
ZERO_CANDIDATE = 1e-2
_LOG_FLOOR = 1e-300


class DomainError(ValueError):
    """Time outside the micromotion window [0, T)."""


@dataclass(frozen=True)
class TimeGrid:
    samples: np.ndarray
    T1: float
    T: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("time grid must be a non-empty 1-D array")
        if np.any(np.diff(s) <= 0):
            raise ValueError("time samples must be strictly increasing")
        if s[0] < 0 or s[-1] >= self.T:
            raise DomainError("time samples must lie in [0, T)")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def t1_index(self) -> int:
        """Index of the first sample in segment 2."""
        return int(np.searchsorted(self.samples, self.T1, side="left"))

    def segment(self) -> np.ndarray:
        return np.where(self.samples >= self.T1, 2, 1)


def time_grid(params: ChainParams, nt: int = DEFAULT_NT, extra: Sequence[float] = ()) -> TimeGrid:
    """``nt`` uniform samples of [0, T) plus T1 and any ``extra`` times."""
    if nt < 2:
        raise ValueError(f"nt must be >= 2, got {nt}")
    T = params.T
    tol = 1e-12 * T
    base = np.arange(nt) * (T / nt)
    special = np.asarray([params.T1, *extra], dtype=float)
    special = np.unique(special[(special >= 0) & (special < T)])
    if special.size:
        # exact special times replace grid points they nearly coincide with
        near = np.min(np.abs(base[:, None] - special[None, :]), axis=1) <= tol
        base = base[~near]
    pts = np.sort(np.concatenate([base, special]))
    pts = pts[np.concatenate([[True], np.diff(pts) > tol])]
    return TimeGrid(pts, params.T1, T)


def _as_times(params: ChainParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= params.T):
        raise DomainError(f"t must lie in [0, T) = [0, {params.T})")
    return t


def _outer(a, t):
    a = np.asarray(a)
    return a.reshape(a.shape + (1,) * t.ndim)


def loschmidt_amplitude(modes: Modes, t) -> np.ndarray:
    """Closed-form return amplitude G_k(t) = <G_eff| U_k(t) |G_eff>.

    Segment 1: [1 + (e^{-2i xi t} - 1)|u1|^2] e^{i xi t}
    Segment 2: [1 + (e^{-2i xi (t-T)} - 1)|u2|^2] e^{i xi (t-T)} e^{i xi_eff T}
    """
    p = modes.params
    t = _as_times(p, t)
    xi = _outer(modes.geom.xi, t)
    xe = _outer(modes.eff.xi_eff, t)
    w1 = _outer(np.abs(modes.ov.u1) ** 2, t)
    w2 = _outer(np.abs(modes.ov.u2) ** 2, t)
    g1 = (1 + (np.exp(-2j * xi * t) - 1) * w1) * np.exp(1j * xi * t)
    s = t - p.T
    g2 = (1 + (np.exp(-2j * xi * s) - 1) * w2) * np.exp(1j * xi * s) * np.exp(1j * xe * p.T)
    return np.where(t < p.T1, g1, g2)


def mode_echo(modes: Modes, t) -> np.ndarray:
    """Per-mode Loschmidt echo |G_k(t)|^2 with rounding clipped to [0, 1]."""
    return np.clip(np.abs(loschmidt_amplitude(modes, t)) ** 2, 0.0, 1.0)


def segment_echo(modes: Modes, segment: int, t) -> np.ndarray:
    """L_{alpha,k}(t) = |1 + (e^{-2i xi s} - 1)|u_alpha|^2|^2 for any real t.

    Unlike :func:`mode_echo` the formula of one segment is used for every t,
    with s = t (segment 1) or s = t - T (segment 2).
    """
    t = np.asarray(t, dtype=float)
    xi = _outer(modes.geom.xi, t)
    w = _outer(np.abs(modes.ov.u(segment)) ** 2, t)
    s = t if segment == 1 else t - modes.params.T
    return np.abs(1 + (np.exp(-2j * xi * s) - 1) * w) ** 2


@dataclass(frozen=True)
class EchoRecord:
    k: float
    t: float
    amplitude: complex
    echo: float


@dataclass(frozen=True)
class EchoZero:
    k: float
    t: float
    echo: float
    segment: int


@dataclass
class EchoMap:
    ks: np.ndarray
    times: np.ndarray
    amplitude: np.ndarray
    echo: np.ndarray
    log_total: np.ndarray
    zeros: list = field(default_factory=list)

    def records(self) -> Iterator[EchoRecord]:
        for i, k in enumerate(self.ks):
            for j, t in enumerate(self.times):
                yield EchoRecord(float(k), float(t), complex(self.amplitude[i, j]), float(self.echo[i, j]))


def echo_map(params: ChainParams, grid: MomentumGrid | np.ndarray, tgrid: TimeGrid | np.ndarray,
             detect_zeros: bool = True) -> EchoMap:
    """Per-mode echo on the (k, t) lattice and the total echo in log form.

    ``log_total[j] = sum_k log L_k(t_j)``; the product itself underflows for
    long chains.
    """
    ks = grid.ks if isinstance(grid, MomentumGrid) else np.asarray(grid, dtype=float)
    ts = tgrid.samples if isinstance(tgrid, TimeGrid) else np.asarray(tgrid, dtype=float)
    modes = floquet_modes(params, ks)
    amp = loschmidt_amplitude(modes, ts)
    echo = np.clip(np.abs(amp) ** 2, 0.0, 1.0)
    log_total = np.sum(np.log(np.maximum(echo, _LOG_FLOOR)), axis=0)
    out = EchoMap(ks=ks, times=ts, amplitude=amp, echo=echo, log_total=log_total)
    if detect_zeros:
        out.zeros = find_echo_zeros(params, out)
    return out


def _echo_at(params: ChainParams, k: float, t: float) -> float:
    modes = floquet_modes(params, k)
    return float(mode_echo(modes, t))


def find_echo_zeros(params: ChainParams, emap: EchoMap, candidate: float = ZERO_CANDIDATE,
                    threshold: float = ZERO_THRESHOLD) -> list[EchoZero]:
    """Zeros of L_k(t) in the continuous (k, t) plane near sampled minima.

    Local minima of the sampled map below ``candidate`` are refined with a
    Nelder-Mead search on the closed form; a refined value below
    ``threshold`` counts as a zero.
    """
    echo = emap.echo
    if echo.shape[0] < 1 or echo.shape[1] < 1:
        return []
    local = (echo == minimum_filter(echo, size=3, mode="nearest")) & (echo < candidate)
    ks, ts = emap.ks, emap.times
    dk = np.pi / max(len(ks), 2)
    dt = params.T / max(len(ts), 2)
    t_hi = np.nextafter(params.T, 0)
    zeros: list[EchoZero] = []

    def objective(x):
        k = min(max(x[0], 1e-12), np.pi - 1e-12)
        t = min(max(x[1], 0.0), t_hi)
        return _echo_at(params, k, t)

    for i, j in zip(*np.nonzero(local)):
        x0 = np.array([ks[i], ts[j]])
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-16, "maxiter": 4000,
                                "initial_simplex": [x0, x0 + [dk, 0], x0 + [0, dt]]})
        k = float(min(max(res.x[0], 1e-12), np.pi - 1e-12))
        t = float(min(max(res.x[1], 0.0), t_hi))
        if abs(t - params.T1) <= WINDOW_TOL * params.T:
            t = params.T1
        val = _echo_at(params, k, t)
        if val >= threshold:
            continue
        if any(abs(z.k - k) < 1e-6 and abs(z.t - t) < 1e-6 for z in zeros):
            continue
        zeros.append(EchoZero(k=k, t=t, echo=val, segment=1 if t < params.T1 else 2))
    zeros.sort(key=lambda z: (round(z.k, 8), z.t))
    log.debug("echo zeros: %s", zeros)
    return zeros


@dataclass(frozen=True)
class RateSeries:
    times: np.ndarray
    values: np.ndarray
    nk: int


def rate_function(params: ChainParams, tgrid: TimeGrid | np.ndarray, nk: int = DEFAULT_DENSE_NK,
                  grid: MomentumGrid | None = None, chunk: int = 256) -> RateSeries:
    """g(t) = -int_0^pi dk/(2 pi) ln L_k(t).

    Uses the periodic trapezoid rule on the midpoint grid of ``nk`` momenta
    (or on ``grid`` if given, e.g. the finite-chain momenta, for which this
    equals -ln L(t) / L).  At a critical time the integrand has an integrable
    log singularity and the sum approaches the integral from below.
    """
    if grid is None:
        if nk < 64:
            raise ValueError(f"nk must be >= 64, got {nk}")
        grid = dense_grid(nk)
    ts = tgrid.samples if isinstance(tgrid, TimeGrid) else _as_times(params, tgrid)
    modes = floquet_modes(params, grid.ks)
    values = np.empty(ts.size)
    for start in range(0, ts.size, chunk):
        sl = slice(start, start + chunk)
        echo = mode_echo(modes, ts[sl])
        values[sl] = -np.sum(np.log(np.maximum(echo, _LOG_FLOOR)), axis=0) * grid.weight / (2 * np.pi)
    return RateSeries(times=ts, values=values, nk=len(grid))


CUSP_THRESHOLD = 5e-3


def _one_sided_slopes(t: np.ndarray, g: np.ndarray, i: int, w: int) -> tuple[float, float]:
    left = np.polyfit(t[i - w:i + 1] - t[i], g[i - w:i + 1], 2)[1]
    right = np.polyfit(t[i:i + w + 1] - t[i], g[i:i + w + 1], 2)[1]
    return float(left), float(right)


def cusp_scores(series: RateSeries, window: int = 5) -> np.ndarray:
    """|g'(t+) - g'(t-)| from quadratic fits on ``window`` samples each side.

    A kink gives the size of the slope jump; smooth curvature cancels in the
    fits, leaving a value that shrinks with the time step.  Samples within
    ``window`` of the ends score 0.
    """
    t, g = series.times, series.values
    out = np.zeros(t.size)
    for i in range(window, t.size - window):
        left, right = _one_sided_slopes(t, g, i, window)
        out[i] = abs(right - left)
    return out


def cusp_times(series: RateSeries, threshold: float = CUSP_THRESHOLD, window: int = 5) -> np.ndarray:
    """Times of isolated slope discontinuities of g(t)."""
    sc = cusp_scores(series, window)
    peaks = []
    for i in np.flatnonzero(sc > threshold):
        lo, hi = max(i - window, 0), min(i + window + 1, sc.size)
        if sc[i] == sc[lo:hi].max():
            peaks.append(series.times[i])
    return np.asarray(peaks)
