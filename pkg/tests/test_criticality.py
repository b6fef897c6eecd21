import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from conftest import PI, chain_params, momenta, reference_params
from fdqpt.criticality import (
    SQRT_HALF,
    anticommutator_norm,
    critical_times,
    echo_minimum,
    fidelity_profile,
    fidelity_roots,
    find_fdqpts,
    formula_zeros,
    realized_modes,
)
from fdqpt.dynamics import segment_echo
from fdqpt.floquet import Overlaps, floquet_modes
from fdqpt.model import PAULI, ChainParams, dense_grid


def test_critical_times_single_candidate():
    assert critical_times(1.0, 1, PI, PI) == [pytest.approx(PI / 2)]


def test_critical_time_on_boundary_belongs_to_second_segment():
    # xi = 1, T1 = T2 = pi/2: the zero at pi/2 = T1 comes from n = 0 (segment 1)
    # and n = -1 (segment 2); only the second window contains it
    assert critical_times(1.0, 1, PI / 2, PI / 2) == []
    assert critical_times(1.0, 2, PI / 2, PI / 2) == [PI / 2]
    # rounding-level offsets are snapped the same way
    assert critical_times(1.0 + 1e-13, 2, PI / 2, PI / 2) == [PI / 2]


@given(st.floats(0.05, 5.0), st.floats(0.1, 2 * PI), st.floats(0.1, 2 * PI), st.sampled_from([1, 2]))
def test_critical_times_are_phase_zeros(xi, T1, T2, seg):
    T = T1 + T2
    lo, hi = (0.0, T1) if seg == 1 else (T1, T)
    times = critical_times(xi, seg, T1, T2)
    for t in times:
        s = t if seg == 1 else t - T
        assert abs(np.exp(-2j * xi * s) + 1) < 1e-10
        assert lo <= t < hi
    # complete: brute-force enumeration over a wide range of n
    offset = 0.0 if seg == 1 else T
    brute = [(2 * n + 1) * PI / (2 * xi) + offset for n in range(-2000, 2000)]
    brute = [t for t in brute if lo + 1e-9 * T < t < hi - 1e-9 * T]
    assert len([t for t in times if lo + 1e-9 * T < t < hi - 1e-9 * T]) == len(brute)


def test_critical_times_need_positive_gap():
    with pytest.raises(ValueError):
        critical_times(0.0, 1, 1.0, 1.0)


def test_rejected_root_has_no_window_time():
    p = reference_params(3)
    roots = [k for k, _ in fidelity_roots(p, 1)]
    k = min(roots, key=lambda k: abs(k / PI - 0.916))
    assert k / PI == pytest.approx(0.916, abs=1e-3)
    xi = float(floquet_modes(p, k).geom.xi)
    assert critical_times(xi, 1, p.T1, p.T2) == []
    # the formula still has zeros, just outside [0, T1)
    assert formula_zeros(xi, 1, p.T1, p.T2)


@pytest.mark.parametrize("n, seg, expect", [(3, 1, 0.916), (4, 2, 0.905)])
def test_fidelity_profile_crossings(n, seg, expect):
    p = reference_params(n)
    prof = fidelity_profile(p, dense_grid(4001))
    F = prof.F(seg)
    assert np.all((F >= 0) & (F <= 1))
    near = np.abs(prof.ks / PI - expect) < 0.002
    f = F[near] - SQRT_HALF
    assert np.any(f[:-1] * f[1:] < 0)


def test_echo_minimum_limits():
    ov = Overlaps(u1=np.array(SQRT_HALF + 0j), u2=np.array(0j), F1=np.array(SQRT_HALF), F2=np.array(1.0))
    assert float(echo_minimum(ov, 1)) == pytest.approx(0.0, abs=1e-15)
    assert float(echo_minimum(ov, 2)) == 1.0


@given(chain_params(), momenta(), st.sampled_from([1, 2]))
def test_echo_minimum_is_unconstrained_time_minimum(p, k, seg):
    m = floquet_modes(p, k)
    xi = float(m.geom.xi)
    assume(xi > 1e-2)
    # L_alpha(t) has period pi/xi in t; scan one period and polish
    ts = np.linspace(0, PI / xi, 4001)
    vals = segment_echo(m, seg, ts)
    i = int(np.argmin(vals))
    res = minimize_scalar(lambda t: float(segment_echo(m, seg, t)),
                          bounds=(ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]),
                          method="bounded", options={"xatol": 1e-12})
    assert float(echo_minimum(m.ov, seg)) == pytest.approx(min(res.fun, vals[i]), abs=1e-8)


def test_equal_flux_has_no_fdqpts():
    assert find_fdqpts(ChainParams(lam=0.6, phi1=0.4, phi2=0.4)) == []


def test_critical_mode_invariants(reference_set):
    _, p = reference_set
    for m in find_fdqpts(p):
        assert m.fidelity_residual < 1e-10
        assert m.echo_min < 1e-9
        lo, hi = (0.0, p.T1) if m.segment == 1 else (p.T1, p.T)
        assert m.realized == bool(m.critical_times)
        for t in m.critical_times:
            assert lo <= t < hi
        assert set(m.critical_times) <= set(m.candidate_times) | {p.T1}


def test_results_sorted_by_momentum(reference_set):
    _, p = reference_set
    ks = [m.k_c for m in find_fdqpts(p)]
    assert ks == sorted(ks)


def _window_minimum(m, seg, lo, hi):
    ts = np.linspace(lo, hi, 20001)[:-1]
    vals = segment_echo(m, seg, ts)
    i = int(np.argmin(vals))
    res = minimize_scalar(lambda t: float(segment_echo(m, seg, t)),
                          bounds=(ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]),
                          method="bounded", options={"xatol": 1e-13})
    return min(float(res.fun), float(vals[i]))


@settings(max_examples=25)
@given(chain_params())
def test_realized_iff_echo_vanishes_in_window(p):
    modes = find_fdqpts(p, grid_resolution=2001)
    for c in modes:
        m = floquet_modes(p, c.k_c)
        lo, hi = (0.0, p.T1) if c.segment == 1 else (p.T1, p.T)
        # a zero sitting on a window edge makes the infimum an edge artefact
        edge = 1e-3 * p.T
        assume(all(min(abs(t - lo), abs(t - hi)) > edge for t in c.candidate_times))
        assert c.realized == (_window_minimum(m, c.segment, lo, hi) < 1e-8)


def test_realized_iff_echo_vanishes_in_window_reference_sets(reference_set):
    _, p = reference_set
    for c in find_fdqpts(p):
        m = floquet_modes(p, c.k_c)
        lo, hi = (0.0, p.T1) if c.segment == 1 else (p.T1, p.T)
        if c.realized:
            assert float(segment_echo(m, c.segment, np.array(c.critical_times)).max()) < 1e-8
        else:
            # keep clear of T1, where a segment-2 zero may sit
            assert _window_minimum(m, c.segment, lo, hi - 1e-3 * p.T) > 1e-8


def test_fidelity_root_is_orthogonality_scan(reference_set):
    _, p = reference_set
    ks = dense_grid(4001).ks
    m = floquet_modes(p, ks)
    for seg in (1, 2):
        F = m.ov.F(seg)
        nd = m.alignment(seg)
        np.testing.assert_allclose(F**2, (1 + nd) / 2, atol=1e-12)
        # F >= 0, so F > sqrt(2)/2 exactly when n_eff . d_hat > 0
        clear = np.abs(nd) > 1e-12
        assert np.array_equal(np.sign(F - SQRT_HALF)[clear], np.sign(nd)[clear])


def test_anticommutator_of_orthogonal_fields_vanishes():
    rng = np.random.default_rng(5)
    a = rng.normal(size=3)
    b = np.cross(a, rng.normal(size=3))
    A, B = (np.einsum("i,ijk->jk", v, PAULI) for v in (a, b))
    assert np.linalg.norm(A @ B + B @ A) < 1e-12


@given(chain_params(), momenta(), st.sampled_from([1, 2]))
def test_anticommutator_norm_identity(p, k, seg):
    m = floquet_modes(p, k)
    expected = 2 * math.sqrt(2) * float(m.eff.xi_eff) * float(m.geom.xi) * abs(float(m.alignment(seg)))
    assert anticommutator_norm(p, k, seg) == pytest.approx(expected, abs=1e-12, rel=1e-10)


def test_anticommutator_small_at_realized_roots(reference_set):
    _, p = reference_set
    for c in realized_modes(find_fdqpts(p)):
        m = floquet_modes(p, c.k_c)
        scale = 2 * float(m.eff.xi_eff) * float(m.geom.xi)
        assert anticommutator_norm(p, c.k_c, c.segment) < 1e-6 * scale


def test_refinement_keeps_realized_modes(reference_set):
    _, p = reference_set
    coarse = realized_modes(find_fdqpts(p, 2001))
    for fine_res in (4001, 8001):
        fine = realized_modes(find_fdqpts(p, fine_res))
        for c in coarse:
            assert any(f.segment == c.segment and abs(f.k_c - c.k_c) < 1e-9 for f in fine)


@settings(max_examples=10)
@given(st.floats(-10, 10))
def test_realized_sets_invariant_under_flux_shift(c):
    for n in (1, 4):
        p = reference_params(n)
        a = [(round(m.k_c, 9), m.segment) for m in realized_modes(find_fdqpts(p))]
        b = [(round(m.k_c, 9), m.segment) for m in realized_modes(find_fdqpts(p.shifted(c)))]
        assert a == b


def test_folding_jump_is_not_a_root():
    # set 1 has a quasienergy fold near k = 0.597 pi where F jumps across sqrt(2)/2
    p = reference_params(1)
    ks = dense_grid(4001).ks
    F = floquet_modes(p, ks).ov.F1
    f = F - SQRT_HALF
    jumps = ks[:-1][(f[:-1] * f[1:] < 0) & (np.abs(np.diff(F)) > 1e-2)]
    assert np.any(np.abs(jumps / PI - 0.5967) < 1e-3)
    roots = [k for k, _ in fidelity_roots(p, 1)]
    assert all(abs(k / PI - 0.5967) > 1e-2 for k in roots)
