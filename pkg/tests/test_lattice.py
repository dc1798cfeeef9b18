import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blochcusp.errors import ConfigError
from blochcusp.lattice import (
    Basis,
    IdealModelParams,
    LatticeConfig,
    StateVector,
    TimeSeries,
    a_state,
    basis_change,
    bloch_amplitude,
    bloch_indices,
    bloch_state,
    derive_params,
    reduce_k,
    wannier_state,
    wannier_to_bloch,
)


def random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@st.composite
def rings(draw, max_n=64):
    n = draw(st.integers(5, max_n))
    k = draw(st.integers(1, (n - 1) // 2))
    j = draw(st.integers(0, n - 1))
    u = draw(st.floats(-5, 5, allow_nan=False))
    return LatticeConfig(n, k, u, j)


def test_bloch_indices_cover_one_zone():
    assert list(bloch_indices(5)) == [-2, -1, 0, 1, 2]
    assert list(bloch_indices(6)) == [-2, -1, 0, 1, 2, 3]
    # q in (-pi, pi]
    for n in (5, 6, 101):
        q = 2 * np.pi * bloch_indices(n) / n
        assert q.min() > -np.pi and q.max() <= np.pi


@given(st.integers(-10_000, 10_000), st.integers(3, 500))
def test_reduce_k_is_periodic(k, n):
    r = reduce_k(k, n)
    assert (r - k) % n == 0
    assert r in bloch_indices(n)


def test_config_reduces_k_and_rejects_bad_scenarios():
    cfg = LatticeConfig(301, 75 + 301, 2.0)
    assert cfg.k_init == 75
    for bad in [(10, 0, 1.0), (10, 5, 1.0), (10, 7, 1.0), (2, 1, 1.0), (10, 2, float("nan"))]:
        with pytest.raises(ConfigError):
            LatticeConfig(*bad)
    with pytest.raises(ConfigError):
        LatticeConfig(10, 2, 1.0, defect_site=10)


def test_derived_parameters():
    cfg = LatticeConfig(301, 75, 2.0)
    p = derive_params(cfg)
    q = 2 * math.pi * 75 / 301
    assert p.g == pytest.approx(2 / 301, rel=1e-15)
    assert p.delta == pytest.approx(4 * math.pi * math.sin(q) / 301, rel=1e-15)
    assert p.heisenberg_time == pytest.approx(301 / (2 * math.sin(q)), rel=1e-14)
    assert p.theta == pytest.approx(2 * math.atan(p.g * p.heisenberg_time), abs=1e-15)
    assert p.omega == pytest.approx(p.theta / p.heisenberg_time, rel=1e-15)
    # U = 2 at q_i = pi/2 gives gT = 1, theta = pi/2 for any N
    p2 = derive_params(LatticeConfig(400, 100, 2.0))
    assert p2.gT == pytest.approx(1.0, abs=1e-14)
    assert p2.theta == pytest.approx(math.pi / 2, abs=1e-14)


def test_from_coupling_reduced_units():
    p = IdealModelParams.from_coupling(0.5, 1.0)
    assert p.heisenberg_time == pytest.approx(2 * math.pi)
    assert p.g_over_delta == 0.5
    with pytest.raises(ConfigError):
        IdealModelParams.from_coupling(0.5, 0.0)


def test_fft_matches_direct_summation():
    # independent oracle: explicit sum over sites of conj(<l|k>) psi_l
    rng = np.random.default_rng(3)
    for n in (7, 8, 31):
        psi = random_state(rng, n)
        direct = np.array([sum(np.conj(bloch_amplitude(l, k, n)) * psi[l] for l in range(n))
                           for k in bloch_indices(n)])
        np.testing.assert_allclose(wannier_to_bloch(psi), direct, atol=1e-13)


def test_bloch_states_orthonormal_by_direct_summation():
    n = 12
    ks = bloch_indices(n)
    gram = np.array([[sum(np.conj(bloch_amplitude(l, a, n)) * bloch_amplitude(l, b, n) for l in range(n))
                      for b in ks] for a in ks])
    np.testing.assert_allclose(gram, np.eye(n), atol=1e-13)


def test_bloch_amplitude_large_phase_precision():
    n = 100_003
    assert abs(bloch_amplitude(n - 1, n - 1, n) - bloch_amplitude(1, 1, n)) < 1e-15


@settings(max_examples=40, deadline=None)
@given(rings(), st.integers(0, 2**32 - 1))
def test_wannier_bloch_round_trip(cfg, seed):
    rng = np.random.default_rng(seed)
    psi = StateVector(Basis.WANNIER, random_state(rng, cfg.n_sites))
    back = basis_change(basis_change(psi, Basis.BLOCH, cfg), Basis.WANNIER, cfg)
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(rings(), st.integers(0, 2**32 - 1))
def test_apm_round_trip_inside_window(cfg, seed):
    m = cfg.max_window
    if m < 0:
        return
    rng = np.random.default_rng(seed)
    amps = random_state(rng, 2 * (2 * m + 1))
    a = StateVector(Basis.APLUSMINUS, amps, window=m)
    bloch = basis_change(a, Basis.BLOCH, cfg)
    again = basis_change(bloch, Basis.APLUSMINUS, cfg, window=m)
    np.testing.assert_allclose(again.amplitudes, amps, atol=1e-12)
    wann = basis_change(a, Basis.WANNIER, cfg)
    np.testing.assert_allclose(basis_change(wann, Basis.APLUSMINUS, cfg, window=m).amplitudes, amps, atol=1e-12)


def test_a_states_are_even_and_odd_about_defect():
    cfg = LatticeConfig(41, 10, 1.0, defect_site=7)
    n = cfg.n_sites
    for parity in (1, -1):
        w = basis_change(a_state(cfg, 2, parity), Basis.WANNIER, cfg).amplitudes
        reflected = w[(2 * cfg.defect_site - np.arange(n)) % n]
        np.testing.assert_allclose(reflected, parity * w, atol=1e-13)
    # odd states vanish on the defect site, so the potential cannot act on them
    odd = basis_change(a_state(cfg, 0, -1), Basis.WANNIER, cfg).amplitudes
    assert abs(odd[cfg.defect_site]) < 1e-14


def test_apm_rejects_weight_outside_window():
    cfg = LatticeConfig(41, 10, 1.0)
    with pytest.raises(ValueError, match="outside"):
        basis_change(bloch_state(41, 1), Basis.APLUSMINUS, cfg, window=2)
    with pytest.raises(ValueError):
        basis_change(bloch_state(41, 10), Basis.APLUSMINUS, cfg, window=cfg.max_window + 1)


def test_state_vector_validation():
    with pytest.raises(ValueError, match="normalized"):
        StateVector(Basis.WANNIER, np.ones(4))
    s = wannier_state(4, 1)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 1.0
    with pytest.raises(ValueError):
        basis_change(s, Basis.WANNIER, LatticeConfig(5, 1, 0.0))
    with pytest.raises(ValueError):
        basis_change(s, Basis.BLOCH, LatticeConfig(5, 1, 0.0))


def test_time_series_validation():
    with pytest.raises(ValueError):
        TimeSeries([0, 1, 1], [0, 0, 0])
    with pytest.raises(ValueError):
        TimeSeries([0, 1], [0, 0, 0])
    assert TimeSeries(np.linspace(0, 1, 11), np.zeros(11)).is_uniform()
    assert not TimeSeries([0, 1, 3], [0, 0, 0]).is_uniform()
