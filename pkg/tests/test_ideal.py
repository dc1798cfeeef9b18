import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blochcusp import ideal
from blochcusp.analysis import detect_cusps, envelope_residual
from blochcusp.lattice import IdealModelParams, LatticeConfig, TimeSeries, derive_params

ratios = st.floats(0.01, 3.0)


def params_for(ratio, delta=1.0):
    return IdealModelParams.from_coupling(ratio * delta, delta)


def test_period_decompose_boundaries():
    p = params_for(0.3)
    T = p.heisenberg_time
    assert ideal.period_decompose(p, 0.0) == (0, 0.0)
    assert ideal.period_decompose(p, 3 * T) == (3, 0.0)
    r, s = ideal.period_decompose(p, 2.5 * T)
    assert r == 2 and s == pytest.approx(0.5 * T)
    # one ulp below rT still lands in period r
    assert ideal.period_decompose(p, np.nextafter(7 * T, 0)).r in (6, 7)
    with pytest.raises(ValueError):
        ideal.period_decompose(p, -1.0)


def test_theta_definition():
    for cfg in (LatticeConfig(401, 80, 1.5), LatticeConfig(301, 75, 2.0), LatticeConfig(201, 50, 12.0)):
        p = derive_params(cfg)
        assert abs(p.theta - 2 * math.atan(p.g * p.heisenberg_time)) < 1e-12


@settings(max_examples=60)
@given(ratios, st.floats(0.0, 20.0), st.integers(-3, 3).filter(lambda n: n != 0))
def test_revival_of_every_amplitude(ratio, t_over_T, n):
    p = params_for(ratio)
    T = p.heisenberg_time
    t = t_over_T * T
    twist = np.exp(-1j * p.theta)
    assert abs(ideal.psi0_closed_form(p, t + T) - ideal.psi0_closed_form(p, t) * twist) < 1e-12
    assert abs(ideal.psi_n_closed_form(p, n, t + T) - ideal.psi_n_closed_form(p, n, t) * twist) < 1e-12


@settings(max_examples=40)
@given(ratios, st.integers(1, 30))
def test_psi0_continuous_and_on_unit_circle_at_period_ends(ratio, r):
    p = params_for(ratio)
    T = p.heisenberg_time
    left = ideal.psi0_closed_form(p, r * T * (1 - 1e-13))
    right = ideal.psi0_closed_form(p, r * T)
    assert abs(left - right) < 1e-9
    assert abs(abs(right) - 1) < 1e-12
    assert abs(right - np.exp(-1j * r * p.theta)) < 1e-12


@given(ratios, st.floats(0.0, 10.0))
def test_psi0_stays_inside_unit_disk(ratio, x):
    p = params_for(ratio)
    assert abs(ideal.psi0_closed_form(p, x * p.heisenberg_time)) <= 1 + 1e-12


def test_psi0_moves_on_chord_at_constant_speed():
    p = params_for(0.4)
    T = p.heisenberg_time
    t = np.linspace(2 * T, 3 * T * (1 - 1e-12), 50)
    z = ideal.psi0_closed_form(p, t)
    a, b = ideal.bounce_trajectory(p, 3)[2:4]
    # every point is a convex combination of the two bounce endpoints, advancing linearly in s
    frac = (t - 2 * T) / T
    np.testing.assert_allclose(z, a + frac * (b - a), atol=1e-12)
    ends = ideal.bounce_trajectory(p, 10)
    np.testing.assert_allclose(np.abs(ends), 1.0)
    with pytest.raises(ValueError):
        ideal.bounce_trajectory(p, 0)


def test_s_jumps_at_period_boundaries():
    p = params_for(0.125)
    T = p.heisenberg_time
    val, flag = ideal.s_closed_form(p, 0.0)
    assert flag and val == pytest.approx(1 / (1 + 1j * p.gT))
    val, flag = ideal.s_closed_form(p, 0.5 * T)
    assert not flag
    vals, flags = ideal.s_closed_form(p, np.array([T, 1.5 * T]))
    assert list(flags) == [True, False]
    np.testing.assert_allclose(vals, np.exp(-1j * p.theta) / (1 + 1j * p.gT))
    # S(0) = 1 by definition, but the right limit is not 1
    assert abs(ideal.s_closed_form(p, 0.0).value - 1) > 0.1


@settings(max_examples=40)
@given(ratios, st.floats(0.0, 5.0), st.integers(1, 6))
def test_population_is_quarter_amplitude_squared(ratio, x, n):
    p = params_for(ratio, delta=0.03)
    t = x * p.heisenberg_time
    for m in (n, -n):
        amp = ideal.psi_n_closed_form(p, m, t)
        assert ideal.population_n(p, m, t) == pytest.approx(abs(amp) ** 2 / 4, abs=1e-13)
    with pytest.raises(ValueError):
        ideal.psi_n_closed_form(p, 0, t)


def test_pair_sum_rule():
    p = params_for(0.7)
    t = np.linspace(0, 4 * p.heisenberg_time, 97)
    p_i, p_r, p_n = ideal.populations_closed_form(p, t)
    psi0 = ideal.psi0_closed_form(p, t)
    np.testing.assert_allclose(p_i + p_r, (1 + np.abs(psi0) ** 2) / 2, atol=1e-14)
    assert set(p_n) == {-3, -2, -1, 1, 2, 3}
    # below one strictly inside each period, equal to one at its ends
    inside = (t / p.heisenberg_time) % 1 > 1e-9
    assert np.all((p_i + p_r)[inside] < 1)


@pytest.mark.parametrize("ratio,x", [(0.1, 0.3), (0.5, 1.7), (0.95, 2.25), (2.0, 4.6)])
def test_right_mover_closed_form_matches_direct_sum(ratio, x):
    # oracle: brute-force partial sum of |1 + psi0|^2 and |psi_n|^2 with a rigorous tail bound
    p = params_for(ratio, delta=0.02)
    t = x * p.heisenberg_time
    n_max = 200_000
    series = ideal.right_mover_series(p, t, n_max)
    tail = ideal.right_mover_tail_bound(p, n_max)
    closed = ideal.right_mover_closed_form(p, t)
    assert 0 <= closed - series <= tail + 1e-12


def test_right_mover_is_linear_within_periods():
    p = params_for(0.6)
    T = p.heisenberg_time
    s = np.linspace(0.05, 0.95, 10) * T
    for r in range(4):
        vals = ideal.right_mover_closed_form(p, r * T + s)
        assert np.abs(np.diff(vals, 2)).max() < 1e-12
        start = math.cos(r * p.theta / 2) ** 2
        assert ideal.right_mover_closed_form(p, r * T) == pytest.approx(start, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, math.pi / 2, 2.5])
def test_sinc_identity(alpha):
    n_max = 20_000
    total = ideal.sinc_sum_identity(alpha, n_max)
    assert abs(total - math.pi / alpha) <= ideal.sinc_tail_bound(alpha, n_max)


def test_sinc_identity_exact_at_half_pi():
    # only odd n contribute: 1 + 2 sum 4/(pi^2 n^2) over odd n = 1 + 8/pi^2 * pi^2/8 = 2
    assert ideal.sinc_sum_identity(math.pi / 2, 10**6) == pytest.approx(2.0, abs=1e-6)
    with pytest.raises(ValueError):
        ideal.sinc_sum_identity(math.pi, 10)
    with pytest.raises(ValueError):
        ideal.sinc_sum_identity(0.0, 10)


@pytest.mark.parametrize("obs", ["P_i", "P_r", "abs2_psi0"])
def test_one_sided_slopes_match_finite_differences(obs):
    p = params_for(0.3)
    T = p.heisenberg_time
    h = 1e-6 * T

    def f(t):
        psi = ideal.psi0_closed_form(p, t)
        return {"P_i": abs(1 + psi) ** 2 / 4, "P_r": abs(1 - psi) ** 2 / 4, "abs2_psi0": abs(psi) ** 2}[obs]

    for r in (1, 2, 5):
        left, right = ideal.one_sided_slopes(p, r, obs)
        tc = r * T
        assert (f(tc) - f(tc - h)) / h == pytest.approx(left, abs=1e-6)
        assert (f(tc + h) - f(tc)) / h == pytest.approx(right, abs=1e-6)
    assert ideal.one_sided_slopes(p, 3, "abs2_psi0")[0] != pytest.approx(ideal.one_sided_slopes(p, 3, "abs2_psi0")[1])
    with pytest.raises(ValueError):
        ideal.one_sided_slopes(p, 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 2.0))
def test_cusp_tips_lie_on_rabi_envelope(ratio):
    p = params_for(ratio)
    T = p.heisenberg_time
    t = np.linspace(0, 8 * T, 8 * 100 + 1)
    p_i, p_r, _ = ideal.populations_closed_form(p, t, ())
    for values, sign in ((p_i, 1), (p_r, -1)):
        rep = detect_cusps(TimeSeries(t, values), p)
        if len(rep):
            assert envelope_residual(rep, p, sign) < 1e-9


def test_no_coupling_is_trivial():
    p = IdealModelParams.from_coupling(0.0, 1.0)
    t = np.linspace(0, 3 * p.heisenberg_time, 13)
    np.testing.assert_allclose(ideal.psi0_closed_form(p, t), 1.0)
    np.testing.assert_allclose(ideal.right_mover_closed_form(p, t), 1.0)
