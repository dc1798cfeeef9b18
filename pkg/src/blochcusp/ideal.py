"""Closed-form dynamics of the ideal model (M -> infinity).

Infinitely many levels ``n * delta`` in the even sector, every pair coupled
with strength ``2g``. Writing ``t = r T + s`` with ``T = 2 pi / delta`` and
``s in [0, T)``, the collective amplitude ``S`` is constant within each
period and ``psi_0`` moves on a straight chord between points of the unit
circle, picking up the phase ``exp(-i theta)`` per period.

All functions accept a scalar or an array of times.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .lattice import IdealModelParams


class PeriodDecomposition(NamedTuple):
    r: int
    s: float


def _split(t, period: float):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("closed forms are defined for t >= 0")
    r = np.floor(t / period)
    s = t - r * period
    # rounding in t/T can leave s just below T (or just below 0); t = rT must land in period r
    guard = np.spacing(np.maximum(t, period))
    up = s >= period - guard
    r = np.where(up, r + 1, r)
    s = np.where(up, np.maximum(s - period, 0.0), s)
    down = s < 0
    r = np.where(down, r - 1, r)
    s = np.where(down, s + period, s)
    return r, s


def period_decompose(params: IdealModelParams, t: float) -> PeriodDecomposition:
    r, s = _split(t, params.heisenberg_time)
    return PeriodDecomposition(int(r), float(s))


def _maybe_scalar(x):
    return x.item() if np.ndim(x) == 0 else x


def psi0_closed_form(params: IdealModelParams, t):
    g, T = params.g, params.heisenberg_time
    r, s = _split(t, T)
    val = (1 - 2j * g * (s - T / 2)) / (1 + 1j * g * T) * np.exp(-1j * r * params.theta)
    return _maybe_scalar(val)


class SValue(NamedTuple):
    value: complex | np.ndarray
    at_boundary: bool | np.ndarray


def s_closed_form(params: IdealModelParams, t) -> SValue:
    """Collective amplitude ``S(t) = exp(-i r theta) / (1 + i g T)``.

    ``S`` jumps at every ``t = r T``; there the right limit is returned and
    ``at_boundary`` is set.
    """
    g, T = params.g, params.heisenberg_time
    r, s = _split(t, T)
    val = np.exp(-1j * r * params.theta) / (1 + 1j * g * T)
    return SValue(_maybe_scalar(val), _maybe_scalar(s == 0.0))


def psi_n_closed_form(params: IdealModelParams, n: int, t):
    if n == 0:
        raise ValueError("use psi0_closed_form for n = 0")
    g, T, d = params.g, params.heisenberg_time, params.delta
    r, s = _split(t, T)
    val = 2 * g / (n * d * (1 + 1j * g * T)) * (np.exp(-1j * n * d * s) - 1) * np.exp(-1j * r * params.theta)
    return _maybe_scalar(val)


def population_n(params: IdealModelParams, n: int, t):
    """Weight on ``|k_i + n>`` (equally on ``|-(k_i + n)>``), ``n != 0``."""
    g, T, d = params.g, params.heisenberg_time, params.delta
    t = np.asarray(t, dtype=float)
    val = 4 * g**2 * np.sin(n * d * t / 2) ** 2 / ((1 + (g * T) ** 2) * n**2 * d**2)
    return _maybe_scalar(val)


def populations_closed_form(params: IdealModelParams, t, n_values=(-3, -2, -1, 1, 2, 3)):
    """``(P_i, P_r, {n: P_n})`` of the ideal model."""
    psi0 = np.asarray(psi0_closed_form(params, t))
    p_i = np.abs(1 + psi0) ** 2 / 4
    p_r = np.abs(1 - psi0) ** 2 / 4
    p_n = {n: population_n(params, n, t) for n in n_values if n != 0}
    return _maybe_scalar(p_i), _maybe_scalar(p_r), p_n


def right_mover_closed_form(params: IdealModelParams, t):
    """Total right-mover population; linear in ``s`` inside each period."""
    g, T, th = params.g, params.heisenberg_time, params.theta
    r, s = _split(t, T)
    val = np.cos(r * th / 2) ** 2 - np.sin((r + 0.5) * th) * g * s / math.sqrt(1 + (g * T) ** 2)
    return _maybe_scalar(val)


def right_mover_series(params: IdealModelParams, t, n_max: int) -> float:
    """Direct partial sum ``(|1 + psi0|^2 + sum_{0<|n|<=n_max} |psi_n|^2) / 4`` at a single time."""
    if t < 0:
        raise ValueError("closed forms are defined for t >= 0")
    n = np.arange(1, n_max + 1)
    g, T, d = params.g, params.heisenberg_time, params.delta
    terms = 4 * g**2 * np.sin(n * d * float(t) / 2) ** 2 / ((1 + (g * T) ** 2) * n**2 * d**2)
    psi0 = psi0_closed_form(params, float(t))
    # |psi_n|^2 / 4 = P_n, and P_n = P_-n
    return float(abs(1 + psi0) ** 2 / 4 + 2 * math.fsum(terms))


def right_mover_tail_bound(params: IdealModelParams, n_max: int) -> float:
    """Upper bound on the omitted ``|n| > n_max`` part of :func:`right_mover_series`."""
    g, T, d = params.g, params.heisenberg_time, params.delta
    return 2 * 4 * g**2 / ((1 + (g * T) ** 2) * d**2 * n_max)


def sinc_sum_identity(alpha: float, n_max: int) -> float:
    """Partial sum of ``sin^2(n alpha) / (n alpha)^2`` over ``|n| <= n_max`` (the n = 0 term is 1).

    The full series equals ``pi / alpha`` for ``0 < alpha < pi``; the omitted
    tail is at most :func:`sinc_tail_bound`.
    """
    if not 0 < alpha < math.pi:
        raise ValueError(f"alpha must lie in (0, pi), got {alpha}")
    n = np.arange(1, int(n_max) + 1, dtype=float)
    terms = (np.sin(n * alpha) / (n * alpha)) ** 2
    return 1.0 + 2.0 * math.fsum(terms)


def sinc_tail_bound(alpha: float, n_max: int) -> float:
    return 2.0 / (alpha**2 * n_max)


def bounce_trajectory(params: IdealModelParams, n_periods: int) -> np.ndarray:
    """Chord endpoints ``psi_0(rT) = exp(-i r theta)`` for ``r = 0..n_periods``.

    Between consecutive endpoints ``psi_0`` runs along the straight chord at
    constant speed, like a ball bouncing elastically inside the unit circle.
    """
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    r = np.arange(n_periods + 1)
    return np.exp(-1j * r * params.theta)


_OBSERVABLES = ("P_i", "P_r", "abs2_psi0")


def one_sided_slopes(params: IdealModelParams, r: int, observable: str = "P_i") -> tuple[float, float]:
    """Analytic left and right time derivatives of an observable at ``t = r T`` (``r >= 1``).

    A nonzero difference marks a cusp.
    """
    if r < 1:
        raise ValueError("slopes are two-sided only for r >= 1")
    if observable not in _OBSERVABLES:
        raise ValueError(f"observable must be one of {_OBSERVABLES}")
    g, T, th = params.g, params.heisenberg_time, params.theta
    psi = np.exp(-1j * r * th)
    rate = -2j * g / (1 + 1j * g * T)
    d_left = rate * np.exp(-1j * (r - 1) * th)
    d_right = rate * psi

    def slope(dpsi):
        if observable == "P_i":
            return 0.5 * (np.conj(1 + psi) * dpsi).real
        if observable == "P_r":
            return -0.5 * (np.conj(1 - psi) * dpsi).real
        return 2.0 * (np.conj(psi) * dpsi).real

    return float(slope(d_left)), float(slope(d_right))
