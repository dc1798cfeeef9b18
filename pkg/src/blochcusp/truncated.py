"""Finite truncated-and-linearized model in the even (A+) sector.

2M+1 levels ``n * delta`` (n = -M..M), every pair coupled with ``2g``; the
initial condition is ``psi_n(0) = delta_{n,0}``. Evolution goes through the
same dense eigendecomposition as the exact evolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import NumericalError
from .ideal import psi0_closed_form
from .lattice import IdealModelParams, LatticeConfig, derive_params
from .spectral import SpectralDecomposition, decompose

SECTOR_NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TruncatedModel:
    m_levels: int
    g: float
    delta: float

    def __post_init__(self):
        if int(self.m_levels) != self.m_levels or self.m_levels < 1:
            raise ValueError(f"M must be a positive integer, got {self.m_levels}")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.m_levels, self.m_levels + 1)

    @cached_property
    def matrix(self) -> np.ndarray:
        n = self.indices
        h = np.full((n.size, n.size), 2.0 * self.g)
        h[np.diag_indices(n.size)] += n * self.delta
        h.setflags(write=False)
        return h

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return decompose(self.matrix)


def build_truncated(params: IdealModelParams, m_levels: int) -> TruncatedModel:
    return TruncatedModel(int(m_levels), params.g, params.delta)


@dataclass(frozen=True, eq=False)
class PsiTrajectory:
    times: np.ndarray
    psi: np.ndarray
    s_values: np.ndarray

    def __post_init__(self):
        if self.psi.shape[0] != self.times.size or self.s_values.shape != self.times.shape:
            raise ValueError("trajectory arrays disagree in length")

    @property
    def m_levels(self) -> int:
        return (self.psi.shape[1] - 1) // 2

    @property
    def psi0(self) -> np.ndarray:
        return self.psi[:, self.m_levels]


def evolve_truncated_at(model: TruncatedModel, times) -> PsiTrajectory:
    times = np.asarray(times, dtype=float)
    start = np.zeros(model.indices.size)
    start[model.m_levels] = 1.0
    psi = model.spectrum.propagate(start, times)
    drift = np.abs(np.einsum("ij,ij->i", psi.conj(), psi).real - 1.0).max(initial=0.0)
    if drift > SECTOR_NORM_TOL:
        raise NumericalError(f"A+ sector norm drifted by {drift:.3e} (M={model.m_levels})")
    return PsiTrajectory(times, psi, psi.sum(axis=1))


def evolve_truncated(model: TruncatedModel, t_final: float, samples: int) -> PsiTrajectory:
    """Evolve from ``psi_n(0) = delta_{n,0}`` on ``samples`` equally spaced times in [0, t_final]."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    return evolve_truncated_at(model, np.linspace(0.0, t_final, samples))


def psi0_deviation(g_over_delta: float, m_levels: int, samples: int = 4001,
                   metric: str = "complex") -> float:
    """Max over one period of the distance between finite-M and closed-form ``psi_0``.

    Works in reduced units (delta = 1): the truncated dynamics in ``t/T``
    depends on ``g/delta`` alone. ``metric`` is ``"complex"`` for
    ``|psi0_M - psi0_inf|`` or ``"abs2"`` for ``| |psi0_M|^2 - |psi0_inf|^2 |``.
    """
    params = IdealModelParams.from_coupling(g_over_delta, 1.0)
    t = np.linspace(0.0, params.heisenberg_time, samples)
    finite = evolve_truncated_at(build_truncated(params, m_levels), t).psi0
    ideal = psi0_closed_form(params, t)
    if metric == "complex":
        return float(np.abs(finite - ideal).max())
    if metric == "abs2":
        return float(np.abs(np.abs(finite) ** 2 - np.abs(ideal) ** 2).max())
    raise ValueError(f"unknown metric {metric!r}")


class MWindow(NamedTuple):
    m_min: int | None
    m_max: int
    feasible: bool
    diagnostic: str


def linearization_error(cfg: LatticeConfig, m_levels: int) -> float:
    """Leading Taylor corrections to the linear dispersion at the window edge.

    ``|eps''| d^2 / 2 + |eps'''| d^3 / 6`` with ``d = 2 pi M / N``; the cubic
    term takes over at ``q_i = pi/2`` where ``eps''`` vanishes.
    """
    q = cfg.q_init
    d = 2.0 * math.pi * m_levels / cfg.n_sites
    return abs(math.cos(q)) * d**2 + abs(math.sin(q)) * d**3 / 3.0


def m_window_bounds(cfg: LatticeConfig, target_accuracy: float,
                    energy_tolerance: float | None = None, m_cap: int = 512) -> MWindow:
    """Range of truncation sizes M for which the ideal model should apply.

    ``m_min`` is the smallest M whose ``psi_0`` stays within
    ``target_accuracy`` (complex distance) of the closed form over one period,
    found by doubling then bisection, so it assumes the deviation decreases
    with M. It depends on ``g/delta`` only, hence not on N at fixed U and q_i.

    ``m_max`` is the largest M (at most ``cfg.max_window``) whose
    :func:`linearization_error` stays below ``energy_tolerance``, by default
    ``delta / 2``. That default shrinks like 1/N, so m_max grows like
    sqrt(N) (or N^(2/3) at q_i = pi/2, where only the cubic term is left);
    a fixed absolute tolerance makes it grow linearly in N.
    """
    params = derive_params(cfg)
    tol = params.delta / 2.0 if energy_tolerance is None else energy_tolerance
    m_max = 0
    while m_max < cfg.max_window and linearization_error(cfg, m_max + 1) < tol:
        m_max += 1

    ratio = params.g_over_delta

    def ok(m):
        return psi0_deviation(ratio, m) <= target_accuracy

    m_min = None
    hi = 1
    while hi <= m_cap and not ok(hi):
        hi *= 2
    if hi <= m_cap or ok(m_cap):
        hi = min(hi, m_cap)
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        m_min = hi

    if m_min is None:
        return MWindow(None, m_max, False,
                       f"psi_0 did not reach accuracy {target_accuracy} for M <= {m_cap}")
    if m_min > m_max:
        return MWindow(m_min, m_max, False,
                       f"m_min={m_min} exceeds m_max={m_max}: N={cfg.n_sites} too small for the ideal model")
    return MWindow(m_min, m_max, True, "ok")
