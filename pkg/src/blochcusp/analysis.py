"""Cusp detection and comparison metrics for sampled trajectories.

The cusp detector flags samples where the magnitude of the discrete second
difference is a local maximum and exceeds ``kappa`` times its median over the
series. Between cusps the observables are smooth (quadratic or linear), so
their second difference at stencil reach L is O(L^2), while a slope jump
contributes O(L). The reach is fixed in units of the Heisenberg period, so
the verdict does not depend on how finely the series was sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import IdealModelParams, TimeSeries

DEFAULT_KAPPA = 5.0
MIN_SAMPLES_PER_PERIOD = 40
DEFAULT_SCALE = 0.1
DEFAULT_SEPARATION = 0.4
# second differences below this fraction of the series scale are treated as rounding noise
NOISE_FLOOR = 1e-9


@dataclass
class CuspReport:
    cusp_times: list[float] = field(default_factory=list)
    spacings: list[float] = field(default_factory=list)
    tip_values: list[float] = field(default_factory=list)
    envelope_residuals: list[float] = field(default_factory=list)
    indices: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.cusp_times)

    @property
    def mean_spacing(self) -> float:
        return float(np.mean(self.spacings)) if self.spacings else math.nan

    @property
    def fundamental_spacing(self) -> float:
        """Common period of the cusp train when some cusps were too faint to detect.

        Each spacing is assigned an integer multiple of the smallest one and
        the period is the least-squares fit ``sum(spacings) / sum(multiples)``.
        """
        if not self.spacings:
            return math.nan
        s = np.asarray(self.spacings)
        mult = np.maximum(1, np.round(s / s.min()))
        return float(s.sum() / mult.sum())


@dataclass
class ComparisonReport:
    max_abs_error: float
    rms_error: float
    per_period: list[tuple[float, float]] = field(default_factory=list)


def envelope(params: IdealModelParams, t, sign: int):
    """``(1 + sign cos(omega t)) / 2``."""
    return (1.0 + sign * np.cos(params.omega * np.asarray(t))) / 2.0


def _real_values(series: TimeSeries) -> np.ndarray:
    v = series.values
    if np.iscomplexobj(v):
        if np.abs(v.imag).max(initial=0.0) > 0:
            raise ValueError(f"{series.label or 'series'} is complex; pass a real observable")
        v = v.real
    return np.asarray(v, dtype=float)


def _refine(t: np.ndarray, x: np.ndarray, i: int) -> tuple[float, float]:
    """Intersect the lines through the two samples on either side of sample ``i``."""
    if i < 2 or i > t.size - 3:
        return float(t[i]), float(x[i])
    sl = (x[i - 1] - x[i - 2]) / (t[i - 1] - t[i - 2])
    sr = (x[i + 2] - x[i + 1]) / (t[i + 2] - t[i + 1])
    if sl == sr:
        return float(t[i]), float(x[i])
    tc = (x[i + 1] - x[i - 1] + sl * t[i - 1] - sr * t[i + 1]) / (sl - sr)
    if not t[i - 1] <= tc <= t[i + 1]:
        return float(t[i]), float(x[i])
    return float(tc), float(x[i - 1] + sl * (tc - t[i - 1]))


def second_difference(x: np.ndarray, lag: int, width: int) -> tuple[np.ndarray, int]:
    """``|y[i+lag] - 2 y[i] + y[i-lag]|`` of ``y``, the centred moving average of ``x`` over ``width`` samples.

    Only positions where both stencils fit are returned; the second value is
    the index in ``x`` of the first returned entry.
    """
    width = max(1, width) | 1
    if x.size < width + 2 * lag:
        return np.empty(0), 0
    y = np.convolve(x, np.ones(width) / width, mode="valid") if width > 1 else x
    d2 = np.abs(y[2 * lag:] - 2.0 * y[lag:-lag] + y[:-2 * lag])
    return d2, width // 2 + lag


def detect_cusps(series: TimeSeries, params: IdealModelParams, kappa: float = DEFAULT_KAPPA,
                 scale: float = DEFAULT_SCALE, min_separation: float = DEFAULT_SEPARATION,
                 refine: bool = False, envelope_sign: int | None = None) -> CuspReport:
    """Locate slope discontinuities in a uniformly sampled real series.

    Parameters
    ----------
    series : TimeSeries
        Uniform grid with at least 40 samples per Heisenberg period.
    params : IdealModelParams
        Supplies the Heisenberg period T that sets the sampling check, the
        resolution scale and the separation.
    kappa : float
        Threshold multiplier on the median second-difference magnitude.
    scale : float
        Resolution in units of T. The series is averaged over a window of
        this length and differenced with a stencil of the same reach, which
        suppresses aliased fast ripple and looks past the small-scale
        rounding of finite-size cusps.
    min_separation : float
        Minimum distance between reported cusps, in units of T; the stronger
        candidate wins.
    refine : bool
        If True, cusp time and tip value come from intersecting straight
        lines through the raw samples on either side instead of the sample.
    envelope_sign : {+1, -1}, optional
        If given, fill ``envelope_residuals`` against ``(1 + sign cos wt)/2``.

    Returns an empty report when nothing exceeds the threshold. Tip values
    are read from the raw (unsmoothed) series.
    """
    if not series.is_uniform():
        raise ValueError("cusp detection needs a uniformly sampled series")
    t = series.times
    x = _real_values(series)
    if t.size < 3:
        return CuspReport()
    dt = t[1] - t[0]
    per_period = params.heisenberg_time / dt
    if per_period < MIN_SAMPLES_PER_PERIOD:
        raise ValueError(f"{per_period:.1f} samples per period; need >= {MIN_SAMPLES_PER_PERIOD}")
    lag = max(1, int(round(scale * per_period)))
    d2, offset = second_difference(x, lag, lag)
    if d2.size == 0:
        return CuspReport()
    sep = max(2, int(min_separation * per_period))

    floor = NOISE_FLOOR * max(float(np.abs(x).max()), np.finfo(float).tiny)
    threshold = max(kappa * float(np.median(d2)), floor)
    # an end sample cannot be confirmed as a peak: it may be the tail of a cusp just outside the window
    left = np.concatenate([[np.inf], d2[:-1]])
    right = np.concatenate([d2[1:], [np.inf]])
    cand = np.flatnonzero((d2 > threshold) & (d2 >= left) & (d2 >= right))

    chosen: list[int] = []
    for c in cand[np.argsort(-d2[cand], kind="stable")]:
        if all(abs(c - o) >= sep for o in chosen):
            chosen.append(int(c))
    idx = sorted(c + offset for c in chosen)

    report = CuspReport(indices=idx)
    for i in idx:
        tc, xc = _refine(t, x, i) if refine else (float(t[i]), float(x[i]))
        report.cusp_times.append(tc)
        report.tip_values.append(xc)
    report.spacings = [float(b - a) for a, b in zip(report.cusp_times, report.cusp_times[1:])]
    if envelope_sign is not None:
        report.envelope_residuals = [
            float(abs(v - envelope(params, tc, envelope_sign)))
            for tc, v in zip(report.cusp_times, report.tip_values)
        ]
    return report


def merge_cusp_times(reports, tolerance: float) -> list[float]:
    """Union of cusp times from several curves, fusing detections closer than ``tolerance``.

    A cusp that is faint in one observable is often sharp in another; fused
    detections keep the earliest time.
    """
    times = sorted(tc for rep in reports for tc in rep.cusp_times)
    merged: list[float] = []
    for tc in times:
        if not merged or tc - merged[-1] >= tolerance:
            merged.append(tc)
    return merged


def envelope_residual(report: CuspReport, params: IdealModelParams, sign: int) -> float:
    """Largest distance of a cusp tip from ``(1 + sign cos(omega t)) / 2``; 0.0 when there are no cusps."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not report.cusp_times:
        return 0.0
    tips = np.asarray(report.tip_values)
    return float(np.abs(tips - envelope(params, report.cusp_times, sign)).max())


def compare_series(a: TimeSeries, b: TimeSeries, period: float | None = None) -> ComparisonReport:
    """Max and rms of ``|a - b|`` on a shared time grid, optionally broken down per period."""
    if a.times.size != b.times.size or not np.allclose(a.times, b.times, rtol=1e-12, atol=1e-12):
        raise ValueError("series must share the same time grid")
    err = np.abs(np.asarray(a.values) - np.asarray(b.values))
    if err.size == 0:
        return ComparisonReport(0.0, 0.0)
    report = ComparisonReport(float(err.max()), float(np.sqrt(np.mean(err**2))))
    if period:
        r = np.floor(a.times / period + 1e-12).astype(int)
        for k in np.unique(r):
            e = err[r == k]
            report.per_period.append((float(e.max()), float(np.sqrt(np.mean(e**2)))))
    return report


def period_linear_r2(series: TimeSeries, params: IdealModelParams, fraction: float = 0.8) -> list[float]:
    """R^2 of a straight-line fit over the central ``fraction`` of every complete period."""
    t, x = series.times, _real_values(series)
    period = params.heisenberg_time
    margin = (1.0 - fraction) / 2.0 * period
    out = []
    for r in range(int(math.floor(t[-1] / period + 1e-9))):
        sel = (t >= r * period + margin) & (t <= (r + 1) * period - margin)
        if sel.sum() < 3:
            continue
        coef = np.polyfit(t[sel], x[sel], 1)
        resid = x[sel] - np.polyval(coef, t[sel])
        ss_tot = float(np.sum((x[sel] - x[sel].mean()) ** 2))
        out.append(1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0)
    return out


def rounding_width(series: TimeSeries, t_cusp: float, fit_span: float, gap: float) -> float:
    """Estimate the time scale over which a cusp is smoothed.

    Straight lines are fitted on ``[t_cusp - fit_span, t_cusp - gap]`` and
    ``[t_cusp + gap, t_cusp + fit_span]``. If the sampled curve misses the
    lines' intersection value by ``h`` at the cusp and the slopes differ by
    ``ds``, the width is ``2 h / |ds|`` (the scale parameter of a hyperbola
    with those asymptotes). Returns 0 for an exactly sharp corner.
    """
    t, x = series.times, _real_values(series)
    lsel = (t >= t_cusp - fit_span) & (t <= t_cusp - gap)
    rsel = (t >= t_cusp + gap) & (t <= t_cusp + fit_span)
    if lsel.sum() < 2 or rsel.sum() < 2:
        raise ValueError("not enough samples on both sides of the cusp")
    sl, il = np.polyfit(t[lsel], x[lsel], 1)
    sr, ir = np.polyfit(t[rsel], x[rsel], 1)
    if sl == sr:
        return 0.0
    tc = (ir - il) / (sl - sr)
    corner = sl * tc + il
    actual = float(np.interp(tc, t, x))
    return float(2.0 * abs(actual - corner) / abs(sl - sr))
