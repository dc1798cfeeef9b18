"""Periodic tight-binding ring with a single quenched site.

Conventions used throughout the package:

* hopping amplitude is -1 and hbar = 1;
* Wannier states ``|l>``, l = 0..N-1, live on a ring;
* Bloch states ``<l|k> = exp(i q l) / sqrt(N)`` with ``q = 2 pi k / N``;
* Bloch indices are reduced to ``k in {-(N-1)//2, ..., N//2}`` so that
  ``q`` lies in ``(-pi, pi]``. Right movers are ``k = 1..N//2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

NORM_TOL = 1e-12


def bloch_indices(n_sites: int) -> np.ndarray:
    """Reduced Bloch indices in the order used for Bloch-basis vectors."""
    return np.arange(-((n_sites - 1) // 2), n_sites // 2 + 1)


def reduce_k(k: int, n_sites: int) -> int:
    k_min = -((n_sites - 1) // 2)
    return int((k - k_min) % n_sites + k_min)


def wave_vector(k: int, n_sites: int) -> float:
    return 2.0 * math.pi * reduce_k(k, n_sites) / n_sites


def dispersion(q):
    """Band energy ``-2 cos q`` of the clean ring (scalar or array)."""
    return -2.0 * np.cos(q)


def bloch_amplitude(l: int, k: int, n_sites: int) -> complex:
    """``<l|k>`` for site ``l`` and Bloch index ``k`` on an ``n_sites`` ring."""
    if not 0 <= l < n_sites:
        raise ValueError(f"site index {l} outside [0, {n_sites})")
    # reduce k*l first so large products keep full phase precision
    phase = 2.0 * math.pi * ((k * l) % n_sites) / n_sites
    return complex(math.cos(phase), math.sin(phase)) / math.sqrt(n_sites)


@dataclass(frozen=True)
class LatticeConfig:
    """Quench scenario: ring size, initial Bloch index, defect potential and site.

    ``k_init`` is stored reduced modulo ``n_sites``; the reduced wave vector
    must satisfy ``0 < q_i < pi`` (a right mover strictly inside the band).
    """

    n_sites: int
    k_init: int
    defect_strength: float
    defect_site: int = 0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise ConfigError(f"n_sites must be an integer >= 3, got {self.n_sites}")
        if int(self.k_init) != self.k_init:
            raise ConfigError(f"k_init must be an integer, got {self.k_init}")
        if int(self.defect_site) != self.defect_site or not 0 <= self.defect_site < self.n_sites:
            raise ConfigError(f"defect_site must lie in [0, {self.n_sites}), got {self.defect_site}")
        if not math.isfinite(self.defect_strength):
            raise ConfigError("defect_strength must be finite")
        n = int(self.n_sites)
        k = reduce_k(int(self.k_init), n)
        object.__setattr__(self, "n_sites", n)
        object.__setattr__(self, "k_init", k)
        object.__setattr__(self, "defect_site", int(self.defect_site))
        object.__setattr__(self, "defect_strength", float(self.defect_strength))
        # exact integer test: q = 0 or q = pi gives sin q = 0
        if k <= 0 or 2 * k >= n:
            raise ConfigError(
                f"k_init={k} (mod {n}) gives q_i = {wave_vector(k, n):.6g}; "
                "need 0 < q_i < pi (band bottom/top and left movers are rejected)"
            )

    @property
    def q_init(self) -> float:
        return wave_vector(self.k_init, self.n_sites)

    @property
    def max_window(self) -> int:
        """Largest M for which the R and L windows of 2M+1 Bloch states do not overlap."""
        return min(self.k_init - 1, (self.n_sites - 2 * self.k_init - 1) // 2)


@dataclass(frozen=True)
class IdealModelParams:
    g: float
    delta: float
    heisenberg_time: float
    theta: float
    omega: float
    q_init: float

    @classmethod
    def from_coupling(cls, g: float, delta: float, q_init: float = math.pi / 2) -> "IdealModelParams":
        """Build parameters directly from the coupling and the level spacing."""
        if not delta > 0:
            raise ConfigError(f"level spacing must be positive, got {delta}")
        period = 2.0 * math.pi / delta
        theta = 2.0 * math.atan(g * period)
        return cls(g=float(g), delta=float(delta), heisenberg_time=period,
                   theta=theta, omega=theta / period, q_init=float(q_init))

    @property
    def g_over_delta(self) -> float:
        return self.g / self.delta

    @property
    def gT(self) -> float:
        return self.g * self.heisenberg_time


def derive_params(cfg: LatticeConfig) -> IdealModelParams:
    """Coupling ``U/N``, linearized spacing ``4 pi sin(q_i)/N`` and the derived T, theta, omega."""
    q = cfg.q_init
    s = math.sin(q)
    if s <= 0.0:
        raise ConfigError(f"sin(q_i) = {s} <= 0; the linearized spacing vanishes")
    g = cfg.defect_strength / cfg.n_sites
    delta = 4.0 * math.pi * s / cfg.n_sites
    return IdealModelParams.from_coupling(g, delta, q_init=q)


class Basis(str, enum.Enum):
    WANNIER = "wannier"
    BLOCH = "bloch"
    APLUSMINUS = "a_pm"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized complex amplitudes over a labelled basis.

    In the ``APLUSMINUS`` basis ``window`` holds M and the amplitudes are
    ordered ``A+_{-M..M}`` followed by ``A-_{-M..M}``.
    """

    basis: Basis
    amplitudes: np.ndarray
    window: int | None = None
    norm_tol: float = field(default=NORM_TOL, repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "basis", Basis(self.basis))
        if amps.size == 0:
            raise ValueError("empty state vector")
        if self.basis is Basis.APLUSMINUS:
            if self.window is None or amps.size != 2 * (2 * self.window + 1):
                raise ValueError("A+- state needs window M with 2(2M+1) amplitudes")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > self.norm_tol:
            raise ValueError(f"state not normalized: |psi|^2 = {norm!r}")

    @property
    def basis_size(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def wannier_state(n_sites: int, site: int) -> StateVector:
    amps = np.zeros(n_sites, dtype=np.complex128)
    amps[site] = 1.0
    return StateVector(Basis.WANNIER, amps)


def bloch_state(n_sites: int, k: int) -> StateVector:
    ks = bloch_indices(n_sites)
    amps = np.zeros(n_sites, dtype=np.complex128)
    amps[reduce_k(k, n_sites) - ks[0]] = 1.0
    return StateVector(Basis.BLOCH, amps)


def a_state(cfg: LatticeConfig, n: int, parity: int, window: int | None = None) -> StateVector:
    """``|A_n^+>`` (parity=+1) or ``|A_n^->`` (parity=-1) in the A+- basis."""
    m = abs(n) if window is None else window
    if parity not in (1, -1) or abs(n) > m:
        raise ValueError("need parity in {+1, -1} and |n| <= window")
    amps = np.zeros(2 * (2 * m + 1), dtype=np.complex128)
    amps[(n + m) + (0 if parity == 1 else 2 * m + 1)] = 1.0
    return StateVector(Basis.APLUSMINUS, amps, window=m)


def wannier_to_bloch(psi: np.ndarray) -> np.ndarray:
    """Bloch amplitudes ``<k|psi>`` ordered by :func:`bloch_indices`; works on stacked rows."""
    psi = np.asarray(psi)
    n = psi.shape[-1]
    return np.fft.fft(psi, axis=-1, norm="ortho")[..., bloch_indices(n) % n]


def bloch_to_wannier(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c)
    n = c.shape[-1]
    full = np.empty_like(c, dtype=np.complex128)
    full[..., bloch_indices(n) % n] = c
    return np.fft.ifft(full, axis=-1, norm="ortho")


def _window_layout(cfg: LatticeConfig, window: int):
    if window < 0 or window > cfg.max_window:
        raise ValueError(
            f"A+- window M={window} invalid for N={cfg.n_sites}, k_i={cfg.k_init} "
            f"(need 0 <= M <= {cfg.max_window})"
        )
    n = cfg.n_sites
    k_min = -((n - 1) // 2)
    offs = np.arange(-window, window + 1)
    k_right = np.array([reduce_k(cfg.k_init + o, n) for o in offs])
    k_left = -k_right
    j = cfg.defect_site
    # phase that references each Bloch state to the defect site
    ph_right = np.exp(2j * np.pi * ((k_right * j) % n) / n)
    ph_left = np.conj(ph_right)
    return k_right - k_min, k_left - k_min, ph_right, ph_left


def _bloch_to_apm(c: np.ndarray, cfg: LatticeConfig, window: int) -> np.ndarray:
    ir, il, pr, pl = _window_layout(cfg, window)
    inside = np.zeros(c.size, dtype=bool)
    inside[ir] = inside[il] = True
    leak = float(np.sum(np.abs(c[~inside]) ** 2))
    if leak > NORM_TOL:
        raise ValueError(f"state has weight {leak:.3e} outside the A+- window M={window}")
    a = pr * c[ir]
    b = pl * c[il]
    return np.concatenate([(a + b), (a - b)]) / math.sqrt(2.0)


def _apm_to_bloch(amps: np.ndarray, cfg: LatticeConfig, window: int) -> np.ndarray:
    ir, il, pr, pl = _window_layout(cfg, window)
    size = 2 * window + 1
    plus, minus = amps[:size], amps[size:]
    c = np.zeros(cfg.n_sites, dtype=np.complex128)
    c[ir] = np.conj(pr) * (plus + minus) / math.sqrt(2.0)
    c[il] = np.conj(pl) * (plus - minus) / math.sqrt(2.0)
    return c


def basis_change(state: StateVector, target: Basis, cfg: LatticeConfig,
                 window: int | None = None) -> StateVector:
    """Re-express ``state`` in ``target``.

    The A+- basis pairs ``|R_n> = |k_i+n>`` with ``|L_n> = |-k_i-n>`` for
    ``|n| <= window`` and takes even/odd combinations about the defect site.
    ``window`` defaults to the state's own window or to ``cfg.max_window``.
    Converting into A+- raises ``ValueError`` if the state has weight outside
    the window.
    """
    target = Basis(target)
    if target is state.basis:
        raise ValueError(f"state is already in the {target.value} basis")
    if state.basis is not Basis.APLUSMINUS and state.basis_size != cfg.n_sites:
        raise ValueError(f"state has {state.basis_size} amplitudes, ring has {cfg.n_sites} sites")

    if state.basis is Basis.WANNIER:
        bloch = wannier_to_bloch(state.amplitudes)
    elif state.basis is Basis.BLOCH:
        bloch = state.amplitudes
    else:
        bloch = _apm_to_bloch(state.amplitudes, cfg, state.window)

    if target is Basis.BLOCH:
        return StateVector(Basis.BLOCH, bloch)
    if target is Basis.WANNIER:
        return StateVector(Basis.WANNIER, bloch_to_wannier(bloch))
    m = window if window is not None else (state.window if state.window is not None else cfg.max_window)
    return StateVector(Basis.APLUSMINUS, _bloch_to_apm(bloch, cfg, m), window=m)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled trajectory ``t -> value``."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size != t.size:
            raise ValueError(f"{self.label or 'series'}: {t.size} times but values of shape {v.shape}")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError(f"{self.label or 'series'}: times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        if self.times.size < 3:
            return True
        dt = np.diff(self.times)
        return bool(np.allclose(dt, dt.mean(), rtol=rtol, atol=0.0))
