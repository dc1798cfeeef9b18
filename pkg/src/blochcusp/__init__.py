"""Quench dynamics of a tight-binding ring with a single defect site.

Three routes to the same observables: exact diagonalization of the ring
(:mod:`.exact`), a finite truncated and linearized level model
(:mod:`.truncated`) and its closed-form infinite-level limit (:mod:`.ideal`).
:mod:`.analysis` turns trajectories into cusp and comparison reports.
"""

from .errors import ConfigError, NumericalError
from .lattice import (
    Basis,
    IdealModelParams,
    LatticeConfig,
    StateVector,
    TimeSeries,
    basis_change,
    bloch_state,
    derive_params,
    wannier_state,
)
from .exact import (
    Representation,
    build_hamiltonian,
    evolve_spectral,
    evolve_stepper,
    quench_observables,
)
from .truncated import build_truncated, evolve_truncated, m_window_bounds
from .ideal import psi0_closed_form, right_mover_closed_form, s_closed_form, sinc_sum_identity
from .analysis import compare_series, detect_cusps, envelope_residual

__version__ = "0.1.0"
