"""Dense Hermitian eigendecomposition and the propagator built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError

RESIDUAL_TOL = 1e-10
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors as matrix columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def propagate(self, psi0: np.ndarray, times) -> np.ndarray:
        """Rows ``exp(-i H t) psi0`` for each ``t`` in ``times``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        coeffs = self.eigenvectors.conj().T @ psi0
        phases = np.exp(-1j * np.outer(times, self.eigenvalues))
        return (phases * coeffs) @ self.eigenvectors.T


def _degenerate_clusters(evals: np.ndarray):
    start = 0
    for i in range(1, evals.size + 1):
        if i == evals.size or evals[i] - evals[i - 1] > DEGENERACY_TOL * max(1.0, abs(evals[i])):
            if i - start > 1:
                yield start, i
            start = i


def decompose(matrix: np.ndarray, symmetry: np.ndarray | None = None) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix and verify the result.

    Within each degenerate cluster the eigenvectors are re-orthonormalized and,
    when ``symmetry`` (a Hermitian operator commuting with ``matrix``, e.g. a
    reflection) is given, rotated onto its eigenvectors so the splitting is
    canonical rather than solver dependent.

    Raises ``NumericalError`` if the residual or orthonormality check exceeds
    ``RESIDUAL_TOL``.
    """
    h = np.asarray(matrix)
    try:
        evals, evecs = scipy.linalg.eigh(h)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed on {h.shape} matrix: {exc}") from exc
    evecs = np.array(evecs, dtype=np.result_type(h.dtype, np.float64))

    for lo, hi in _degenerate_clusters(evals):
        block, _ = np.linalg.qr(evecs[:, lo:hi])
        if symmetry is not None:
            sub = block.conj().T @ symmetry @ block
            _, rot = np.linalg.eigh((sub + sub.conj().T) / 2)
            block = block @ rot
        evecs[:, lo:hi] = block

    resid = np.linalg.norm(h @ evecs - evecs * evals, axis=0).max(initial=0.0)
    ortho = np.abs(evecs.conj().T @ evecs - np.eye(evals.size)).max(initial=0.0)
    scale = max(1.0, float(np.abs(evals).max(initial=0.0)))
    if resid > RESIDUAL_TOL * scale or ortho > RESIDUAL_TOL:
        raise NumericalError(
            f"eigendecomposition check failed: max residual {resid:.3e}, "
            f"orthonormality defect {ortho:.3e} (size {evals.size})"
        )
    return SpectralDecomposition(evals, evecs)
