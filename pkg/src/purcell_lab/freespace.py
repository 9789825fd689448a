"""Exciton states, diagonalized decay channels, and radiation patterns.

Covers the cavity-free collective physics of a dipole-coupled chain: the
nearest-neighbor single-excitation eigenstates, the orthogonal transformation
that turns the collective decay matrix into independent damping channels, and
spatial maps of the radiated field intensity for a prepared coherence.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import radiation_intensity_kernel, symmetric_eigh
from .dipole import EmitterEnsemble, dipole_frame
from .errors import NumericalError, ValidationError

_MIN_KR = 1e-9


@dataclass(frozen=True)
class ExcitonState:
    """Single-excitation eigenstate of the nearest-neighbor chain Hamiltonian."""

    n: int
    m: int
    coeffs: np.ndarray


@dataclass(frozen=True)
class DecayChannels:
    """Independent damping channels of a collective decay matrix.

    ``lambdas`` holds the channel rates sorted descending and ``transform``
    the orthogonal matrix whose columns map emitter operators onto channel
    operators (``T.T @ Gamma @ T`` is diagonal).
    """

    lambdas: np.ndarray
    transform: np.ndarray


def exciton_state(n: int, m: int) -> ExcitonState:
    """Normalized coefficients ``sqrt(2/(n+1)) sin(pi m j / (n+1))``, j = 1..n."""
    if not 1 <= m <= n:
        raise ValidationError(f"exciton index m={m} outside 1..{n}")
    j = np.arange(1, n + 1)
    coeffs = math.sqrt(2.0 / (n + 1)) * np.sin(math.pi * m * j / (n + 1))
    return ExcitonState(n, m, coeffs)


def exciton_energy(n: int, m: int, omega_e: float, omega12: float) -> float:
    """Energy of state ``m``: ``omega_e + 2 omega12 cos(pi m / (n + 1))``."""
    if not 1 <= m <= n:
        raise ValidationError(f"exciton index m={m} outside 1..{n}")
    return omega_e + 2.0 * omega12 * math.cos(math.pi * m / (n + 1))


def diagonal_decay_channels(gamma_matrix: np.ndarray) -> DecayChannels:
    """Diagonalize a real symmetric decay matrix into independent channels."""
    gm = np.asarray(gamma_matrix, dtype=float)
    if gm.ndim != 2 or gm.shape[0] != gm.shape[1]:
        raise ValidationError("decay matrix must be square")
    scale = np.abs(gm).max() if gm.size else 0.0
    if gm.size and np.abs(gm - gm.T).max() > 1e-12 * max(scale, 1e-300):
        raise ValidationError("decay matrix must be symmetric")
    w, v, converged = symmetric_eigh(gm)
    if not converged:
        raise NumericalError("Jacobi eigensolver did not reach its off-diagonal tolerance")
    order = np.argsort(w)[::-1]
    w = w[order]
    v = v[:, order]
    # deterministic sign: largest-magnitude component of each channel positive
    for k in range(v.shape[1]):
        idx = np.argmax(np.abs(v[:, k]))
        if v[idx, k] < 0.0:
            v[:, k] = -v[:, k]
    return DecayChannels(w, v)


def exciton_coherence(state: ExcitonState) -> np.ndarray:
    """Single-excitation coherence matrix ``<S_i^dag S_j> = c_i c_j``."""
    return np.outer(state.coeffs, state.coeffs).astype(complex)


def radiation_intensity(ensemble: EmitterEnsemble, coherence: np.ndarray,
                        points: np.ndarray) -> np.ndarray:
    """Radiated intensity at observation points for a given coherence matrix.

    The value is the normally ordered field intensity up to the squared
    dipole-field prefactor (3 gamma / 4 mu)^2, i.e. arbitrary units with a
    fixed scale. Points closer than ``1e-9 / k_e`` to an emitter are skipped
    and reported as NaN.
    """
    coh = np.asarray(coherence, dtype=complex)
    n = ensemble.n
    if coh.shape != (n, n):
        raise ValidationError("coherence matrix shape must match the ensemble")
    if np.abs(coh - coh.conj().T).max() > 1e-10 * max(np.abs(coh).max(), 1e-300):
        raise ValidationError("coherence matrix must be Hermitian")
    if n and np.linalg.eigvalsh(0.5 * (coh + coh.conj().T)).min() < -1e-10 * max(np.abs(coh).max(), 1e-300):
        raise ValidationError("coherence matrix must be positive semidefinite")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 3 or not np.all(np.isfinite(pts)):
        raise ValidationError("points must be a finite (P, 3) array")
    frame = dipole_frame(ensemble.dipole)
    return radiation_intensity_kernel(pts, ensemble.positions, frame, ensemble.k_e,
                                      coh, _MIN_KR)


def rectangular_grid(xs: np.ndarray, ys: np.ndarray, z: float) -> np.ndarray:
    """Observation points of an x-y grid at fixed transverse offset z."""
    gx, gy = np.meshgrid(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float),
                         indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, float(z))])


def plane_integrated_intensity(intensity: np.ndarray, dx: float, dy: float) -> float:
    """Cell-sum approximation of the intensity integral over the mapped plane."""
    vals = np.asarray(intensity, dtype=float)
    finite = vals[np.isfinite(vals)]
    return float(finite.sum() * dx * dy)
