"""Vacuum-mediated dipole-dipole coupling kernels and angular field profiles.

Emitters at sub-wavelength separations exchange photons through the free-space
vacuum, which produces coherent pair shifts and a collective decay matrix.
Both derive from the same six angular profile functions of the radiated dipole
field, evaluated with the polar angle measured from the common dipole axis.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import _profile_components, radial_profiles
from .errors import NumericalError, ValidationError

_PSD_TOL = 1e-10
_PSD_CHECK_MAX_N = 512


@dataclass(frozen=True)
class EmitterEnsemble:
    """Geometry and radiative parameters of N identical two-level emitters.

    Parameters
    ----------
    positions : (N, 3) array
        Emitter locations. Only ``k_e * |r_i - r_j|`` and angles relative to
        the dipole axis enter any kernel, so the length unit is free as long
        as ``k_e`` matches it.
    dipole : (3,) array
        Shared dipole orientation, unit norm within 1e-12.
    gamma : float
        Free-space half decay rate (the rate in the ``-(gamma - i delta_e)``
        damping of the coherence).
    k_e : float
        Transition wavenumber ``2 pi / lambda_e``.
    """

    positions: np.ndarray
    dipole: np.ndarray
    gamma: float
    k_e: float

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.size == 0:
            pos = pos.reshape(0, 3)
        if pos.ndim != 2 or pos.shape[1] != 3 or not np.all(np.isfinite(pos)):
            raise ValidationError("positions must be a finite (N, 3) array")
        mu = np.asarray(self.dipole, dtype=float)
        if mu.shape != (3,) or not np.all(np.isfinite(mu)):
            raise ValidationError("dipole must be a finite 3-vector")
        if abs(np.linalg.norm(mu) - 1.0) > 1e-12:
            raise ValidationError("dipole orientation must be unit norm within 1e-12")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValidationError("gamma must be positive")
        if not (self.k_e > 0.0 and math.isfinite(self.k_e)):
            raise ValidationError("k_e must be positive")
        for i in range(pos.shape[0]):
            for j in range(i + 1, pos.shape[0]):
                if np.linalg.norm(pos[i] - pos[j]) == 0.0:
                    raise ValidationError(f"emitters {i} and {j} are coincident")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "dipole", mu)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class CouplingKernels:
    """Pairwise coherent shifts and collective decay rates.

    ``omega`` is the coherent coupling matrix (zero diagonal by convention,
    the self shift being absorbed into the transition frequency),
    ``gamma_matrix`` the collective decay matrix with the single-emitter rate
    on the diagonal, and ``h = gamma_matrix / gamma`` its normalized form.
    """

    omega: np.ndarray
    gamma_matrix: np.ndarray
    h: np.ndarray
    gamma: float

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        gm = np.asarray(self.gamma_matrix, dtype=float)
        hm = np.asarray(self.h, dtype=float)
        n = om.shape[0]
        if om.shape != (n, n) or gm.shape != (n, n) or hm.shape != (n, n):
            raise ValidationError("kernel matrices must share a square shape")
        if not (np.array_equal(om, om.T) and np.array_equal(gm, gm.T)):
            raise ValidationError("kernel matrices must be exactly symmetric")
        if n and not np.array_equal(np.diag(hm), np.ones(n)):
            raise ValidationError("h must have unit diagonal")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "gamma_matrix", gm)
        object.__setattr__(self, "h", hm)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @classmethod
    def independent(cls, n: int, gamma: float) -> "CouplingKernels":
        """Kernels of non-interacting emitters: zero shifts, diagonal decay."""
        eye = np.eye(n)
        return cls(np.zeros((n, n)), gamma * eye, eye.copy(), gamma)


def angular_profiles(kr, theta, phi):
    """Angular profile functions of the radiated dipole field.

    Returns the tuple ``(F_x, F_y, F_z, G_x, G_y, G_z)`` evaluated at
    dimensionless distance ``kr > 0``, polar angle ``theta`` measured from the
    dipole axis and azimuth ``phi`` in the orthogonal plane. Scalar inputs
    give scalars; arrays broadcast.
    """
    kr_arr = np.asarray(kr, dtype=float)
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    if not (np.all(np.isfinite(kr_arr)) and np.all(np.isfinite(th)) and np.all(np.isfinite(ph))):
        raise ValidationError("angular_profiles requires finite inputs")
    if np.any(kr_arr <= 0.0):
        raise ValidationError("kr must be positive")
    kr_b, th_b, ph_b = np.broadcast_arrays(kr_arr, th, ph)
    radials = radial_profiles(np.ascontiguousarray(np.atleast_1d(kr_b)))
    radials = tuple(r.reshape(kr_b.shape) for r in radials)
    ct = np.cos(th_b)
    st = np.sin(th_b)
    out = _profile_components(ct, st * np.cos(ph_b), st * np.sin(ph_b), radials)
    if np.isscalar(kr) and np.isscalar(theta) and np.isscalar(phi):
        return tuple(float(np.asarray(o).reshape(-1)[0]) for o in out)
    return out


def axial_profiles(kr, cos_theta):
    """``(F_z, G_z)`` as functions of kr and the cosine of the polar angle."""
    ra, rb, _, rd, re_, _ = radial_profiles(np.ascontiguousarray(kr, dtype=float))
    ct2 = np.asarray(cos_theta) ** 2
    st2 = 1.0 - ct2
    aniso = 1.0 - 3.0 * ct2
    return st2 * ra + aniso * rb, st2 * rd - aniso * re_


def coupling_kernels(ensemble: EmitterEnsemble) -> CouplingKernels:
    """Build the coherent-shift and collective-decay matrices of an ensemble.

    The pair entries are ``Omega_ij = -(3 gamma / 4) G_z`` and
    ``gamma_ij = (3 gamma / 2) F_z`` at ``kr = k_e |r_i - r_j|`` with the
    polar angle between the separation and the dipole axis. Diagonals are
    ``Omega_ii = 0`` and ``gamma_ii = gamma``.
    """
    n = ensemble.n
    gamma = ensemble.gamma
    omega = np.zeros((n, n))
    gamma_matrix = gamma * np.eye(n)
    if n > 1:
        iu, ju = np.triu_indices(n, k=1)
        sep = ensemble.positions[iu] - ensemble.positions[ju]
        dist = np.linalg.norm(sep, axis=1)
        kr = ensemble.k_e * dist
        if np.any(kr <= 0.0):
            raise ValidationError("coincident emitters: coherent shift diverges")
        ct = (sep @ ensemble.dipole) / dist
        fz, gz = axial_profiles(kr, ct)
        omega[iu, ju] = -(3.0 * gamma / 4.0) * gz
        omega[ju, iu] = omega[iu, ju]
        gamma_matrix[iu, ju] = (3.0 * gamma / 2.0) * fz
        gamma_matrix[ju, iu] = gamma_matrix[iu, ju]
    h = gamma_matrix / gamma
    if n and n <= _PSD_CHECK_MAX_N:
        min_eig = np.linalg.eigvalsh(gamma_matrix).min()
        if min_eig < -_PSD_TOL * gamma:
            raise NumericalError(
                f"collective decay matrix not positive semidefinite: min eigenvalue {min_eig:.3e}")
    return CouplingKernels(omega, gamma_matrix, h, gamma)


_AXES = {"x": np.array([1.0, 0.0, 0.0]),
         "y": np.array([0.0, 1.0, 0.0]),
         "z": np.array([0.0, 0.0, 1.0])}


def _unit_vector(spec, name):
    if isinstance(spec, str):
        try:
            return _AXES[spec].copy()
        except KeyError:
            raise ValidationError(f"{name} must be one of {sorted(_AXES)} or a 3-vector") from None
    v = np.asarray(spec, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)) or np.linalg.norm(v) == 0.0:
        raise ValidationError(f"{name} must be a finite nonzero 3-vector")
    return v / np.linalg.norm(v)


def linear_chain(n: int, spacing: float, *, gamma: float = 1.0, k_e: float = 2.0 * math.pi,
                 axis="x", dipole="y") -> EmitterEnsemble:
    """Equidistant chain of ``n`` emitters along ``axis`` with dipoles along ``dipole``.

    With the default ``k_e = 2 pi`` the spacing is in units of the transition
    wavelength.
    """
    if n < 1:
        raise ValidationError("chain needs n >= 1")
    if n > 1 and not spacing > 0.0:
        raise ValidationError("chain spacing must be positive")
    axis_v = _unit_vector(axis, "axis")
    mu = _unit_vector(dipole, "dipole")
    offsets = (np.arange(n) - 0.5 * (n - 1))[:, None] * spacing
    return EmitterEnsemble(offsets * axis_v[None, :], mu, gamma, k_e)


def dipole_frame(mu: np.ndarray) -> np.ndarray:
    """Orthonormal frame (rows e1, e2, mu) with mu as the polar axis."""
    mu = np.asarray(mu, dtype=float)
    seed = _AXES["x"] if abs(mu[0]) < 0.9 else _AXES["y"]
    e1 = seed - (seed @ mu) * mu
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(mu, e1)
    return np.vstack([e1, e2, mu])
