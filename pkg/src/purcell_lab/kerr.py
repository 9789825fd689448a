"""Third-order (Kerr) corrections to the steady-state dipoles and transmission.

Expanding the classical steady state in powers of the drive gives a linear
dipole vector plus a cubic correction that couples all emitters through the
collective resolvent. Closed forms exist for independent ensembles and for
the matched two-emitter case; the scans study how the correction scales with
emitter number and spacing.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularMatrixError, ValidationError
from .steadystate import (CavitySystem, ChainSpec, _fit_or_nan, chain_system,
                          match_cavity, matched_shift)


@dataclass(frozen=True)
class KerrResult:
    """Linear and third-order dipole responses with the matching transmissions."""

    beta1: np.ndarray
    beta3: np.ndarray
    t_lin: complex
    t_nl: complex
    norm_beta3: float


def _resolvent_l(system: CavitySystem) -> np.ndarray:
    """(kappa - i delta_c)(i Omega + Gamma - i delta_e I) + G G^T."""
    n = system.n
    r_mat = 1j * system.kernels.omega + system.kernels.gamma_matrix.astype(complex) \
        - 1j * system.delta_e * np.eye(n)
    return (system.kappa - 1j * system.delta_c) * r_mat + np.outer(system.g, system.g)


def _coupling_q(system: CavitySystem) -> np.ndarray:
    """(kappa - i delta_c)(i Omega + Gamma~) + G G^T with Gamma~ = Gamma - gamma I."""
    n = system.n
    tilde = system.kernels.gamma_matrix.astype(complex) - system.gamma * np.eye(n)
    return (system.kappa - 1j * system.delta_c) * (1j * system.kernels.omega + tilde) \
        + np.outer(system.g, system.g)


def kerr_correction(system: CavitySystem, *, population_limit: float = 0.1) -> KerrResult:
    """Perturbative dipole response ``beta = beta1 + beta3`` and transmissions.

    ``beta1`` is the linear steady-state dipole vector, ``beta3`` the cubic
    correction from the inversion closure. Transmissions follow from
    ``t = (kappa - i (kappa/eta) G . beta) / (kappa - i delta_c)`` evaluated
    with the linear and the corrected dipoles (computed drive-free, so
    ``eta = 0`` is allowed and gives ``beta3 = 0``).
    """
    if system.n == 0:
        raise ValidationError("kerr_correction needs at least one emitter")
    l_mat = _resolvent_l(system)
    g = system.g.astype(complex)
    try:
        u1 = np.linalg.solve(l_mat, -1j * g)          # beta1 per unit drive
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("Kerr resolvent singular at this operating point") from exc
    if not np.all(np.isfinite(u1)):
        raise SingularMatrixError("Kerr resolvent singular at this operating point")
    eta = system.eta
    beta1 = eta * u1
    pops = np.abs(beta1) ** 2
    if pops.max() > population_limit:
        raise ValidationError(
            f"excited-state population {pops.max():.3g} exceeds {population_limit}; "
            "outside the weak-excitation Kerr expansion")
    q_mat = _coupling_q(system)
    # beta3 / eta, so the eta = 0 limit stays finite
    w3 = 2.0 * np.linalg.solve(l_mat, pops * (1j * g + q_mat @ u1))
    beta3 = eta * w3
    kappa, dc = system.kappa, system.delta_c
    t_lin = (kappa - 1j * kappa * complex(g @ u1)) / (kappa - 1j * dc)
    t_nl = (kappa - 1j * kappa * complex(g @ (u1 + w3))) / (kappa - 1j * dc)
    return KerrResult(beta1, beta3, t_lin, t_nl, float(np.linalg.norm(beta3)))


def nonlinear_residual(system: CavitySystem, beta: np.ndarray) -> float:
    """Residual norm of the full nonlinear steady-state dipole equation at ``beta``."""
    beta = np.asarray(beta, dtype=complex)
    g = system.g.astype(complex)
    pop = np.abs(beta) ** 2
    r = -_resolvent_l(system) @ beta - 1j * system.eta * g \
        + 2j * system.eta * pop * g + 2.0 * pop * (_coupling_q(system) @ beta)
    return float(np.linalg.norm(r))


def independent_kerr_magnitude(n: int, cooperativity: float, gamma: float,
                               kappa: float, eta: float) -> float:
    """Resonant Kerr magnitude of ``n`` uncoupled, symmetrically driven emitters.

    Closed form ``(2 eta^3 / n) sqrt((nC)^3 / (gamma^3 (1 + nC)^8 kappa^3))``;
    identical to the norm of the general cubic correction with zero shifts and
    diagonal decay.
    """
    if not (gamma > 0.0 and kappa > 0.0):
        raise ValidationError("rates must be positive")
    nc = n * cooperativity
    return (2.0 * eta ** 3 / n) * math.sqrt(nc ** 3 / (gamma ** 3 * (1.0 + nc) ** 8 * kappa ** 3))


def two_emitter_resonant_kerr(system: CavitySystem) -> float:
    """Matched-resonance Kerr magnitude for two emitters, from the closed form.

    Requires ``G = (g, +-g)`` and a cavity matched to the corresponding
    shifted collective state (``delta_c = 0``, ``delta_e = +-Omega_12``).
    """
    if system.n != 2:
        raise ValidationError("closed form is specific to two emitters")
    g1, g2 = system.g
    if abs(abs(g1) - abs(g2)) > 1e-12 * abs(g1):
        raise ValidationError("closed form requires |g1| = |g2|")
    sign = 1.0 if g1 * g2 > 0 else -1.0
    omega12 = system.kernels.omega[0, 1]
    h12 = system.kernels.h[0, 1]
    gamma = system.gamma
    kappa = system.kappa
    expected_de = sign * omega12
    if abs(system.delta_c) > 1e-9 * kappa or abs(system.delta_e - expected_de) > 1e-9 * kappa:
        raise ValidationError(
            "system must sit at the matched point delta_c = 0, delta_e = sign * Omega_12")
    gamma_eff = gamma * (1.0 + sign * h12)
    c_eff = float(system.g @ system.g) / (kappa * gamma_eff)
    eta = system.eta
    return math.sqrt(c_eff ** 3 / (1.0 + c_eff) ** 3) * eta ** 3 \
        * math.sqrt(gamma ** 2 + omega12 ** 2) \
        / math.sqrt((gamma_eff * (1.0 + c_eff)) ** 5 * kappa ** 3)


@dataclass(frozen=True)
class KerrScan:
    """Kerr magnitude against emitter number with the fitted power law."""

    symmetry: str
    n_values: np.ndarray
    norm_beta3: np.ndarray
    t_lin_abs2: np.ndarray
    t_nl_abs2: np.ndarray
    shifts: np.ndarray
    exponent: float
    exponent_stderr: float


def matched_kerr_point(system: CavitySystem, *,
                       population_limit: float = 1e-4):
    """Kerr result at the collective resonance that maximizes it.

    Symmetric drive patterns overlap several collective states; the strongest
    third-order response sits at a subradiant antiresonance rather than at
    the state of largest overlap. Candidate modes of ``Omega - i Gamma`` with
    non-negligible drive overlap are screened at their mode energies, the
    winner is refined with the matching root search, and the result is
    evaluated at that root. Returns ``(shift, KerrResult)``.
    """
    if system.n == 1:
        shift = match_cavity(system, 0.0, 0.0)
        probe = replace(system, delta_c=0.0, delta_e=shift)
        return shift, kerr_correction(probe, population_limit=population_limit)
    modes = np.linalg.eig(system.kernels.omega
                          - 1j * system.kernels.gamma_matrix.astype(complex))
    weights = np.abs(modes.eigenvectors.conj().T @ system.g) ** 2
    keep = weights > 1e-10 * weights.max()
    best_norm = -1.0
    best_guess = 0.0
    for lam in modes.eigenvalues[keep]:
        probe = replace(system, delta_c=0.0, delta_e=float(lam.real))
        try:
            norm = kerr_correction(probe, population_limit=population_limit).norm_beta3
        except SingularMatrixError:
            continue
        if norm > best_norm:
            best_norm = norm
            best_guess = float(lam.real)
    shift = match_cavity(system, 0.0, best_guess)
    probe = replace(system, delta_c=0.0, delta_e=shift)
    return shift, kerr_correction(probe, population_limit=population_limit)


def kerr_scaling_scan(spec: ChainSpec, n_values, symmetry: str, eta: float, *,
                      match: bool = True, population_limit: float = 1e-4) -> KerrScan:
    """Kerr magnitude versus N for a chain, cavity matched per N by default.

    Matching tracks the collective state the drive pattern addresses (largest
    overlap), which is the convention behind the reported scaling exponents;
    see :func:`matched_kerr_point` for the strongest-antiresonance variant.
    With ``match=False`` the cavity stays on the bare emitter resonance and
    the scan is taken at ``delta_c = delta_e = 0``. The weak-drive guard
    rejects points whose excited-state population exceeds ``population_limit``.
    """
    n_values = np.asarray(sorted(int(n) for n in n_values), dtype=int)
    if n_values.size == 0 or n_values.min() < 1:
        raise ValidationError("n_values must be positive integers")
    norms = np.empty(n_values.size)
    t_lin = np.empty(n_values.size)
    t_nl = np.empty(n_values.size)
    shifts = np.zeros(n_values.size)
    for i, n in enumerate(n_values):
        system = chain_system(spec, int(n), symmetry, eta=eta)
        if match and int(n) > 1:
            shifts[i] = matched_shift(system)
            system = chain_system(spec, int(n), symmetry, eta=eta,
                                  delta_c=0.0, delta_e=shifts[i])
        result = kerr_correction(system, population_limit=population_limit)
        norms[i] = result.norm_beta3
        t_lin[i] = abs(result.t_lin) ** 2
        t_nl[i] = abs(result.t_nl) ** 2
    exponent, stderr = _fit_or_nan(n_values, norms)
    return KerrScan(symmetry, n_values, norms, t_lin, t_nl, shifts, exponent, stderr)
