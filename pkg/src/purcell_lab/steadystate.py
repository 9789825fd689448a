"""Classical steady states, cavity response spectra, and collective cooperativity.

The driven cavity plus dipole-coupled emitters reduce, for classical averages,
to a small nonlinear fixed-point problem. Its linearization gives transmission,
reflection and scattering spectra, the collective resonance shift and
linewidth seen by the cavity, and the effective cooperativity whose scaling
with emitter number is the central figure of merit.
"""

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dipole import CouplingKernels, coupling_kernels, linear_chain
from .errors import ConvergenceError, SingularMatrixError, ValidationError

SYMMETRY_MODES = ("symmetric", "alternating", "independent")


@dataclass(frozen=True)
class CavitySystem:
    """Two-sided driven cavity coupled to N emitters.

    Rates are in any common frequency unit; ``delta_c`` and ``delta_e`` are
    the laser detunings from cavity and emitter resonance. ``g`` is the real
    coupling vector whose signs encode the drive-phase pattern.
    """

    kappa_a: float
    kappa_b: float
    delta_c: float
    delta_e: float
    eta: float
    g: np.ndarray
    kernels: CouplingKernels
    gamma: float

    def __post_init__(self):
        if not (self.kappa_a > 0.0 and self.kappa_b > 0.0):
            raise ValidationError("mirror rates must be positive")
        if not self.gamma > 0.0:
            raise ValidationError("gamma must be positive")
        if self.eta < 0.0:
            raise ValidationError("drive amplitude must be non-negative")
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if not np.all(np.isfinite(g)):
            raise ValidationError("coupling vector must be finite")
        if g.shape[0] != self.kernels.n:
            raise ValidationError(
                f"coupling vector length {g.shape[0]} != kernel dimension {self.kernels.n}")
        if self.kernels.n and abs(self.kernels.gamma - self.gamma) > 1e-12 * self.gamma:
            raise ValidationError("kernel gamma differs from system gamma")
        object.__setattr__(self, "g", g)

    @property
    def kappa(self) -> float:
        return 0.5 * (self.kappa_a + self.kappa_b)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def balanced(self) -> bool:
        return abs(self.kappa_a - self.kappa_b) <= 1e-12 * self.kappa


@dataclass(frozen=True)
class ClassicalState:
    """Converged classical averages (cavity amplitude, dipoles, inversions)."""

    alpha: complex
    beta: np.ndarray
    z: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class ResponseCoefficients:
    """Linear response at one detuning: amplitudes, intensities, phases."""

    t_c: complex
    r_c: complex
    s_c: complex
    phi: float
    phi_emitter: float
    delta_e: float
    delta_c: float

    @property
    def abs_t2(self) -> float:
        return abs(self.t_c) ** 2

    @property
    def abs_r2(self) -> float:
        return abs(self.r_c) ** 2

    @property
    def abs_s2(self) -> float:
        return abs(self.s_c) ** 2


class HybridModes(NamedTuple):
    gamma_plus: float
    gamma_minus: float
    omega_plus: float
    omega_minus: float


class EffectiveQuantities(NamedTuple):
    delta_eff: float
    gamma_eff: float
    c_eff: float


def hybrid_modes(g: float, kappa: float, gamma: float) -> HybridModes:
    """Hybridized decay rates and frequencies of the resonant single-emitter system.

    Below the strong-coupling threshold ``g = |kappa - gamma| / 2`` the square
    root is real and only the decay rates split; above it the frequencies
    split into polariton branches.
    """
    if not (kappa > 0.0 and gamma > 0.0 and g >= 0.0):
        raise ValidationError("hybrid_modes requires kappa, gamma > 0 and g >= 0")
    root = cmath.sqrt(((kappa - gamma) / 2.0) ** 2 - g * g)
    half_sum = 0.5 * (kappa + gamma)
    return HybridModes(half_sum + root.real, half_sum - root.real, root.imag, -root.imag)


def purcell_quantities(g: float, kappa: float, gamma: float):
    """Cooperativity ``C = g^2/(kappa gamma)`` and Purcell factor ``4C``."""
    if not (kappa > 0.0 and gamma > 0.0):
        raise ValidationError("purcell_quantities requires kappa, gamma > 0")
    c = g * g / (kappa * gamma)
    return c, 4.0 * c


def _offdiag_coupling(kernels: CouplingKernels) -> np.ndarray:
    """i*Omega + Gamma with the diagonal removed (pair coupling only)."""
    w = 1j * kernels.omega + kernels.gamma_matrix.astype(complex)
    np.fill_diagonal(w, 0.0)
    return w


def _emitter_resolvent_solve(system: CavitySystem, delta_e: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (-i delta_e I + i Omega + Gamma) x = rhs with dark-pole detection."""
    r_mat = (-1j * delta_e) * np.eye(system.n) + 1j * system.kernels.omega \
        + system.kernels.gamma_matrix.astype(complex)
    try:
        x = np.linalg.solve(r_mat, rhs)
    except np.linalg.LinAlgError:
        x = None
    if x is None or not np.all(np.isfinite(x)) or \
            np.linalg.norm(r_mat @ x - rhs) > 1e-8 * (np.linalg.norm(rhs) + np.linalg.norm(x)):
        eigs = np.linalg.eigvals(1j * system.kernels.omega
                                 + system.kernels.gamma_matrix.astype(complex))
        offender = eigs[np.argmin(np.abs(eigs - 1j * delta_e))]
        raise SingularMatrixError(
            "emitter resolvent singular at delta_e=%.6g: dark collective eigenvalue %s"
            % (delta_e, offender))
    return x


def solve_classical(system: CavitySystem, *, tol: float = 1e-12, max_iter: int = 10000,
                    damping: float = 0.5) -> ClassicalState:
    """Damped fixed-point solve of the classical steady-state equations.

    The inversion closure ``z_j = 2 |beta_j|^2 - 1`` is iterated with
    under-relaxation while the bilinear (alpha, beta) system is solved exactly
    at each step. Starts from the weak-drive linear solution (z = -1).
    """
    n = system.n
    kappa, eta = system.kappa, system.eta
    dc, de, gamma = system.delta_c, system.delta_e, system.gamma
    g = system.g
    w_off = _offdiag_coupling(system.kernels)
    tol_abs = tol * eta if eta > 0.0 else 1e-15

    def solve_at_fixed_z(z):
        a_full = np.zeros((n + 1, n + 1), dtype=complex)
        a_full[0, 0] = kappa - 1j * dc
        a_full[0, 1:] = 1j * g
        a_full[1:, 0] = -1j * g * z
        a_full[1:, 1:] = (gamma - 1j * de) * np.eye(n) - z[:, None] * w_off
        rhs = np.zeros(n + 1, dtype=complex)
        rhs[0] = eta
        sol = np.linalg.solve(a_full, rhs)
        return sol[0], sol[1:]

    def residual(alpha, beta):
        z = 2.0 * np.abs(beta) ** 2 - 1.0
        r_alpha = eta - (kappa - 1j * dc) * alpha - 1j * (g @ beta)
        r_beta = -(gamma - 1j * de) * beta + 1j * g * z * alpha + z * (w_off @ beta)
        return max(abs(r_alpha), np.abs(r_beta).max() if n else 0.0)

    z = -np.ones(n)
    alpha, beta = solve_at_fixed_z(z)
    res = residual(alpha, beta)
    iterations = 1
    while res > tol_abs:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"classical fixed point not converged after {max_iter} iterations",
                residual=res)
        if n and (np.abs(beta).max() > 1.0 or not np.all(np.isfinite(beta))):
            raise ConvergenceError(
                "classical solve outside weak-excitation validity (|beta| > 1)",
                residual=res)
        z = z + damping * (2.0 * np.abs(beta) ** 2 - 1.0 - z)
        alpha, beta = solve_at_fixed_z(z)
        res = residual(alpha, beta)
        iterations += 1
    return ClassicalState(alpha, beta, 2.0 * np.abs(beta) ** 2 - 1.0, res, iterations)


def _response_at(system: CavitySystem, delta_e: float) -> ResponseCoefficients:
    delta_c = delta_e + (system.delta_c - system.delta_e)
    kappa = system.kappa
    if system.n:
        q = complex(system.g @ _emitter_resolvent_solve(system, delta_e, system.g.astype(complex)))
    else:
        q = 0.0
    denom = kappa - 1j * delta_c + q
    t_c = math.sqrt(system.kappa_a * system.kappa_b) / denom
    r_c = system.kappa_a / denom - 1.0
    if system.balanced:
        s2 = 2.0 * (t_c.real - abs(t_c) ** 2)
    else:
        s2 = 1.0 - abs(r_c) ** 2 - abs(t_c) ** 2
    s_c = complex(math.sqrt(max(s2, 0.0)))
    phi = cmath.phase(t_c)
    phi_emitter = phi - math.atan2(delta_c, kappa)
    return ResponseCoefficients(t_c, r_c, s_c, phi, phi_emitter, delta_e, delta_c)


def linear_response(system: CavitySystem, delta_e_grid) -> list:
    """Transmission/reflection/scattering response over a detuning grid.

    The grid moves the laser: at each point ``delta_c`` follows ``delta_e``
    with the system's cavity-emitter offset held fixed. The scattered
    amplitude is reported without phase (from intensity conservation).
    """
    return [_response_at(system, float(de)) for de in np.atleast_1d(delta_e_grid)]


def _effective_w(system: CavitySystem, delta_e: float) -> complex:
    """w = G.G / (G^T R^{-1} G); gamma_eff = Re w, delta_eff = -Im w."""
    if system.n == 0:
        raise ValidationError("effective quantities need at least one emitter")
    g = system.g.astype(complex)
    gg = float(system.g @ system.g)
    q = complex(system.g @ _emitter_resolvent_solve(system, delta_e, g))
    return gg / q


def effective_quantities(system: CavitySystem, delta_e: float) -> EffectiveQuantities:
    """Collective shift, linewidth and effective cooperativity at ``delta_e``.

    Defined through ``w = G.G / (G^T R^{-1} G)`` with resolvent
    ``R = -i delta_e I + i Omega + Gamma``: ``gamma_eff = Re w`` and
    ``delta_eff = -Im w``. The sign of ``delta_eff`` is fixed so the single
    emitter reduces to ``delta_eff = delta_e`` and the collective transmission
    formula matches the direct solution exactly.
    """
    w = _effective_w(system, delta_e)
    gamma_eff = w.real
    delta_eff = -w.imag
    if gamma_eff <= 0.0:
        warnings.warn("gamma_eff <= 0 at delta_e=%.6g (collective pole proximity)" % delta_e,
                      RuntimeWarning, stacklevel=2)
    gg = float(system.g @ system.g)
    c_eff = gg / (system.kappa * gamma_eff)
    return EffectiveQuantities(delta_eff, gamma_eff, c_eff)


def _collective_detuning_sign(system: CavitySystem, delta: float) -> float:
    """Im(G^T R^{-1} G); shares zeros with delta_eff but stays bounded."""
    x = _emitter_resolvent_solve(system, delta, system.g.astype(complex))
    return float((system.g @ x).imag)


def match_cavity(system: CavitySystem, omega_e: float = 0.0,
                 target_shift_guess: float = 0.0, *, n_scan: int = 1000) -> float:
    """Tune the cavity onto the addressed collective resonance.

    Scans the collective detuning for sign changes around the guess and
    bisects the root nearest to it, rejecting poles. Returns the matched
    cavity frequency ``omega_e + shift`` with ``|delta_eff(shift)| < 1e-10 gamma``.
    """
    if system.n == 0:
        raise ValidationError("match_cavity needs at least one emitter")
    omega_max = np.abs(system.kernels.omega).max() if system.n > 1 else 0.0
    width = max(4.0 * omega_max, 10.0 * system.gamma, 0.5 * abs(target_shift_guess))
    grid = target_shift_guess + np.linspace(-width, width, n_scan)
    vals = np.array([_collective_detuning_sign(system, d) for d in grid])
    sign = np.sign(vals)
    idx = np.nonzero((sign[:-1] * sign[1:] < 0.0) | (vals[:-1] == 0.0))[0]
    roots = []
    for i in idx:
        a, b = grid[i], grid[i + 1]
        fa = vals[i]
        if fa == 0.0:
            roots.append(a)
            continue
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = _collective_detuning_sign(system, mid)
            if fm == 0.0 or (b - a) <= 1e-12 * max(abs(a), abs(b), system.gamma):
                a = b = mid
                break
            if fa * fm < 0.0:
                b = mid
            else:
                a, fa = mid, fm
        roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    roots.sort(key=lambda r: abs(r - target_shift_guess))
    for root in roots:
        if abs(_effective_w(system, root).imag) < 1e-10 * system.gamma:
            return omega_e + root
    raise ConvergenceError(
        "no collective resonance found near guess %.6g; widen the scan window"
        % target_shift_guess)


@dataclass(frozen=True)
class ChainSpec:
    """Chain geometry plus cavity rates for N sweeps."""

    spacing: float
    gamma: float
    kappa_a: float
    kappa_b: float
    g: float
    k_e: float = 2.0 * math.pi

    @property
    def kappa(self) -> float:
        return 0.5 * (self.kappa_a + self.kappa_b)


def coupling_vector(n: int, g: float, symmetry: str) -> np.ndarray:
    if symmetry in ("symmetric", "independent"):
        return np.full(n, g)
    if symmetry == "alternating":
        return g * (-1.0) ** np.arange(n)
    raise ValidationError(f"unknown symmetry {symmetry!r}; use one of {SYMMETRY_MODES}")


def chain_system(spec: ChainSpec, n: int, symmetry: str, *, eta: float = 0.0,
                 delta_c: float = 0.0, delta_e: float = 0.0) -> CavitySystem:
    """Cavity system for an n-emitter chain with the given addressing symmetry."""
    if symmetry == "independent":
        kernels = CouplingKernels.independent(n, spec.gamma)
    else:
        kernels = coupling_kernels(linear_chain(n, spec.spacing, gamma=spec.gamma, k_e=spec.k_e))
    g_vec = coupling_vector(n, spec.g, symmetry)
    return CavitySystem(spec.kappa_a, spec.kappa_b, delta_c, delta_e, eta,
                        g_vec, kernels, spec.gamma)


def matched_shift(system: CavitySystem) -> float:
    """Matched cavity shift for the addressing pattern of ``system.g``.

    The root search is seeded with the energy of the collective mode of
    ``Omega - i Gamma`` that overlaps the drive pattern most; a Rayleigh
    quotient would drift onto neighboring branches once the collective
    spectrum gets dense.
    """
    if system.n == 1:
        return match_cavity(system, 0.0, 0.0)
    modes = np.linalg.eig(system.kernels.omega - 1j * system.kernels.gamma_matrix)
    weights = np.abs(modes.eigenvectors.conj().T @ system.g) ** 2
    guess = float(modes.eigenvalues[np.argmax(weights)].real)
    return match_cavity(system, 0.0, guess)


def fit_power_law(x, y, *, x_min: float = 4.0):
    """OLS exponent of ``y ~ x^p`` on log-log data with ``x >= x_min``.

    Returns ``(exponent, stderr)``; stderr is NaN with fewer than 3 points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x >= x_min) & (y > 0.0) & np.isfinite(y)
    if mask.sum() < 2:
        raise ValidationError("power-law fit needs at least two points with x >= x_min")
    lx, ly = np.log(x[mask]), np.log(y[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    n_pts = lx.size
    if n_pts > 2:
        rss = float(np.sum((ly - slope * lx - intercept) ** 2))
        sxx = float(np.sum((lx - lx.mean()) ** 2))
        stderr = math.sqrt(rss / (n_pts - 2) / sxx)
    else:
        stderr = float("nan")
    return float(slope), stderr


def _fit_or_nan(x, y):
    """Power-law fit that degrades to NaN when too few points pass the N cut."""
    try:
        return fit_power_law(x, y)
    except ValidationError:
        return float("nan"), float("nan")


@dataclass(frozen=True)
class CooperativityScan:
    """Per-N matched effective cooperativities plus the fitted exponent."""

    symmetry: str
    n_values: np.ndarray
    c_eff: np.ndarray
    shifts: np.ndarray
    exponent: float
    exponent_stderr: float


def cooperativity_scan(spec: ChainSpec, n_values, symmetry: str) -> CooperativityScan:
    """Effective cooperativity against emitter number with per-N cavity matching."""
    n_values = np.asarray(sorted(int(n) for n in n_values), dtype=int)
    if n_values.size == 0 or n_values.min() < 1:
        raise ValidationError("n_values must be positive integers")
    c_eff = np.empty(n_values.size)
    shifts = np.empty(n_values.size)
    for i, n in enumerate(n_values):
        system = chain_system(spec, int(n), symmetry)
        shift = matched_shift(system)
        eff = effective_quantities(system, shift)
        shifts[i] = shift
        c_eff[i] = eff.c_eff
    exponent, stderr = _fit_or_nan(n_values, c_eff)
    return CooperativityScan(symmetry, n_values, c_eff, shifts, exponent, stderr)
