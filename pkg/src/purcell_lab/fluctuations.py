"""Linearized quantum fluctuations: drift/noise matrices, spectra, detection.

Operator fluctuations around the classical steady state obey linear Langevin
equations ``v' = M v + N v_in`` with delta-correlated inputs
``<v_in v_in^T> = C delta``. Everything measurable downstream lives in the
steady-state covariance (Lyapunov equation), the output spectrum matrix, and
the statistics of flat-window time-integrated detection.

Orderings (fixed, zero-based):

* state ``v = (a, a^dag, sigma_1..N, sigma^dag_1..N, sigma^z_1..N)``
* inputs ``v_in = (a_in, a_in^dag, b_in, b_in^dag, xi_1..N, xi^dag_1..N, xi^z_1..N)``

so the transmitted-port entries of spectrum matrices sit at rows/columns 2
(``b``) and 3 (``b^dag``).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from .errors import (NumericalError, SingularMatrixError, UnstableSystemError,
                     ValidationError)
from .steadystate import CavitySystem, ClassicalState, solve_classical


@dataclass(frozen=True)
class FluctuationSystem:
    """Drift, noise-injection and input-correlation matrices of one operating point."""

    m: np.ndarray
    n_mat: np.ndarray
    c_mat: np.ndarray
    d: np.ndarray
    n_emitters: int

    @property
    def dim(self) -> int:
        return 2 + 3 * self.n_emitters

    @property
    def in_dim(self) -> int:
        return 4 + 3 * self.n_emitters


@dataclass(frozen=True)
class SpectrumMatrix:
    """Output spectrum matrix at one frequency (input-vector ordering)."""

    s: np.ndarray
    omega: float

    @property
    def b_b(self) -> complex:
        return complex(self.s[2, 2])

    @property
    def b_bdag(self) -> complex:
        return complex(self.s[2, 3])

    @property
    def bdag_b(self) -> complex:
        return complex(self.s[3, 2])

    @property
    def bdag_bdag(self) -> complex:
        return complex(self.s[3, 3])

    @property
    def a_adag(self) -> complex:
        return complex(self.s[0, 1])

    @property
    def adag_a(self) -> complex:
        return complex(self.s[1, 0])


@dataclass(frozen=True)
class DetectedStats:
    """Statistics of the flat-window detected transmission field."""

    mean_amp_t: complex
    mean_amp_r: complex
    var_x: float
    var_y: float
    n_det: float
    var_n: float
    g2: float
    half_window: float
    var_n_closed_form: float


@dataclass(frozen=True)
class StabilityReport:
    is_stable: bool
    spectral_abscissa: float
    eigenvalues: np.ndarray


def build_fluctuation_system(system: CavitySystem, state: ClassicalState) -> FluctuationSystem:
    """Assemble M, N, C (and D = N C N^T) at the given classical fixed point."""
    n = system.n
    beta = np.atleast_1d(np.asarray(state.beta, dtype=complex))
    z = np.atleast_1d(np.asarray(state.z, dtype=float))
    if beta.shape[0] != n or z.shape[0] != n:
        raise ValidationError(
            f"classical state dimension {beta.shape[0]} does not match system N={n}")
    alpha = complex(state.alpha)
    kappa, dc, de, gamma = system.kappa, system.delta_c, system.delta_e, system.gamma
    g = system.g
    omega = system.kernels.omega
    gamma_m = system.kernels.gamma_matrix
    h_off = system.kernels.h.copy()
    np.fill_diagonal(h_off, 0.0)
    w_off = 1j * omega + gamma_m.astype(complex)
    np.fill_diagonal(w_off, 0.0)
    gamma_off = gamma_m.copy()
    np.fill_diagonal(gamma_off, 0.0)

    dim = 2 + 3 * n
    sl_s = slice(2, 2 + n)
    sl_sd = slice(2 + n, 2 + 2 * n)
    sl_sz = slice(2 + 2 * n, 2 + 3 * n)

    m = np.zeros((dim, dim), dtype=complex)
    m[0, 0] = -(kappa - 1j * dc)
    m[1, 1] = -(kappa + 1j * dc)
    if n:
        m[0, sl_s] = -1j * g
        m[1, sl_sd] = 1j * g
        gz = g * z
        gb = g * beta
        a_block = -(gamma - 1j * de) * np.eye(n) + z[:, None] * w_off
        b_block = np.diag(1j * g * alpha + w_off @ beta)
        k_block = np.diag(2j * g * np.conj(alpha) - 2.0 * (gamma_off @ np.conj(beta))) \
            - 2.0 * np.conj(beta)[:, None] * gamma_off
        m[sl_s, 0] = 1j * gz
        m[sl_sd, 1] = -1j * gz
        m[sl_s, sl_s] = a_block
        m[sl_s, sl_sz] = b_block
        m[sl_sd, sl_sd] = a_block.conj()
        m[sl_sd, sl_sz] = b_block.conj()
        m[sl_sz, 0] = -2j * np.conj(gb)
        m[sl_sz, 1] = 2j * gb
        m[sl_sz, sl_s] = k_block
        m[sl_sz, sl_sd] = k_block.conj()
        m[sl_sz, sl_sz] = -2.0 * gamma * np.eye(n)

    in_dim = 4 + 3 * n
    in_s = slice(4, 4 + n)
    in_sd = slice(4 + n, 4 + 2 * n)
    in_sz = slice(4 + 2 * n, 4 + 3 * n)
    n_mat = np.zeros((dim, in_dim))
    n_mat[0, 0] = math.sqrt(system.kappa_a)
    n_mat[0, 2] = math.sqrt(system.kappa_b)
    n_mat[1, 1] = math.sqrt(system.kappa_a)
    n_mat[1, 3] = math.sqrt(system.kappa_b)
    if n:
        root = math.sqrt(2.0 * gamma)
        n_mat[sl_s, in_s] = -root * np.eye(n)
        n_mat[sl_sd, in_sd] = -root * np.eye(n)
        n_mat[sl_sz, in_sz] = root * np.eye(n)

    c_mat = np.zeros((in_dim, in_dim), dtype=complex)
    c_mat[0, 1] = 1.0
    c_mat[2, 3] = 1.0
    if n:
        c_bb = np.eye(n, dtype=complex) + h_off * np.outer(z, z)
        c_bz = -2.0 * np.diag(beta) + 2.0 * h_off * (z[:, None] * beta[None, :])
        c_zz = 2.0 * np.diag(z + 1.0).astype(complex) \
            + 4.0 * h_off * np.outer(np.conj(beta), beta)
        c_mat[in_s, in_sd] = c_bb
        c_mat[in_s, in_sz] = c_bz
        c_mat[in_sz, in_sd] = c_bz.conj().T
        c_mat[in_sz, in_sz] = c_zz

    d = n_mat @ c_mat @ n_mat.T
    return FluctuationSystem(m, n_mat, c_mat, d, n)


def stability(m: np.ndarray) -> StabilityReport:
    """Eigenvalue stability test of a drift matrix (strict left half-plane)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
        raise ValidationError("stability requires a finite square matrix")
    try:
        eigs = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    abscissa = float(eigs.real.max())
    return StabilityReport(abscissa < 0.0, abscissa, eigs)


def solve_lyapunov(m: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Steady-state covariance from ``M V + V M^T = -D``.

    Kronecker vectorization with a dense LU solve; fine at the dimensions this
    package works with. Raises for unstable drift matrices and checks the
    residual against 1e-10 of the diffusion scale.
    """
    m = np.asarray(m, dtype=complex)
    d = np.asarray(d, dtype=complex)
    n = m.shape[0]
    if d.shape != (n, n):
        raise ValidationError("shape mismatch between drift and diffusion matrices")
    report = stability(m)
    if not report.is_stable:
        raise UnstableSystemError(
            f"drift matrix unstable (spectral abscissa {report.spectral_abscissa:.3e}); "
            "steady state undefined")
    eye = np.eye(n)
    kron = np.kron(eye, m) + np.kron(m, eye)
    v = np.linalg.solve(kron, -d.flatten(order="F")).reshape((n, n), order="F")
    d_scale = np.abs(d).max()
    residual = np.abs(m @ v + v @ m.T + d).max()
    if residual > 1e-10 * max(d_scale, 1e-300):
        raise NumericalError(f"Lyapunov residual {residual:.3e} exceeds tolerance")
    return v


def _transfer(sys: FluctuationSystem, omega: float) -> np.ndarray:
    """F(omega) = N^T (i omega I - M)^{-1} N - I."""
    lhs = 1j * omega * np.eye(sys.dim) - sys.m
    try:
        x = np.linalg.solve(lhs, sys.n_mat.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"resolvent singular at omega={omega:.6g}") from exc
    return sys.n_mat.T @ x - np.eye(sys.in_dim)


def output_spectrum(sys: FluctuationSystem, omega: float) -> SpectrumMatrix:
    """Output spectrum matrix ``S(omega) = F(omega) C F(-omega)^T``."""
    f_plus = _transfer(sys, omega)
    f_minus = f_plus if omega == 0.0 else _transfer(sys, -omega)
    return SpectrumMatrix(f_plus @ sys.c_mat @ f_minus.T, omega)


def output_amplitudes(system: CavitySystem, state: ClassicalState):
    """Mean continuous output amplitudes ``(<A_out>, <B_out>)``.

    The reflected port subtracts the drive through its own mirror rate, which
    for unbalanced cavities means the per-port ``kappa_a``.
    """
    alpha = complex(state.alpha)
    a_out = math.sqrt(system.kappa_a) * alpha - system.eta / math.sqrt(system.kappa_a)
    b_out = math.sqrt(system.kappa_b) * alpha
    return a_out, b_out


def detected_statistics(s0: SpectrumMatrix, mean_out_amp, half_window: float, *,
                        min_linewidth: float = None) -> DetectedStats:
    """Detected-field statistics from the zero-frequency spectrum matrix.

    ``mean_out_amp`` is the pair ``(<A_out>, <B_out>)`` of continuous output
    amplitudes; the detected amplitudes carry the ``sqrt(2T)`` window factor.
    Photon-number variance and ``g2`` expand all four-point moments with the
    Gaussian (Isserlis) factorization; the closed form quoted with ``|S44|^2``
    is returned alongside for comparison.
    """
    if s0.omega != 0.0:
        raise ValidationError("detected statistics require the omega=0 spectrum matrix")
    t = float(half_window)
    if t <= 0.0:
        raise ValidationError("detection half-window must be positive")
    if min_linewidth is not None and t * min_linewidth <= 10.0:
        warnings.warn(
            "detection window shorter than 10 narrowest-linewidth times; "
            "the sinc-to-delta replacement is inaccurate", RuntimeWarning, stacklevel=2)
    a_out, b_out = mean_out_amp
    scale = math.sqrt(2.0 * t)
    amp_r = scale * complex(a_out)
    amp_t = scale * complex(b_out)

    s43 = s0.bdag_b
    s33 = s0.b_b
    s44 = s0.bdag_bdag
    s34 = s0.b_bdag
    n43 = s43.real
    abs_c2 = abs(amp_t) ** 2

    var_x = 0.5 + n43 + s33.real
    var_y = 0.5 + n43 - s33.real
    n_det = abs_c2 + n43
    if n_det < -1e-12:
        raise NumericalError(f"negative detected photon number {n_det:.3e}")
    n_det = max(n_det, 0.0)

    cross = (np.conj(amp_t) ** 2 * s33 + amp_t ** 2 * s44).real
    var_n = (s44 * s33).real + (s43 * s34).real + abs_c2 * (1.0 + 2.0 * n43) + cross
    var_n_closed = abs(s44) ** 2 + abs_c2 * (1.0 + 2.0 * n43) \
        + 2.0 * (amp_t ** 2 * s44).real + (s43 * s34).real

    numerator = abs_c2 ** 2 + 4.0 * abs_c2 * n43 + cross + (s44 * s33).real \
        + 2.0 * (s43 * s43).real
    denominator = (abs_c2 + n43) ** 2
    g2 = numerator / denominator if denominator > 0.0 else 1.0
    return DetectedStats(amp_t, amp_r, var_x, var_y, n_det, var_n, g2, t, var_n_closed)


def detected_statistics_at(system: CavitySystem, half_window: float, *,
                           state: ClassicalState = None) -> DetectedStats:
    """One-call detected statistics for a system (classical solve included)."""
    if state is None:
        state = solve_classical(system)
    fsys = build_fluctuation_system(system, state)
    report = stability(fsys.m)
    if not report.is_stable:
        raise UnstableSystemError(
            f"operating point unstable (abscissa {report.spectral_abscissa:.3e})")
    s0 = output_spectrum(fsys, 0.0)
    return detected_statistics(s0, output_amplitudes(system, state), half_window,
                               min_linewidth=abs(report.spectral_abscissa))


def _sinc_weight(omega: np.ndarray, t: float) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) * t < 1e-8
    out[small] = t * t
    ws = w[~small]
    out[~small] = np.sin(ws * t) ** 2 / ws ** 2
    return out


def _tail_weight(w_edge: float, t: float) -> float:
    """Exact ``(1/(pi T)) integral_W^inf sin^2(wT)/w^2 dw`` via the sine integral."""
    si, _ = sici(2.0 * t * w_edge)
    integral = 0.5 / w_edge - 0.5 * (math.cos(2.0 * t * w_edge) / w_edge
                                     - 2.0 * t * (0.5 * math.pi - si))
    return integral / (math.pi * t)


def _adaptive_simpson(f, a, b, fa, fm, fb, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = np.abs(left + right - whole).max()
    if err < 15.0 * tol or depth <= 0:
        return left + right + (left + right - whole) / 15.0
    half = 0.5 * tol
    return (_adaptive_simpson(f, a, m, fa, flm, fm, half, depth - 1)
            + _adaptive_simpson(f, m, b, fm, frm, fb, half, depth - 1))


def detected_correlations_finite_t(sys: FluctuationSystem, half_window: float,
                                   omega_grid) -> np.ndarray:
    """Finite-window detected correlation matrix.

    Integrates the sinc^2-weighted output spectrum. The constant (input
    correlation) part integrates to exactly its own value, the remainder is
    summed lobe by lobe with adaptive Simpson inside the grid span, and the
    truncated tail is added with the exact residual sinc^2 weight against the
    edge spectrum values. Converges to ``S(0)`` as the window grows.
    """
    t = float(half_window)
    if t <= 0.0:
        raise ValidationError("half_window must be positive")
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError("omega_grid must be a 1-d frequency grid")
    span_needed = 40.0 / t
    if grid.max() < span_needed * (1.0 - 1e-12) or grid.min() > -span_needed * (1.0 - 1e-12):
        raise ValidationError(
            f"omega_grid must span at least +-40/T = +-{span_needed:.6g}; "
            f"got [{grid.min():.6g}, {grid.max():.6g}]")
    lobe = math.pi / t
    in_lobe = int(np.count_nonzero(np.abs(grid) <= lobe))
    if in_lobe < 1000:
        raise ValidationError(
            f"omega_grid needs >= 1000 points in the main sinc lobe |omega| <= {lobe:.6g}; "
            f"got {in_lobe}")
    w_edge = float(min(grid.max(), -grid.min()))

    c_ref = sys.c_mat

    def integrand(w):
        return _sinc_weight(w, t) * (output_spectrum(sys, float(w)).s - c_ref)

    n_lobes = max(int(math.ceil(w_edge / lobe)), 1)
    # split at sinc nodes; tolerance budgeted per lobe on the final matrix
    tol_lobe = 1e-10 * math.pi * t / (2.0 * n_lobes)
    total = np.zeros((sys.in_dim, sys.in_dim), dtype=complex)
    for k in range(n_lobes):
        lo = k * lobe
        hi = min((k + 1) * lobe, w_edge)
        if hi <= lo:
            continue
        for a, b in ((lo, hi), (-hi, -lo)):
            fa, fb = integrand(a), integrand(b)
            fm = integrand(0.5 * (a + b))
            total += _adaptive_simpson(integrand, a, b, fa, fm, fb, tol_lobe, 24)
    tail = _tail_weight(w_edge, t)
    s_hi = output_spectrum(sys, w_edge).s
    s_lo = output_spectrum(sys, -w_edge).s
    return c_ref + total / (math.pi * t) + tail * ((s_hi - c_ref) + (s_lo - c_ref))
