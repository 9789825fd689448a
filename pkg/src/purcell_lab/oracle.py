"""Brute-force master-equation integrator on the truncated Fock x qubit space.

Independent referee for the analytic pipeline: dense density-matrix RK4 with
the full Hamiltonian and collective dissipators, usable for small systems
only. Collective decay enters in diagonalized channel form, which is
mathematically identical to the pairwise form and maps directly onto
independent jump operators.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import free_decay_rhs
from .dipole import EmitterEnsemble, coupling_kernels
from .errors import ConvergenceError, CutoffError, NumericalError, ValidationError
from .freespace import diagonal_decay_channels
from .steadystate import CavitySystem

_MAX_DIM = 10 ** 4
_MAX_CAVITY_EMITTERS = 3
_MAX_FREE_EMITTERS = 6
_CUTOFF_POP = 1e-6

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])
_NUMBER = np.array([[0.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class DensityOperator:
    """Dense density matrix with its basis bookkeeping.

    ``n_max`` is the Fock cutoff (None for emitter-only spaces); emitter
    qubits are kron factors after the Fock factor, first emitter most
    significant, with basis order (ground, excited) per qubit.
    """

    rho: np.ndarray
    n_max: Optional[int]
    n_emitters: int

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())


@dataclass(frozen=True)
class Generators:
    """Hamiltonian plus jump channels, with precomputed RK4 ingredients."""

    h: np.ndarray
    jumps: list
    n_max: Optional[int]
    n_emitters: int
    max_rate: float
    h_eff: np.ndarray = field(repr=False, default=None)
    h_eff_dag: np.ndarray = field(repr=False, default=None)
    jump_flat: np.ndarray = field(repr=False, default=None)
    jump_dag_flat: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        h_eff = self.h.astype(complex).copy()
        dim = self.h.shape[0]
        n_jumps = len(self.jumps)
        stack = np.zeros((max(n_jumps, 1), dim, dim), dtype=complex)
        for k, (rate, op) in enumerate(self.jumps):
            h_eff -= 1j * rate * (op.conj().T @ op)
            stack[k] = math.sqrt(2.0 * rate) * op
        object.__setattr__(self, "h_eff", h_eff)
        object.__setattr__(self, "h_eff_dag", np.ascontiguousarray(h_eff.conj().T))
        # flat stacks turn the jump sum into two BLAS calls per evaluation
        object.__setattr__(self, "jump_flat",
                           np.ascontiguousarray(stack.reshape(-1, dim)))
        object.__setattr__(self, "jump_dag_flat",
                           np.ascontiguousarray(stack.conj().transpose(0, 2, 1).reshape(-1, dim)))


def _kron_chain(ops) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def _emitter_op(n_emitters: int, site: int, op: np.ndarray,
                fock_dim: Optional[int]) -> np.ndarray:
    factors = []
    if fock_dim:
        factors.append(np.eye(fock_dim))
    for j in range(n_emitters):
        factors.append(op if j == site else np.eye(2))
    return _kron_chain(factors)


def oracle_operators(n_max: Optional[int], n_emitters: int) -> dict:
    """Dense annihilation / lowering operators on the composite space."""
    fock_dim = None if n_max is None else n_max + 1
    ops = {"lower": [], "number": []}
    if fock_dim:
        a_f = np.diag(np.sqrt(np.arange(1, fock_dim)), k=1)
        qubit_eye = np.eye(2 ** n_emitters) if n_emitters else np.eye(1)
        ops["a"] = np.kron(a_f, qubit_eye)
    for j in range(n_emitters):
        ops["lower"].append(_emitter_op(n_emitters, j, _SIGMA_MINUS, fock_dim))
        ops["number"].append(_emitter_op(n_emitters, j, _NUMBER, fock_dim))
    return ops


def _decay_channels(ensemble: EmitterEnsemble, lower_ops) -> list:
    channels = diagonal_decay_channels(coupling_kernels(ensemble).gamma_matrix)
    jumps = []
    for i, lam in enumerate(channels.lambdas):
        if lam < -1e-10 * ensemble.gamma:
            raise NumericalError(f"negative collective decay rate {lam:.3e}")
        if lam <= 0.0:
            continue
        op = sum(channels.transform[k, i] * lower_ops[k] for k in range(ensemble.n))
        jumps.append((float(lam), op))
    return jumps


def build_generators(system: CavitySystem, ensemble: EmitterEnsemble,
                     n_max: int) -> Generators:
    """Hamiltonian and dissipators of the driven cavity plus coupled emitters."""
    n = system.n
    if ensemble.n != n:
        raise ValidationError("ensemble size does not match the cavity system")
    if n > _MAX_CAVITY_EMITTERS:
        raise ValidationError(f"cavity oracle limited to N <= {_MAX_CAVITY_EMITTERS}")
    if n_max < 1:
        raise ValidationError("n_max must be at least 1")
    dim = (n_max + 1) * 2 ** n
    if dim > _MAX_DIM:
        raise ValidationError(f"Hilbert dimension {dim} exceeds the {_MAX_DIM} guard")
    ops = oracle_operators(n_max, n)
    a = ops["a"]
    lower = ops["lower"]
    h = -system.delta_c * (a.conj().T @ a) \
        + 1j * system.eta * (a.conj().T - a)
    for j in range(n):
        h = h + system.g[j] * (a.conj().T @ lower[j] + a @ lower[j].conj().T)
        h = h - system.delta_e * ops["number"][j]
    omega = system.kernels.omega
    for j in range(n):
        for k in range(n):
            if j != k and omega[j, k] != 0.0:
                h = h + omega[j, k] * (lower[j] @ lower[k].conj().T)
    jumps = [(system.kappa, a)]
    rates = [system.kappa, system.eta]
    if n:
        jumps.extend(_decay_channels(ensemble, lower))
        rates.append(system.gamma * (1.0 + float(np.abs(system.kernels.h).max())))
        rates.append(float(np.abs(system.g).max()))
    if n > 1:
        rates.append(float(np.abs(omega).max()))
    return Generators(h, jumps, n_max, n, max(rates))


def build_free_generators(ensemble: EmitterEnsemble) -> Generators:
    """Emitter-only generators (no cavity, frame rotating at the transition)."""
    n = ensemble.n
    if n > _MAX_FREE_EMITTERS:
        raise ValidationError(f"free-space oracle limited to N <= {_MAX_FREE_EMITTERS}")
    kernels = coupling_kernels(ensemble)
    ops = oracle_operators(None, n)
    lower = ops["lower"]
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    for j in range(n):
        for k in range(n):
            if j != k and kernels.omega[j, k] != 0.0:
                h = h + kernels.omega[j, k] * (lower[j] @ lower[k].conj().T)
    jumps = _decay_channels(ensemble, lower)
    max_rate = ensemble.gamma * (1.0 + float(np.abs(kernels.h).max()))
    if n > 1:
        max_rate = max(max_rate, float(np.abs(kernels.omega).max()))
    return Generators(h, jumps, None, n, max_rate)


def master_rhs(gen: Generators, rho: np.ndarray) -> np.ndarray:
    """d rho / dt for the Lindblad generator (non-Hermitian split plus jumps)."""
    out = -1j * (gen.h_eff @ rho - rho @ gen.h_eff_dag)
    if gen.jumps:
        dim = rho.shape[0]
        n_jumps = len(gen.jumps)
        tmp = (gen.jump_flat @ rho).reshape(n_jumps, dim, dim)
        out += tmp.transpose(1, 0, 2).reshape(dim, -1) @ gen.jump_dag_flat
    return out


def default_timestep(gen: Generators) -> float:
    return 0.005 / gen.max_rate


def _rk4_step(gen: Generators, rho: np.ndarray, dt: float) -> np.ndarray:
    k1 = master_rhs(gen, rho)
    k2 = master_rhs(gen, rho + 0.5 * dt * k1)
    k3 = master_rhs(gen, rho + 0.5 * dt * k2)
    k4 = master_rhs(gen, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def top_level_population(state: DensityOperator) -> float:
    """Population of the highest Fock level (cutoff validity probe)."""
    if state.n_max is None:
        return 0.0
    block = 2 ** state.n_emitters
    diag = np.diag(state.rho).real
    return float(diag[state.n_max * block:].sum())


def _check_cutoff(state: DensityOperator):
    pop = top_level_population(state)
    if pop > _CUTOFF_POP:
        raise CutoffError(
            f"top Fock level holds population {pop:.3e} > {_CUTOFF_POP:.0e}; "
            "increase n_max")


def evolve_to_steady_state(gen: Generators, rho0: np.ndarray, t_end: float,
                           dt: float = None) -> DensityOperator:
    """Fixed-step RK4 until ``||d rho/dt||_max < 1e-10 * max_rate``.

    Raises if the horizon ``t_end`` is reached without convergence or if the
    Fock cutoff is violated along the way.
    """
    dt = default_timestep(gen) if dt is None else float(dt)
    rho = np.array(rho0, dtype=complex)
    state = DensityOperator(rho, gen.n_max, gen.n_emitters)
    tol = 1e-10 * gen.max_rate
    steps = int(math.ceil(t_end / dt))
    check_every = 50
    for step in range(1, steps + 1):
        rho = _rk4_step(gen, rho, dt)
        if step % check_every == 0 or step == steps:
            rate = np.abs(master_rhs(gen, rho)).max()
            state = DensityOperator(rho, gen.n_max, gen.n_emitters)
            _check_cutoff(state)
            if rate < tol:
                return state
    rate = float(np.abs(master_rhs(gen, rho)).max())
    raise ConvergenceError(
        f"steady state not reached by t={t_end:.4g} (||drho/dt||={rate:.3e})",
        residual=rate)


def steady_state(system: CavitySystem, ensemble: EmitterEnsemble, *, n_max: int = 6,
                 t_end: float = None, auto_raise: bool = True) -> DensityOperator:
    """Steady state from the vacuum, raising the Fock cutoff on demand."""
    horizon = t_end if t_end is not None else 500.0 / min(system.kappa, 2.0 * system.gamma)
    cutoff = n_max
    while True:
        gen = build_generators(system, ensemble, cutoff)
        dim = (cutoff + 1) * 2 ** system.n
        rho0 = np.zeros((dim, dim), dtype=complex)
        rho0[0, 0] = 1.0
        try:
            return evolve_to_steady_state(gen, rho0, horizon)
        except CutoffError:
            if not auto_raise or cutoff >= 14:
                raise
            cutoff += 2


def lowering_index_maps(n_emitters: int):
    """Basis-index gather maps of the qubit lowering operators.

    ``src[j]`` lists the indices with emitter j excited, ``dst[j]`` the same
    indices with that excitation removed (emitter 0 is the most significant
    kron factor).
    """
    dim = 2 ** n_emitters
    half = dim // 2
    src = np.empty((n_emitters, half), dtype=np.int64)
    dst = np.empty((n_emitters, half), dtype=np.int64)
    for j in range(n_emitters):
        bit = 1 << (n_emitters - 1 - j)
        idx = np.array([x for x in range(dim) if x & bit], dtype=np.int64)
        src[j] = idx
        dst[j] = idx - bit
    return src, dst


def _free_rk4_step(h_eff, gamma_weights, src, dst, rho, dt):
    k1 = free_decay_rhs(h_eff, gamma_weights, src, dst, rho)
    k2 = free_decay_rhs(h_eff, gamma_weights, src, dst, rho + 0.5 * dt * k1)
    k3 = free_decay_rhs(h_eff, gamma_weights, src, dst, rho + 0.5 * dt * k2)
    k4 = free_decay_rhs(h_eff, gamma_weights, src, dst, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def free_decay_evolution(ensemble: EmitterEnsemble, initial_state: np.ndarray,
                         times) -> list:
    """Free-space decay snapshots at the requested times (no cavity).

    ``initial_state`` may be a pure-state vector on the 2^N emitter space or a
    density matrix. Returns one DensityOperator per requested time. The inner
    loop runs the pairwise-gather form of the collective dissipator (same
    generator as the channel form, restricted to Hermitian states).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times < 0.0) or \
            np.any(np.diff(times) < 0.0):
        raise ValidationError("times must be a sorted non-negative 1-d array")
    gen = build_free_generators(ensemble)
    dim = 2 ** ensemble.n
    init = np.asarray(initial_state, dtype=complex)
    if init.ndim == 1:
        if init.shape != (dim,):
            raise ValidationError(f"state vector must have length {dim}")
        rho = np.outer(init, init.conj())
    elif init.shape == (dim, dim):
        rho = init.copy()
    else:
        raise ValidationError(f"initial state must be a vector or matrix of dimension {dim}")
    src, dst = lowering_index_maps(ensemble.n)
    gamma_weights = coupling_kernels(ensemble).gamma_matrix
    h_eff = np.ascontiguousarray(gen.h_eff)
    rho = np.ascontiguousarray(rho)
    dt = default_timestep(gen)
    snapshots = []
    t_now = 0.0
    for t_target in times:
        span = t_target - t_now
        if span > 0.0:
            n_steps = int(math.ceil(span / dt))
            h = span / n_steps
            for _ in range(n_steps):
                rho = _free_rk4_step(h_eff, gamma_weights, src, dst, rho, h)
            t_now = t_target
        snapshots.append(DensityOperator(rho.copy(), None, ensemble.n))
    return snapshots


def exciton_vector(n: int, coeffs: np.ndarray) -> np.ndarray:
    """Embed single-excitation coefficients into the 2^N qubit space."""
    psi = np.zeros(2 ** n, dtype=complex)
    for j in range(n):
        psi[2 ** (n - 1 - j)] = coeffs[j]
    return psi


def _partial_transpose(rho: np.ndarray, partition, n_sites: int) -> np.ndarray:
    shaped = rho.reshape([2] * (2 * n_sites))
    axes = list(range(2 * n_sites))
    for site in partition:
        axes[site], axes[n_sites + site] = axes[n_sites + site], axes[site]
    return shaped.transpose(axes).reshape(rho.shape)


def logarithmic_negativity(rho, partition) -> float:
    """log2 of the trace norm of the partial transpose over ``partition``.

    ``rho`` is an emitter-space density matrix (or DensityOperator without a
    cavity factor); ``partition`` selects the qubit sites that are transposed.
    """
    if isinstance(rho, DensityOperator):
        if rho.n_max is not None:
            raise ValidationError("trace out the cavity before computing negativity")
        n_sites = rho.n_emitters
        mat = rho.rho
    else:
        mat = np.asarray(rho, dtype=complex)
        n_sites = int(round(math.log2(mat.shape[0])))
        if 2 ** n_sites != mat.shape[0]:
            raise ValidationError("density matrix dimension is not a power of two")
    partition = sorted(set(int(p) for p in np.atleast_1d(partition)))
    if not partition or len(partition) >= n_sites or \
            any(p < 0 or p >= n_sites for p in partition):
        raise ValidationError("partition must be a nonempty proper subset of the sites")
    pt = _partial_transpose(mat, partition, n_sites)
    pt = 0.5 * (pt + pt.conj().T)
    eigs = np.linalg.eigvalsh(pt)
    return float(np.log2(np.abs(eigs).sum()))


def expectation(state: DensityOperator, op: np.ndarray) -> complex:
    return complex(np.trace(op @ state.rho))


def cavity_amplitude(state: DensityOperator) -> complex:
    ops = oracle_operators(state.n_max, state.n_emitters)
    return expectation(state, ops["a"])


def emitter_amplitudes(state: DensityOperator) -> np.ndarray:
    ops = oracle_operators(state.n_max, state.n_emitters)
    return np.array([expectation(state, s) for s in ops["lower"]])


def excited_populations(state: DensityOperator) -> np.ndarray:
    ops = oracle_operators(state.n_max, state.n_emitters)
    return np.array([expectation(state, p).real for p in ops["number"]])


def intracavity_g2(state: DensityOperator) -> float:
    ops = oracle_operators(state.n_max, state.n_emitters)
    a = ops["a"]
    n_op = a.conj().T @ a
    n_avg = expectation(state, n_op).real
    if n_avg <= 0.0:
        return 1.0
    four = expectation(state, a.conj().T @ a.conj().T @ a @ a).real
    return four / n_avg ** 2


def intracavity_quadrature_variances(state: DensityOperator):
    """Fluctuation quadrature variances ``(var_x, var_y)`` about the mean field."""
    ops = oracle_operators(state.n_max, state.n_emitters)
    a = ops["a"]
    alpha = expectation(state, a)
    aa = expectation(state, a @ a) - alpha ** 2
    nbar = expectation(state, a.conj().T @ a).real - abs(alpha) ** 2
    return 0.5 + nbar + aa.real, 0.5 + nbar - aa.real
