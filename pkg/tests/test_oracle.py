import numpy as np
import pytest

import purcell_lab as pl
from purcell_lab import oracle
from purcell_lab.dipole import CouplingKernels, coupling_kernels, linear_chain
from purcell_lab.errors import CutoffError, ValidationError
from purcell_lab.freespace import exciton_state
from purcell_lab.steadystate import CavitySystem

KAPPA = 1.0
GAMMA = 0.05


def cavity_system(n, eta, g=0.2, spacing=0.3, delta=0.0):
    ens = linear_chain(n, spacing, gamma=GAMMA)
    kernels = coupling_kernels(ens) if n > 1 else CouplingKernels.independent(1, GAMMA)
    system = CavitySystem(1.0, 1.0, delta, delta, eta, np.full(n, g), kernels, GAMMA)
    return system, ens


def test_uncoupled_emitter_decay_rate():
    system, ens = cavity_system(1, eta=0.0, g=0.0)
    gen = oracle.build_generators(system, ens, n_max=1)
    ops = oracle.oracle_operators(1, 1)
    dim = 4
    psi = np.zeros(dim, dtype=complex)
    excited = ops["number"][0]
    psi[np.argmax(np.diag(excited.real))] = 1.0
    rho = np.outer(psi, psi.conj())
    dt = oracle.default_timestep(gen)
    t_end = 5.0
    steps = int(round(t_end / dt))
    for _ in range(steps):
        rho = oracle._rk4_step(gen, rho, dt)
    pop = np.trace(excited @ rho).real
    assert abs(pop - np.exp(-2.0 * GAMMA * dt * steps)) < 1e-8


def test_driven_empty_cavity_amplitude():
    ens = pl.linear_chain(1, 0.3, gamma=GAMMA)
    system = CavitySystem(1.0, 1.0, 0.2, 0.2, 0.05, np.array([0.0]),
                          CouplingKernels.independent(1, GAMMA), GAMMA)
    rho = oracle.steady_state(system, ens, n_max=4)
    alpha = oracle.cavity_amplitude(rho)
    assert abs(alpha - 0.05 / (1.0 - 0.2j)) < 1e-8


def test_dicke_superradiant_initial_slope():
    # nearly touching pair: symmetric one-excitation state decays at 2 x (2 gamma)
    ens = linear_chain(2, 0.02, gamma=GAMMA)
    h12 = coupling_kernels(ens).h[0, 1]
    assert h12 > 0.99
    psi = oracle.exciton_vector(2, exciton_state(2, 1).coeffs)
    dt_probe = 1e-3 / GAMMA
    snaps = oracle.free_decay_evolution(ens, psi, [0.0, dt_probe])
    p0 = oracle.excited_populations(snaps[0]).sum()
    p1 = oracle.excited_populations(snaps[1]).sum()
    slope = (p1 - p0) / dt_probe
    assert abs(slope + 2.0 * (2.0 * GAMMA)) / (4.0 * GAMMA) < 0.02


def test_generator_guards():
    system, ens = cavity_system(2, eta=0.0)
    with pytest.raises(ValidationError, match="n_max"):
        oracle.build_generators(system, ens, n_max=0)
    with pytest.raises(ValidationError, match="guard"):
        oracle.build_generators(system, ens, n_max=4000)
    big = linear_chain(4, 0.3, gamma=GAMMA)
    big_sys = CavitySystem(1.0, 1.0, 0.0, 0.0, 0.0, np.full(4, 0.1),
                           coupling_kernels(big), GAMMA)
    with pytest.raises(ValidationError, match="N <="):
        oracle.build_generators(big_sys, big, n_max=2)


def test_channel_form_equals_pairwise_form():
    # independent re-derivation: pairwise Lindblad applied term by term
    system, ens = cavity_system(2, eta=0.04)
    gen = oracle.build_generators(system, ens, n_max=3)
    ops = oracle.oracle_operators(3, 2)
    kernels = coupling_kernels(ens)
    rng = np.random.default_rng(9)
    dim = 4 * 4
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a + a.conj().T

    h = gen.h
    rhs_pairwise = -1j * (h @ rho - rho @ h)
    a_op = ops["a"]
    rhs_pairwise += KAPPA * (2.0 * a_op @ rho @ a_op.conj().T
                             - a_op.conj().T @ a_op @ rho - rho @ a_op.conj().T @ a_op)
    lower = ops["lower"]
    for j in range(2):
        for k in range(2):
            rate = kernels.gamma_matrix[j, k]
            rhs_pairwise += rate * (2.0 * lower[j] @ rho @ lower[k].conj().T
                                    - lower[k].conj().T @ lower[j] @ rho
                                    - rho @ lower[k].conj().T @ lower[j])
    rhs_channel = oracle.master_rhs(gen, rho)
    scale = np.abs(rhs_channel).max()
    assert np.abs(rhs_channel - rhs_pairwise).max() < 1e-12 * scale


def test_free_decay_rhs_matches_channel_form():
    ens = linear_chain(3, 0.12, gamma=GAMMA)
    gen = oracle.build_free_generators(ens)
    src, dst = oracle.lowering_index_maps(3)
    weights = coupling_kernels(ens).gamma_matrix
    rng = np.random.default_rng(13)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = np.ascontiguousarray(a + a.conj().T)
    from purcell_lab._kernels import free_decay_rhs
    fast = free_decay_rhs(np.ascontiguousarray(gen.h_eff), weights, src, dst, rho)
    ref = oracle.master_rhs(gen, rho)
    assert np.abs(fast - ref).max() < 1e-12 * np.abs(ref).max()


def test_dark_initial_state_stays_vacuum():
    system, ens = cavity_system(1, eta=0.0)
    rho = oracle.steady_state(system, ens, n_max=2, t_end=50.0)
    assert abs(rho.rho[0, 0] - 1.0) < 1e-10
    assert abs(rho.trace() - 1.0) < 1e-10


def test_cutoff_violation_raises():
    ens = pl.linear_chain(1, 0.3, gamma=GAMMA)
    system = CavitySystem(1.0, 1.0, 0.0, 0.0, 1.5, np.array([0.0]),
                          CouplingKernels.independent(1, GAMMA), GAMMA)
    with pytest.raises(CutoffError, match="n_max"):
        oracle.steady_state(system, ens, n_max=1, auto_raise=False, t_end=200.0)


def test_auto_raise_recovers_from_small_cutoff():
    ens = pl.linear_chain(1, 0.3, gamma=GAMMA)
    system = CavitySystem(1.0, 1.0, 0.0, 0.0, 0.35, np.array([0.0]),
                          CouplingKernels.independent(1, GAMMA), GAMMA)
    rho = oracle.steady_state(system, ens, n_max=1, auto_raise=True)
    assert rho.n_max > 1
    assert abs(oracle.cavity_amplitude(rho) - 0.35) < 1e-6


def test_state_quality_checkpoints():
    system, ens = cavity_system(2, eta=GAMMA)
    rho = oracle.steady_state(system, ens, n_max=4)
    assert abs(rho.trace() - 1.0) < 1e-8
    assert rho.hermiticity_defect() < 1e-10
    assert rho.min_eigenvalue() > -1e-8


def test_classical_cross_validation_pair():
    system, ens = cavity_system(2, eta=GAMMA)
    state = pl.solve_classical(system)
    rho = oracle.steady_state(system, ens, n_max=5)
    alpha = oracle.cavity_amplitude(rho)
    betas = oracle.emitter_amplitudes(rho)
    assert abs(state.alpha - alpha) / abs(alpha) < 0.01
    for j in range(2):
        assert abs(state.beta[j] - betas[j]) / abs(betas[j]) < 0.01
    assert oracle.intracavity_g2(rho) >= 0.0


def test_free_decay_single_emitter():
    ens = linear_chain(1, 0.3, gamma=GAMMA)
    psi = np.array([0.0, 1.0], dtype=complex)  # excited
    times = np.linspace(0.0, 10.0, 6)
    snaps = oracle.free_decay_evolution(ens, psi, times)
    for t, snap in zip(times, snaps):
        pop = oracle.excited_populations(snap).sum()
        assert abs(pop - np.exp(-2.0 * GAMMA * t)) < 1e-9
    with pytest.raises(ValidationError, match="partition"):
        oracle.logarithmic_negativity(snaps[-1], [0])


def test_free_decay_pair_rates():
    ens = linear_chain(2, 0.05, gamma=GAMMA)
    h12 = coupling_kernels(ens).h[0, 1]
    assert h12 > 0.97
    times = np.linspace(0.0, 1.0 / GAMMA, 5)
    for m, sign in ((1, 1.0), (2, -1.0)):
        psi = oracle.exciton_vector(2, exciton_state(2, m).coeffs)
        snaps = oracle.free_decay_evolution(ens, psi, times)
        rate = 2.0 * GAMMA * (1.0 + sign * h12)
        for t, snap in zip(times, snaps):
            pop = oracle.excited_populations(snap).sum()
            assert abs(pop - np.exp(-rate * t)) < 1e-6
    # the subradiant state is nearly frozen over 1/gamma
    psi = oracle.exciton_vector(2, exciton_state(2, 2).coeffs)
    final = oracle.free_decay_evolution(ens, psi, [1.0 / GAMMA])[0]
    assert oracle.excited_populations(final).sum() > 0.94


def test_negativity_product_state():
    rho = np.zeros((4, 4), dtype=complex)
    rho[2, 2] = 1.0  # |e g><e g|
    assert abs(oracle.logarithmic_negativity(rho, [0])) < 1e-12


def test_negativity_bell_state():
    bell = np.zeros(4, dtype=complex)
    bell[1] = bell[2] = 1.0 / np.sqrt(2.0)
    rho = np.outer(bell, bell.conj())
    value = oracle.logarithmic_negativity(rho, [0])
    assert abs(value - 1.0) < 1e-12
    # partial transpose eigenvalues are {1/2, 1/2, 1/2, -1/2}
    pt = oracle._partial_transpose(rho, [0], 2)
    eigs = np.sort(np.linalg.eigvalsh(pt))
    assert np.abs(eigs - np.array([-0.5, 0.5, 0.5, 0.5])).max() < 1e-12


def test_negativity_partition_validation():
    rho = np.eye(4, dtype=complex) / 4.0
    with pytest.raises(ValidationError):
        oracle.logarithmic_negativity(rho, [])
    with pytest.raises(ValidationError):
        oracle.logarithmic_negativity(rho, [0, 1])
    with pytest.raises(ValidationError):
        oracle.logarithmic_negativity(rho, [3])


def test_exciton_vector_embedding():
    coeffs = exciton_state(3, 2).coeffs
    psi = oracle.exciton_vector(3, coeffs)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
    # single-excitation amplitudes sit at indices 4, 2, 1 (emitter 0 first)
    assert psi[4] == coeffs[0] and psi[2] == coeffs[1] and psi[1] == coeffs[2]
