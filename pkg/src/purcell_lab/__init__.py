"""Collective Purcell physics toolbox.

Classical steady states and response spectra, linearized quantum fluctuation
statistics, collective Kerr corrections, free-space collective decay, and a
brute-force master-equation referee, for N dipole-coupled emitters in a
driven two-sided cavity.
"""

from ._backend import backend_name
from .dipole import (CouplingKernels, EmitterEnsemble, angular_profiles,
                     coupling_kernels, linear_chain)
from .errors import (ConvergenceError, CutoffError, NumericalError,
                     PurcellLabError, SingularMatrixError, UnstableSystemError,
                     ValidationError)
from .fluctuations import (DetectedStats, FluctuationSystem, SpectrumMatrix,
                           build_fluctuation_system, detected_correlations_finite_t,
                           detected_statistics, detected_statistics_at,
                           output_amplitudes, output_spectrum, solve_lyapunov,
                           stability)
from .freespace import (DecayChannels, ExcitonState, diagonal_decay_channels,
                        exciton_coherence, exciton_energy, exciton_state,
                        radiation_intensity)
from .kerr import (KerrResult, KerrScan, independent_kerr_magnitude,
                   kerr_correction, kerr_scaling_scan, matched_kerr_point,
                   nonlinear_residual, two_emitter_resonant_kerr)
from .oracle import (DensityOperator, build_free_generators, build_generators,
                     evolve_to_steady_state, free_decay_evolution,
                     logarithmic_negativity, steady_state)
from .steadystate import (CavitySystem, ChainSpec, ClassicalState,
                          CooperativityScan, EffectiveQuantities, HybridModes,
                          ResponseCoefficients, chain_system, cooperativity_scan,
                          coupling_vector, effective_quantities, fit_power_law,
                          hybrid_modes, linear_response, match_cavity,
                          matched_shift, purcell_quantities, solve_classical)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
