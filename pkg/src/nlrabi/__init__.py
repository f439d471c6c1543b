"""Asymmetric non-linear quantum Rabi model: ground states, criticality and QFI."""
from .criticality import (LevelPair, optimal_bias, potentials, single_particle_levels,
                          transition_coupling)
from .errors import (BranchJump, CollapseError, IntegrandBlowup, NegativeRadicand,
                     NoTransition, NotConverged, OptimizationFailed, ParameterError,
                     RabiError, StepTooCoarse)
from .metrology import (QfiResult, preparation_time, qfi_fidelity, qfi_peak, qfi_rho_max,
                        qfi_state_derivative, qfi_variational, qfi_xi_max)
from .model import (Coupling, DerivedScales, GroundState, ModelParams, SolveOptions,
                    build_hamiltonian, derived_scales, ground_state, low_spectrum)
from .observables import WavefunctionGrid, spin_expectation, wavefunction, x_squared
from .variational import (VariationalSolution, ansatz_energy, minimize_ansatz,
                          variational_gap)

__version__ = "0.1.0"
