"""Exception types raised by the solvers."""


class RabiError(Exception):
    """Base class for all package errors."""


class ParameterError(RabiError, ValueError):
    """Invalid model parameters."""


class CollapseError(ParameterError):
    """Coupling at or beyond the spectral collapse point (|g2_bar| >= 1)."""


class NegativeRadicand(ParameterError):
    """Bias too large for the closed-form transition coupling."""


class NoTransition(RabiError):
    """The bias-shifted single-particle levels never cross."""


class NotConverged(RabiError):
    """Fock truncation hit its cap before the ground state converged.

    The last (unconverged) state is kept on ``state`` so callers can still
    report a partial result.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class OptimizationFailed(RabiError):
    """The variational minimizer found no interior minimum."""


class BranchJump(RabiError):
    """Variational minimizer path is discontinuous across the finite-difference stencil."""


class StepTooCoarse(RabiError):
    """Finite-difference QFI did not stabilise under step refinement."""


class IntegrandBlowup(RabiError):
    """Inverse gap exceeded the configured cap during quadrature."""
