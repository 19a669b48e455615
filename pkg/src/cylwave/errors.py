"""Exception types shared by the package.

Each class maps onto one exit status of the command line driver, so the
driver can translate failures without inspecting messages.
"""


class CylwaveError(Exception):
    """Base class for every error raised on purpose by cylwave."""

    exit_code = 1


class DomainError(CylwaveError, ValueError):
    """An argument lies outside the domain of a holomorphic function
    (typically on a branch cut) or violates a model precondition."""

    exit_code = 3


class InvalidArgument(CylwaveError, ValueError):
    """A constructor or configuration argument is out of range."""

    exit_code = 2


class ResolutionError(CylwaveError, ValueError):
    """The grid cannot resolve a feature the operator depends on."""

    exit_code = 2


class BlowUpError(CylwaveError, RuntimeError):
    """Raised by the integrator when the blow-up monitor fires.

    Attributes
    ----------
    diagnostic : dict
        Payload produced by :func:`cylwave.simulator.blow_up_check`.
    trajectory : object or None
        Whatever was recorded before the failure.
    """

    exit_code = 4

    def __init__(self, message, diagnostic=None, trajectory=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}
        self.trajectory = trajectory


class ConvergenceError(CylwaveError, RuntimeError):
    """A numerical inversion failed its self-consistency check."""

    exit_code = 5
