"""Floating vertical cylinder in axisymmetric Boussinesq waves.

Modules
-------
specfun
    Modified Bessel functions, complex square roots and the ratio B(s).
grid
    Non-uniform radial grids, quadrature and derivative matrices.
nonlocal_ops
    Green's-function inverses of 1 - kappa^2 d/dr d_r and its adjoint.
shode
    The four-variable trace system coupling the body to the contact line.
simulator
    RK4 integration of the coupled wave and body system.
decay
    Laplace-domain analysis of the return to equilibrium.
cli
    Command line driver.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError,
    ConvergenceError,
    CylwaveError,
    DomainError,
    InvalidArgument,
    ResolutionError,
)
from .params import PhysParams  # noqa: E402

__all__ = [
    "PhysParams",
    "CylwaveError",
    "DomainError",
    "InvalidArgument",
    "ResolutionError",
    "BlowUpError",
    "ConvergenceError",
    "__version__",
]
