"""Dimensionless parameter bundle shared by all modules."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Union

from .errors import InvalidArgument

Force = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class PhysParams:
    """Physical parameters of the cylinder and wave problem.

    Parameters
    ----------
    epsilon : float
        Nonlinearity parameter, in [0, 1).
    kappa : float
        Shallowness (dispersion) parameter. The simulator needs it in
        (0, 1); the Laplace-domain tools also accept 0.
    nu : float
        Viscosity, in [0, 1).
    R : float
        Cylinder radius, positive.
    tau_buoy_sq : float
        Squared buoyancy period, positive.
    h_i_eq : float
        Equilibrium height of the water column under the cylinder.
    F_ext : float or callable
        External vertical force, either a constant or a function of time.
    """

    epsilon: float = 0.0
    kappa: float = 0.1
    nu: float = 0.0
    R: float = 1.0
    tau_buoy_sq: float = 1.0
    h_i_eq: float = 1.0
    F_ext: Force = field(default=0.0, compare=False)

    def __post_init__(self):
        for name in ("epsilon", "kappa", "nu", "R", "tau_buoy_sq", "h_i_eq"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidArgument(f"{name} must be a finite real, got {value!r}")
        errors = []
        if not 0.0 <= self.epsilon < 1.0:
            errors.append(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not 0.0 <= self.kappa < 1.0:
            errors.append(f"kappa must lie in [0, 1), got {self.kappa}")
        if not 0.0 <= self.nu < 1.0:
            errors.append(f"nu must lie in [0, 1), got {self.nu}")
        if self.R <= 0:
            errors.append(f"R must be positive, got {self.R}")
        if self.tau_buoy_sq <= 0:
            errors.append(f"tau_buoy_sq must be positive, got {self.tau_buoy_sq}")
        if self.h_i_eq <= 0:
            errors.append(f"h_i_eq must be positive, got {self.h_i_eq}")
        if errors:
            raise InvalidArgument("; ".join(errors))
        if self.epsilon * (self.kappa**2 + self.nu) > 0.1:
            warnings.warn(
                "epsilon*(kappa^2 + nu) exceeds 0.1: outside the Boussinesq-Abbott regime",
                RuntimeWarning,
                stacklevel=3,
            )

    def force(self, t: float) -> float:
        """Value of the external force at time ``t``."""
        if callable(self.F_ext):
            return float(self.F_ext(t))
        return float(self.F_ext)

    def require_dispersion(self):
        """Raise unless kappa is strictly positive (simulator precondition)."""
        if not 0.0 < self.kappa < 1.0:
            raise InvalidArgument(f"kappa must lie in (0, 1) for this operation, got {self.kappa}")

    def h_inner(self, delta):
        """Water height under the cylinder, h_i = h_i_eq + epsilon*delta."""
        return self.h_i_eq + self.epsilon * delta

    def with_(self, **changes) -> "PhysParams":
        """Return a copy with some fields replaced."""
        return replace(self, **changes)
