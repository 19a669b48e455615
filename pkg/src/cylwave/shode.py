"""Trace-level ODE system coupling the body motion to the contact-line
elevation.

The state is Z = (delta, delta_dot, zeta_bar, zeta_bar_dot). Two scalar
equations link them:

    tau^2(eps delta) delta'' + nu delta' + delta - eps a delta'^2
        = kappa^2 zeta_bar'' + nu zeta_bar' + zeta_bar + F_ext
    kappa^2 zeta_bar'' + nu zeta_bar' + zeta_bar + eps frak_f_bar
        = f_hyd_bar - kappa G(R) delta''

and they are rewritten as M dZ/dt + T Z = P + eps P~ with constant M.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgument
from .specfun import k0k1_scaled


@dataclass(frozen=True)
class TraceState:
    """Trace variables (delta, delta_dot, zeta_bar, zeta_bar_dot)."""

    delta: float = 0.0
    delta_dot: float = 0.0
    zeta_bar: float = 0.0
    zeta_bar_dot: float = 0.0

    def as_array(self):
        return np.array([self.delta, self.delta_dot, self.zeta_bar, self.zeta_bar_dot])

    @classmethod
    def from_array(cls, z):
        return cls(*(float(v) for v in z))

    def check(self, params):
        """Raise DomainError unless the solid stays off the bottom."""
        if not np.all(np.isfinite(self.as_array())):
            raise DomainError("trace state is not finite")
        if params.h_inner(self.delta) <= 0:
            raise DomainError("water column under the cylinder has collapsed (h_i <= 0)")


@dataclass(frozen=True)
class ShodeMatrices:
    """The constant matrices M and T and det(M)."""

    M: np.ndarray
    T: np.ndarray
    det_M: float
    G_R: float


def G_at_R(params):
    """G(R) = (R/2) K0(R/kappa)/K1(R/kappa), positive for kappa > 0."""
    if params.kappa <= 0:
        raise InvalidArgument("G(R) needs kappa > 0")
    k0, k1 = k0k1_scaled(params.R / params.kappa)
    return 0.5 * params.R * float(k0 / k1)


def tau_kappa_sq(eps_delta, params):
    """Added-mass coefficient tau^2_kappa(eps delta) = tau_buoy^2 + kappa^2 + R^2/(8 h_i).

    Here h_i = h_i_eq + eps*delta (h_i_eq is 1 by default).

    Raises
    ------
    DomainError
        If h_i is not positive.
    """
    h_i = params.h_i_eq + eps_delta
    if h_i <= 0:
        raise DomainError(f"non-positive inner water height h_i = {h_i}")
    return params.tau_buoy_sq + params.kappa**2 + params.R**2 / (8.0 * h_i)


def added_mass_a(delta, zeta_bar, params):
    """Coefficient of the quadratic velocity term,
    a = R^2/(16 h_i^2) - R^2/(8 h_e^2) with h_e = 1 + eps zeta_bar."""
    h_i = params.h_inner(delta)
    h_e = 1.0 + params.epsilon * zeta_bar
    if h_i <= 0 or h_e <= 0:
        raise DomainError("non-positive water column in added_mass_a")
    R2 = params.R**2
    return R2 / (16.0 * h_i**2) - R2 / (8.0 * h_e**2)


def frak_f(zeta, q, h, variant="half"):
    """Nonlinear flux density zeta^2/2 + q^2/h.

    ``variant="lemma"`` selects zeta^2/h + q^2/h instead, kept only for
    sensitivity comparisons.
    """
    if variant == "half":
        return 0.5 * zeta**2 + q**2 / h
    if variant == "lemma":
        return zeta**2 / h + q**2 / h
    raise ValueError(f"unknown variant {variant!r}")


def frak_f_bar(Z: TraceState, params, variant="half"):
    """Trace of frak_f, which only depends on Z since q(R) = -(R/2) delta_dot."""
    q_bar = -0.5 * params.R * Z.delta_dot
    h_bar = 1.0 + params.epsilon * Z.zeta_bar
    return frak_f(Z.zeta_bar, q_bar, h_bar, variant)


def gamma_terms(Z: TraceState, f_hyd_bar, F_ext, params, G_R=None, frak_bar=None):
    """The three parts of the nonlinear added-mass correction.

    With c = R^2 delta / (8 h_i (tau^2(eps delta) + kappa G(R))):

        gamma_loc     = c (eps a delta_dot^2 - eps frak_f_bar - delta - nu delta_dot)
        gamma_nloc    = c f_hyd_bar
        gamma_tilde_F = c F_ext

    The full forcing of the Newton row is a delta_dot^2 plus these three.

    Returns
    -------
    tuple of float
        (gamma_loc, gamma_nloc, gamma_tilde_F)
    """
    eps = params.epsilon
    if G_R is None:
        G_R = G_at_R(params) if params.kappa > 0 else 0.0
    if frak_bar is None:
        frak_bar = frak_f_bar(Z, params)
    h_i = params.h_inner(Z.delta)
    denom = tau_kappa_sq(eps * Z.delta, params) + params.kappa * G_R
    if denom <= 0:
        raise RuntimeError("internal error: tau^2 + kappa G(R) is not positive")
    c = params.R**2 * Z.delta / (8.0 * h_i * denom)
    a = added_mass_a(Z.delta, Z.zeta_bar, params)
    g_loc = c * (eps * a * Z.delta_dot**2 - eps * frak_bar - Z.delta - params.nu * Z.delta_dot)
    return g_loc, c * f_hyd_bar, c * F_ext


def gamma_total(Z: TraceState, f_hyd_bar, F_ext, params, G_R=None, frak_bar=None):
    """a delta_dot^2 + gamma_loc + gamma_nloc + gamma_tilde_F."""
    parts = gamma_terms(Z, f_hyd_bar, F_ext, params, G_R, frak_bar)
    a = added_mass_a(Z.delta, Z.zeta_bar, params)
    return a * Z.delta_dot**2 + sum(parts)


def shode_matrices(params) -> ShodeMatrices:
    """Matrices M and T of M dZ/dt + T Z = P + eps P~.

    Raises
    ------
    InvalidArgument
        For kappa = 0, where M is singular.
    """
    k = params.kappa
    if k <= 0:
        raise InvalidArgument("the trace ODE system is degenerate for kappa = 0")
    nu = params.nu
    G = G_at_R(params)
    tau2 = tau_kappa_sq(0.0, params)
    M = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [nu, tau2, -nu, -k * k],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, k * G, nu, k * k],
        ]
    )
    T = np.array(
        [
            [0.0, -1.0, 0.0, 0.0],
            [1.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    return ShodeMatrices(M, T, float(np.linalg.det(M)), G)


def shode_rhs(Z: TraceState, f_hyd_bar, frak_bar, F_ext, params, mats=None):
    """Time derivative of Z from the matrix form.

    Parameters
    ----------
    Z : TraceState
    f_hyd_bar : float
        Trace of the hydrodynamic forcing (linear plus nonlinear parts).
    frak_bar : float
        Trace of frak_f.
    F_ext : float
    params : PhysParams
    mats : ShodeMatrices, optional
        Reused when given.

    Returns
    -------
    dZ : ndarray, shape (4,)
    delta_ddot : float
        Equal to dZ[1]; returned separately for the boundary-layer forcing.
    """
    if mats is None:
        mats = shode_matrices(params)
    eps = params.epsilon
    gamma = gamma_total(Z, f_hyd_bar, F_ext, params, mats.G_R, frak_bar) if eps else 0.0
    rhs = -mats.T @ Z.as_array()
    rhs[1] += F_ext + eps * gamma
    rhs[3] += f_hyd_bar - eps * frak_bar
    dZ = np.linalg.solve(mats.M, rhs)
    return dZ, float(dZ[1])


def delta_ddot_D(Z: TraceState, f_hyd_bar, frak_bar, F_ext, params, G_R=None):
    """Algebraic body acceleration
    (eps gamma + f_hyd_bar - eps frak_bar - delta - nu delta_dot + F_ext)/(tau^2(0) + kappa G)."""
    if G_R is None:
        G_R = G_at_R(params)
    eps = params.epsilon
    gamma = gamma_total(Z, f_hyd_bar, F_ext, params, G_R, frak_bar) if eps else 0.0
    num = eps * gamma + f_hyd_bar - eps * frak_bar - Z.delta - params.nu * Z.delta_dot + F_ext
    return num / (tau_kappa_sq(0.0, params) + params.kappa * G_R)


def shode_rhs_scalar(Z: TraceState, f_hyd_bar, frak_bar, F_ext, params, G_R=None):
    """Same derivative as :func:`shode_rhs` by direct elimination in the two
    scalar equations (no matrices, exact added mass tau^2(eps delta))."""
    if G_R is None:
        G_R = G_at_R(params)
    eps, k, nu = params.epsilon, params.kappa, params.nu
    a = added_mass_a(Z.delta, Z.zeta_bar, params)
    X = f_hyd_bar - eps * frak_bar - Z.delta - nu * Z.delta_dot + eps * a * Z.delta_dot**2 + F_ext
    dd = X / (tau_kappa_sq(eps * Z.delta, params) + k * G_R)
    zz = (f_hyd_bar - eps * frak_bar - k * G_R * dd - nu * Z.zeta_bar_dot - Z.zeta_bar) / k**2
    return np.array([Z.delta_dot, dd, Z.zeta_bar_dot, zz])
