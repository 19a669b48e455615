"""Special functions: principal square root, modified Bessel functions of
order 0 and 1, the map p(s) and the ratio B(s) = K0(R p)/K1(R p).

The Bessel evaluations delegate to ``scipy.special`` (the AMOS routines),
which already provide exponentially scaled values for complex arguments.
This module adds what the wave problem needs on top of them: explicit
branch-cut checks, the scaled/unscaled bookkeeping, and the continuous
extension of B(s) to the imaginary axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

#: Euler-Mascheroni constant, 20 digits.
EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class BesselEval:
    """Result of a Bessel evaluation.

    Attributes
    ----------
    value : ndarray or scalar
        The function value. When ``scaled`` is true this is exp(z)*K(z)
        for K and exp(-z)*I(z) for I.
    scaled : bool
    order : int
    """

    value: object
    scaled: bool
    order: int


def _as_complex(s):
    return np.asarray(s, dtype=complex)


def _on_negative_axis(z):
    z = _as_complex(z)
    return (z.imag == 0.0) & (z.real < 0.0)


def principal_sqrt(s):
    """Square root with non-negative real part.

    Uses the closed form ``sqrt((|s|+Re s)/2) + i sgn(Im s) sqrt((|s|-Re s)/2)``
    with ``sgn(0) = +1``. Only the component without cancellation is taken
    from the formula; the other one follows from ``2 Re(w) Im(w) = Im(s)``,
    which keeps ``w**2 = s`` accurate to rounding. The real part is never
    negative.

    Parameters
    ----------
    s : complex or array_like
        Argument, not on the strictly negative real axis.

    Returns
    -------
    complex or ndarray

    Raises
    ------
    DomainError
        If any entry of ``s`` is a negative real number.
    """
    z = _as_complex(s)
    if np.any(_on_negative_axis(z)):
        raise DomainError("principal_sqrt: argument on the branch cut (-inf, 0)")
    return _principal_sqrt_unchecked(z)


def _principal_sqrt_unchecked(z):
    z = _as_complex(z)
    mod = np.abs(z)
    big = np.sqrt(0.5 * (mod + np.abs(z.real)))
    with np.errstate(invalid="ignore", divide="ignore"):
        small = np.where(big > 0, 0.5 * np.abs(z.imag) / big, 0.0)
    pos = z.real >= 0
    re = np.where(pos, big, small)
    im = np.where(pos, small, big)
    sign = np.where(z.imag < 0.0, -1.0, 1.0)
    out = re + 1j * sign * im
    return out[()] if out.ndim == 0 else out


def _check_order(order):
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order}")


def bessel_k(order, z, scaled=False):
    """Modified Bessel function of the second kind, K_0 or K_1.

    Parameters
    ----------
    order : {0, 1}
    z : complex or array_like
        Argument off the closed negative real axis.
    scaled : bool, optional
        If true return exp(z)*K(z), which stays bounded for large |z|.

    Returns
    -------
    BesselEval
        Real-valued when every input is real and positive.

    Raises
    ------
    DomainError
        On the branch cut or at z = 0.
    OverflowError
        In unscaled mode when Re(z) is so negative that exp(-z) overflows.
    """
    _check_order(order)
    arr = np.asarray(z)
    real_input = not np.iscomplexobj(arr)
    zc = _as_complex(arr)
    if np.any(zc == 0):
        raise DomainError("bessel_k: K is singular at z = 0")
    if np.any(_on_negative_axis(zc)):
        raise DomainError("bessel_k: argument on the branch cut (-inf, 0]")
    if real_input:
        val = special.kve(order, zc.real)
    else:
        val = special.kve(order, zc)
    if not scaled:
        if np.any(zc.real < -700.0):
            raise OverflowError("bessel_k: unscaled value overflows, use scaled=True")
        val = val * np.exp(-(zc.real if real_input else zc))
    val = np.asarray(val)
    return BesselEval(val[()] if val.ndim == 0 else val, bool(scaled), order)


def bessel_i(order, z, scaled=False):
    """Modified Bessel function of the first kind for positive real z.

    Parameters
    ----------
    order : {0, 1}
    z : float or array_like
        Strictly positive arguments.
    scaled : bool, optional
        If true return exp(-z)*I(z).

    Returns
    -------
    BesselEval

    Raises
    ------
    DomainError
        If any argument is not a positive real number.
    """
    _check_order(order)
    arr = np.asarray(z)
    if np.iscomplexobj(arr):
        if np.any(arr.imag != 0):
            raise DomainError("bessel_i: only real arguments are supported")
        arr = arr.real
    arr = arr.astype(float)
    if np.any(~(arr > 0)):
        raise DomainError("bessel_i: argument must be strictly positive")
    val = special.ive(order, arr)
    if not scaled:
        val = val * np.exp(arr)
    val = np.asarray(val)
    return BesselEval(val[()] if val.ndim == 0 else val, bool(scaled), order)


def k0k1_scaled(z):
    """Return (exp(z) K0(z), exp(z) K1(z)) without any checks.

    Internal fast path for callers that have already validated ``z``.
    """
    return special.kve(0, z), special.kve(1, z)


def i0i1_scaled(x):
    """Return (exp(-x) I0(x), exp(-x) I1(x)) for real x >= 0, unchecked."""
    return special.ive(0, x), special.ive(1, x)


def _discriminant(s, params):
    return 1.0 + params.nu * s + params.kappa**2 * s * s


def p_map(s, params):
    """The frequency map p(s) = s / sqrt(1 + nu s + kappa^2 s^2).

    Raises
    ------
    DomainError
        If 1 + nu s + kappa^2 s^2 is a non-positive real number.
    """
    sc = _as_complex(s)
    disc = _discriminant(sc, params)
    if np.any((disc.imag == 0) & (disc.real <= 0)):
        raise DomainError("p_map: 1 + nu s + kappa^2 s^2 lies on the branch cut")
    out = sc / _principal_sqrt_unchecked(disc)
    return out[()] if np.ndim(out) == 0 else out


def extended_sqrt(s, params):
    """sqrt(1 + nu s + kappa^2 s^2) extended by continuity to the closed
    right half-plane.

    On the imaginary axis with ``nu = 0`` and ``|Im s| > 1/kappa`` the radicand
    is negative; the value returned there is the limit from Re(s) > 0, namely
    ``i sgn(Im s) sqrt(kappa^2 Im(s)^2 - 1)``.

    Raises
    ------
    DomainError
        If the radicand is on the negative axis away from the imaginary axis.
    """
    sc = _as_complex(s)
    disc = _discriminant(sc, params)
    cut = (disc.imag == 0) & (disc.real < 0)
    if np.any(cut & (sc.real != 0)):
        raise DomainError("extended_sqrt: argument on a branch cut of the transfer function")
    root = _principal_sqrt_unchecked(disc)
    if np.any(cut):
        limit = 1j * np.sign(sc.imag) * np.sqrt(np.abs(disc.real))
        root = np.where(cut, limit, root)
    root = np.asarray(root)
    return root[()] if root.ndim == 0 else root


def ratio_B(s, params):
    """B(s) = K0(R p(s)) / K1(R p(s)), extended by continuity.

    B(0) = 0, B equals 1 at the zeros of 1 + nu s + kappa^2 s^2 (the limit
    of K0/K1 at infinity), and on the imaginary axis the boundary value
    from the right half-plane is used.

    Parameters
    ----------
    s : complex or array_like
    params : PhysParams

    Returns
    -------
    complex or ndarray
    """
    sc = np.atleast_1d(_as_complex(s))
    out = np.empty(sc.shape, dtype=complex)
    disc = _discriminant(sc, params)
    zero = sc == 0
    branch = (disc == 0) & ~zero
    rest = ~(zero | branch)
    out[zero] = 0.0
    out[branch] = 1.0
    if np.any(rest):
        root = np.atleast_1d(extended_sqrt(sc[rest], params))
        z = params.R * sc[rest] / root
        if np.any(_on_negative_axis(z)):
            raise DomainError("ratio_B: R p(s) falls on the negative real axis")
        k0, k1 = k0k1_scaled(z)
        out[rest] = k0 / k1
    if np.ndim(s) == 0:
        return complex(out[0])
    return out.reshape(np.shape(s))
