"""Linear return to equilibrium in the Laplace domain.

With the body released from rest at height delta_0 over still water, the
Laplace transforms of the displacement and its derivatives are

    delta_hat = H(s) delta_0,   (d/dt delta)_hat = -2 delta_0 / P(s),

where P(s) = 2 tau^2 s^2 + 2 nu s + R s sqrt(1 + nu s + kappa^2 s^2) B(s) + 2
and H(s) = (P(s) - 2) / (s P(s)). This module evaluates these functions,
describes their branch cuts, inverts them numerically along a Bromwich line
and provides the diagnostics used to study the long-time decay.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError, InvalidArgument
from .params import PhysParams
from .shode import tau_kappa_sq
from .specfun import extended_sqrt, k0k1_scaled, ratio_B

__all__ = [
    "TransferSample",
    "BranchGeometry",
    "CumminsKernels",
    "InversionResult",
    "DecayModel",
    "denominator_P",
    "transfer",
    "branch_cuts",
    "cummins_kernels",
    "inverse_laplace",
    "delta_time_series",
    "zeta_q_laplace",
    "scan_P_min",
    "decay_fit",
    "hardy_norm_estimate",
    "hardy_bound_H",
    "one_d_mode",
    "eta0",
    "one_d_closed_form",
    "damped_cosine",
]


@dataclass(frozen=True)
class TransferSample:
    """Transfer functions at one point s."""

    s: complex
    P_val: complex
    H: complex
    I: complex
    J: complex
    B_val: complex
    in_domain: bool


@dataclass
class BranchGeometry:
    """Branch points and cuts of sqrt(1 + nu s + kappa^2 s^2).

    ``cuts`` holds dicts with keys ``kind`` ("segment" or "ray"), ``start``
    and either ``end`` (segment) or ``direction`` (ray, unit complex number).
    """

    branch_points: list
    cuts: list
    case_tag: str
    params: PhysParams = field(repr=False)

    def in_domain(self, s, tol=0.0):
        """True when s avoids every cut, i.e. 1 + nu s + kappa^2 s^2 is not in (-inf, 0]."""
        p = self.params
        sc = np.asarray(s, dtype=complex)
        disc = 1.0 + p.nu * sc + p.kappa**2 * sc * sc
        on_cut = (np.abs(disc.imag) <= tol * (1.0 + np.abs(disc))) & (disc.real <= 0)
        out = ~on_cut
        return bool(out) if out.ndim == 0 else out


class DecayModel:
    """Transfer functions of the linear decay test.

    Parameters
    ----------
    params : PhysParams
    one_d : bool
        Replace the Bessel ratio B(s) by 1 (planar geometry).
    """

    def __init__(self, params: PhysParams, one_d=False):
        self.params = params
        self.one_d = one_d
        self.tau2 = tau_kappa_sq(0.0, params)

    # -- Laplace-side functions ---------------------------------------
    def B(self, s):
        sc = np.asarray(s, dtype=complex)
        if self.one_d:
            return np.ones_like(sc)[()]
        return ratio_B(sc, self.params)

    def P(self, s):
        """Denominator P(s) on the closed right half-plane."""
        p = self.params
        sc = np.asarray(s, dtype=complex)
        if np.any(sc.real < 0):
            raise DomainError("P(s) is only evaluated for Re(s) >= 0")
        root = extended_sqrt(sc, p)
        out = 2.0 * self.tau2 * sc * sc + 2.0 * p.nu * sc + p.R * sc * root * self.B(sc) + 2.0
        return out[()] if np.ndim(out) == 0 else out

    def H(self, s):
        """Displacement transfer function (P - 2)/(s P), with H(0) = nu."""
        sc = np.asarray(s, dtype=complex)
        Pv = np.asarray(self.P(sc))
        _guard(Pv)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = (Pv - 2.0) / (sc * Pv)
        if np.any(sc == 0):
            out = np.where(sc == 0, self.params.nu + 0j, out)
        return out[()] if out.ndim == 0 else out

    def I(self, s):
        Pv = np.asarray(self.P(s))
        _guard(Pv)
        out = 1.0 / Pv
        return out[()] if out.ndim == 0 else out

    def J(self, s):
        return np.asarray(s, dtype=complex) * self.I(s)

    def delta_dot_hat(self, s, delta0=1.0):
        """Laplace transform of the velocity, -2 delta_0 / P(s)."""
        return -2.0 * delta0 * self.I(s)

    def delta_ddot_hat(self, s, delta0=1.0):
        return np.asarray(s, dtype=complex) * self.delta_dot_hat(s, delta0)

    def transfer(self, s):
        s = complex(s)
        Pv = complex(self.P(s))
        _guard(Pv)
        H = self.params.nu + 0j if s == 0 else (Pv - 2.0) / (s * Pv)
        geom = branch_cuts(self.params)
        return TransferSample(s, Pv, H, 1.0 / Pv, s / Pv, complex(self.B(s)), bool(geom.in_domain(s)))

    def acceleration_jump(self, delta0=1.0):
        """Initial acceleration -delta_0/(tau^2 + kappa G(R)), the large-s limit of s^2 I."""
        p = self.params
        kG = 0.0
        if p.kappa > 0:
            if self.one_d:
                kG = 0.5 * p.R * p.kappa
            else:
                k0, k1 = k0k1_scaled(p.R / p.kappa)
                kG = 0.5 * p.R * p.kappa * float(k0 / k1)
        return -delta0 / (self.tau2 + kG)

    # -- one-dimensional extras ---------------------------------------
    def eta0(self):
        return eta0(self.params)

    def exp_weighted_tail(self, t, delta):
        """Running integral of |delta|^2 exp(eta0 t) (trapezoid), used to check
        whether the exponentially weighted norm converges."""
        w = np.abs(delta) ** 2 * np.exp(self.eta0() * np.asarray(t))
        return _cumtrapz(w, t)


def _guard(Pv):
    if np.any(np.abs(Pv) < 1e-300):
        raise DomainError("|P(s)| below 1e-300: division guard")


def _cumtrapz(y, t):
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def denominator_P(s, params, one_d=False):
    """P(s) = 2 tau^2 s^2 + 2 nu s + R s sqrt(1 + nu s + kappa^2 s^2) B(s) + 2.

    On the imaginary axis with nu = 0 and |Im s| > 1/kappa the square root
    is taken as its limit from the right half-plane.
    """
    return DecayModel(params, one_d).P(s)


def transfer(s, params, one_d=False) -> TransferSample:
    """Evaluate P, H, I = 1/P, J = s/P and B at ``s``."""
    return DecayModel(params, one_d).transfer(s)


def one_d_mode(params) -> DecayModel:
    """Decay model with B replaced by 1."""
    return DecayModel(params, one_d=True)


def eta0(params):
    """Exponential rate eta_0 of the weighted space in which delta lives.

    nu/(2 kappa^2) for kappa > 0, 1/nu for kappa = 0 < nu and
    R/(2 tau^2) when kappa = nu = 0.
    """
    if params.kappa > 0:
        return params.nu / (2.0 * params.kappa**2)
    if params.nu > 0:
        return 1.0 / params.nu
    return params.R / (2.0 * tau_kappa_sq(0.0, params))


def branch_cuts(params) -> BranchGeometry:
    """Branch points and cuts of sqrt(1 + nu s + kappa^2 s^2)."""
    k, nu = params.kappa, params.nu
    if k == 0:
        if nu == 0:
            return BranchGeometry([], [], "kappa_zero", params)
        b = -1.0 / nu
        return BranchGeometry([complex(b)], [{"kind": "ray", "start": complex(b), "direction": -1.0 + 0j}], "kappa_zero", params)
    if nu == 0:
        pts = [1j / k, -1j / k]
        cuts = [
            {"kind": "ray", "start": 1j / k, "direction": 1j},
            {"kind": "ray", "start": -1j / k, "direction": -1j},
        ]
        return BranchGeometry(pts, cuts, "nu_zero", params)
    centre = -nu / (2.0 * k**2)
    disc = nu**2 - 4.0 * k**2
    if disc >= 0:
        d = math.sqrt(disc) / (2.0 * k**2)
        pts = [complex(centre + d), complex(centre - d)]
        cuts = [
            {"kind": "segment", "start": pts[1], "end": pts[0]},
            {"kind": "ray", "start": complex(centre), "direction": 1j},
            {"kind": "ray", "start": complex(centre), "direction": -1j},
        ]
        return BranchGeometry(pts, cuts, "nu_ge_2kappa", params)
    d = math.sqrt(-disc) / (2.0 * k**2)
    pts = [complex(centre, d), complex(centre, -d)]
    cuts = [
        {"kind": "ray", "start": pts[0], "direction": 1j},
        {"kind": "ray", "start": pts[1], "direction": -1j},
    ]
    return BranchGeometry(pts, cuts, "nu_lt_2kappa", params)


# ---------------------------------------------------------------------------
# Cummins kernels


@dataclass
class CumminsKernels:
    """Memory kernels of the integro-differential equation for delta.

    The Laplace-side kernels satisfy
    kappa s + sqrt(nu s) k0_hat(s) + k1_hat(s) = sqrt(1 + nu s + kappa^2 s^2).
    """

    params: PhysParams

    def k_B_hat(self, s):
        return 0.5 * self.params.R * ratio_B(s, self.params)

    def k0_hat(self, s):
        k, nu = self.params.kappa, self.params.nu
        sc = np.asarray(s, dtype=complex)
        if nu == 0:
            return np.zeros_like(sc)[()]
        out = 1.0 / (np.sqrt(1.0 + k**2 * sc / nu) + (k / math.sqrt(nu)) * np.sqrt(sc))
        return out[()] if out.ndim == 0 else out

    def k1_hat(self, s):
        k, nu = self.params.kappa, self.params.nu
        sc = np.asarray(s, dtype=complex)
        out = 1.0 / (np.sqrt(1.0 + nu * sc + k**2 * sc * sc) + np.sqrt(nu * sc + k**2 * sc * sc))
        return out[()] if out.ndim == 0 else out

    def k1_time(self, t, printed=False):
        """Closed-form k1(t).

        nu = 0 < kappa: J1(t/kappa)/t. kappa = 0 < nu:
        sqrt(nu) (1 - exp(-t/nu)) / sqrt(4 pi t^3); with ``printed=True`` the
        denominator sqrt(2 pi t^3) from the reference table is used instead,
        whose transform is sqrt(2) k1_hat.
        """
        k, nu = self.params.kappa, self.params.nu
        t = np.asarray(t, dtype=float)
        if nu == 0 and k > 0:
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.where(t == 0, 0.5 / k, special.j1(t / k) / t)
            return out
        if k == 0 and nu > 0:
            c = 2.0 if printed else 4.0
            with np.errstate(invalid="ignore", divide="ignore"):
                return math.sqrt(nu) * -np.expm1(-t / nu) / np.sqrt(c * math.pi * t**3)
        raise InvalidArgument("no closed form of k1(t) for kappa > 0 and nu > 0")

    def k0_time(self, t, verify=False):
        """Tabulated k0(t) for kappa, nu > 0, exposed verbatim:
        (kappa / nu^(1/4)) (1 - exp(-t nu/kappa^2)) / (2 pi t^3).

        With ``verify=True`` the forward Laplace transform at s = 1 is
        compared with k0_hat(1) and a ``RuntimeWarning`` is issued on mismatch.
        """
        k, nu = self.params.kappa, self.params.nu
        if nu == 0:
            return np.zeros_like(np.asarray(t, dtype=float))
        if k == 0:
            raise InvalidArgument("k0 is a Dirac mass when kappa = 0")
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = k / nu**0.25 * -np.expm1(-t * nu / k**2) / (2.0 * math.pi * t**3)
        if verify:
            from scipy import integrate

            val, _ = integrate.quad(lambda x: k / nu**0.25 * -math.expm1(-x * nu / k**2) / (2 * math.pi * x**3) * math.exp(-x), 1e-12, np.inf, limit=200)
            ref = float(np.real(self.k0_hat(1.0)))
            if not math.isfinite(val) or abs(val - ref) > 1e-6 * abs(ref):
                warnings.warn(f"tabulated k0(t) does not transform to k0_hat: {val} vs {ref}", RuntimeWarning, stacklevel=2)
        return out


def cummins_kernels(params) -> CumminsKernels:
    return CumminsKernels(params)


# ---------------------------------------------------------------------------
# Numerical inversion


@dataclass
class InversionResult:
    t: np.ndarray
    values: np.ndarray
    sigma: float
    n_freq: int
    sigma_check: float
    converged: bool


def _fit_tail(F_hat, jump=None):
    """Coefficients b1..b3 of F(s) ~ b1 u + b2 u^2 + b3 u^3, u = 1/(s+1),
    fitted on large real s. Any values give an exact decomposition; good
    values make the remainder smooth at t = 0."""
    s = np.logspace(2.0, 4.0, 16)
    u = 1.0 / (s + 1.0)
    y = np.real(np.asarray(F_hat(s + 0j))) * (s + 1.0)
    A = np.vander(u, 4, increasing=True)
    b = np.linalg.lstsq(A, y, rcond=None)[0]
    if jump is not None:
        b[0] = jump
    return b[:3]


def _tail_inverse(b, t):
    return np.exp(-t) * (b[0] + b[1] * t + 0.5 * b[2] * t * t)


def _tail_hat(b, s):
    u = 1.0 / (s + 1.0)
    return u * (b[0] + u * (b[1] + u * b[2]))


def _bromwich(F_hat, h, n, sigma, tail, window):
    period = n * h
    omega = 2.0 * math.pi * np.arange(n // 2 + 1) / period
    s = sigma + 1j * omega
    G = np.asarray(F_hat(s), dtype=complex) - _tail_hat(tail, s)
    if window > 0:
        w_max = omega[-1]
        start = (1.0 - window) * w_max
        x = np.clip((omega - start) / (w_max - start), 0.0, 1.0)
        G = G * 0.5 * (1.0 + np.cos(math.pi * x))
    g = np.fft.irfft(G, n) / h
    tt = h * np.arange(n)
    return tt, g * np.exp(sigma * tt) + _tail_inverse(tail, tt)


def inverse_laplace(F_hat, t_grid, sigma=None, n_freq=None, jump=None, omega_max=None, window=0.05, check=True, tol=1e-6, strict=False):
    """Invert a Laplace transform along the vertical line Re(s) = sigma.

    The transform is sampled at s = sigma + i omega_k on an FFT grid whose
    period is several times the last requested time and the inverse FFT is
    rescaled by exp(sigma t). Before the transform, a fitted three-term
    expansion in 1/(s+1) is subtracted and its exact inverse added back,
    which removes the jump and kinks at t = 0. The result is then re-computed with sigma/2 (and twice as
    many frequencies) and the two are compared.

    Parameters
    ----------
    F_hat : callable
        Vectorized evaluator of the transform on complex arrays.
    t_grid : array_like
        Uniform, non-negative times starting at a multiple of the spacing.
    sigma : float, optional
        Abscissa of the Bromwich line; default min(0.05, 10/t_max).
    n_freq : int, optional
        Number of FFT points; by default the smallest power of two giving a
        period of at least max(35/sigma, 1.5 t_max).
    jump : float, optional
        Known value f(0+); fitted from large real s when omitted.
    omega_max : float, optional
        Largest resolved frequency; default max(pi/dt, 400).
    window : float
        Fraction of the band rolled off with a raised cosine.
    check : bool
        Perform the sigma-halving check.
    tol : float
        Relative tolerance of the check.
    strict : bool
        Raise ``ConvergenceError`` instead of flagging when the check fails.

    Returns
    -------
    InversionResult
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or t[0] < 0:
        raise InvalidArgument("t_grid must be a non-negative 1-D grid with at least two points")
    dt = t[1] - t[0]
    if np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(1.0, dt):
        raise InvalidArgument("t_grid must be uniform")
    t_max = t[-1]
    if sigma is None:
        sigma = min(0.05, 10.0 / t_max)
    if omega_max is None:
        omega_max = max(math.pi / dt, 400.0)
    m = max(1, int(math.ceil(dt * omega_max / math.pi - 1e-9)))
    h = dt / m
    offset = t[0] / h
    if abs(offset - round(offset)) > 1e-6:
        raise InvalidArgument("t_grid must start at a multiple of its spacing")
    offset = int(round(offset))
    if n_freq is None:
        need = max(35.0 / sigma, 1.5 * t_max) / h
        n_freq = 1 << int(math.ceil(math.log2(need)))
    tail = _fit_tail(F_hat, jump)
    idx = offset + m * np.arange(t.size)
    if idx[-1] >= n_freq:
        raise InvalidArgument("n_freq too small for the requested time span")
    _, f = _bromwich(F_hat, h, n_freq, sigma, tail, window)
    values = f[idx]
    err = 0.0
    ok = True
    if check:
        _, f2 = _bromwich(F_hat, h, 2 * n_freq, 0.5 * sigma, tail, window)
        err = float(np.max(np.abs(f2[idx] - values)) / max(np.max(np.abs(values)), 1e-300))
        ok = err <= tol
        if not ok and strict:
            raise ConvergenceError(f"sigma-halving check failed: relative difference {err:.3g} > {tol:g}")
    return InversionResult(t, values, float(sigma), int(n_freq), err, ok)


def delta_time_series(params, delta0, t_grid, one_d=False, **kw):
    """delta, delta_dot and delta_ddot of the decay test by numerical inversion.

    Returns
    -------
    dict
        ``t``, ``delta``, ``delta_dot``, ``delta_ddot``, ``sigma_check`` (largest
        relative difference of the three sigma-halving checks) and ``converged``.
    """
    model = DecayModel(params, one_d)
    r0 = inverse_laplace(lambda s: delta0 * model.H(s), t_grid, jump=delta0, **kw)
    r1 = inverse_laplace(lambda s: model.delta_dot_hat(s, delta0), t_grid, jump=0.0, **kw)
    r2 = inverse_laplace(lambda s: model.delta_ddot_hat(s, delta0), t_grid, jump=model.acceleration_jump(delta0), **kw)
    results = (r0, r1, r2)
    return {
        "t": r0.t,
        "delta": r0.values,
        "delta_dot": r1.values,
        "delta_ddot": r2.values,
        "sigma_check": max(r.sigma_check for r in results),
        "converged": all(r.converged for r in results),
    }


def one_d_closed_form(params, delta0, t):
    """Exact displacement of the planar mode for kappa = nu = 0.

    The transform (2 tau^2 s + R)/(2 tau^2 s^2 + R s + 2) inverts to a damped
    oscillation with rate R/(4 tau^2) and frequency sqrt(16 tau^2 - R^2)/(4 tau^2).
    """
    tau2 = tau_kappa_sq(0.0, params)
    R = params.R
    t = np.asarray(t, dtype=float)
    a = R / (4.0 * tau2)
    om = math.sqrt(16.0 * tau2 - R**2) / (4.0 * tau2)
    return delta0 * np.exp(-a * t) * (np.cos(om * t) + a / om * np.sin(om * t))


def damped_cosine(params, delta0, t):
    """delta_0 cos(omega t) exp(-R t/(2 tau^2)) with omega = sqrt(4 tau^2 - R^2)/(2 tau^2)."""
    tau2 = tau_kappa_sq(0.0, params)
    R = params.R
    om = math.sqrt(4.0 * tau2 - R**2) / (2.0 * tau2)
    t = np.asarray(t, dtype=float)
    return delta0 * np.cos(om * t) * np.exp(-R * t / (2.0 * tau2))


# ---------------------------------------------------------------------------
# Fields, scans, decay diagnostics


def zeta_q_laplace(r, s, delta_dot_hat, params):
    """Laplace transforms of elevation and discharge outside the body.

    q_hat = -(R/2) delta_dot_hat K1(r p)/K1(R p),
    zeta_hat = -(R/2) delta_dot_hat K0(r p)/(sqrt(1 + nu s + kappa^2 s^2) K1(R p)),
    with p = s/sqrt(1 + nu s + kappa^2 s^2).
    """
    R = params.R
    r = np.asarray(r, dtype=float)
    if np.any(r < R):
        raise DomainError("zeta_q_laplace needs r >= R")
    s = complex(s)
    geom = branch_cuts(params)
    if s.real < 0 or (s.real > 0 and not geom.in_domain(s)):
        raise DomainError("s outside the holomorphy domain")
    if s == 0:
        raise DomainError("s = 0 excluded")
    root = complex(extended_sqrt(s, params))
    p = s / root
    k0r = special.kve(0, r * p)
    k1r = special.kve(1, r * p)
    k1R = special.kve(1, R * p)
    decay = np.exp(-(r - R) * p)
    q_hat = -0.5 * R * delta_dot_hat * k1r / k1R * decay
    zeta_hat = -0.5 * R * delta_dot_hat * k0r / (root * k1R) * decay
    return zeta_hat, q_hat


def scan_P_min(region, grid_n, params, one_d=False):
    """Minimum of |P| over a uniform grid of a rectangle in the closed right half-plane.

    Parameters
    ----------
    region : tuple
        (x_min, x_max, y_min, y_max) with x_min >= 0.
    grid_n : int or tuple
        Points per axis.

    Returns
    -------
    dict
        ``min_abs``, ``argmin``, ``x``, ``y``, ``P`` (2-D array indexed [iy, ix])
        and ``zero_crossing_map`` with the interpolated points where Re P and
        Im P change sign along grid lines (keys "re", "im") and the centres
        of the cells in which both change sign (key "both"). The minimum is numerical evidence
        for the non-vanishing of P, not a proof.
    """
    x0, x1, y0, y1 = region
    if x0 < 0:
        raise DomainError("scan region must lie in the closed right half-plane")
    nx, ny = (grid_n, grid_n) if np.isscalar(grid_n) else grid_n
    x = np.linspace(x0, x1, nx)
    y = np.linspace(y0, y1, ny)
    S = x[None, :] + 1j * y[:, None]
    P = np.asarray(DecayModel(params, one_d).P(S.ravel())).reshape(S.shape)
    A = np.abs(P)
    iy, ix = np.unravel_index(np.argmin(A), A.shape)
    crossings = {
        "re": _crossings(P.real, x, y),
        "im": _crossings(P.imag, x, y),
        "both": _common_cells(P, x, y),
    }
    return {
        "min_abs": float(A[iy, ix]),
        "argmin": complex(S[iy, ix]),
        "x": x,
        "y": y,
        "P": P,
        "zero_crossing_map": crossings,
        "label": "Assumption check (numerical)",
    }


def _crossings(F, x, y):
    pts = []
    # along x
    a, b = F[:, :-1], F[:, 1:]
    iy, ix = np.nonzero(np.signbit(a) != np.signbit(b))
    frac = a[iy, ix] / (a[iy, ix] - b[iy, ix])
    pts.extend(zip(x[ix] + frac * (x[ix + 1] - x[ix]), y[iy]))
    a, b = F[:-1, :], F[1:, :]
    iy, ix = np.nonzero(np.signbit(a) != np.signbit(b))
    frac = a[iy, ix] / (a[iy, ix] - b[iy, ix])
    pts.extend(zip(x[ix], y[iy] + frac * (y[iy + 1] - y[iy])))
    return np.array(pts, dtype=float).reshape(-1, 2)


def _common_cells(P, x, y):
    """Centres of grid cells whose corners carry both signs of Re P and of Im P."""

    def mixed(F):
        c = np.stack([F[:-1, :-1], F[:-1, 1:], F[1:, :-1], F[1:, 1:]])
        neg = np.signbit(c)
        return neg.any(axis=0) & ~neg.all(axis=0)

    iy, ix = np.nonzero(mixed(P.real) & mixed(P.imag))
    return np.column_stack([0.5 * (x[ix] + x[ix + 1]), 0.5 * (y[iy] + y[iy + 1])]).reshape(-1, 2)


def _peaks(t, a):
    """Local maxima of |a| refined by a parabola through three samples."""
    a = np.abs(np.asarray(a, dtype=float))
    i = np.nonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:]))[0] + 1
    if i.size == 0:
        return np.array([]), np.array([])
    ym, y0, yp = a[i - 1], a[i], a[i + 1]
    den = ym - 2.0 * y0 + yp
    with np.errstate(invalid="ignore", divide="ignore"):
        off = np.where(den != 0, 0.5 * (ym - yp) / den, 0.0)
    off = np.clip(off, -0.5, 0.5)
    dt = t[1] - t[0]
    return t[i] + off * dt, y0 - 0.25 * (ym - yp) * off


def decay_fit(delta_samples, t_grid, betas=(0.5, 1.0, 1.5, 2.0)):
    """Weighted tails and envelope exponent of a decaying signal.

    Parameters
    ----------
    delta_samples, t_grid : array_like
        Uniformly sampled signal.
    betas : sequence of float

    Returns
    -------
    dict
        ``weighted_tails`` maps beta to the trapezoid value of
        int |delta|^2 t^beta dt; ``envelope_exponent`` is the log-log slope of
        the envelope over the second half of the record, or the string
        "super-polynomial" when the envelope is better described by an
        exponential.
    """
    t = np.asarray(t_grid, dtype=float)
    d = np.asarray(delta_samples, dtype=float)
    if t[-1] - t[0] < 200.0:
        warnings.warn("decay_fit: horizon shorter than 200, tails are unreliable", RuntimeWarning, stacklevel=2)
    tails = {b: float(np.trapezoid(d**2 * t**b, t)) for b in betas}
    tp, ap = _peaks(t, d)
    if tp.size < 4:
        tp, ap = t[t > 0], np.abs(d[t > 0])
    keep = (tp >= t[0] + 0.5 * (t[-1] - t[0])) & (ap > 0)
    tp, ap = tp[keep], ap[keep]
    if tp.size < 3:
        return {"weighted_tails": tails, "envelope_exponent": "super-polynomial"}
    la = np.log(ap)
    lt = np.log(tp)
    c_pow = np.polyfit(lt, la, 1)
    c_exp = np.polyfit(tp, la, 1)
    r_pow = np.sum((np.polyval(c_pow, lt) - la) ** 2)
    r_exp = np.sum((np.polyval(c_exp, tp) - la) ** 2)
    if c_exp[0] < 0 and r_exp < 0.1 * r_pow:
        exponent = "super-polynomial"
    else:
        exponent = float(c_pow[0])
    return {"weighted_tails": tails, "envelope_exponent": exponent}


def hardy_norm_estimate(F_hat, params=None, etas=(0.0, 0.01, 0.1, 0.5), n=200001):
    """Numerical sup over eta of int |F(eta + i omega)|^2 d omega.

    The integral over the real line is computed with omega = tan(theta) and
    the trapezoid rule in theta. Returns the squared norm.
    """
    theta = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n)[1:-1]
    omega = np.tan(theta)
    jac = 1.0 / np.cos(theta) ** 2
    best = 0.0
    for eta in etas:
        vals = np.abs(np.asarray(F_hat(eta + 1j * omega))) ** 2 * jac
        best = max(best, float(np.trapezoid(vals, theta)))
    return best


def hardy_bound_H(params, P_min, constant=10.0):
    """Upper bound of the norm of H in terms of P_min.

    C (k^(-1/2) (1 + R^2 sqrt(1 + nu/k) + 1/k) / P_min + k^(-1/2)) with
    k = kappa, or 1 when kappa = 0.
    """
    ks = params.kappa if params.kappa > 0 else 1.0
    R, nu = params.R, params.nu
    return constant * (ks**-0.5 * (1.0 + R**2 * math.sqrt(1.0 + nu / ks) + 1.0 / ks) / P_min + ks**-0.5)
