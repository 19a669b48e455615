"""Regularizing operators and boundary-layer kernels.

``apply_R0`` inverts ``1 - kappa^2 d/dr d_r`` on (R, inf) with a homogeneous
Dirichlet condition at R, and ``apply_R1`` inverts ``1 - kappa^2 d_r d/dr``
with a homogeneous Neumann condition. Both use the Green's functions built
from I and K Bessel functions of r/kappa:

    R0 f = kappa^-2 [K1(x) B1(r) + I1(x) A1(r)] - c0 K1(x)
    R1 f = kappa^-2 [K0(x) B0(r) + I0(x) A0(r)] + c1 K0(x)

with x = r/kappa, A_n(r) = int_r^inf r' K_n(r'/kappa) f dr',
B_n(r) = int_R^r r' I_n(r'/kappa) f dr' and constants fixing the boundary
condition. The cumulative integrals are evaluated in scaled form
(exp(+-(r'-r)/kappa) factors kept explicit) by product integration: the
smooth part of each integrand is replaced by a local cubic interpolant and
integrated exactly against the exponential. Derivatives of the results come
from the same integrals, with no finite differencing.
"""
from __future__ import annotations

import numpy as np

from .errors import ResolutionError
from .grid import RadialField, RadialGrid, _stencil_starts
from .specfun import i0i1_scaled, k0k1_scaled

_CHUNK = 200.0  # largest span, in units of kappa, handled with one reference point


def exp_moments(a, order=3):
    """J_m(a) = int_0^1 t^m exp(-a t) dt for m = 0..order.

    Power series for a < 2, upward recurrence otherwise.

    Parameters
    ----------
    a : ndarray
        Non-negative decay rates.

    Returns
    -------
    ndarray, shape (len(a), order + 1)
    """
    a = np.asarray(a, dtype=float)
    out = np.empty(a.shape + (order + 1,))
    small = a < 2.0
    if np.any(small):
        s = a[small]
        term = np.ones_like(s)
        acc = np.zeros(s.shape + (order + 1,))
        for k in range(60):
            for m in range(order + 1):
                acc[:, m] += term / (m + k + 1)
            term = term * (-s) / (k + 1)
        out[small] = acc
    big = ~small
    if np.any(big):
        s = a[big]
        e = np.exp(-s)
        j = (1.0 - e) / s
        out[big, 0] = j
        for m in range(1, order + 1):
            j = (m * j - e) / s
            out[big, m] = j
    return out


def _product_weights(tau, a):
    """Weights w_k with sum_k w_k phi(tau_k) ~ int_0^1 phi(t) exp(-a t) dt.

    ``tau`` has shape (m, 4): interpolation nodes in cell units.
    """
    vand = tau[:, :, None] ** np.arange(4)[None, None, :]
    moments = exp_moments(a)
    return np.linalg.solve(np.transpose(vand, (0, 2, 1)), moments[:, :, None])[:, :, 0]


class OperatorWorkspace:
    """Precomputed Bessel data for one grid and one kappa.

    Parameters
    ----------
    grid : RadialGrid
    kappa : float
        Positive dispersion parameter.

    Raises
    ------
    ResolutionError
        If kappa is below twice the smallest mesh spacing.
    """

    def __init__(self, grid: RadialGrid, kappa: float):
        if kappa <= 0:
            raise ResolutionError("operators need kappa > 0")
        hmin = float(np.min(grid.spacing))
        if kappa < 2.0 * hmin:
            raise ResolutionError(
                f"boundary layer under-resolved: kappa={kappa} < 2*min spacing={2 * hmin:.3g}"
            )
        self.grid = grid
        self.kappa = float(kappa)
        r = grid.nodes
        self.r = r
        self.x = r / kappa
        self.xR = grid.R / kappa
        self.Ks0, self.Ks1 = k0k1_scaled(self.x)
        self.Is0, self.Is1 = i0i1_scaled(self.x)
        # exp(-(x - xR)) K_n(x)/K_1(xR) style decay factor
        self.decay = np.exp(-(self.x - self.xR))
        self.ratio_R = self.Is1[0] / self.Ks1[0]
        self.K = self.Ks1 / self.Ks1[0] * self.decay
        self.G = 0.5 * grid.R * self.Ks0 / self.Ks1[0] * self.decay
        self.dK = -self.Ks0 / (kappa * self.Ks1[0]) * self.decay
        self.dG = -0.5 * grid.R * self.Ks1 / (kappa * self.Ks1[0]) * self.decay
        self._build_weights()

    def _build_weights(self):
        r = self.r
        n = len(r)
        h = np.diff(r)
        a = h / self.kappa
        start = _stencil_starts(n, 4, np.arange(n - 1))
        idx = start[:, None] + np.arange(4)
        tau = (r[idx] - r[:-1, None]) / h[:, None]
        self._idx = idx
        self._decay_cell = np.exp(-a)
        # weight exp(-(r' - r_i)/kappa) over cell i, anchored at the left node
        self._w_left = _product_weights(tau, a) * h[:, None]
        # weight exp(-(r_{i+1} - r')/kappa), anchored at the right node
        self._w_right = _product_weights(1.0 - tau, a) * h[:, None]
        # chunk boundaries for the exponential recursions
        bounds = [0]
        for i in range(1, n):
            if (r[i] - r[bounds[-1]]) / self.kappa > _CHUNK:
                bounds.append(i - 1 if i - 1 > bounds[-1] else i)
        if bounds[-1] != n - 1:
            bounds.append(n - 1)
        self._chunks = bounds

    # cumulative integrals -------------------------------------------------
    def _tail_integral(self, phi):
        """A~(r_i) = int_{r_i}^{r_max} phi(r') exp(-(r' - r_i)/kappa) dr'."""
        local = np.einsum("mk,mk->m", self._w_left, phi[self._idx])
        n = len(self.r)
        out = np.zeros(n)
        x = self.x
        carry = 0.0
        b = self._chunks
        for c in range(len(b) - 1, 0, -1):
            lo, hi = b[c - 1], b[c]
            ref = x[lo]
            # contributions of cells lo..hi-1 anchored at their left node j:
            # out_i = sum_{j >= i} exp(-(x_j - x_i)) local_j
            e_neg = np.exp(-(x[lo:hi] - ref))
            suffix = np.cumsum((local[lo:hi] * e_neg)[::-1])[::-1]
            out[lo:hi] = suffix * np.exp(x[lo:hi] - ref) + carry * np.exp(-(x[hi] - x[lo:hi]))
            carry = out[lo]
        return out

    def _head_integral(self, psi):
        """B~(r_i) = int_R^{r_i} psi(r') exp(-(r_i - r')/kappa) dr'."""
        local = np.einsum("mk,mk->m", self._w_right, psi[self._idx])
        n = len(self.r)
        contrib = np.zeros(n)
        contrib[1:] = local
        out = np.zeros(n)
        x = self.x
        carry = 0.0
        b = self._chunks
        for c in range(len(b) - 1):
            lo, hi = b[c], b[c + 1]
            ref = x[hi]
            seg = slice(lo + 1, hi + 1)
            e_neg = np.exp(-(ref - x[seg]))
            prefix = np.cumsum(contrib[seg] * e_neg)
            out[seg] = prefix * np.exp(ref - x[seg]) + carry * np.exp(-(x[seg] - x[lo]))
            carry = out[hi]
        return out

    # operators ------------------------------------------------------------
    def R0(self, f, derivative=False):
        """Apply R0 to array ``f``; optionally also return d_r(R0 f)."""
        k2 = self.kappa**2
        A = self._tail_integral(self.r * self.Ks1 * f)
        B = self._head_integral(self.r * self.Is1 * f)
        corr = self.ratio_R * A[0] * self.decay
        u = (self.Ks1 * B + self.Is1 * A - corr * self.Ks1) / k2
        if not derivative:
            return u
        du = (self.Is0 * A - self.Ks0 * B + corr * self.Ks0) / (k2 * self.kappa)
        return u, du

    def R1(self, f, derivative=False):
        """Apply R1 to array ``f``; optionally also return d/dr(R1 f)."""
        k2 = self.kappa**2
        A = self._tail_integral(self.r * self.Ks0 * f)
        B = self._head_integral(self.r * self.Is0 * f)
        corr = self.ratio_R * A[0] * self.decay
        v = (self.Ks0 * B + self.Is0 * A + corr * self.Ks0) / k2
        if not derivative:
            return v
        dv = (self.Is1 * A - self.Ks1 * B - corr * self.Ks1) / (k2 * self.kappa)
        return v, dv


def _vals(f):
    return f.values if isinstance(f, RadialField) else np.asarray(f, dtype=float)


def kernel_K(ws: OperatorWorkspace) -> RadialField:
    """Boundary-layer kernel K(r) = K1(r/kappa)/K1(R/kappa), with K(R) = 1."""
    return RadialField(ws.grid, ws.K.copy())


def kernel_G(ws: OperatorWorkspace):
    """Kernel G(r) = (R/2) K0(r/kappa)/K1(R/kappa).

    Returns
    -------
    G : RadialField
    G_at_R : float
    kappa_dG_at_R : float
        kappa * G'(R), equal to -R/2.
    """
    return RadialField(ws.grid, ws.G.copy()), float(ws.G[0]), float(ws.kappa * ws.dG[0])


def apply_R0(ws: OperatorWorkspace, f, derivative=False):
    """Solve (1 - kappa^2 d/dr d_r) u = f with u(R) = 0 and u decaying.

    Parameters
    ----------
    ws : OperatorWorkspace
    f : RadialField or ndarray
    derivative : bool, optional
        Also return d_r u, computed from the same integrals.
    """
    res = ws.R0(_vals(f), derivative)
    if derivative:
        return RadialField(ws.grid, res[0]), RadialField(ws.grid, res[1])
    return RadialField(ws.grid, res)


def apply_R1(ws: OperatorWorkspace, f, derivative=False):
    """Solve (1 - kappa^2 d_r d/dr) v = f with v'(R) = 0 and v decaying.

    With ``derivative=True`` the pair (v, dv/dr) is returned.
    """
    res = ws.R1(_vals(f), derivative)
    if derivative:
        return RadialField(ws.grid, res[0]), RadialField(ws.grid, res[1])
    return RadialField(ws.grid, res)


def bounded_kernel_triplet(z):
    """The functions f = z K0 I1, g = z I0 K1 and k = 2 z I1 K1.

    They bound the operators' sup-norms; f + g = 1 by the Wronskian.
    """
    z = np.asarray(z, dtype=float)
    k0, k1 = k0k1_scaled(z)
    i0, i1 = i0i1_scaled(z)
    return z * k0 * i1, z * i0 * k1, 2.0 * z * i1 * k1
