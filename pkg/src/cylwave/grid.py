"""Graded radial mesh on [R, r_max], finite differences and weighted
quadrature for the measure r dr.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize, sparse

from .errors import InvalidArgument

# Gauss-Legendre nodes on [0, 1], exact for degree 5.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(3)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _lagrange_basis(nodes, x):
    """Values of the Lagrange basis polynomials of ``nodes`` at points ``x``.

    ``nodes`` has shape (m, k) and ``x`` shape (m, p); the result has shape
    (m, p, k).
    """
    m, k = nodes.shape
    out = np.ones((m, x.shape[1], k))
    for j in range(k):
        for l in range(k):
            if l != j:
                out[:, :, j] *= (x - nodes[:, l, None]) / (nodes[:, j, None] - nodes[:, l, None])
    return out


def _stencil_starts(n, width, centers):
    """First index of a ``width``-point stencil around each center index,
    shifted to stay inside [0, n)."""
    start = centers - (width - 1) // 2
    return np.clip(start, 0, n - width)


def _fd_weights(x0, nodes):
    """First-derivative weights at x0 for arbitrary nodes (Fornberg)."""
    n = len(nodes)
    c = np.zeros((n, 2))
    c1 = 1.0
    c4 = nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, 1)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, 1]


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Immutable mesh of [R, r_max].

    Attributes
    ----------
    R, r_max : float
    nodes : ndarray
        Strictly increasing, ``nodes[0] == R`` and ``nodes[-1] == r_max``.
    boundary_layer_width : float
        Width the clustering near R was designed for.
    """

    R: float
    r_max: float
    nodes: np.ndarray
    boundary_layer_width: float

    @property
    def n(self):
        return len(self.nodes)

    @property
    def spacing(self):
        return np.diff(self.nodes)

    @cached_property
    def quad_weights(self):
        """Weights w with sum(w*g) ~ integral of g(r) r dr over [R, r_max].

        On each cell the integrand's smooth factor g is replaced by its cubic
        interpolant on four neighbouring nodes and integrated exactly against
        r, so polynomials g of degree <= 3 are integrated exactly.
        """
        r = self.nodes
        n = len(r)
        w = np.zeros(n)
        cells = np.arange(n - 1)
        start = _stencil_starts(n, 4, cells)
        idx = start[:, None] + np.arange(4)
        a, b = r[:-1], r[1:]
        h = b - a
        xq = a[:, None] + h[:, None] * _GL_X[None, :]
        basis = _lagrange_basis(r[idx], xq)
        local = np.einsum("mpk,p,mp->mk", basis, _GL_W, xq) * h[:, None]
        np.add.at(w, idx, local)
        return w

    @cached_property
    def D(self):
        """Sparse fourth-order first-derivative matrix (five-point stencils,
        one-sided near both ends)."""
        r = self.nodes
        n = len(r)
        rows, cols, vals = [], [], []
        start = _stencil_starts(n, 5, np.arange(n))
        for i in range(n):
            idx = np.arange(start[i], start[i] + 5)
            wts = _fd_weights(r[i], r[idx])
            rows.extend([i] * 5)
            cols.extend(idx)
            vals.extend(wts)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def integrate(self, values):
        """Integral of ``values * r`` over the grid."""
        return float(np.dot(self.quad_weights, values))

    def header(self):
        """Header block used when a grid is written next to CSV data."""
        return f"# R = {self.R!r}\n# r_max = {self.r_max!r}\n# n = {self.n}\n"


def make_grid(R, r_max, n, boundary_layer_width):
    """Build a graded mesh clustered near r = R.

    The spacing equals ``boundary_layer_width/4`` (or less) on
    ``[R, R + 5*boundary_layer_width]`` and grows smoothly to a constant far
    spacing chosen so that exactly ``n`` nodes fit. If the uniform spacing
    already resolves the layer, the mesh is uniform.

    Parameters
    ----------
    R : float
        Cylinder radius, positive.
    r_max : float
        Truncation radius, larger than ``R + 10*boundary_layer_width``.
    n : int
        Number of nodes, at least 16.
    boundary_layer_width : float
        Positive width of the layer to resolve (kappa in practice).

    Returns
    -------
    RadialGrid

    Raises
    ------
    InvalidArgument
        On violated preconditions or if ``n`` is too small for the layer.
    """
    w = float(boundary_layer_width)
    if not (R > 0 and w > 0 and n >= 16 and r_max > R + 10.0 * w):
        raise InvalidArgument(
            f"make_grid: need R > 0, width > 0, n >= 16 and r_max > R + 10*width "
            f"(got R={R}, r_max={r_max}, n={n}, width={w})"
        )
    n = int(n)
    length = r_max - R
    h_fine = 0.24 * w
    if length / (n - 1) <= h_fine:
        nodes = np.linspace(R, r_max, n)
        return RadialGrid(float(R), float(r_max), nodes, w)

    plateau = 5.0 * w
    ramp = max(5.0 * w, 0.05 * length)
    fine_grid = np.linspace(0.0, length, 200001)

    def spacing(x, h_far):
        u = np.clip((x - plateau) / ramp, 0.0, 1.0)
        blend = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
        return np.exp(np.log(h_fine) + (np.log(h_far) - np.log(h_fine)) * blend)

    def count(h_far):
        dens = 1.0 / spacing(fine_grid, h_far)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(fine_grid))))
        return cum

    def excess(log_h):
        return count(np.exp(log_h))[-1] - (n - 1)

    lo, hi = np.log(h_fine), np.log(length)
    if excess(hi) > 0:
        raise InvalidArgument(f"make_grid: n={n} is too small to resolve the boundary layer")
    if excess(lo) < 0:
        nodes = np.linspace(R, r_max, n)
        return RadialGrid(float(R), float(r_max), nodes, w)
    log_h = optimize.brentq(excess, lo, hi, xtol=1e-14)
    cum = count(np.exp(log_h))
    cum *= (n - 1) / cum[-1]
    nodes = R + np.interp(np.arange(n, dtype=float), cum, fine_grid)
    nodes[0], nodes[-1] = R, r_max
    return RadialGrid(float(R), float(r_max), nodes, w)


class RadialField:
    """Values sampled on a :class:`RadialGrid`.

    Arithmetic with scalars, arrays and other fields on the same grid
    returns new fields.
    """

    __array_priority__ = 100

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n,):
            raise InvalidArgument(f"field has {values.shape} values, grid has {grid.n} nodes")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(grid.nodes))

    @property
    def r(self):
        return self.grid.nodes

    def _other(self, other):
        if isinstance(other, RadialField):
            if other.grid is not self.grid:
                raise InvalidArgument("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return RadialField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RadialField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return RadialField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return RadialField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RadialField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return RadialField(self.grid, -self.values)

    def __len__(self):
        return self.grid.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self):
        return f"RadialField(n={self.grid.n}, max|v|={np.max(np.abs(self.values)):.3g})"

    def to_csv_rows(self):
        return np.column_stack([self.grid.nodes, self.values])


def _values(f):
    return f.values if isinstance(f, RadialField) else np.asarray(f, dtype=float)


def partial_r(f, grid=None):
    """Fourth-order finite-difference derivative of ``f``.

    ``f`` may be a :class:`RadialField` or an array paired with ``grid``.
    """
    grid = f.grid if isinstance(f, RadialField) else grid
    if grid is None or grid.n < 5:
        raise InvalidArgument("partial_r needs a grid with at least five nodes")
    out = grid.D @ _values(f)
    return RadialField(grid, out) if isinstance(f, RadialField) else out


def d_r(f, grid=None):
    """The radial divergence d_r f = f' + f/r."""
    grid = f.grid if isinstance(f, RadialField) else grid
    vals = _values(f)
    out = partial_r(vals, grid) + vals / grid.nodes
    return RadialField(grid, out) if isinstance(f, RadialField) else out


def trace(f):
    """Value at the contact line r = R."""
    return float(_values(f)[0])


def inner(f, g, grid=None):
    """Weighted inner product: integral of f g r dr."""
    grid = f.grid if isinstance(f, RadialField) else grid
    return float(np.dot(grid.quad_weights, _values(f) * _values(g)))


def norms(f, g=None, kappa=0.0, grid=None):
    """Weighted norms of ``f`` (or of ``f - g`` when ``g`` is given).

    Returns
    -------
    dict
        ``L2r`` = (int f^2 r dr)^(1/2),
        ``H1r`` adds int (f')^2 r dr,
        ``H1kappa`` adds kappa^2 int (d_r f)^2 r dr to the L2 part,
        ``H2kappa`` adds kappa^2 int (f' ' + (f/r)')^2 r dr to H1r.
    """
    if isinstance(f, RadialField):
        grid = f.grid
        if isinstance(g, RadialField) and g.grid is not grid:
            raise InvalidArgument("norms: fields are on different grids")
    vals = _values(f) - (0.0 if g is None else _values(g))
    w = grid.quad_weights
    dv = grid.D @ vals
    drv = dv + vals / grid.nodes
    ddrv = grid.D @ drv
    l2 = np.dot(w, vals**2)
    h1 = l2 + np.dot(w, dv**2)
    return {
        "L2r": float(np.sqrt(l2)),
        "H1r": float(np.sqrt(h1)),
        "H1kappa": float(np.sqrt(l2 + kappa**2 * np.dot(w, drv**2))),
        "H2kappa": float(np.sqrt(h1 + kappa**2 * np.dot(w, ddrv**2))),
    }


def sponge_profile(grid, fraction=0.15):
    """Smooth damping profile equal to 0 before the last ``fraction`` of
    the domain and rising to 1 at r_max."""
    start = grid.r_max - fraction * (grid.r_max - grid.R)
    u = np.clip((grid.nodes - start) / (grid.r_max - start), 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
