"""Time-domain simulation of the exterior waves coupled to the floating
cylinder.

The unknown is V = (zeta, q, w, delta, delta_dot, zeta_bar, kappa*zeta_bar_dot)
with w = kappa d_r q. The right-hand side never differentiates in time: the
body acceleration D is obtained algebraically from the trace ODE system and
enters the discharge equation through the boundary-layer kernel K.

    d_t zeta = -d_r q
    d_t q    = -d/dr R1(f) - R0(g) - (R/2) D K(r)
    kappa d_t w = f - f_hyd + kappa D G(r)

with f = zeta + eps (zeta^2/2 + q^2/h) - nu w/kappa,
g = eps q^2/(r h) + nu (d/dr ln h) w/kappa and
f_hyd = R1 f + kappa^2 d_r R0 g.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, DomainError
from .grid import RadialField, RadialGrid, make_grid, sponge_profile
from .nonlocal_ops import OperatorWorkspace
from .params import PhysParams
from .shode import (
    TraceState,
    delta_ddot_D,
    frak_f,
    frak_f_bar,
    shode_matrices,
    shode_rhs,
    tau_kappa_sq,
)

__all__ = [
    "PhysParams",
    "AugmentedState",
    "Simulator",
    "Trajectory",
    "checks",
    "existence_times",
    "reconstruct_interior",
    "blow_up_check",
    "compute_f_hyd",
]


@dataclass
class AugmentedState:
    """Fields (zeta, q, w) on the grid plus the trace state Z and time t."""

    grid: RadialGrid
    zeta: np.ndarray
    q: np.ndarray
    w: np.ndarray
    Z: TraceState = field(default_factory=TraceState)
    t: float = 0.0

    @property
    def n(self):
        return self.grid.n

    def pack(self, kappa):
        z = self.Z
        tail = [z.delta, z.delta_dot, z.zeta_bar, kappa * z.zeta_bar_dot]
        return np.concatenate([self.zeta, self.q, self.w, tail])

    @classmethod
    def unpack(cls, grid, V, kappa, t=0.0):
        n = grid.n
        Z = TraceState(V[3 * n], V[3 * n + 1], V[3 * n + 2], V[3 * n + 3] / kappa)
        return cls(grid, V[:n].copy(), V[n : 2 * n].copy(), V[2 * n : 3 * n].copy(), Z, t)

    @classmethod
    def rest(cls, grid, delta0=0.0):
        """Still water with the body displaced by ``delta0`` and at rest."""
        n = grid.n
        return cls(grid, np.zeros(n), np.zeros(n), np.zeros(n), TraceState(delta0, 0.0, 0.0, 0.0))

    def fields(self):
        return RadialField(self.grid, self.zeta), RadialField(self.grid, self.q)


@dataclass
class Trajectory:
    """Recorded observables of a run."""

    t: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    delta_dot: list = field(default_factory=list)
    zeta_bar: list = field(default_factory=list)
    zeta_bar_dot: list = field(default_factory=list)
    E_tot: list = field(default_factory=list)
    flux_jump: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    max_trace_defect: float = 0.0
    final_state: AugmentedState | None = None

    COLUMNS = ("t", "delta", "delta_dot", "zeta_bar", "zeta_bar_dot", "E_tot", "flux_jump")

    def as_array(self):
        return np.column_stack([np.asarray(getattr(self, c), dtype=float) for c in self.COLUMNS])


def existence_times(params, rho=1e-3):
    """Existence horizons T_ODE and T_{eps,kappa,R}.

    Both are returned as ``math.inf`` when epsilon = 0.
    """
    eps, k, nu, R = params.epsilon, params.kappa, params.nu, params.R
    if eps == 0:
        return math.inf, math.inf
    t_ode = k**2 / eps / ((1.0 + nu / k) * (1.0 + nu / k + 1.0 / R))
    alpha = max(2.0 * (R + rho), 9.0)
    lam = math.sqrt(alpha) + max(1.0, 1.0 / R**2) / k
    t_ekr = 0.5 * (-lam + math.sqrt(lam**2 + 4.0 / eps / (1.0 + 1.0 / R)))
    return t_ode, t_ekr


def checks(state0: AugmentedState, params, tol=1e-8):
    """Compatibility of the initial data and the two existence horizons.

    Compatibility means zeta_0(R) = zeta_bar_0 and (d_r q_0)(R) = -zeta_bar_dot_0.
    """
    grid = state0.grid
    dq = grid.D @ state0.q + state0.q / grid.nodes
    scale = 1.0 + np.max(np.abs(state0.zeta)) + np.max(np.abs(state0.q))
    ok = abs(state0.zeta[0] - state0.Z.zeta_bar) <= tol * scale and abs(
        dq[0] + state0.Z.zeta_bar_dot
    ) <= max(tol * scale, 1e-6 * scale)
    t_ode, t_ekr = existence_times(params)
    return {"compatibility": bool(ok), "T_ode": t_ode, "T_eps_kappa_R": t_ekr}


def blow_up_check(state: AugmentedState, params, ceiling=1e6, h_min=0.05):
    """Return a diagnostic dict when the blow-up monitor fires, else None.

    The monitored quantity is max(|1/h|, |zeta|, |q|) + |delta_dot| + 1/|h_i| + |F_ext|.
    """
    h = 1.0 + params.epsilon * state.zeta
    h_i = params.h_inner(state.Z.delta)
    values = np.concatenate([state.zeta, state.q, state.w, state.Z.as_array()])
    if not np.all(np.isfinite(values)):
        return {"reason": "non-finite state", "t": state.t}
    if np.min(h) <= h_min or h_i <= h_min:
        return {"reason": "water column below h_min", "t": state.t, "h_min": float(min(np.min(h), h_i))}
    monitor = (
        max(np.max(np.abs(1.0 / h)), np.max(np.abs(state.zeta)), np.max(np.abs(state.q)))
        + abs(state.Z.delta_dot)
        + 1.0 / abs(h_i)
        + abs(params.force(state.t))
    )
    if monitor > ceiling:
        return {"reason": "monitor above ceiling", "t": state.t, "monitor": float(monitor)}
    return None


class Simulator:
    """Right-hand side, diagnostics and RK4 stepping for one parameter set.

    Parameters
    ----------
    params : PhysParams
        kappa must lie in (0, 1).
    grid : RadialGrid, optional
        Built with :func:`make_grid` from ``r_max`` and ``n`` when omitted.
    sponge : float, optional
        Peak damping rate of the absorbing layer over the last 15% of the
        domain; 0 disables it.
    h_min : float, optional
        Smallest admissible water height.
    ceiling : float, optional
        Threshold of the blow-up monitor.
    """

    def __init__(self, params: PhysParams, grid=None, r_max=40.0, n=1024, sponge=2.0, h_min=0.05, ceiling=1e6):
        params.require_dispersion()
        self.params = params
        if grid is None:
            grid = make_grid(params.R, r_max, n, params.kappa)
        self.grid = grid
        self.ws = OperatorWorkspace(grid, params.kappa)
        self.mats = shode_matrices(params)
        self.G_R = self.mats.G_R
        self.r = grid.nodes
        self.D = grid.D
        self.sponge = sponge * sponge_profile(grid) if sponge else np.zeros(grid.n)
        # damping q by sigma(r) damps kappa d_r q by kappa d_r(sigma q)
        self._sponge_slope = params.kappa * (grid.D @ self.sponge)
        self.h_min = h_min
        self.ceiling = ceiling

    # ------------------------------------------------------------------
    def state_from_vector(self, V, t=0.0):
        return AugmentedState.unpack(self.grid, V, self.params.kappa, t)

    def _d_r(self, u):
        return self.D @ u + u / self.r

    def _height(self, zeta):
        h = 1.0 + self.params.epsilon * zeta
        if np.min(h) <= self.h_min:
            raise DomainError(f"water column collapse: min h = {np.min(h):.3g} <= h_min = {self.h_min}")
        return h

    def forcing_terms(self, zeta, q, w):
        """Return (f, g, h) for the current fields."""
        p = self.params
        eps, nu, k = p.epsilon, p.nu, p.kappa
        h = self._height(zeta)
        drq = w / k
        f = zeta - nu * drq
        g = np.zeros_like(zeta)
        if eps:
            f = f + eps * frak_f(zeta, q, h)
            g = eps * q**2 / (self.r * h)
            if nu:
                g = g + nu * (eps * (self.D @ zeta) / h) * drq
        return f, g, h

    def compute_f_hyd(self, zeta, q, w):
        """Non-local hydrodynamic forcing f_hyd and the pieces needed by the rhs.

        Returns
        -------
        f_hyd : ndarray
        parts : dict
            ``f``, ``dR1f`` (d/dr R1 f), ``R0g`` and ``h``.
        """
        f, g, h = self.forcing_terms(zeta, q, w)
        R1f, dR1f = self.ws.R1(f, derivative=True)
        if np.any(g):
            R0g, drR0g = self.ws.R0(g, derivative=True)
        else:
            R0g = drR0g = np.zeros_like(f)
        f_hyd = R1f + self.params.kappa**2 * drR0g
        return f_hyd, {"f": f, "dR1f": dR1f, "R0g": R0g, "h": h}

    def rhs(self, V, t):
        """Time derivative of the packed state vector.

        Also returns the body acceleration D, useful for diagnostics.
        """
        p = self.params
        n = self.grid.n
        k = p.kappa
        zeta, q, w = V[:n], V[n : 2 * n], V[2 * n : 3 * n]
        Z = TraceState(V[3 * n], V[3 * n + 1], V[3 * n + 2], V[3 * n + 3] / k)
        if p.h_inner(Z.delta) <= self.h_min:
            raise DomainError("water column under the cylinder collapsed")
        f_hyd, parts = self.compute_f_hyd(zeta, q, w)
        F = p.force(t)
        fbar = frak_f_bar(Z, p)
        dZ, Dval = shode_rhs(Z, f_hyd[0], fbar, F, p, self.mats)
        out = np.empty_like(V)
        out[:n] = -self._d_r(q)
        out[n : 2 * n] = -parts["dR1f"] - parts["R0g"] - 0.5 * p.R * Dval * self.ws.K
        out[2 * n : 3 * n] = (parts["f"] - f_hyd) / k + Dval * self.ws.G
        if np.any(self.sponge):
            out[:n] -= self.sponge * zeta
            out[n : 2 * n] -= self.sponge * q
            out[2 * n : 3 * n] -= self.sponge * w + self._sponge_slope * q
        out[3 * n] = dZ[0]
        out[3 * n + 1] = dZ[1]
        out[3 * n + 2] = dZ[2]
        out[3 * n + 3] = k * dZ[3]
        return out, Dval

    def rhs_flux_form(self, V, t):
        """The same derivative assembled from the flux-form decomposition

            d_t u + d/dr F[u] = D S_kappa + S_r + eps nu S_nu

        with the body acceleration from the scalar elimination formula and
        d_r q taken from finite differences of q instead of w. Only the
        (zeta, q) rows and the trace rows are produced; the w row is not
        part of the flux form and is returned as NaN.
        """
        p = self.params
        n = self.grid.n
        eps, nu, k, R = p.epsilon, p.nu, p.kappa, p.R
        zeta, q = V[:n], V[n : 2 * n]
        Z = TraceState(V[3 * n], V[3 * n + 1], V[3 * n + 2], V[3 * n + 3] / k)
        r = self.r
        h = 1.0 + eps * zeta
        dq_dr = self.D @ q
        drq = dq_dr + q / r
        flux_arg = zeta - nu * drq + eps * (0.5 * zeta**2 + q**2 / h)
        F2, dF2 = self.ws.R1(flux_arg, derivative=True)
        S_r = np.zeros(n)
        S_nu = np.zeros(n)
        trace_extra = 0.0
        if eps:
            s_r, drs_r = self.ws.R0(q**2 / (r * h), derivative=True)
            S_r = -eps * s_r
            trace_extra += eps * k**2 * drs_r[0]
            if nu:
                s_nu, drs_nu = self.ws.R0(((self.D @ zeta) / h) * drq, derivative=True)
                S_nu = -s_nu
                trace_extra += eps * nu * k**2 * drs_nu[0]
        f_hyd_bar = F2[0] + trace_extra
        fbar = 0.5 * Z.zeta_bar**2 + (0.5 * R * Z.delta_dot) ** 2 / (1.0 + eps * Z.zeta_bar)
        F = p.force(t)
        Dval = delta_ddot_D(Z, f_hyd_bar, fbar, F, p, self.G_R)
        out = np.full_like(V, np.nan)
        out[:n] = -dq_dr - q / r
        out[n : 2 * n] = -dF2 - 0.5 * R * Dval * self.ws.K + S_r + eps * nu * S_nu
        if np.any(self.sponge):
            out[:n] -= self.sponge * zeta
            out[n : 2 * n] -= self.sponge * q
        zbdd = (f_hyd_bar - eps * fbar - k * self.G_R * Dval - nu * Z.zeta_bar_dot - Z.zeta_bar) / k**2
        out[3 * n] = Z.delta_dot
        out[3 * n + 1] = Dval
        out[3 * n + 2] = Z.zeta_bar_dot
        out[3 * n + 3] = k * zbdd
        return out, Dval

    # ------------------------------------------------------------------
    def stable_dt(self, cfl=0.5):
        """Largest step allowed by the policy min(cfl*min(dr, kappa)/c, kappa/4)."""
        k = self.params.kappa
        c = 1.0 + self.params.epsilon
        return min(cfl * min(float(np.min(self.grid.spacing)), k) / c, 0.25 * k)

    def step(self, V, t, dt):
        """One classical RK4 step."""
        k1, _ = self.rhs(V, t)
        k2, _ = self.rhs(V + 0.5 * dt * k1, t + 0.5 * dt)
        k3, _ = self.rhs(V + 0.5 * dt * k2, t + 0.5 * dt)
        k4, _ = self.rhs(V + dt * k3, t + dt)
        return V + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def energy(self, V):
        """Total energy: exterior fluid plus body and inner column.

        E = 1/2 int (zeta^2 + q^2/h + kappa^2 (d_r q)^2/h) r dr
            + (R^2/4) (delta^2 + tau^2(eps delta) delta_dot^2)
        """
        p = self.params
        n = self.grid.n
        zeta, q, w = V[:n], V[n : 2 * n], V[2 * n : 3 * n]
        h = 1.0 + p.epsilon * zeta
        dens = zeta**2 + q**2 / h + w**2 / h
        e_fluid = 0.5 * float(np.dot(self.grid.quad_weights, dens))
        d, dd = V[3 * n], V[3 * n + 1]
        e_body = 0.25 * p.R**2 * (d**2 + tau_kappa_sq(p.epsilon * d, p) * dd**2)
        return e_fluid + e_body

    def energy_diagnostics(self, V, t=0.0):
        """Energy, contact-line flux jump and local energy-balance residual.

        The inner pressure trace is chosen so that the energy fluxes on both
        sides of the contact line match; the jump is therefore zero up to
        rounding and is reported as a consistency check.
        """
        p = self.params
        n = self.grid.n
        eps, nu, k, R = p.epsilon, p.nu, p.kappa, p.R
        dV, Dval = self.rhs(V, t)
        zeta, q, w = V[:n], V[n : 2 * n], V[2 * n : 3 * n]
        zt, qt, wt = dV[:n], dV[n : 2 * n], dV[2 * n : 3 * n]
        Z = TraceState(V[3 * n], V[3 * n + 1], V[3 * n + 2], V[3 * n + 3] / k)
        h = 1.0 + eps * zeta
        drq = w / k
        ztt = -wt / k
        # contact-line fluxes
        q_bar = -0.5 * R * Z.delta_dot
        h_e = 1.0 + eps * Z.zeta_bar
        h_i = p.h_inner(Z.delta)
        zbdd = dV[3 * n + 3] / k
        zeta_i = Z.delta
        P_bar = (
            Z.zeta_bar
            - zeta_i
            + nu * (Z.zeta_bar_dot - Z.delta_dot)
            + k**2 * (zbdd - Dval)
            + 0.5 * eps * (q_bar**2 / h_e**2 - q_bar**2 / h_i**2)
        )
        f_e = q_bar * (k**2 * zbdd + nu * Z.zeta_bar_dot + Z.zeta_bar + 0.5 * eps * q_bar**2 / h_e**2)
        f_i = q_bar * (k**2 * Dval + nu * Z.delta_dot + zeta_i + 0.5 * eps * q_bar**2 / h_i**2 + P_bar)
        # local balance
        e_t = zeta * zt + q * qt / h - 0.5 * eps * q**2 * zt / h**2 + k**2 * (drq * wt / k) / h
        e_t = e_t - 0.5 * eps * k**2 * drq**2 * zt / h**2
        flux = q * (k**2 * ztt + nu * zt + zeta + 0.5 * eps * q**2 / h**2)
        dflux = self._d_r(flux)
        rem = zeta * ztt / h - drq**3 / (2.0 * h**2) - q * ztt * (self.D @ zeta) / h
        rem_nu = q * zt * zeta / h
        residual = e_t + dflux + nu * drq**2 / h - eps * (k**2 * rem - nu * self._d_r(rem_nu))
        return {
            "E_tot": self.energy(V),
            "flux_jump": float(f_e - f_i),
            "local_residual_field": RadialField(self.grid, residual),
            "delta_ddot": Dval,
            "zeta_bar_ddot": zbdd,
        }

    def initial_vector(self, state: AugmentedState):
        return state.pack(self.params.kappa)

    def integrate(self, state: AugmentedState, T, dt=None, output_every=None, snapshot_every=None, observers=()):
        """Integrate from ``state`` to time ``T`` with RK4.

        Parameters
        ----------
        state : AugmentedState
        T : float
            Final time.
        dt : float, optional
            Requested step, capped at kappa/4. Defaults to :meth:`stable_dt`.
        output_every : float, optional
            Interval between recorded observables (every step by default).
        snapshot_every : float, optional
            Interval between stored (r, zeta, q) snapshots.
        observers : iterable of callables
            Called as ``obs(t, V)`` at each output time.

        Returns
        -------
        Trajectory

        Raises
        ------
        BlowUpError
            When the blow-up monitor fires or a step leaves the admissible
            set; the partial trajectory is attached.
        """
        dt = self.stable_dt() if dt is None else min(dt, 0.25 * self.params.kappa)
        nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
        dt = T / nsteps
        out_stride = 1 if output_every is None else max(1, int(round(output_every / dt)))
        snap_stride = None if snapshot_every is None else max(1, int(round(snapshot_every / dt)))
        V = self.initial_vector(state)
        t0 = state.t
        traj = Trajectory()
        n = self.grid.n
        R = self.params.R

        def record(i, V):
            t = t0 + i * dt
            diag = self.energy_diagnostics(V, t)
            traj.t.append(t)
            traj.delta.append(V[3 * n])
            traj.delta_dot.append(V[3 * n + 1])
            traj.zeta_bar.append(V[3 * n + 2])
            traj.zeta_bar_dot.append(V[3 * n + 3] / self.params.kappa)
            traj.E_tot.append(diag["E_tot"])
            traj.flux_jump.append(diag["flux_jump"])
            for obs in observers:
                obs(t, V)

        record(0, V)
        if snap_stride:
            traj.snapshots.append((t0, V[:n].copy(), V[n : 2 * n].copy()))
        for i in range(1, nsteps + 1):
            try:
                V = self.step(V, t0 + (i - 1) * dt, dt)
            except DomainError as exc:
                # an RK stage left the admissible set: the run has broken down
                diag = {"reason": str(exc), "t": t0 + (i - 1) * dt}
                traj.final_state = self.state_from_vector(V, t0 + (i - 1) * dt)
                raise BlowUpError(f"blow-up detected at t = {diag['t']:.6g}: {exc}", diag, traj) from exc
            current = self.state_from_vector(V, t0 + i * dt)
            diag = blow_up_check(current, self.params, self.ceiling, self.h_min)
            if diag is not None:
                traj.final_state = current
                raise BlowUpError(f"blow-up detected at t = {current.t:.6g}: {diag['reason']}", diag, traj)
            defect = abs(V[n] + 0.5 * R * V[3 * n + 1])
            traj.max_trace_defect = max(traj.max_trace_defect, defect)
            if i % out_stride == 0 or i == nsteps:
                record(i, V)
            if snap_stride and (i % snap_stride == 0):
                traj.snapshots.append((t0 + i * dt, V[:n].copy(), V[n : 2 * n].copy()))
        traj.final_state = self.state_from_vector(V, t0 + nsteps * dt)
        return traj


def reconstruct_interior(Z: TraceState, params, delta_ddot, zeta_bar_ddot=0.0, zeta_e_bar=None, m=65):
    """Fields under the cylinder on [0, R].

    Parameters
    ----------
    Z : TraceState
    params : PhysParams
    delta_ddot : float
        Body acceleration (for instance from ``Simulator.rhs``).
    zeta_bar_ddot : float, optional
        Second time derivative of the exterior trace.
    zeta_e_bar : float, optional
        Exterior elevation trace; defaults to ``Z.zeta_bar``.
    m : int
        Number of sample points on [0, R].

    Returns
    -------
    dict
        ``r``, ``q_i`` = -(r/2) delta_dot, ``zeta_i``, ``P_i`` (pressure divided
        by epsilon, i.e. its linearized form when epsilon = 0) and a
        ``linearized`` flag.
    """
    eps, nu, k, R = params.epsilon, params.nu, params.kappa, params.R
    r = np.linspace(0.0, R, m)
    zeta_e = Z.zeta_bar if zeta_e_bar is None else zeta_e_bar
    if eps > 0:
        zeta_i = Z.delta + (params.h_i_eq - 1.0) / eps
    else:
        zeta_i = Z.delta + (params.h_i_eq - 1.0)
    h_i = params.h_inner(Z.delta)
    h_e = 1.0 + eps * zeta_e
    q_i = -0.5 * r * Z.delta_dot
    bulk = (r**2 - R**2) / (2.0 * h_i) * (0.5 * delta_ddot - 0.75 * eps * Z.delta_dot**2 / h_i)
    boundary = (
        zeta_e
        - zeta_i
        + nu * (Z.zeta_bar_dot - Z.delta_dot)
        + k**2 * (zeta_bar_ddot - delta_ddot)
        + eps * R**2 * Z.delta_dot**2 / 8.0 * (1.0 / h_e**2 - 1.0 / h_i**2)
    )
    return {"r": r, "q_i": q_i, "zeta_i": zeta_i, "P_i": bulk + boundary, "linearized": eps == 0}


def compute_f_hyd(state: AugmentedState, sim: Simulator):
    """Non-local hydrodynamic forcing of ``state`` and its trace at r = R."""
    f_hyd, _ = sim.compute_f_hyd(state.zeta, state.q, state.w)
    return RadialField(state.grid, f_hyd), float(f_hyd[0])
