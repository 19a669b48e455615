import math
import warnings

import numpy as np
import pytest

from cylwave.errors import BlowUpError, DomainError, InvalidArgument
from cylwave.grid import make_grid
from cylwave.nonlocal_ops import OperatorWorkspace
from cylwave.params import PhysParams
from cylwave.shode import TraceState, tau_kappa_sq
from cylwave.simulator import (
    AugmentedState,
    Simulator,
    blow_up_check,
    checks,
    compute_f_hyd,
    existence_times,
    reconstruct_interior,
)


@pytest.fixture(scope="module")
def sim_lin():
    return Simulator(PhysParams(kappa=0.3), r_max=20.0, n=512)


def random_state(sim, rng, amp=0.3):
    """Smooth random state satisfying the trace coupling and w = kappa d_r q."""
    k = sim.params.kappa
    r = sim.grid.nodes
    c = rng.uniform(2, 6, 3)
    a = rng.normal(0, amp, 3)
    b = rng.normal(0, amp, 3)
    zeta = sum(a[j] * np.exp(-((r - c[j]) ** 2)) for j in range(3))
    qq = sum(b[j] * np.exp(-((r - c[j]) ** 2)) for j in range(3))
    dd = rng.normal(0, amp)
    q = qq - qq[0] - 0.5 * sim.params.R * dd * np.exp(-((r - 1) ** 2))
    w = k * (sim.D @ q + q / r)
    Z = TraceState(rng.normal(0, 0.1), dd, zeta[0], -w[0] / k)
    return AugmentedState(sim.grid, zeta, q, w, Z)


def test_params_validation():
    with pytest.raises(InvalidArgument) as err:
        PhysParams(epsilon=1.5, nu=-1, R=0)
    msg = str(err.value)
    assert "epsilon" in msg and "nu" in msg and "R" in msg
    with pytest.warns(RuntimeWarning):
        PhysParams(epsilon=0.5, nu=0.5)
    with pytest.raises(InvalidArgument):
        Simulator(PhysParams(kappa=0.0))


def test_existence_times():
    t_ode, _ = existence_times(PhysParams(epsilon=0.01, kappa=0.1, nu=0.0, R=1.0))
    assert t_ode == pytest.approx(0.5)
    assert existence_times(PhysParams(epsilon=0.0)) == (math.inf, math.inf)
    t1, t2 = existence_times(PhysParams(epsilon=1e-9, kappa=0.1))
    assert t1 > 1e6 and t2 > 1e3


def test_rest_state_checks(sim_lin):
    st = AugmentedState.rest(sim_lin.grid)
    info = checks(st, sim_lin.params)
    assert info["compatibility"]
    assert blow_up_check(st, sim_lin.params) is None
    V = st.pack(0.3)
    dV, D = sim_lin.rhs(V, 0.0)
    assert not np.any(dV) and D == 0
    diag = sim_lin.energy_diagnostics(V)
    assert diag["E_tot"] == 0 and diag["flux_jump"] == 0


def test_rest_is_steady(sim_lin):
    tr = sim_lin.integrate(AugmentedState.rest(sim_lin.grid), 1000 * 0.01, dt=0.01)
    final = tr.final_state.pack(0.3)
    assert np.max(np.abs(final)) <= 1e-12


def test_bump_has_no_initial_elevation_change(sim_lin):
    r = sim_lin.grid.nodes
    st = AugmentedState.rest(sim_lin.grid)
    st.zeta = 0.01 * np.exp(-((r - 5) ** 2))
    dV, _ = sim_lin.rhs(st.pack(0.3), 0.0)
    # outside the absorbing layer the mass equation sees only d_r q = 0
    assert not np.any(dV[: sim_lin.grid.n][sim_lin.sponge == 0])


def test_f_hyd_linear_and_zero(sim_lin):
    r = sim_lin.grid.nodes
    st = AugmentedState.rest(sim_lin.grid)
    field, tr = compute_f_hyd(st, sim_lin)
    assert not np.any(field.values) and tr == 0
    st.zeta = np.exp(-((r - 2) ** 2))
    field, tr = compute_f_hyd(st, sim_lin)
    assert np.allclose(field.values, sim_lin.ws.R1(st.zeta))


def test_f_hyd_trace_of_K_against_dense_quadrature():
    # For f = K the Neumann solution at R is an explicit Bessel-weighted integral;
    # compare with an independent adaptive quadrature of the kernel formula.
    from scipy import integrate, special

    kappa, R = 0.3, 1.0
    sim = Simulator(PhysParams(kappa=kappa), r_max=20.0, n=1024)
    st = AugmentedState.rest(sim.grid)
    st.zeta = sim.ws.K.copy()
    _, tr = compute_f_hyd(st, sim)
    x = R / kappa
    K1R = special.k1(x)
    ratio = special.i1(x) / special.k1(x)
    Kf = lambda s: special.k1(s / kappa) / K1R  # noqa: E731
    A0, _ = integrate.quad(lambda s: s * special.k0(s / kappa) * Kf(s), R, 20.0, epsabs=1e-14, limit=200)
    ref = (special.i0(x) * A0 + ratio * A0 * special.k0(x)) / kappa**2
    assert tr == pytest.approx(ref, rel=1e-6)


def test_flux_form_equivalence():
    rng = np.random.default_rng(11)
    p = PhysParams(epsilon=0.1, kappa=0.3, nu=0.1, F_ext=0.2)
    sim = Simulator(p, r_max=30.0, n=768)
    n = sim.grid.n
    for _ in range(10):
        V = random_state(sim, rng).pack(0.3)
        a, Da = sim.rhs(V, 0.5)
        b, Db = sim.rhs_flux_form(V, 0.5)
        assert Da == pytest.approx(Db, rel=1e-10, abs=1e-12)
        for sl in (slice(0, n), slice(n, 2 * n)):
            assert math.sqrt(sim.grid.integrate((a[sl] - b[sl]) ** 2)) <= 1e-8
        assert np.max(np.abs(a[3 * n :] - b[3 * n :])) <= 1e-10


def test_invariants_along_nonlinear_run():
    p = PhysParams(epsilon=0.05, kappa=0.3, nu=0.05)
    sim = Simulator(p, r_max=20.0, n=1024)
    st = random_state(sim, np.random.default_rng(5), amp=0.2)
    tr = sim.integrate(st, 2.0, snapshot_every=1.0)
    assert tr.max_trace_defect <= 1e-8
    fin = tr.final_state
    dq = sim.D @ fin.q + fin.q / sim.grid.nodes
    from cylwave.grid import RadialField, norms

    h1 = norms(RadialField(sim.grid, fin.q))["H1r"]
    err = math.sqrt(sim.grid.integrate((fin.w - 0.3 * dq) ** 2))
    assert err <= 1e-6 * h1
    assert max(abs(j) for j in tr.flux_jump) <= 1e-8
    assert len(tr.snapshots) == 3


def test_mass_equation_structural(sim_lin):
    st = random_state(sim_lin, np.random.default_rng(2))
    V = st.pack(0.3)
    dV, _ = sim_lin.rhs(V, 0.0)
    n = sim_lin.grid.n
    inner = sim_lin.sponge == 0
    res = dV[:n] + sim_lin.D @ st.q + st.q / sim_lin.grid.nodes
    assert np.max(np.abs(res[inner])) <= 1e-10


def test_energy_input_balance():
    # d/dt E_tot = (R^2/2) F delta_dot when eps = nu = 0; the mismatch is a
    # spatial quadrature effect that shrinks tenfold per grid doubling
    from scipy.integrate import simpson

    p = PhysParams(kappa=0.3, F_ext=lambda t: 0.1 * math.sin(t))
    sim = Simulator(p, r_max=30.0, n=2048)
    st = AugmentedState.rest(sim.grid, 0.05)
    dt = 0.01
    tr = sim.integrate(st, 4.0, dt=dt, output_every=dt)
    t = np.array(tr.t)
    E = np.array(tr.E_tot)
    power = 0.5 * np.array([p.force(x) for x in t]) * np.array(tr.delta_dot)
    work = simpson(power, x=t)
    assert abs(E[-1] - E[0] - work) <= 1e-6 * E.max()


def test_local_energy_residual_small():
    p = PhysParams(kappa=0.3)
    sim = Simulator(p, r_max=30.0, n=1024)
    r = sim.grid.nodes
    st = AugmentedState.rest(sim.grid, 0.05)
    st.zeta = 0.05 * np.exp(-((r - 4) ** 2))
    st.Z = TraceState(0.05, 0, st.zeta[0], 0)
    diag = sim.energy_diagnostics(st.pack(0.3))
    res = diag["local_residual_field"].values
    inner = sim.sponge == 0
    assert math.sqrt(sim.grid.integrate(np.where(inner, res, 0) ** 2)) <= 1e-4


def test_collapse_and_blow_up():
    p = PhysParams(epsilon=0.5, kappa=0.3)
    sim = Simulator(p, r_max=20.0, n=256)
    st = AugmentedState.rest(sim.grid)
    st.zeta[:] = -1.95
    with pytest.raises(DomainError):
        sim.rhs(st.pack(0.3), 0.0)
    assert blow_up_check(st, p)["reason"].startswith("water column")
    st2 = AugmentedState.rest(sim.grid)
    st2.Z = TraceState(0, 2e6, 0, 0)
    assert blow_up_check(st2, p) is not None
    lin = Simulator(PhysParams(kappa=0.3), r_max=20.0, n=256, ceiling=0.5)
    with pytest.raises(BlowUpError) as info:
        lin.integrate(AugmentedState.rest(lin.grid, 0.6), 1.0)
    assert info.value.trajectory is not None


def test_interior_reconstruction():
    p = PhysParams(kappa=0.1)
    out = reconstruct_interior(TraceState(0.2, 0.0, 0.0, 0.0), p, delta_ddot=1.0)
    assert not np.any(out["q_i"]) and out["linearized"]
    r = out["r"]
    assert np.allclose(out["P_i"] - out["P_i"][-1], (r**2 - 1) / 2 * 0.5)
    out = reconstruct_interior(TraceState(0.0, 0.4, 0.0, 0.0), p, 0.0)
    assert out["q_i"][-1] == pytest.approx(-0.5 * 0.4)
    pe = PhysParams(epsilon=0.1, kappa=0.1, h_i_eq=0.9)
    assert reconstruct_interior(TraceState(0.3, 0, 0, 0), pe, 0.0)["zeta_i"] == pytest.approx(0.3 - 1.0)


def test_rk4_order():
    sim = Simulator(PhysParams(kappa=0.3), r_max=20.0, n=512)
    st = AugmentedState.rest(sim.grid, 0.5)
    res = [sim.integrate(st, 1.0, dt=dt).final_state.pack(0.3) for dt in (0.06, 0.03, 0.015)]
    rate = math.log2(np.linalg.norm(res[0] - res[1]) / np.linalg.norm(res[1] - res[2]))
    assert abs(rate - 4) <= 0.3
