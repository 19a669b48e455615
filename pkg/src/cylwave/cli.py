"""Command line driver.

Every command writes its artifacts into an output directory (``--out``, or
the ``CYLWAVE_OUT`` environment variable, or ``./cylwave_out``). Data files
are CSV with the column names on the first line and 17 significant digits;
run metadata goes to ``run.meta`` as ``key = value`` lines. Files are first
written with a ``.partial`` suffix and renamed once complete, so an aborted
run leaves its partial results behind under that suffix.

Exit codes: 0 success, 2 configuration error, 3 numerical domain error,
4 blow-up, 5 failed inversion check.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BlowUpError, ConvergenceError, CylwaveError, InvalidArgument
from .params import PhysParams

COMMANDS = ("simulate", "decay", "scan-denominator", "branch-cuts", "specfun-check", "operators-check")

# key -> (type, default)
OPTIONS = {
    "epsilon": (float, 0.0),
    "kappa": (float, 0.1),
    "nu": (float, 0.0),
    "R": (float, 1.0),
    "tau_buoy_sq": (float, 1.0),
    "h_i_eq": (float, 1.0),
    "F_ext": (float, 0.0),
    "r_max": (float, 40.0),
    "n": (int, 1024),
    "T": (float, 10.0),
    "dt": (float, None),
    "output_every": (float, None),
    "snapshot_every": (float, None),
    "delta0": (float, 0.1),
    "bump_amplitude": (float, 0.0),
    "bump_center": (float, 5.0),
    "bump_width": (float, 1.0),
    "sponge": (float, 2.0),
    "h_min": (float, 0.05),
    "sigma": (float, None),
    "n_freq": (int, None),
    "t_max": (float, 50.0),
    "dt_out": (float, 0.05),
    "betas": (str, "0.5,1,1.5,2"),
    "one_d": (bool, False),
    "region": (str, "0,5,-20,20"),
    "grid_n": (int, 400),
    "threads": (int, None),
}


@dataclass
class RunConfig:
    """Validated configuration of one command."""

    command: str
    params: PhysParams
    options: dict = field(default_factory=dict)
    out: Path = Path("cylwave_out")

    def __getattr__(self, name):
        opts = self.__dict__.get("options", {})
        if name in opts:
            return opts[name]
        raise AttributeError(name)


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _convert(key, raw, errors):
    typ = OPTIONS[key][0]
    try:
        if typ is bool:
            return _parse_bool(raw)
        return typ(raw)
    except (TypeError, ValueError):
        errors.append(f"{key}: cannot interpret {raw!r} as {typ.__name__}")
        return None


def read_config_file(path, errors):
    """Read flat ``key = value`` lines; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{path}:{lineno}: expected 'key = value'")
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            errors.append(f"{key}: unknown key in {path}")
            continue
        values[key] = raw
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="cylwave", description="Floating cylinder in Boussinesq waves.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value file; flags take precedence")
    parser.add_argument("--out", help="output directory (default $CYLWAVE_OUT or ./cylwave_out)")
    for key, (typ, _) in OPTIONS.items():
        flag = "--" + key.replace("_", "-")
        names = [flag]
        if key == "R":
            names = ["--R", "--radius"]
        elif key == "F_ext":
            names = ["--F-ext", "--force"]
        parser.add_argument(*names, dest=key, default=None, metavar=key.upper())
    return parser


def parse_config(argv, config_file=None) -> RunConfig:
    """Build a validated :class:`RunConfig` from flags and an optional file.

    Raises
    ------
    InvalidArgument
        Listing every unknown key, type mismatch and violated constraint.
    """
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise InvalidArgument("invalid command line") from exc
    errors = []
    raw = {}
    cfg_path = config_file or ns.config
    if cfg_path:
        raw.update(read_config_file(cfg_path, errors))
    for key in OPTIONS:
        value = getattr(ns, key)
        if value is not None:
            raw[key] = value
    opts = {}
    for key, (_, default) in OPTIONS.items():
        opts[key] = _convert(key, raw[key], errors) if key in raw else default
    params = None
    phys = {k: opts[k] for k in ("epsilon", "kappa", "nu", "R", "tau_buoy_sq", "h_i_eq", "F_ext")}
    if all(v is not None for v in phys.values()):
        try:
            params = PhysParams(**phys)
        except InvalidArgument as exc:
            errors.append(str(exc))
    cmd = ns.command
    if params is not None and cmd in ("simulate", "operators-check") and not 0 < params.kappa < 1:
        errors.append(f"kappa: must lie in (0, 1) for {cmd}, got {params.kappa}")
    positive = ["r_max", "T", "t_max", "dt_out", "bump_width", "h_min"]
    for key in positive + ["dt", "output_every", "snapshot_every", "sigma"]:
        v = opts.get(key)
        if v is not None and not (v > 0):
            errors.append(f"{key}: must be positive, got {v}")
    if opts["n"] is not None and opts["n"] < 16:
        errors.append(f"n: at least 16 nodes required, got {opts['n']}")
    if opts["grid_n"] is not None and opts["grid_n"] < 2:
        errors.append(f"grid_n: at least 2 required, got {opts['grid_n']}")
    if opts["sponge"] is not None and opts["sponge"] < 0:
        errors.append(f"sponge: must be non-negative, got {opts['sponge']}")
    if opts["r_max"] is not None and params is not None and opts["r_max"] <= params.R:
        errors.append(f"r_max: must exceed R = {params.R}")
    for key, count in (("region", 4), ("betas", None)):
        try:
            vals = [float(x) for x in str(opts[key]).split(",")]
            if count and len(vals) != count:
                raise ValueError
            opts[key] = vals
        except ValueError:
            errors.append(f"{key}: expected {'4' if count else 'a list of'} comma-separated numbers")
    if isinstance(opts["region"], list) and len(opts["region"]) == 4:
        x0, x1, y0, y1 = opts["region"]
        if x0 < 0 or x1 <= x0 or y1 <= y0:
            errors.append("region: need 0 <= x_min < x_max and y_min < y_max")
    if opts["threads"] is None:
        opts["threads"] = os.cpu_count() or 1
    elif opts["threads"] < 1:
        errors.append("threads: must be at least 1")
    if errors:
        raise InvalidArgument("; ".join(errors))
    out = Path(ns.out or os.environ.get("CYLWAVE_OUT", "cylwave_out"))
    return RunConfig(cmd, params, opts, out)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x):
    return format(float(x), ".17g")


class _Writer:
    """Tracks files written with a .partial suffix until the run succeeds."""

    def __init__(self, out: Path):
        self.out = out
        self.pending = []
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, name, header, rows):
        path = self.out / (name + ".partial")
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        self.pending.append(name)
        return path

    def text(self, name, content):
        path = self.out / (name + ".partial")
        path.write_text(content)
        self.pending.append(name)

    def commit(self):
        for name in self.pending:
            os.replace(self.out / (name + ".partial"), self.out / name)
        self.pending = []


def _gnuplot(datafile, xcol, ycols, title):
    plots = ", ".join(f"'{datafile}' using {xcol}:{c} with lines title columnheader({c})" for c in ycols)
    return f"set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\nplot {plots}\n"


def _meta(cfg: RunConfig, extra: dict, wall):
    lines = [f"version = {__version__}", f"command = {cfg.command}"]
    if cfg.params is not None:
        for k in ("epsilon", "kappa", "nu", "R", "tau_buoy_sq", "h_i_eq", "F_ext"):
            lines.append(f"{k} = {getattr(cfg.params, k)!r}")
    for k, v in sorted(cfg.options.items()):
        if k in ("epsilon", "kappa", "nu", "R", "tau_buoy_sq", "h_i_eq", "F_ext"):
            continue
        lines.append(f"option.{k} = {v!r}")
    for k, v in extra.items():
        lines.append(f"{k} = {v}")
    lines.append(f"wall_time = {wall:.3f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def _cmd_simulate(cfg, w, meta):
    from .shode import TraceState
    from .simulator import AugmentedState, Simulator, checks

    p = cfg.params
    sim = Simulator(p, r_max=cfg.r_max, n=cfg.n, sponge=cfg.sponge, h_min=cfg.h_min)
    r = sim.grid.nodes
    state = AugmentedState.rest(sim.grid, cfg.delta0)
    if cfg.bump_amplitude:
        state.zeta = cfg.bump_amplitude * np.exp(-(((r - cfg.bump_center) / cfg.bump_width) ** 2))
        state.Z = TraceState(cfg.delta0, 0.0, float(state.zeta[0]), 0.0)
    info = checks(state, p)
    meta.update(
        T_ode=info["T_ode"],
        T_eps_kappa_R=info["T_eps_kappa_R"],
        compatibility=info["compatibility"],
        grid=f"R={sim.grid.R!r} r_max={sim.grid.r_max!r} n={sim.grid.n}",
    )
    header = ["t", "delta", "delta_dot", "zeta_bar", "zeta_bar_dot", "E_tot", "flux_jump"]
    try:
        traj = sim.integrate(state, cfg.T, dt=cfg.dt, output_every=cfg.output_every, snapshot_every=cfg.snapshot_every)
    except BlowUpError as exc:
        if exc.trajectory is not None:
            w.csv("trajectory.csv", header, exc.trajectory.as_array())
        meta["blow_up"] = exc.diagnostic
        raise
    w.csv("trajectory.csv", header, traj.as_array())
    for i, (t, zeta, q) in enumerate(traj.snapshots):
        w.csv(f"snapshot_{i:05d}.csv", ["r", "zeta", "q"], np.column_stack([r, zeta, q]))
    meta["dt"] = repr(traj.t[1] - traj.t[0]) if cfg.output_every is None and len(traj.t) > 1 else "see trajectory"
    meta["max_trace_defect"] = traj.max_trace_defect
    w.text("trajectory.gp", _gnuplot("trajectory.csv", 1, [2, 3, 6], "body motion"))


def _cmd_decay(cfg, w, meta):
    from .decay import DecayModel, decay_fit, delta_time_series

    p = cfg.params
    t = np.arange(0.0, cfg.t_max + 0.5 * cfg.dt_out, cfg.dt_out)
    kw = {}
    if cfg.sigma:
        kw["sigma"] = cfg.sigma
    if cfg.n_freq:
        kw["n_freq"] = cfg.n_freq
    res = delta_time_series(p, cfg.delta0, t, one_d=cfg.one_d, **kw)
    w.csv("decay.csv", ["t", "delta", "delta_dot", "delta_ddot"], np.column_stack([t, res["delta"], res["delta_dot"], res["delta_ddot"]]))
    model = DecayModel(p, cfg.one_d)
    omega = np.linspace(-20.0, 20.0, 2001)
    s = 1j * omega
    H = np.asarray(model.H(s))
    absP = np.abs(np.asarray(model.P(s)))
    w.csv("transfer_axis.csv", ["omega", "ReH", "ImH", "absP"], np.column_stack([omega, H.real, H.imag, absP]))
    w.text("decay.gp", _gnuplot("decay.csv", 1, [2], "displacement"))
    meta["sigma_check"] = res["sigma_check"]
    meta["converged"] = res["converged"]
    if cfg.t_max >= 200:
        fit = decay_fit(res["delta"], t, tuple(cfg.betas))
        for b, v in fit["weighted_tails"].items():
            meta[f"tail_beta_{b:g}"] = repr(v)
        meta["envelope_exponent"] = fit["envelope_exponent"]
    if cfg.one_d:
        meta["eta0"] = model.eta0()
    if not res["converged"]:
        raise ConvergenceError(f"sigma-halving check failed ({res['sigma_check']:.3g})")


def _cmd_scan(cfg, w, meta):
    from .decay import scan_P_min

    res = scan_P_min(tuple(cfg.region), cfg.grid_n, cfg.params, one_d=cfg.one_d)
    X, Y = np.meshgrid(res["x"], res["y"])
    P = res["P"]
    rows = np.column_stack([X.ravel(), Y.ravel(), P.real.ravel(), P.imag.ravel(), np.abs(P).ravel()])
    w.csv("scan.csv", ["x", "y", "ReP", "ImP", "absP"], rows)
    for key in ("re", "im", "both"):
        w.csv(f"crossings_{key}.csv", ["x", "y"], res["zero_crossing_map"][key])
    w.text("scan.gp", "set datafile separator ','\nset pm3d map\nsplot 'scan.csv' using 1:2:5 with pm3d title 'absP'\n")
    meta["label"] = res["label"]
    meta["P_min"] = repr(res["min_abs"])
    meta["argmin"] = repr(res["argmin"])
    print(f"Assumption check (numerical): min |P| = {res['min_abs']:.6g} at s = {res['argmin']:.6g}")


def _cmd_branch(cfg, w, meta):
    from .decay import branch_cuts

    geom = branch_cuts(cfg.params)
    pts = np.array([[z.real, z.imag] for z in geom.branch_points]).reshape(-1, 2)
    w.csv("branch_points.csv", ["re", "im"], pts)
    meta["case_tag"] = geom.case_tag
    meta["cuts"] = repr(geom.cuts)
    print(f"{geom.case_tag}: branch points {geom.branch_points}")


def _cmd_specfun(cfg, w, meta):
    from .specfun import bessel_i, bessel_k

    z = np.logspace(math.log10(0.05), math.log10(50.0), 500)
    k0, k1 = bessel_k(0, z, True).value, bessel_k(1, z, True).value
    i0, i1 = bessel_i(0, z, True).value, bessel_i(1, z, True).value
    res = np.abs(k0 * i1 + k1 * i0 - 1.0 / z) * z
    w.csv("specfun_check.csv", ["z", "wronskian_rel_residual"], np.column_stack([z, res]))
    meta["max_wronskian_rel_residual"] = repr(float(res.max()))
    ok = res.max() <= 1e-11
    print(f"Wronskian check: max relative residual {res.max():.3e} ({'ok' if ok else 'FAILED'})")
    if not ok:
        raise ConvergenceError("Wronskian check failed")


def _cmd_operators(cfg, w, meta):
    from .grid import make_grid
    from .nonlocal_ops import OperatorWorkspace, bounded_kernel_triplet

    z = np.logspace(math.log10(0.05), 2.0, 400)
    f, g, k = bounded_kernel_triplet(z)
    w.csv("drR0_infty.csv", ["z", "f", "g", "k"], np.column_stack([z, f, g, k]))
    p = cfg.params
    grid = make_grid(p.R, cfg.r_max, cfg.n, p.kappa)
    ws = OperatorWorkspace(grid, p.kappa)
    r = grid.nodes
    x = r - p.R
    e = np.exp(-((x - 2.0) ** 2))
    u = x * e
    du = e * (1.0 - 2.0 * x * (x - 2.0))
    d2u = e * (-2.0 * (x - 2.0) * (1.0 - 2.0 * x * (x - 2.0)) - (4.0 * x - 4.0))
    # (1 - kappa^2 d/dr d_r) u, where d/dr (u' + u/r) = u'' + u'/r - u/r^2
    lhs = u - p.kappa**2 * (d2u + du / r - u / r**2)
    err = math.sqrt(grid.integrate((ws.R0(lhs) - u) ** 2) / grid.integrate(u**2))
    meta["R0_manufactured_rel_error"] = repr(err)
    print(f"R0 manufactured-solution relative error: {err:.3e}")


HANDLERS = {
    "simulate": _cmd_simulate,
    "decay": _cmd_decay,
    "scan-denominator": _cmd_scan,
    "branch-cuts": _cmd_branch,
    "specfun-check": _cmd_specfun,
    "operators-check": _cmd_operators,
}


def run(cfg: RunConfig) -> int:
    """Execute a configuration and return the exit status."""
    start = time.perf_counter()
    w = _Writer(cfg.out)
    meta = {}
    status = 0
    try:
        HANDLERS[cfg.command](cfg, w, meta)
        w.commit()
    except CylwaveError as exc:
        status = exc.exit_code
        meta["error"] = f"{type(exc).__name__}: {exc}"
        print(f"error: {exc}", file=sys.stderr)
    meta.setdefault("T_ode", "n/a")
    meta["exit_status"] = status
    (cfg.out / "run.meta").write_text(_meta(cfg, meta, time.perf_counter() - start))
    return status


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except InvalidArgument as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
