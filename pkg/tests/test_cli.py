import csv
import math

import numpy as np
import pytest

from cylwave.cli import main, parse_config, run
from cylwave.decay import one_d_closed_form
from cylwave.errors import InvalidArgument
from cylwave.params import PhysParams


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def check_format(path):
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        assert all(name and not name[0].isdigit() for name in header)
        for line in fh:
            for field in line.rstrip("\n").split(","):
                assert format(float(field), ".17g") == field
    return header


# -- configuration -------------------------------------------------------------


def test_parse_valid_simulate():
    cfg = parse_config(["simulate", "--epsilon", "0", "--kappa", "0.3", "--R", "1", "--T", "50"])
    assert cfg.command == "simulate"
    assert cfg.params == PhysParams(epsilon=0.0, kappa=0.3, R=1.0)
    assert cfg.T == 50.0 and cfg.n == 1024


def test_kappa_zero_rejected_for_simulate():
    with pytest.raises(InvalidArgument, match="kappa"):
        parse_config(["simulate", "--kappa", "0"])
    # the Laplace tools accept kappa = 0
    assert parse_config(["branch-cuts", "--kappa", "0", "--nu", "0.1"]).params.kappa == 0


def test_epsilon_out_of_range():
    with pytest.raises(InvalidArgument, match="epsilon"):
        parse_config(["simulate", "--epsilon", "1.5"])


def test_every_violation_is_listed():
    with pytest.raises(InvalidArgument) as info:
        parse_config(["simulate", "--epsilon", "1.5", "--T", "-1", "--n", "abc"])
    msg = str(info.value)
    for key in ("epsilon", "T", "n"):
        assert key in msg


def test_config_file_and_override(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# decay run\nkappa = 0.4\nnu = 0.2  # viscous\nt_max = 30\n")
    cfg = parse_config(["decay", "--config", str(cfg_file), "--nu", "0.05"])
    assert cfg.params.kappa == 0.4
    assert cfg.params.nu == 0.05
    assert cfg.t_max == 30.0


def test_config_file_errors(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("kapa = 0.4\nnu = lots\nnot a pair\n")
    with pytest.raises(InvalidArgument) as info:
        parse_config(["decay", "--config", str(cfg_file)])
    msg = str(info.value)
    assert "kapa" in msg and "nu" in msg and "key = value" in msg


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["simulate", "--kappa", "0", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--epsilon", "1.5", "--out", str(tmp_path)]) == 2
    assert main(["no-such-command"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CYLWAVE_OUT", str(tmp_path / "env"))
    assert parse_config(["branch-cuts"]).out == tmp_path / "env"
    assert parse_config(["branch-cuts", "--out", "x"]).out.name == "x"


# -- commands --------------------------------------------------------------------


def test_simulate_at_rest_gives_zeros(tmp_path):
    out = tmp_path / "rest"
    status = main(["simulate", "--kappa", "0.3", "--delta0", "0", "--T", "1", "--n", "128", "--r-max", "10", "--out", str(out)])
    assert status == 0
    header = check_format(out / "trajectory.csv")
    assert header == ["t", "delta", "delta_dot", "zeta_bar", "zeta_bar_dot", "E_tot", "flux_jump"]
    _, data = read_csv(out / "trajectory.csv")
    assert not np.any(data[:, 1:])
    assert data[-1, 0] == pytest.approx(1.0)
    meta = (out / "run.meta").read_text()
    for key in ("T_ode", "T_eps_kappa_R", "compatibility", "wall_time", "exit_status = 0"):
        assert key in meta
    assert (out / "trajectory.gp").exists()


def test_simulate_snapshots(tmp_path):
    out = tmp_path / "snap"
    argv = ["simulate", "--kappa", "0.3", "--delta0", "0.05", "--bump-amplitude", "0.02", "--T", "1",
            "--snapshot-every", "0.5", "--n", "128", "--r-max", "10", "--out", str(out)]
    assert main(argv) == 0
    snaps = sorted(out.glob("snapshot_*.csv"))
    assert len(snaps) == 3
    assert check_format(snaps[0]) == ["r", "zeta", "q"]


def test_determinism(tmp_path):
    argv = ["simulate", "--kappa", "0.3", "--delta0", "0.1", "--T", "1", "--n", "128", "--r-max", "10"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    argv = ["decay", "--kappa", "0.3", "--nu", "0.1", "--t-max", "10", "--dt-out", "0.1"]
    assert main(argv + ["--out", str(tmp_path / "c")]) == 0
    assert main(argv + ["--out", str(tmp_path / "d")]) == 0
    for name in ("decay.csv", "transfer_axis.csv"):
        assert (tmp_path / "c" / name).read_bytes() == (tmp_path / "d" / name).read_bytes()


def test_decay_planar_mode_matches_closed_form(tmp_path):
    out = tmp_path / "planar"
    status = main(["decay", "--kappa", "0", "--nu", "0", "--one-d", "true", "--delta0", "0.1",
                   "--t-max", "20", "--dt-out", "0.05", "--out", str(out)])
    assert status == 0
    assert check_format(out / "decay.csv") == ["t", "delta", "delta_dot", "delta_ddot"]
    _, data = read_csv(out / "decay.csv")
    exact = one_d_closed_form(PhysParams(kappa=0.0), 0.1, data[:, 0])
    assert np.max(np.abs(data[:, 1] - exact)) <= 1e-6
    assert check_format(out / "transfer_axis.csv") == ["omega", "ReH", "ImH", "absP"]
    assert "eta0" in (out / "run.meta").read_text()


def test_scan_format(tmp_path, capsys):
    out = tmp_path / "scan"
    status = main(["scan-denominator", "--kappa", "0.5", "--nu", "0.3", "--region", "0,5,-10,10",
                   "--grid-n", "41", "--out", str(out)])
    assert status == 0
    header = check_format(out / "scan.csv")
    assert header == ["x", "y", "ReP", "ImP", "absP"]
    _, data = read_csv(out / "scan.csv")
    assert data.shape == (41 * 41, 5)
    assert np.allclose(data[:, 4], np.hypot(data[:, 2], data[:, 3]))
    for key in ("re", "im", "both"):
        assert check_format(out / f"crossings_{key}.csv") == ["x", "y"]
    assert "min |P|" in capsys.readouterr().out
    meta = (out / "run.meta").read_text()
    assert "Assumption check (numerical)" in meta
    assert float(meta.split("P_min = ")[1].split("\n")[0]) == pytest.approx(data[:, 4].min())


@pytest.mark.parametrize("command", ["branch-cuts", "specfun-check", "operators-check"])
def test_self_checks(tmp_path, command):
    out = tmp_path / command
    assert main([command, "--kappa", "0.5", "--n", "256", "--r-max", "20", "--out", str(out)]) == 0
    assert "exit_status = 0" in (out / "run.meta").read_text()


def test_branch_cuts_output(tmp_path):
    out = tmp_path / "bc"
    assert main(["branch-cuts", "--kappa", "0.5", "--out", str(out)]) == 0
    _, data = read_csv(out / "branch_points.csv")
    assert sorted(data[:, 1]) == pytest.approx([-2.0, 2.0])
    assert "case_tag = nu_zero" in (out / "run.meta").read_text()


def test_blow_up_keeps_partial_output(tmp_path):
    out = tmp_path / "crash"
    status = main(["simulate", "--epsilon", "0.9", "--kappa", "0.3", "--delta0", "0", "--F-ext", "-2",
                   "--T", "10", "--n", "128", "--r-max", "10", "--out", str(out)])
    assert status == 4
    assert (out / "trajectory.csv.partial").exists()
    assert not (out / "trajectory.csv").exists()
    meta = (out / "run.meta").read_text()
    assert "BlowUpError" in meta and "exit_status = 4" in meta


def test_collapsed_initial_state_is_domain_error(tmp_path):
    out = tmp_path / "bad"
    status = main(["simulate", "--epsilon", "0.9", "--kappa", "0.3", "--delta0", "-1.5", "--T", "1",
                   "--n", "128", "--r-max", "10", "--out", str(out)])
    assert status == 3


def test_sigma_check_failure_exit_5(tmp_path):
    out = tmp_path / "sigma"
    status = main(["decay", "--kappa", "0.3", "--sigma", "2", "--t-max", "40", "--dt-out", "0.1", "--out", str(out)])
    assert status == 5
    assert (out / "decay.csv.partial").exists()


def test_run_accepts_parsed_config(tmp_path):
    cfg = parse_config(["branch-cuts", "--kappa", "0", "--nu", "0.1", "--threads", "2", "--out", str(tmp_path)])
    assert cfg.threads == 2
    assert run(cfg) == 0
    _, data = read_csv(tmp_path / "branch_points.csv")
    assert data.reshape(-1, 2)[0, 0] == pytest.approx(-10.0)
    assert math.isfinite(float((tmp_path / "run.meta").read_text().split("wall_time = ")[1]))
