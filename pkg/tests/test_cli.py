import io
import math

import numpy as np
import pytest

from polaron_dyn.cli import main
from polaron_dyn.config import RunConfig, load_config, parse_range


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def read_csv(path):
    text = path.read_text()
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = body[0].split(",")
    data = np.genfromtxt(io.StringIO("\n".join(body[1:])), delimiter=",", ndmin=2)
    return header, data, text


def echo_to_toml(text):
    lines = text.splitlines()[1:]
    keep = []
    for ln in lines:
        if not ln.startswith("#") or ln.startswith("# note:"):
            break
        keep.append(ln[2:] if ln.startswith("# ") else "")
    return "\n".join(keep) + "\n"


def test_dynamics_defaults(tmp_path):
    code, out = run(tmp_path, "dyn.csv", "dynamics")
    assert code == 0
    header, data, text = read_csv(out)
    assert header == ["t", "rho00", "re_rho01", "im_rho01", "rho11", "P_D"]
    assert data.shape == (2001, 6)
    assert data[0, 5] == 1.0
    i = np.argmin(np.abs(data[:, 0] - 2 * math.pi))
    assert data[i, 0] == pytest.approx(2 * math.pi, abs=1e-12)
    assert abs(data[i, 5] - 1.0) <= 1e-9
    assert text.startswith("# polaron-dyn ")


def test_dynamics_without_coupling(tmp_path):
    code, out = run(tmp_path, "dyn.csv", "dynamics", "--g", "0", "--points", "51")
    assert code == 0
    _, data, _ = read_csv(out)
    assert np.all(data[:, 5] == 1.0)


def test_dynamics_degenerate_populations(tmp_path):
    code, out = run(tmp_path, "dyn.csv", "dynamics", "--state", "plus", "--points", "11")
    assert code == 0
    _, data, text = read_csv(out)
    assert np.all(np.isnan(data[:, 5]))
    assert "# note: P_D undefined" in text


@pytest.mark.parametrize("engine", ["ode", "exact", "naive"])
def test_dynamics_engines(tmp_path, engine):
    code, out = run(tmp_path, f"{engine}.csv", "dynamics", "--engine", engine, "--J", "0.01",
                    "--points", "65", "--tmax", str(2 * math.pi))
    assert code == 0
    _, data, _ = read_csv(out)
    assert data.shape == (65, 6)
    assert abs(data[-1, 5] - 1.0) <= 1e-6 if engine != "exact" else data[-1, 5] > 0.99


def test_decoherence_zeros_at_period(tmp_path):
    code, out = run(tmp_path, "deco.csv", "decoherence", "--points", "9", "--tmax", str(2 * math.pi))
    assert code == 0
    header, data, _ = read_csv(out)
    assert header == ["t", "gamma", "gamma_odd", "gamma_even", "beta_plus", "beta_minus"]
    assert data[0, 1] == 0.0 and abs(data[-1, 1]) <= 1e-15
    np.testing.assert_allclose(data[:, 1], data[:, 2] + data[:, 3], rtol=1e-12, atol=1e-18)


def test_nonmarkov_sweep(tmp_path):
    code, out = run(tmp_path, "nm.csv", "nonmarkov-sweep", "--g-range", "0.25:3.0:0.25",
                    "--phases", "16")
    assert code == 0
    header, data, _ = read_csv(out)
    assert header == ["g_omega", "N", "n_intervals", "optimal_phase"]
    assert data.shape[0] == 12
    np.testing.assert_allclose(data[:, 0], np.arange(1, 13) * 0.25)
    band = data[(data[:, 0] > 0.5) & (data[:, 0] < 2.5), 1]
    assert band.max() > 0


def test_nonmarkov_single_zero_point(tmp_path):
    code, out = run(tmp_path, "nm.csv", "nonmarkov-sweep", "--g-range", "0", "--phases", "4")
    assert code == 0
    _, data, _ = read_csv(out)
    assert data[0, 0] == 0.0 and data[0, 1] == 0.0


def test_steady_state(tmp_path):
    code, out = run(tmp_path, "ss.csv", "steady-state", "--g-range", "0,2,4", "--J-list", "0.1,0.05")
    assert code == 0
    text = out.read_text()
    body = [ln.split(",") for ln in text.splitlines() if not ln.startswith("#")]
    assert body[0] == ["g_omega", "J_over_omega", "P_D_inf", "C_inf", "P_D_asym", "C_asym"]
    rows = body[1:]
    assert len(rows) == 6
    zero = [r for r in rows if float(r[0]) == 0.0]
    assert all(float(r[2]) == 1.0 and float(r[3]) == 1.0 and r[4] == "" and r[5] == "" for r in zero)
    g2 = next(r for r in rows if float(r[0]) == 2.0 and float(r[1]) == 0.1)
    assert float(g2[5]) == pytest.approx(math.exp(-7.8125e-5), rel=1e-15)
    g4 = next(r for r in rows if float(r[0]) == 4.0 and float(r[1]) == 0.1)
    assert float(g4[2]) > float(g2[2]) > 0.99


def test_correlator(tmp_path):
    code, out = run(tmp_path, "corr.csv", "correlator", "--g", "0", "--points", "11")
    assert code == 0
    header, data, _ = read_csv(out)
    assert header == ["dt", "re", "im"]
    assert np.all(data[:, 1:] == 0)
    code, out = run(tmp_path, "corr2.csv", "correlator", "--g", "0.5", "--points", "3",
                    "--tmax", str(2 * math.pi))
    _, data, _ = read_csv(out)
    assert data[0, 1] == pytest.approx(math.e - 1, rel=1e-14)


def test_oracle_compare_bound(tmp_path):
    code, out = run(tmp_path, "oc.csv", "oracle-compare", "--J", "0.01", "--g", "1",
                    "--state", "plus", "--points", "129", "--tmax", str(2 * math.pi))
    assert code == 0
    header, data, _ = read_csv(out)
    assert header == ["t", "observable_exact", "observable_tcl", "abs_diff"]
    assert data[:, 3].max() <= 0.05 * np.abs(data[:, 2]).max()


def test_conventions(tmp_path):
    code, out = run(tmp_path, "CONVENTIONS.md", "conventions")
    assert code == 0
    text = out.read_text()
    assert "kappa = 1" in text and "| 2 | even |" in text


def test_svg_output(tmp_path):
    code, out = run(tmp_path, "dyn.csv", "dynamics", "--points", "101", "--svg")
    assert code == 0
    svg = out.with_suffix(".svg")
    assert svg.exists() and svg.read_text().lstrip().startswith("<?xml")


def test_svg_needs_out_path():
    assert main(["dynamics", "--svg", "--points", "5"]) == 2


def test_determinism(tmp_path):
    # the output path is part of the echo, so both runs write to the same file
    _, a = run(tmp_path, "a.csv", "nonmarkov-sweep", "--g-range", "0.5:1.5:0.5", "--phases", "8")
    first = a.read_bytes()
    run(tmp_path, "a.csv", "nonmarkov-sweep", "--g-range", "0.5:1.5:0.5", "--phases", "8")
    assert a.read_bytes() == first
    _, c = run(tmp_path, "c.svg.csv", "dynamics", "--points", "21", "--svg")
    first = c.with_suffix(".svg").read_bytes()
    run(tmp_path, "c.svg.csv", "dynamics", "--points", "21", "--svg")
    assert c.with_suffix(".svg").read_bytes() == first


def test_config_echo_round_trip(tmp_path):
    code, first = run(tmp_path, "first.csv", "dynamics", "--engine", "ode", "--J", "0.07",
                      "--g", "0.8", "--points", "33", "--state", "phi:0.3")
    assert code == 0
    cfg = tmp_path / "echo.toml"
    cfg.write_text(echo_to_toml(first.read_text()))
    code, second = run(tmp_path, "first.csv", "dynamics", "--config", str(cfg))
    assert code == 0
    assert second.read_bytes() == first.read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[model]\nJ = 0.2\ng = 0.5\n\n[grid]\nn_points = 5\n')
    code, out = run(tmp_path, "o.csv", "dynamics", "--config", str(cfg), "--g", "0.7")
    assert code == 0
    echo = load_config_from_text(tmp_path, echo_to_toml(out.read_text()))
    assert echo["J"] == 0.2 and echo["g"] == 0.7 and echo["n_points"] == 5


def load_config_from_text(tmp_path, text):
    path = tmp_path / "echo2.toml"
    path.write_text(text)
    return load_config(path)


@pytest.mark.parametrize("args", [
    ["dynamics", "--omega", "-1"],
    ["dynamics", "--state", "sideways"],
    ["dynamics", "--kappa", "auto", "--beta", "3"],
    ["nonmarkov-sweep", "--g-range", "3:1:0.5"],
])
def test_domain_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_unknown_config_key_exit_2(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[model]\nfoo = 1\n")
    assert main(["dynamics", "--config", str(cfg)]) == 2


def test_numeric_failure_exit_3(tmp_path, capsys):
    code, _ = run(tmp_path, "x.csv", "oracle-compare", "--g", "2", "--n-max", "8", "--state", "plus",
                  "--points", "9")
    assert code == 3
    assert "n_max" in capsys.readouterr().err


def test_stdout_output(capsys):
    assert main(["correlator", "--points", "3"]) == 0
    assert capsys.readouterr().out.splitlines()[-1].count(",") == 2


def test_parse_range_and_run_config():
    assert parse_range("0.25:1.0:0.25") == [0.25, 0.5, 0.75, 1.0]
    assert parse_range("1, 2,3") == [1.0, 2.0, 3.0]
    cfg = RunConfig().update({"beta": "inf", "j_list": "0.1, 0.2", "n_points": 11.0})
    assert math.isinf(cfg.beta) and cfg.j_values() == [0.1, 0.2] and cfg.n_points == 11
    assert 'beta = "inf"' in cfg.to_toml()
