import json

import numpy as np
import pytest

from qclimit.experiments import cli
from qclimit.experiments.common import NumericalError, probe_points
from qclimit.experiments.config import ConfigError, ExperimentConfig, load_config
from qclimit.experiments.convergence import run_convergence
from qclimit.experiments.ground_state import ClassicalProblem, run_ground_state
from qclimit.experiments.report import Report, emit_report, fit_rate
from qclimit.experiments.uniform_field import run_uniform_field
from qclimit.measures import PointCloud, effective_fields_mu

COHERENT = {
    "experiment": {"kind": "convergence", "seed": 3},
    "modes": {"d": 2, "radial_nodes": [1.0], "angular_resolution": 2},
    "form_factor": {"preset": "gaussian-charge", "origin": "center"},
    "state": {"family": "coherent", "z_re": [0.3, -0.2], "z_im": [0.1, 0.25]},
    "schedule": {"eps": [0.25, 0.125, 0.0625]},
    "grid": {"L": 1.0, "n": 17},
    "solver": {"count": 2, "probes": 2, "tail_tol": 1e-12},
}

NUMBER = {
    "experiment": {"kind": "convergence"},
    "modes": {"d": 2, "nodes": [[1.0, 0.0]], "weights": [1.0]},
    "form_factor": {"preset": "constant", "values": [1.0]},
    "state": {"family": "number", "mode": 0, "occupation": 1.0},
    "schedule": {"eps": [0.25, 0.125, 0.0625, 0.03125]},
    "grid": {"L": 1.0, "n": 9},
    "solver": {"count": 1, "probes": 1},
}

GROUND = {
    "experiment": {"kind": "ground-state"},
    "modes": {"d": 2, "nodes": [[1.0, 0.0]], "weights": [1.0]},
    "form_factor": {"preset": "constant", "values": [1.5]},
    "schedule": {"eps": [0.25, 0.125]},
    "grid": {"L": 1.0, "n": 9},
    "potential": {"kind": "harmonic", "strength": 5.0},
    "solver": {"tol": 1e-10},
}


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


# ---- configuration -----------------------------------------------------------------------------

@pytest.mark.parametrize("patch", [
    {"schedule": {"eps": [0.1, 0.2]}},
    {"schedule": {"eps": [1.5]}},
    {"schedule": {"eps": []}},
    {"bogus": {}},
    {"grid": {"L": 1.0, "n": 9, "colour": "red"}},
    {"experiment": {"kind": "nope"}},
    {"form_factor": {"preset": "mystery"}},
    {"state": {"family": "superposition"}},
])


def test_config_rejections(patch):
    data = {**COHERENT, **patch}
    with pytest.raises(ConfigError):
        ExperimentConfig(data)


def test_uniform_field_config_rules():
    base = {"experiment": {"kind": "uniform-field"}, "schedule": {"eps": [0.1, 0.05]},
            "uniform_field": {"kappa": [0.1]}}
    with pytest.raises(ConfigError):
        ExperimentConfig(base)
    base["uniform_field"]["kappa"] = [0.1, 0.2]
    with pytest.raises(ConfigError):
        ExperimentConfig(base)
    bad = {**base, "uniform_field": {"kappa": [0.2, 0.1]}, "modes": {"d": 3}, "grid": {"L": 4.0, "n": 4}}
    with pytest.raises(ConfigError):
        run_uniform_field(ExperimentConfig(bad))


def test_toml_and_json_agree(tmp_path):
    toml = tmp_path / "c.toml"
    toml.write_text(
        '[experiment]\nkind = "convergence"\nseed = 3\n'
        '[modes]\nd = 2\nradial_nodes = [1.0]\nangular_resolution = 2\n'
        '[form_factor]\npreset = "gaussian-charge"\norigin = "center"\n'
        '[state]\nfamily = "coherent"\nz_re = [0.3, -0.2]\nz_im = [0.1, 0.25]\n'
        '[schedule]\neps = [0.25, 0.125, 0.0625]\n'
        '[grid]\nL = 1.0\nn = 17\n'
        '[solver]\ncount = 2\nprobes = 2\ntail_tol = 1e-12\n')
    a = load_config(toml)
    b = load_config(write_cfg(tmp_path, COHERENT))
    assert a.data == b.data and a.digest() == b.digest()
    with pytest.raises(ConfigError):
        bad = tmp_path / "bad.toml"
        bad.write_text("[experiment\nkind=")
        load_config(bad)


def test_builders():
    cfg = ExperimentConfig({**COHERENT, "potential": {"kind": "harmonic", "strength": 2.0, "offset": -1.0}})
    g = cfg.build_grid()
    assert g.n_points == 16**2
    assert cfg.build_mode_set().n_fock == 2
    assert cfg.potential_min(g) == pytest.approx(-1.0 + 2 * 2 * (0.5 - 16 / 32) ** 2, abs=0.02)
    assert probe_points(g).shape == (25, 2)
    with pytest.raises(ConfigError):
        ExperimentConfig({**COHERENT, "potential": {"kind": "cubic"}}).build_potential(g)


# ---- reports -----------------------------------------------------------------------------------

def test_empty_report_header_only(tmp_path):
    rep = Report("x", ["eps", "value"])
    emit_report(rep, tmp_path)
    assert (tmp_path / "report.csv").read_text() == "eps,value\n"


def test_report_json_roundtrip_and_format(tmp_path):
    rep = Report("x", ["eps", "v", "flag"])
    rep.add(eps=0.1, v=1 / 3, flag=True)
    rep.add(eps=0.05)
    rep.summary = {"slope": 1.0, "levels": [1.0, 3.0]}
    emit_report(rep, tmp_path)
    back = Report.from_dict(json.loads((tmp_path / "report.json").read_text()))
    assert back.to_dict() == rep.to_dict()
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[1] == "0.10000000000000001,0.33333333333333331,true"
    assert lines[2] == "0.050000000000000003,,"
    with pytest.raises(KeyError):
        rep.add(other=1)


def test_fit_rate():
    x = np.array([0.4, 0.2, 0.1, 0.05])
    slope, r2 = fit_rate(x, 3 * x**2)
    assert slope == pytest.approx(2.0, abs=1e-12) and r2 == pytest.approx(1.0, abs=1e-12)


# ---- convergence -------------------------------------------------------------------------------

def test_coherent_convergence_examples():
    rep = run_convergence(ExperimentConfig(COHERENT))
    rows = rep.rows[:-1]
    assert [r["eps"] for r in rows] == [0.25, 0.125, 0.0625]
    assert rep.rows[-1]["eps"] == 0.0
    assert all(r["dA"] <= 1e-9 for r in rows)
    assert all(0.4 <= q <= 0.6 for q in rep.summary["gap_ratios"])
    assert rep.summary["lower_bound_holds"]
    c = [r["c_eps"] for r in rows]
    assert max(abs(x - rep.summary["c_mu"]) for x in c) <= 1e-10


def test_limit_row_uses_measure_fields():
    cfg = ExperimentConfig(COHERENT)
    rep = run_convergence(cfg)
    grid = cfg.build_grid()
    ms = cfg.build_mode_set()
    from qclimit.experiments.convergence import build_family
    mu = build_family(cfg, ms).limit
    f = effective_fields_mu(mu, cfg.build_form_factor(grid), ms, PointCloud(probe_points(grid)))
    assert rep.rows[-1]["W_probe"] == float(f.W[0, 0])
    assert rep.rows[-1]["phi2_probe"] == float(f.phi2[0, 0])


def test_number_family_examples():
    rep = run_convergence(ExperimentConfig(NUMBER))
    rows = rep.rows[:-1]
    assert all(r["dA"] <= 1e-15 for r in rows)  # phase average cancels to rounding
    for r in rows:
        assert abs(r["dphi2"] - r["eps"]) <= 1e-10
    eps = np.array([r["eps"] for r in rows])
    slope = np.polyfit(eps, [r["dphi2"] for r in rows], 1)[0]
    assert abs(slope - 1) <= 1e-6
    assert all(abs(r["c_eps"] - 1.0) <= 1e-12 for r in rows)  # number states: exact at every eps


def test_infeasible_truncation_names_smallest_eps():
    data = {**COHERENT, "solver": {**COHERENT["solver"], "max_fock_dim": 200}}
    with pytest.raises(NumericalError, match="smallest feasible eps"):
        run_convergence(ExperimentConfig(data))


def test_workers_do_not_change_results():
    a = run_convergence(ExperimentConfig(COHERENT)).to_csv()
    data = {**COHERENT, "experiment": {**COHERENT["experiment"], "workers": 3}}
    b = run_convergence(ExperimentConfig(data)).to_csv()
    assert a == b


# ---- uniform field -----------------------------------------------------------------------------

def test_uniform_field_small_run():
    data = {"experiment": {"kind": "uniform-field"}, "modes": {"d": 2},
            "grid": {"L": 10.0, "n": 60}, "schedule": {"eps": [0.01, 0.0025]},
            "uniform_field": {"kappa": [0.08, 0.04], "landau_count": 40}, "solver": {"count": 2}}
    rep = run_uniform_field(ExperimentConfig(data))
    s = rep.summary
    assert abs(s["landau_gap"] - 2) < 0.1
    assert s["c_eps_growing"]
    errs = rep.column("probe_err")
    assert errs[1] < errs[0]
    assert rep.rows[-1]["max_rel_gap"] < rep.rows[0]["max_rel_gap"]


# ---- ground state ------------------------------------------------------------------------------

def test_ground_state_decoupled():
    data = {**GROUND, "form_factor": {"preset": "constant", "values": [0.0]}}
    rep = run_ground_state(ExperimentConfig(data))
    lam = rep.summary["lambda0_plain"]
    assert abs(rep.summary["right"] - lam) <= 1e-9
    assert np.allclose(rep.summary["z_opt"]["re"], 0, atol=1e-6)
    assert all(abs(r["left"] - lam) <= 1e-9 for r in rep.rows)


def test_ground_state_single_mode_against_dense_scan():
    cfg = ExperimentConfig(GROUND)
    rep = run_ground_state(cfg)
    grid, ms = cfg.build_grid(), cfg.build_mode_set()
    prob = ClassicalProblem(cfg.build_form_factor(grid), ms, cfg.build_potential(grid), grid)
    xs = np.linspace(-0.5, 0.5, 201)
    scan = [prob.point([x, 0.0]) for x in xs]
    assert rep.summary["right"] <= min(scan) + 1e-9
    assert rep.summary["right"] >= min(scan) - 1e-4
    assert rep.summary["mixture_never_better"]
    assert not rep.summary["on_boundary"]
    for r in rep.rows:
        assert r["left"] >= rep.summary["right"] - 1e-8 or abs(r["gap"]) < 1e-6
    gaps = [abs(r["gap"]) for r in rep.rows]
    assert gaps[1] < gaps[0]


# ---- CLI ---------------------------------------------------------------------------------------

def test_cli_success_and_determinism(tmp_path):
    path = write_cfg(tmp_path, COHERENT)
    assert cli.main(["convergence", "--config", str(path), "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["convergence", "--config", str(path), "--output", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "report.csv").read_bytes()
    assert a == (tmp_path / "b" / "report.csv").read_bytes()
    meta = json.loads((tmp_path / "a" / "meta.json").read_text())
    assert meta["config_sha256"] == load_config(path).digest()
    assert {"versions", "timings_s"} <= set(meta)


def test_cli_exit_codes(tmp_path, capsys):
    bad = write_cfg(tmp_path, {**COHERENT, "grid": {"L": 1.0, "n": 17, "what": 1}}, "bad.json")
    assert cli.main(["convergence", "--config", str(bad)]) == 3
    assert cli.main(["ground-state", "--config", str(write_cfg(tmp_path, COHERENT))]) == 3
    assert cli.main(["convergence", "--config", str(tmp_path / "missing.json")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["convergence", "--config", str(write_cfg(tmp_path, COHERENT)),
                     "--output", str(blocker / "sub")]) == 2
    heavy = {**COHERENT, "solver": {**COHERENT["solver"], "max_fock_dim": 10}}
    assert cli.main(["convergence", "--config", str(write_cfg(tmp_path, heavy, "h.json"))]) == 1
    err = capsys.readouterr().err
    assert "config error" in err and "numerical failure" in err


def test_cli_selftest(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4

