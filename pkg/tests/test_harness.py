import json
import os
from pathlib import Path

import numpy as np
import pytest

from netid import cli
from netid.harness import ConfigError, ExperimentConfig, Mode, emit_plot_data, grid_intervals, parse_config, run
from netid.harness.config import parse_seeds
from netid.harness.experiments import CriterionCurve, ExperimentReport
from netid.harness.io import atomic_write_text, load_agents, load_edges, write_draw
from netid.equilibrium import DgpSpec, simulate

FULL_CFG = """
schema_version = 1
mode = full_simulated
model = full
n = 24
gamma0 = 1
beta0 = -1
z_support = 0,1,2,3
gamma_min = -4
gamma_max = 4
gamma_step = 2
restrictions = tetrad, three_link_triad
criterion = both
cell_min = 1
seeds = 0-1
"""


def test_parse_roundtrip():
    cfg = parse_config(FULL_CFG)
    assert cfg.mode is Mode.FULL_SIMULATED and cfg.seeds == (0, 1)
    assert cfg.theta_grid().tolist() == [-4.0, -2.0, 0.0, 2.0, 4.0]
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize("text, message", [
    ("schema_version = 1\nfoo = 3", "unknown key"),
    ("mode = full_simulated", "schema_version"),
    ("schema_version = 2", "schema_version"),
    ("schema_version = 1\nn = 3\nn = 4", "duplicate"),
    ("schema_version = 1\nn = many", "bad value"),
    ("schema_version = 1\ngamma_step = 0", "positive"),
    ("schema_version = 1\nmode = full_simulated", "full model"),
    ("schema_version = 1\nrestrictions = pentagon", "unknown restriction"),
    ("schema_version = 1\njust words", "key = value"),
])
def test_config_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_seed_lists():
    assert parse_seeds("0-2,7") == (0, 1, 2, 7)
    with pytest.raises(ConfigError):
        parse_seeds(" , ")


def test_intervals_report_unions_and_boundaries():
    grid = np.arange(-3.0, 4.0)
    q = np.array([0.0, -1.0, 0.5, 0.2, -0.1, 0.0, 0.0])
    iv = grid_intervals(grid, q)
    assert [(i.lower, i.upper) for i in iv] == [(-3.0, -2.0), (1.0, 3.0)]
    assert iv[0].lower_at_boundary and not iv[0].upper_at_boundary
    assert iv[1].upper_at_boundary
    assert str(iv[1]) == "[1, grid-boundary)"
    assert grid_intervals(grid, np.ones(7)) == []


def test_plot_data(tmp_path):
    grid = np.linspace(0, 1, 5)
    report = ExperimentReport(ExperimentConfig(), [CriterionCurve(0, "parametric", grid, grid * 2 - 1)])
    path = emit_plot_data(report, tmp_path / "plot.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "gamma,q_value" and len(lines) == 6
    q = [float(l.split(",")[1]) for l in lines[1:]]
    assert q == sorted(q)
    with pytest.raises(ValueError, match="no grid points"):
        emit_plot_data(ExperimentReport(ExperimentConfig()), tmp_path / "x.csv")


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write_text(tmp_path / "a.txt", "one")
    atomic_write_text(tmp_path / "a.txt", "two")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
    assert (tmp_path / "a.txt").read_text() == "two"


def test_draw_csv_roundtrip(tmp_path, small_full_draw):
    _, draw = small_full_draw
    write_draw(tmp_path, draw)
    agents = load_agents(tmp_path / "draw_agents.csv")
    net = load_edges(tmp_path / "draw_edges.csv", draw.n)
    assert np.array_equal(agents.Z, draw.agents.Z) and np.array_equal(agents.A, draw.agents.A)
    assert net == draw.network


def test_full_mode_is_reproducible(tmp_path):
    cfg = parse_config(FULL_CFG)
    a, b = run(cfg), run(cfg)
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    for name in ("report.json", "criterion.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert {d["seed"] for d in rep["diagnostics"]} == {0, 1}
    for d in rep["diagnostics"]:
        assert d["converged"] and d["packing_disjoint"]
    # the strict set sits inside the main set on each seed
    for seed in (0, 1):
        main, strict = a.curve("nonparametric", seed), a.curve("parametric", seed)
        assert np.all(main.in_set[strict.in_set])


def test_parallel_matches_serial(tmp_path):
    cfg = parse_config(FULL_CFG)
    serial, par = run(cfg, jobs=1), run(cfg, jobs=2)
    for c1, c2 in zip(serial.curves, par.curves):
        assert np.array_equal(c1.q_values, c2.q_values)


def test_point_mode(tmp_path):
    cfg = parse_config(FULL_CFG.replace("full_simulated", "point_id").replace("seeds = 0-1", "seeds = 3"))
    report = run(cfg)
    assert len(report.estimates) == 1
    e = report.estimates[0]
    assert e["names"] == ["beta0", "gamma"]
    report.write(tmp_path)
    assert (tmp_path / "report.json").exists()


def test_closed_form_mode_small():
    cfg = ExperimentConfig(gamma_min=0.0, gamma_max=2.0, gamma_step=1.0, criterion="parametric")
    report = run(cfg)
    assert report.curve("parametric").in_set.tolist()[1]  # gamma0 = 1 is retained


def write_cfg(tmp_path, text=FULL_CFG):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return p


def test_cli_identify_and_env_override(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path)
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    assert cli.main(["identify", "--config", str(cfg), "--seed", "0"]) == 0
    assert (tmp_path / "env_out" / "criterion.csv").exists()
    assert "seed 0 nonparametric" in capsys.readouterr().out
    assert cli.main(["identify", "--config", str(cfg), "--seed", "0", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "report.json").exists()


def test_cli_simulate_and_point(tmp_path):
    cfg = write_cfg(tmp_path)
    assert cli.main(["simulate", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "sim")]) == 0
    assert (tmp_path / "sim" / "draw_seed1_edges.csv").exists()
    assert cli.main(["point-estimate", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "pt")]) == 0


def test_cli_errors_exit_one(tmp_path, capsys):
    bad = write_cfg(tmp_path, "schema_version = 1\nbogus = 1\n")
    assert cli.main(["identify", "--config", str(bad)]) == 1
    assert "unknown key" in capsys.readouterr().err
    assert cli.main(["identify", "--config", str(tmp_path / "missing.cfg")]) == 1
    good = write_cfg(tmp_path)
    assert cli.main(["identify", "--config", str(good), "--seed", str(2 ** 64)]) == 1


def test_cli_reproduce_exit_codes(tmp_path, monkeypatch):
    def fake(which, out, jobs):
        return ExperimentReport(ExperimentConfig(), checks=[{"name": which, "published": "x", "computed": "y",
                                                             "passed": which == "figure1"}])
    monkeypatch.setattr(cli, "reproduce_paper", fake)
    assert cli.main(["reproduce", "figure1", "--out", str(tmp_path)]) == 0
    assert cli.main(["reproduce", "table1", "--out", str(tmp_path)]) == 2
    assert json.loads((tmp_path / "table1" / "checks.json").read_text())[0]["passed"] is False
