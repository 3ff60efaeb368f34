import json

import pytest

from netengage.cli import main
from netengage.config import ConfigError, parse_config

SIM = """
[graph]
generator = erdos_renyi
n = 120
p = 0.05

[game]
kind = npg
k = 3, 4
alpha = 1

[dynamics]
temperature = 0.3
iterations = 20000
steady_window = 5000
initial = zero, random
trace_every = 1000

[run]
replications = 2
seed = 5
"""

PA = """
[graph]
generator = erdos_renyi
n = 150
p = 0.04

[game]
kind = npg
k = 5

[dynamics]
temperature = 0.3
iterations = 20000
steady_window = 5000

[run]
replications = 1
seed = 1

[pa]
budget = unlimited
budgets = 0, 5
t_th = 500
t_u = 100
failure_at = 10000
failure_count = 2
"""


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "timing.csv"}


def test_simulate_is_reproducible(tmp_path):
    cfg = _write(tmp_path, SIM)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--workers", "1"]) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a == b
    assert "summary.csv" in a and "trace_npg_k3_a1_zero_rep000.csv" in a
    head = a["summary.csv"].decode().splitlines()
    assert head[0].startswith("# netengage ") and "seed=5" in head[0]
    assert head[1].startswith("config,initial,replications,steady_mean")
    assert len(head) == 2 + 4


def test_seed_override_changes_outputs(tmp_path):
    cfg = _write(tmp_path, SIM)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--workers", "1"])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--workers", "1", "--seed", "6"])
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a["trace_npg_k3_a1_random_rep000.csv"] != b["trace_npg_k3_a1_random_rep000.csv"]


@pytest.mark.parametrize(
    "broken",
    [
        SIM.replace("p = 0.05", "p = 0.05\ncolour = red"),
        SIM.replace("[run]", "[extras]"),
        SIM.replace("temperature = 0.3", "temperature = -1"),
        SIM.replace("initial = zero, random", "initial = sideways"),
        SIM.replace("k = 3, 4", "k = three"),
    ],
)
def test_invalid_configs_exit_1_without_outputs(tmp_path, broken):
    cfg = _write(tmp_path, broken)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 1
    assert not out.exists() or not any(out.iterdir())
    assert not list(tmp_path.glob(".netengage-*"))


def test_missing_config_file_exits_1(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o")]) == 1


def test_config_parser_expands_grids():
    cfg = parse_config(SIM.replace("alpha = 1", "alpha = 0.5, 1"))
    assert [(g.k, g.alpha) for g in cfg.games] == [(3, 0.5), (3, 1.0), (4, 0.5), (4, 1.0)]
    assert cfg.initials == ["zero", "random"]
    assert parse_config(SIM, seed_override=9).seed == 9
    with pytest.raises(ConfigError):
        parse_config(SIM.replace("kind = npg", "kind = nsg"))


def test_cores_cascade_on_a_line(tmp_path):
    out = tmp_path / "c"
    assert main(["cores", "--generator", "line", "--n", "6", "--k", "2", "--out", str(out)]) == 0
    lines = (out / "cascade.csv").read_text().splitlines()
    assert lines[1:] == ["round,remaining_count", "0,6", "1,4", "2,2", "3,0"]


def test_cores_from_files(tmp_path):
    (tmp_path / "g.txt").write_text("4 4\n0 1\n1 2\n2 3\n0 3\n")
    (tmp_path / "r.txt").write_text("0: 0\n1: 1\n2: 0\n3: 1\n")
    out = tmp_path / "c"
    rc = main(["cores", "--edges", str(tmp_path / "g.txt"), "--labels", str(tmp_path / "r.txt"), "--r", "2", "--out", str(out)])
    assert rc == 0
    assert (out / "cascade.csv").read_text().splitlines()[-1] == "0,4"


def test_stability_reports(tmp_path):
    out = tmp_path / "s"
    rc = main(["stability", "--topology", "ring", "--size", "6", "--runs", "3", "--iterations", "20000",
               "--temperature", "0.2", "--out", str(out), "--workers", "1"])
    assert rc == 0
    rep = json.loads((out / "rdcr_report.json").read_text())
    assert set(rep) == {"2.9", "3.1"}
    radii = {e["profile"]: e["radius"] for e in rep["3.1"]["equilibria"]}
    assert radii[0] == 3.0 and radii[63] == pytest.approx(3.1)
    assert (out / "thresholds.csv").read_text().splitlines()[2].startswith("ring,6,3,")
    assert (out / "verdict.csv").read_text().splitlines()[1].startswith("alpha,predicted,runs")


def test_anchors_command(tmp_path):
    out = tmp_path / "a"
    assert main(["anchors", "--config", _write(tmp_path, PA), "--out", str(out), "--workers", "1"]) == 0
    events = (out / "anchors_npg_k5_a1_zero_rep000.csv").read_text()
    assert ",grant," in events and ",fail," in events
    sweep = (out / "budget_sweep.csv").read_text().splitlines()
    assert sweep[1] == "config,budget,steady_network_size,method"
    assert len(sweep) == 2 + 4


def test_anchors_needs_pa_section(tmp_path):
    assert main(["anchors", "--config", _write(tmp_path, SIM), "--out", str(tmp_path / "a")]) == 1


def test_oracle_command_passes(tmp_path, capsys):
    out = tmp_path / "o"
    rc = main(["oracle", "--samples", "200", "--max-n", "6", "--stationary-steps", "3000000", "--out", str(out)])
    assert rc == 0
    rows = (out / "oracle.csv").read_text().splitlines()
    assert all(r.split(",")[4] == "pass" for r in rows[2:])
    assert "stationary_ring8" in capsys.readouterr().out


@pytest.mark.parametrize("name", ["npg_er1000.ini", "nsg_er1000.ini", "anchors_k9.ini"])
def test_shipped_configs_parse(name):
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "configs" / name
    cfg = parse_config(path.read_text())
    assert cfg.games and cfg.replications >= 1
