import csv
import json

import pytest

from sglab import cli
from sglab.config import load_config
from sglab.errors import ConfigError, RegimeError

SMALL = """
[spectrum]
modes = 8
green_modes = 300
weyl_modes = 400
chaos_modes = 16

[mollifier]
grid = 16
partition_grid = 12

[functions]
rho = smooth_bump
rho_radius = 0.2

[monte_carlo]
samples = 2000
outer = 200
inner = 100
paths = 800
steps = 4
n_max = 3

[quadrature]
green_pairs = 4
xor_radial = 5
xor_angular = 6
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_validate_lists_defaults(tmp_path, capsys):
    p = write(tmp_path, "[functions]\nrho = smooth_bump\n")
    assert cli.main(["validate", "--config", str(p)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok")
    assert "[model] beta = 1.0" in out


def test_regime_error(tmp_path, capsys):
    p = write(tmp_path, "[functions]\nrho = smooth_bump\n[model]\nbeta = 1.5\n")
    with pytest.raises(RegimeError, match="finite-ultraviolet"):
        load_config(p)
    assert cli.main(["weyl", "--config", str(p)]) == 2
    assert "finite-ultraviolet" in capsys.readouterr().err


@pytest.mark.parametrize("text,match", [
    ("[functions]\nrho = smooth_bump\n[mollifier]\neps = 0.1, 0.2\n", "strictly decreasing"),
    ("[model]\nbeta = 1.0\n", "smooth_bump, sine_window"),
    ("[functions]\nrho = smooth_bump\n[model]\ngamma = 2\n", "unknown key"),
    ("[functions]\nrho = smooth_bump\n[extra]\na = 1\n", "unknown section"),
    ("[functions]\nrho = smooth_bump\n[monte_carlo]\nsamples = many\n", "samples"),
])
def test_named_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, text))


def test_output_root_precedence(tmp_path, monkeypatch):
    p = write(tmp_path, "[functions]\nrho = smooth_bump\n")
    monkeypatch.setenv("SGLAB_OUT", str(tmp_path / "env"))
    assert load_config(p).output == str(tmp_path / "env")
    assert load_config(p, output="x").output == "x"
    assert load_config(p, seed=5).seed == 5


def read_table(path):
    with open(path) as fh:
        return list(csv.DictReader(r for r in fh if not r.startswith("#")))


def test_partition_alpha_zero(tmp_path):
    p = write(tmp_path, SMALL + "\n[model]\nalphas = 0\nbetas = 1.0\n")
    assert cli.main(["partition", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    rows = read_table(tmp_path / "o" / "partition" / "partition.csv")
    assert float(rows[0]["series_sum"]) == 1.0 and float(rows[0]["mc_partition"]) == 1.0
    m = json.loads((tmp_path / "o" / "partition" / "manifest.json").read_text())
    assert m["passed"] and m["config"]["seed"] == 12345 and "wall_clock_seconds" in m


@pytest.mark.parametrize("cmd", list(cli.COMMANDS))
def test_every_subcommand_runs(tmp_path, cmd):
    p = write(tmp_path, SMALL)
    status = cli.main([cmd, "--config", str(p), "--out", str(tmp_path / "o"), "--threads", "2"])
    assert status in (0, 1)
    d = tmp_path / "o" / cmd
    m = json.loads((d / "manifest.json").read_text())
    assert m["checks"] and (status == 0) == m["passed"]
    for t in m["tables"]:
        text = (d / t).read_text()
        assert text.startswith("# manifest: manifest.json")


def test_reproducible_csv(tmp_path):
    p = write(tmp_path, SMALL)
    for out, threads in (("a", "1"), ("b", "3")):
        cli.main(["wick-check", "--config", str(p), "--out", str(tmp_path / out), "--threads", threads])
    for name in ("wick_nodes.csv", "wick_bound.csv"):
        a = (tmp_path / "a" / "wick-check" / name).read_bytes()
        assert a == (tmp_path / "b" / "wick-check" / name).read_bytes()


def test_csv_headers_define_columns(tmp_path):
    p = write(tmp_path, SMALL)
    cli.main(["weyl", "--config", str(p), "--out", str(tmp_path / "o")])
    lines = (tmp_path / "o" / "weyl" / "weyl.csv").read_text().splitlines()
    assert lines[1].startswith("# k:") and lines[3].startswith("# ratio:")
    assert lines[4] == "k,lambda_k,ratio"
    k, lam, ratio = lines[5].split(",")
    assert float(lam) == float(ratio) and repr(float(lam)) == lam
