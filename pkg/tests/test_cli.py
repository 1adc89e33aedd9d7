import json
import math
import subprocess
import sys
import textwrap
from dataclasses import replace

import pytest

from tripletmc.cli import SERIES_HEADER, SweepRow, fit_slope, main, sweep_r
from tripletmc.config import ConfigError, config_echo, load_config, parse_config

HEIS2 = """\
model:
  kind: heisenberg
  lattice: {geometry: chain, lx: 2}
engine:
  r: 30
  initial_shift: -1.0
  target_population: 1000
  initial_weight: 1000
  n_thermalization: 100
  n_sampling: 400
  rng_seed: 3
output:
  directory: {out}
"""


def _text(out):
    return HEIS2.replace("{out}", str(out))


@pytest.fixture
def heis2_cfg(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(_text(tmp_path / "out"))
    return path


def test_run_writes_series_and_summary(heis2_cfg, tmp_path, capsys):
    assert main(["run", "--config", str(heis2_cfg)]) == 0
    lines = (tmp_path / "out" / "series.csv").read_text().splitlines()
    assert lines[0] == SERIES_HEADER
    assert len(lines) == 1 + 500
    assert [int(l.split(",")[0]) for l in lines[1:]] == list(range(500))
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["E_mean"] == pytest.approx(-1.0, abs=0.02)
    assert summary["seed"] == 3 and summary["n_loops"] == 500
    assert summary["config"]["engine"]["r"] == 30.0


def test_seed_override_is_byte_identical(heis2_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(heis2_cfg), "--seed", "7", "--out", str(a)]) == 0
    assert main(["run", "--config", str(heis2_cfg), "--seed", "7", "--out", str(b)]) == 0
    assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
    assert json.loads((a / "summary.json").read_text())["seed"] == 7


def test_config_echo_round_trip(heis2_cfg, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    main(["run", "--config", str(heis2_cfg), "--seed", "11", "--out", str(first)])
    main(["run", "--config", str(first / "summary.json"), "--out", str(second)])
    assert (first / "series.csv").read_bytes() == (second / "series.csv").read_bytes()


def test_unknown_key_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text(_text(tmp_path).replace("  rng_seed: 3", "  rng_seed: 3\n  kapa: 0.1"))
    assert main(["run", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert f"{path}:12:3" in err and "unknown key 'kapa'" in err


@pytest.mark.parametrize("edit, fragment", [
    (("r: 30", "r: -1"), "r must be positive"),
    (("r: 30", "r: thirty"), "expected a number"),
    (("kind: heisenberg", "kind: ising"), "kind must be"),
    (("lx: 2}", "lx: 2, ly: 0}"), "positive"),
    (("n_sampling: 400", "n_sampling: 4.5"), "expected an integer"),
])
def test_invalid_values_exit_2(tmp_path, capsys, edit, fragment):
    path = tmp_path / "bad.yaml"
    path.write_text(_text(tmp_path).replace(*edit))
    assert main(["run", "--config", str(path)]) == 2
    assert fragment in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_singular_resolvent_exit_3(tmp_path, capsys):
    path = tmp_path / "r.yaml"
    path.write_text(_text(tmp_path).replace("r: 30", "r: 0.4").replace("initial_shift: -1.0",
                                                                                   "initial_shift: 0.0"))
    assert main(["run", "--config", str(path)]) == 3
    assert "resolvent denominator" in capsys.readouterr().err


def test_json_config_accepted(tmp_path):
    cfg = parse_config(_text(tmp_path))
    text = json.dumps(config_echo(cfg))
    again = parse_config(text)
    assert again.engine == cfg.engine and again.model == cfg.model


def test_hubbard_config_and_ed(tmp_path, capsys):
    path = tmp_path / "hub.yaml"
    path.write_text(textwrap.dedent("""\
        model: {kind: hubbard, lattice: {geometry: chain, lx: 2}, t: 1, U: 4, n_up: 1, n_down: 1}
        engine: {r: 4, initial_states: [[1, 2]]}
    """))
    cfg = load_config(path)
    assert cfg.engine.initial_states == ((1, 2),)
    assert main(["ed", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "dimension = 4" in out
    e0 = float(out.split("E0 = ")[1])
    assert e0 == pytest.approx(2 - 2 * math.sqrt(2), abs=1e-6)


def test_ed_capacity_error(tmp_path, capsys):
    path = tmp_path / "big.yaml"
    path.write_text("model: {kind: heisenberg, lattice: {geometry: square, lx: 8, ly: 8}}\nengine: {r: 4}\n")
    assert main(["ed", "--config", str(path)]) == 2
    assert "exceeds" in capsys.readouterr().err


def test_hubbard_rejects_J(tmp_path):
    with pytest.raises(ConfigError, match="'J' does not apply"):
        parse_config("model: {kind: hubbard, lattice: {geometry: chain, lx: 2}, J: 1, n_up: 1, n_down: 1}\n"
                     "engine: {r: 4}\n")


def test_sweep_needs_two_replicas(heis2_cfg):
    with pytest.raises(ConfigError):
        sweep_r(load_config(heis2_cfg), [4.0], 1)


def test_sweep_empty_list(heis2_cfg):
    rows, slope = sweep_r(load_config(heis2_cfg), [], 3)
    assert rows == [] and math.isnan(slope)


def test_sweep_small(heis2_cfg, tmp_path, capsys):
    assert main(["sweep-r", "--config", str(heis2_cfg), "--r-list", "8,30", "--replicas", "3",
                 "--out", str(tmp_path / "sw")]) == 0
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[1].startswith("8.0,3,0,")
    assert "slope" in json.loads((tmp_path / "sw" / "sweep.json").read_text())


def test_sweep_records_failures(heis2_cfg):
    cfg = load_config(heis2_cfg)
    cfg.engine = replace(cfg.engine, initial_shift=0.0)  # r - S + h = 0.3 - 0.5 < 0
    rows, _ = sweep_r(cfg, [0.3], 2)
    assert rows[0].failed == 2 and math.isnan(rows[0].variance)


def test_fit_slope_exact_power_law():
    rows = [SweepRow(r, 10, 0, -1.0, 1e-4 * r, 1e-4 * r) for r in (4, 8, 16, 32, 64)]
    assert fit_slope(rows, (8, 64)) == pytest.approx(1.0)
    assert math.isnan(fit_slope(rows, (100, 200)))


def test_module_entry_point(heis2_cfg):
    res = subprocess.run([sys.executable, "-m", "tripletmc", "ed", "--config", str(heis2_cfg)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "E0 = -1.0" in res.stdout


def test_unsigned_exponent_is_a_number():
    cfg = parse_config("model: {kind: heisenberg, lattice: {geometry: chain, lx: 4}}\n"
                       "engine: {r: 3e1, target_population: 3.5e5, n_sampling: 1e3}\n")
    assert (cfg.engine.r, cfg.engine.target_population, cfg.engine.n_sampling) == (30.0, 3.5e5, 1000)
    with pytest.raises(ConfigError, match="expected a number"):
        parse_config("model: {kind: heisenberg, lattice: {geometry: chain, lx: 4}}\nengine: {r: '30'}\n")
