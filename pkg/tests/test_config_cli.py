import csv
import json

import numpy as np
import pytest

from rvm.cli import main
from rvm.config import DEFAULTS, default_config, load_config, parse_config
from rvm.errors import ConfigError

SMALL = {"grid": {"Nx": 16, "dt": 0.1},
         "simulation": {"steps": 4, "output_every": 2},
         "distribution": {"n_particles": 2000},
         "trace": {"fields": 2, "characteristics": 3, "t_end": 0.2, "export": 2}}


def write_cfg(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_empty_object_gives_defaults():
    cfg = parse_config("{}")
    f = cfg.force
    assert (f.M, f.R0, f.R1, f.A) == (3.0, 1.0, 2.0, 5.0)
    assert cfg.grid.Nx == 64 and cfg.seed == 0
    assert parse_config("").to_dict() == cfg.to_dict()
    d = cfg.to_dict()
    for block, vals in DEFAULTS.items():
        if isinstance(vals, dict):
            for k in vals:
                assert k in d[block]


@pytest.mark.parametrize("text, path, fragment", [
    ('{"force": {"M": 1.5}}', "$.force.M", "M>2"),
    ('{"force": {"A": 1}}', "$.force.A", "minimal admissible A=5"),
    ('{"grid": {"Nx": "a"}}', "$.grid.Nx", "not of type 'integer'"),
    ('{"grid": {"Nx": 64, "dt": 1.0}}', "$.grid.dt", "CFL"),
    ('{"colour": 1}', "$", "Additional properties"),
    ('{"distribution": {"tracers": [[0, [0, 0]]]}}', "$.distribution.tracers[0][1]", "too short"),
    ('{"force": {"R1": 3.0}}', "$.force.R1", "R0+1"),
    ('{"verify": {"scale": "huge"}}', "$.verify.scale", "huge"),
])
def test_rejections_carry_json_path(text, path, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.path == path
    assert fragment in str(exc.value)
    assert str(exc.value).startswith(path)


def test_malformed_documents():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config("{")
    with pytest.raises(ConfigError, match="object"):
        parse_config("[1, 2]")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/cfg.json")


def test_admissibility_override():
    cfg = parse_config('{"force": {"A": 0.01, "enforce_admissibility": false}}')
    assert cfg.force.A == 0.01 and not cfg.force.admissible


def test_overrides_merge_blocks():
    cfg = default_config().with_overrides(grid={"Nx": 32}, seed=7)
    assert cfg.grid.Nx == 32 and cfg.grid.L == pytest.approx(4 * np.pi) and cfg.seed == 7
    with pytest.raises(ConfigError):
        default_config().with_overrides(force={"M": 2.0})


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", "--config", write_cfg(tmp_path, {"force": {"M": 1.5}})]) == 126
    assert "M>2" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 126


def test_cli_simulate(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--config", write_cfg(tmp_path, SMALL), "--out", str(out),
                 "--seed", "3"])
    assert code == 0
    text = capsys.readouterr().out
    assert text.count("PASS") == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 3 and man["config"]["grid"]["Nx"] == 16
    assert {"diagnostics.csv", "particles_final.csv"} <= {p.name for p in out.iterdir()}


def test_cli_trace_exports(tmp_path):
    out = tmp_path / "trace"
    assert main(["trace", "--config", write_cfg(tmp_path, SMALL), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert len(man["files"]) == 2 and man["summary"]["failed"] == []
    with open(out / man["files"][0]) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) > 2


def test_cli_kernels_report(tmp_path, capsys):
    rep = tmp_path / "k.json"
    assert main(["kernels", "--samples", "3000", "--pmax", "100", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["n_random"] == 3000 and data["p_max"] == 100.0 and data["ok"]
    assert capsys.readouterr().out.count("PASS") == 8


def test_cli_ode_csv_and_status(tmp_path, capsys):
    out = tmp_path / "ode"
    # the single log factor envelope is crossed well before t = 1
    assert main(["ode", "--C", "1", "--t", "1", "--dt", "0.01", "--out", str(out)]) == 1
    assert "FAIL" in capsys.readouterr().out
    with open(out / "ode.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:4] == ["t", "W", "Z", "envelope"]
    assert len(rows) == 102 and float(rows[-1][0]) == pytest.approx(1.0)
    cfg = write_cfg(tmp_path, {"ode": {"log_factor": 2}})
    assert main(["ode", "--config", cfg, "--C", "2", "--dt", "0.001", "--out", str(out)]) == 0


def test_cli_ode_stdout(capsys):
    main(["ode", "--t", "0.1", "--dt", "0.05"])
    captured = capsys.readouterr()
    assert captured.out.splitlines()[0].startswith("t,W,Z,envelope")
    assert "PASS" in captured.err


def test_cli_unknown_mode():
    with pytest.raises(SystemExit):
        main(["dance"])
