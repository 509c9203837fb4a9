import json
import os
import subprocess
import sys

import pytest

from dbgkit import cli

SMALL_KAC = {"sim": {"n_paths": 500}}
SMALL_SIM = {"alpha": 0.2, "beta": 1.0, "x0": 0.5, "sim": {"dt": 1e-3, "horizon": 0.1, "n_paths": 20}}


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def _strip_timestamp(text):
    doc = json.loads(text)
    doc.pop("timestamp")
    return doc


def test_missing_config_is_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert cli.main(["verify", "kac", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


@pytest.mark.parametrize("cfg,field", [
    ({"sim": {"dt": -1}}, "sim.dt"),
    ({"sim": {"bogus": 1}}, "sim.bogus"),
    ({"alpha": 0.7}, "alpha"),
    ({"typo": 1}, "typo"),
    ({"seed": -1}, "seed"),
])
def test_config_errors_name_the_field(tmp_path, capsys, cfg, field):
    assert cli.main(["verify", "kac", "--config", str(_write(tmp_path, cfg))]) == 2
    err = capsys.readouterr().err
    assert f"{field}:" in err


def test_invalid_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["kernel", "--config", str(p)]) == 2


def test_rel_tol_validated(tmp_path):
    assert cli.main(["kernel", "--rel-tol", "-1"]) == 2


def test_verify_kac_artifact(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["verify", "kac", "--config", str(_write(tmp_path, SMALL_KAC)), "--out", str(out),
                     "--seed", "5"])
    doc = json.loads((out / "kac.json").read_text())
    assert code == (0 if doc["pass"] else 1)
    assert doc["check"] == "kac"
    assert doc["meta"]["seed"] == 5 and doc["meta"]["n_paths"] == 500
    assert set(doc["timestamp"]) == {"started", "elapsed_s"}
    names = [r["name"] for r in doc["result"]]
    assert names == ["kac-pathwise", "kac-left", "kac-right"]


def test_verify_is_deterministic_modulo_timestamp(tmp_path, capsys):
    cfgp = str(_write(tmp_path, SMALL_KAC))
    runs = []
    for threads in ("1", "3"):
        cli.main(["verify", "kac", "--config", cfgp, "--seed", "9", "--threads", threads])
        runs.append(capsys.readouterr().out)
    a, b = (_strip_timestamp(r) for r in runs)
    a["meta"].pop("threads", None)
    b["meta"].pop("threads", None)
    assert a == b
    assert "elapsed" not in json.dumps(a)


def test_in_process_equals_subprocess(tmp_path, capsys):
    cfgp = str(_write(tmp_path, SMALL_SIM))
    cli.main(["simulate", "--config", cfgp, "--seed", "3"])
    first = capsys.readouterr().out
    cli.main(["simulate", "--config", cfgp, "--seed", "3"])
    second = capsys.readouterr().out
    proc = subprocess.run([sys.executable, "-m", "dbgkit.cli", "simulate", "--config", cfgp, "--seed", "3"],
                          capture_output=True, text=True, check=True)
    assert first == second == proc.stdout


def test_seed_precedence(tmp_path, capsys, monkeypatch):
    cfgp = str(_write(tmp_path, dict(SMALL_SIM, seed=11)))

    def header(argv):
        cli.main(argv)
        return capsys.readouterr().out.splitlines()[0]

    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    assert "seed=11" in header(["simulate", "--config", cfgp])
    monkeypatch.setenv(cli.SEED_ENV, "22")
    assert "seed=22" in header(["simulate", "--config", cfgp])
    assert "seed=33" in header(["simulate", "--config", cfgp, "--seed", "33"])
    monkeypatch.setenv(cli.SEED_ENV, "x")
    assert cli.main(["simulate", "--config", cfgp]) == 2


def test_csv_header_and_columns(tmp_path, capsys):
    cli.main(["kernel", "--config", str(_write(tmp_path, {"kernel": "ring_p", "t": [0.5, 1.0]}))])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# seed=0 ")
    for key in ("dt=", "n_paths=", "version="):
        assert key in lines[0]
    assert lines[1].split(",")[0] == "operation"
    assert lines[1].split(",")[-2:] == ["value", "est_error"]
    row = lines[2].split(",")
    assert row[0] == "ring_p" and float(row[-1]) < 1e-8

    cli.main(["specfun", "--config", str(_write(tmp_path, {"function": "bessel_k", "nu": [0.5], "x": [1.0]}))])
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "nu,x,value"
    assert float(lines[2].split(",")[2]) == pytest.approx(0.4610685044478946, rel=1e-13)


def test_out_directory(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(_write(tmp_path, SMALL_SIM)), "--out", str(out)]) == 0
    text = (out / "simulate.csv").read_text().splitlines()
    assert text[1].startswith("path,x_T")
    assert len(text) == 2 + 20


def test_console_script_help():
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "dbgkit.cli", "kernel", "--help"], capture_output=True,
                          text=True, env=env)
    assert proc.returncode == 0
    assert "est_error" in proc.stdout
