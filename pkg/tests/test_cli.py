from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys

import jsonschema
import pytest

from skewgbm import classify
from skewgbm import boundary as fb
from skewgbm.cli import (EXIT_ASSUMPTION, EXIT_DEGENERATE, EXIT_INTERNAL, EXIT_OK, EXIT_ORACLE,
                         EXIT_VERIFY, FIGURES, load_schema, main)

from conftest import make_params

REF = ["--r", "0.1", "--b", "0.05", "--sigma", "0.3", "--K", "1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(rows))))


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", *REF, "--z", "2", "--beta", "0.3")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["case"] == "IV"
    jsonschema.validate(doc, load_schema("case_profile"))


def test_exit_codes(capsys):
    code, _, err = run(capsys, "classify", "--r", "0.05", "--b", "0.1", "--sigma", "0.3", "--K", "1",
                       "--z", "1", "--beta", "0.3")
    assert code == EXIT_ASSUMPTION and "value function is infinite" in err
    code, _, err = run(capsys, "classify", *REF, "--z", "1", "--beta", "0")
    assert code == EXIT_DEGENERATE and "GBM" in err
    code, _, _ = run(capsys, "price", *REF, "--z", "1", "--beta", "0.3", "--x", "abc")
    assert code == EXIT_INTERNAL
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--bogus"])
    assert exc.value.code == EXIT_INTERNAL
    capsys.readouterr()


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "p.json"
    cfg.write_text(json.dumps({"r": 0.1, "b": 0.05, "sigma": 0.3, "K": 1, "z": 1, "beta": -0.5}))
    jsonschema.validate(json.loads(cfg.read_text()), load_schema("params"))
    code, out, _ = run(capsys, "classify", "--config", str(cfg))
    assert json.loads(out)["case"] == "III"
    # flags override the file
    code, out, _ = run(capsys, "classify", "--config", str(cfg), "--beta", "-0.1")
    assert json.loads(out)["case"] == "II"


def test_price(capsys):
    code, out, _ = run(capsys, "price", "--figure", "4", "--x", "0.5,1,5")
    assert code == EXIT_OK
    header = out.splitlines()[0]
    assert header.startswith("# skewgbm-price/1") and "regime=OneSidedAlpha" in header and " a=" in header
    rows = table(out)
    assert [r["region"] for r in rows] == ["continue", "continue", "stop"]
    assert float(rows[2]["v"]) == pytest.approx(4.0, rel=1e-14)
    assert float(rows[2]["dv_left"]) == 1.0


def test_price_figure_13_pattern(capsys):
    code, out, _ = run(capsys, "price", "--figure", "13", "--x", "2,3.5,4,5,8,9.9,12")
    flags = [r["region"] for r in table(out)]
    assert flags == ["continue", "stop", "stop", "continue", "continue", "stop", "stop"]


def test_boundary_alpha_decreasing(capsys):
    code, out, _ = run(capsys, "boundary", *REF, "--beta", "-0.1", "--z", "1",
                       "--vary", "z", "--lo", "0.2", "--hi", "1.9", "--count", "20")
    rows = table(out)
    alphas = [float(r["alpha"]) for r in rows]
    assert all(r["regime"] == "OneSidedAlpha" for r in rows)
    assert all(a > b for a, b in zip(alphas, alphas[1:]))


def test_boundary_regime_flip(capsys):
    zb = classify(make_params(-0.1, 1.0)).zbeta
    code, out, _ = run(capsys, "boundary", *REF, "--beta", "-0.1", "--z", "1",
                       "--vary", "z", "--lo", str(zb - 0.1), "--hi", str(zb + 0.1), "--count", "21")
    for r in table(out):
        assert r["regime"] == ("OneSidedAlpha" if float(r["z"]) < zb else "OneSidedAtZ")


def test_boundary_gamma_zeta_appear(capsys):
    zp = fb.z_plus(classify(make_params(0.3, 1.0)))
    code, out, _ = run(capsys, "boundary", *REF, "--beta", "0.3", "--z", "1",
                       "--vary", "z", "--lo", str(zp - 1), "--hi", str(zp + 1), "--count", "20")
    for r in table(out):
        beyond = float(r["z"]) > zp
        assert (r["gamma"] != "") == beyond and (r["zeta"] != "") == beyond
        assert r["error"] == ""


def test_boundary_errors_per_row(capsys):
    code, out, _ = run(capsys, "boundary", *REF, "--beta", "0.3", "--z", "1",
                       "--vary", "b", "--lo", "0.05", "--hi", "0.15", "--count", "3")
    rows = table(out)
    assert code == EXIT_OK and len(rows) == 3
    assert rows[0]["error"] == "" and rows[2]["error"].startswith("AssumptionViolated")


def test_sweep_figure(capsys):
    code, out, _ = run(capsys, "sweep", "--figure", "11", "--single", "--x-count", "50")
    rows = table(out)
    assert out.startswith("# skewgbm-sweep/1")
    assert {r["regime"] for r in rows} == {"PointPlusRay"}
    z = FIGURES[11]["z"]
    at_z = [r for r in rows if float(r["x"]) == z]
    assert at_z and at_z[0]["stop"] == "1"


@pytest.mark.parametrize("threads", ["1", "3"])
def test_sweep_order_independent_of_threads(capsys, monkeypatch, threads):
    monkeypatch.setenv("SKEWGBM_THREADS", threads)
    code, out, _ = run(capsys, "sweep", *REF, "--z", "1", "--beta", "-0.5",
                       "--vary", "z", "--lo", "0.5", "--hi", "5", "--count", "7", "--x-count", "20")
    code, ref, _ = run(capsys, "sweep", *REF, "--z", "1", "--beta", "-0.5", "--threads", "1",
                       "--vary", "z", "--lo", "0.5", "--hi", "5", "--count", "7", "--x-count", "20")
    assert out == ref


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--figure", "13")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["passed"] and doc["regime"] == "TwoIntervals"
    code, out, _ = run(capsys, "verify", "--figure", "13", "--nodes", "1")
    assert code == EXIT_INTERNAL


def test_verify_exit_on_failure(capsys, monkeypatch):
    import skewgbm.verify as ver

    real = ver.verify

    def broken(vf, params=None, grid_cfg=ver.GridConfig()):
        return real(vf.replace_constant(0, "cn", 1.001), params, grid_cfg)

    monkeypatch.setattr(ver, "verify", broken)
    code, out, _ = run(capsys, "verify", "--figure", "4")
    assert code == EXIT_VERIFY and json.loads(out)["passed"] is False


def test_oracle_fd(capsys):
    code, out, _ = run(capsys, "oracle", "--which", "fd", "--figure", "4")
    assert code == EXIT_OK
    meta = out.splitlines()[1]
    err = float(meta.split()[1].split("=")[1])
    assert err <= 5e-3
    code, out, _ = run(capsys, "oracle", "--which", "fd", "--figure", "11")
    assert "z_node_active=1" in out.splitlines()[1]
    code, out, _ = run(capsys, "oracle", "--which", "fd", "--figure", "4", "--tol", "1e-6")
    assert code == EXIT_ORACLE


def test_oracle_mc(capsys):
    code, out, _ = run(capsys, "oracle", "--which", "mc", "--figure", "11", "--paths", "2000")
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema("mc_result"))
    assert code == EXIT_OK and abs(doc["z_score"]) <= 3


def test_byte_identical_and_out(capsys, tmp_path):
    argv = ["oracle", "--which", "mc", "--figure", "5", "--paths", "200", "--seed", "3"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    target = tmp_path / "o.json"
    code, out, _ = run(capsys, *argv, "--out", str(target))
    assert out == "" and target.read_text() == a
    for cmd in (["classify", "--figure", "7"], ["price", "--figure", "9", "--x", "1,2,3"],
                ["boundary", "--figure", "8", "--count", "5"]):
        assert run(capsys, *cmd)[1] == run(capsys, *cmd)[1]


def test_figure_presets(capsys):
    for fig in FIGURES:
        code, out, _ = run(capsys, "verify", "--figure", str(fig), "--nodes", "512")
        assert code == EXIT_OK, fig


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "skewgbm.cli", "classify", "--figure", "4"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["case"] == "II"
    assert not math.isnan(json.loads(proc.stdout)["z0"])
