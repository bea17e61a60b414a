import csv
import json

import pytest

from spikering import cli


@pytest.fixture(scope="module")
def cache(tmp_path_factory):
    d = tmp_path_factory.mktemp("cache")
    assert cli.main(["ground-state", "--out", str(d), "--cache-dir", str(d)]) == 0
    return str(d)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_ground_state_and_cache(tmp_path, capsys, cache):
    code, out, _ = run(capsys, "ground-state", "--out", str(tmp_path), "--cache-dir", cache)
    assert code == 0
    summary = json.loads(out)
    assert summary["cached"] is True
    assert summary["w0"] == pytest.approx(2.2062008646, rel=1e-9)
    raw = (tmp_path / "profile.csv").read_bytes()
    assert b"\r\n" not in raw and raw.startswith(b"r,w,dw\n")


def test_invalid_exponent_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "ground-state", "--p", "0.5", "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["error"] == "NonSubcriticalExponent"


def test_unknown_flag_and_config_key(tmp_path, capsys):
    code, _, err = run(capsys, "spectrum", "--bogus", "--out", str(tmp_path))
    assert code == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"K": 16, "colour": "red"}))
    code, _, err = run(capsys, "spectrum", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "colour" in json.loads(err)["message"]


def test_config_then_flag_precedence(tmp_path, capsys, cache):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"K": 16, "dhat": 30.0}))
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg), "--K", "32", "--out", str(tmp_path))
    assert code == 0
    info = json.loads(out.splitlines()[-1])
    assert info["K"] == 32 and info["dhat"] == 30.0


def test_spectrum_inertia(tmp_path, capsys, cache):
    code, out, _ = run(capsys, "spectrum", "--K", "64", "--out", str(tmp_path), "--cache-dir", cache)
    assert code == 0
    assert "inertia: 1 zero, 63 negative, 64 positive" in out
    rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 64 and float(rows[0]["Lambda1"]) == 0.0


def test_spectrum_mismatch_exit_3(tmp_path, capsys, cache):
    code, out, err = run(capsys, "spectrum", "--K", "8", "--out", str(tmp_path), "--cache-dir", cache)
    assert code == 3
    assert json.loads(err)["error"] == "InertiaMismatch"


def test_spectrum_dhat_too_small(tmp_path, capsys):
    code, _, err = run(capsys, "spectrum", "--K", "16", "--dhat", "3", "--out", str(tmp_path))
    assert code == 2 and json.loads(err)["error"] == "DhatTooSmall"


def test_balance_sweep(tmp_path, capsys, cache):
    code, out, _ = run(capsys, "balance-sweep", "--K", "100", "200", "--out", str(tmp_path),
                       "--cache-dir", cache, "--format", "json")
    assert code == 0
    rows = json.loads((tmp_path / "balance.json").read_text())
    assert [r["K"] for r in rows] == [100, 200]
    assert json.loads(out)["max_rel_residual"] <= 1e-10


def test_compare_continuum(tmp_path, capsys, cache):
    code, _, _ = run(capsys, "compare-continuum", "--K", "32", "64", "128", "256", "--phi", "cos 1",
                     "--out", str(tmp_path), "--cache-dir", cache)
    assert code == 0
    rows = read_csv(tmp_path / "convergence.csv")
    assert list(rows[0]) == ["K", "sup_err_f", "sup_err_g", "ratio"]
    assert 0.2 <= float(rows[-1]["ratio"]) <= 0.32


def test_compare_continuum_bad_forcing(tmp_path, capsys):
    code, _, err = run(capsys, "compare-continuum", "--varphi", "1 + sin 1", "--dhat", "30",
                       "--out", str(tmp_path))
    assert code == 2 and json.loads(err)["error"] == "NonZeroMeanForcing"


def test_energy_scan_radial_flat(tmp_path, capsys, cache):
    code, out, _ = run(capsys, "energy-scan", "--n-alpha", "16", "--out", str(tmp_path), "--cache-dir", cache)
    assert code == 0 and json.loads(out)["flat"] is True
    assert len(read_csv(tmp_path / "scan.csv")) == 16


def test_energy_scan_angular_reproducible(tmp_path, capsys, cache):
    pot = tmp_path / "pot.json"
    pot.write_text(json.dumps({"m": 4, "perturbation": {"kind": "angular", "eps": 1e-3, "frequency": 16}}))
    outs = []
    for sub in ("a", "b"):
        code, _, _ = run(capsys, "energy-scan", "--potential", str(pot), "--n-alpha", "64", "--seed", "7",
                         "--out", str(tmp_path / sub), "--cache-dir", cache)
        assert code == 0
        outs.append((tmp_path / sub / "extrema.json").read_text())
    assert outs[0] == outs[1]
    summary = json.loads(outs[0])
    assert not summary["flat"] and len(summary["extrema"]) >= 2


def test_energy_scan_bad_potential(tmp_path, capsys):
    pot = tmp_path / "pot.json"
    pot.write_text(json.dumps({"m": 4, "shape": "square"}))
    code, _, err = run(capsys, "energy-scan", "--potential", str(pot), "--out", str(tmp_path))
    assert code == 2
