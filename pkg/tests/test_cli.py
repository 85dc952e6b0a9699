import json

import numpy as np
import pytest

from limitperiodic.cli import Command, UsageError, execute, main, parse


@pytest.fixture
def free_json(tmp_path):
    path = tmp_path / "free.json"
    path.write_text(json.dumps({"periods": [1], "level": 1, "values": [0.0]}))
    return path


@pytest.fixture
def f0_json(tmp_path):
    path = tmp_path / "f0.json"
    path.write_text(json.dumps({"periods": [2, 4, 8], "level": 1, "values": [0.0, 0.0]}))
    return path


def test_parse_bands():
    cmd = parse(["bands", "-i", "f.json", "-o", "b.json"])
    assert isinstance(cmd, Command) and cmd.verb == "bands"
    assert cmd.input == "f.json" and cmd.output == "b.json"


@pytest.mark.parametrize(
    "args, flag",
    [
        (["density", "-i", "f.json", "--u", "0:1", "--t", "3"], "t must be in (1,2)"),
        (["open-gaps", "-i", "f.json", "--eps", "0"], "--eps"),
        (["build-cantor", "-i", "f.json", "--stages", "-1"], "--stages"),
        (["mass", "-i", "f.json", "--u", "0-1"], "--u"),
        (["check-gordon", "-i", "v.csv", "--qs", "8,2"], "--qs"),
        (["bands", "-i", "f.json", "--precision-bits", "20"], "--precision-bits"),
        (["frobnicate"], "invalid choice"),
    ],
)
def test_parse_errors_name_flag(args, flag):
    with pytest.raises(UsageError, match=flag.replace("(", r"\(").replace(")", r"\)")):
        parse(args)


def test_parse_gordon_raises_precision():
    assert parse(["build-gordon", "--stages", "2"]).precision_bits == 53
    cmd = parse(["build-gordon", "--stages", "3"])
    assert cmd.precision_bits >= 128 and cmd.periods == [2, 4, 8, 16]
    with pytest.raises(UsageError, match="bits"):
        parse(["build-gordon", "--stages", "3", "--precision-bits", "64"])


def test_main_exit_codes(free_json, capsys):
    assert main(["density", "-i", str(free_json), "--u", "0:1", "--t", "3"]) == 2
    assert main(["bands", "-i", "/nonexistent.json"]) == 2


def test_bands_free(free_json, tmp_path):
    out = tmp_path / "b.json"
    assert main(["bands", "-i", str(free_json), "-o", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["bands"] == [[-2.0, 2.0]]


def test_bands_omega_invariant(tmp_path):
    f = tmp_path / "f.json"
    f.write_text(json.dumps({"values": [0.3, -1.0, 0.8]}))
    outs = []
    for om in ("0", "2"):
        out = tmp_path / f"b{om}.json"
        assert main(["bands", "-i", str(f), "--omega", om, "-o", str(out), "--no-meta"]) == 0
        outs.append(json.loads(out.read_text())["bands"])
    assert np.allclose(outs[0], outs[1], atol=1e-12)


def test_mass_prints(free_json, capsys):
    assert main(["mass", "-i", str(free_json), "--u", "0:1"]) == 0
    assert capsys.readouterr().out.strip() == "1.000000"


def test_density_and_ltnorm(free_json, tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert main(["density", "-i", str(free_json), "--u", "0:1", "--t", "1.5", "--grid", "20", "-o", str(out)]) == 0
    assert out.read_text().startswith("E,k,g\n")
    assert main(["ltnorm", "-i", str(free_json), "--t", "1.5"]) == 0
    assert float(capsys.readouterr().out.strip().splitlines()[-1]) == pytest.approx(3.7081493546, abs=1e-9)


def test_open_gaps(f0_json, tmp_path):
    out, cert = tmp_path / "ft.json", tmp_path / "c.json"
    assert main(["open-gaps", "-i", str(f0_json), "--eps", "0.5", "-o", str(out), "--cert", str(cert)]) == 0
    assert json.loads(out.read_text())["values"] == [0.0, 1 / 11]
    c = json.loads(cert.read_text())
    assert (c["t"], c["M"]) == (1, 11)


def test_open_gaps_escalation_exit_code(f0_json, tmp_path):
    assert main(["open-gaps", "-i", str(f0_json), "--eps", "0.5", "--tol", "10", "-o", str(tmp_path / "x")]) == 3


def test_build_cantor_deterministic(f0_json, tmp_path):
    texts = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.json"
        assert main(["build-cantor", "-i", str(f0_json), "--stages", "2", "--no-meta", "-o", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    log = json.loads(texts[0])
    assert log["audit"]["passed"] and log["persistence"]["passed"]
    assert "meta" not in log


def test_meta_present_by_default(f0_json, tmp_path):
    out = tmp_path / "c.json"
    main(["build-cantor", "-i", str(f0_json), "--stages", "0", "-o", str(out)])
    assert "created" in json.loads(out.read_text())["meta"]


def test_build_ac(tmp_path):
    f = tmp_path / "f0.json"
    f.write_text(json.dumps({"periods": [2, 4], "level": 1, "values": [0.0, 0.0]}))
    out = tmp_path / "ac.json"
    assert main(["build-ac", "-i", str(f), "--stages", "1", "--u", "0:1", "--t", "1.5", "-o", str(out)]) == 0
    log = json.loads(out.read_text())
    assert log["audit"]["passed"] and log["Q"] > 0
    assert all(st["distance"] <= 2.0 ** -st["k"] for st in log["stages"])


def test_gordon_roundtrip(tmp_path, capsys):
    cert, vals = tmp_path / "g.json", tmp_path / "V.csv"
    assert main(["build-gordon", "--stages", "3", "-o", str(cert), "--values-out", str(vals)]) == 0
    assert json.loads(cert.read_text())["passed"]
    assert main(["check-gordon", "-i", str(vals), "--qs", "2,8,24", "-o", str(tmp_path / "c.json")]) == 0
    checked = json.loads((tmp_path / "c.json").read_text())
    assert checked["passed"] and checked["precision_bits"] >= 128


def test_check_gordon_zero(tmp_path, capsys):
    f = tmp_path / "z.json"
    f.write_text('{"values": [0.0]}')
    assert main(["check-gordon", "-i", str(f), "--qs", "2,8", "-o", str(tmp_path / "c.json")]) == 0
    assert json.loads((tmp_path / "c.json").read_text())["passed"]


def test_precision_env_override(free_json, tmp_path, monkeypatch):
    monkeypatch.setenv("FLOQUET_PRECISION_BITS", "200")
    cmd = parse(["build-gordon", "--stages", "3"])
    assert cmd.precision_bits == 200
    monkeypatch.setenv("FLOQUET_PRECISION_BITS", "junk")
    assert execute(parse(["open-gaps", "-i", str(free_json), "--eps", "0.5", "-o", str(tmp_path / "x")])) == 0
