import json

import mpmath
import numpy as np
import pytest

from limitperiodic import io
from limitperiodic.floquet import FiniteVector, density_profile
from limitperiodic.odometer import sampling_function


def test_format_float_17_digits():
    assert io.format_float(0.1) == "0.10000000000000001"
    assert io.format_float(2.0) == "2.0"
    assert float(io.format_float(1 / 3)) == 1 / 3
    assert io.format_float(float("nan")) == "null"


def test_dumps_is_valid_json():
    obj = {"a": [1.0, 2, None, True], "b": {"c": np.float64(0.25), "d": []}, "e": "x"}
    assert json.loads(io.dumps(obj)) == {"a": [1.0, 2, None, True], "b": {"c": 0.25, "d": []}, "e": "x"}


def test_dumps_mpf_as_string():
    with mpmath.workprec(128):
        text = io.dumps({"x": mpmath.mpf(1) / 3})
    s = json.loads(text)["x"]
    assert isinstance(s, str) and s.startswith("0.3333333333333333333333333333333333333")


def test_function_roundtrip(tmp_path):
    f = sampling_function([2, 4], 2, [0.1, -0.2, 1 / 3, 7.0])
    path = tmp_path / "f.json"
    io.write_json(path, f.to_dict())
    assert io.load_function(path) == f
    bare = tmp_path / "v.json"
    bare.write_text('{"values": [1, 2, 3]}')
    assert io.load_function(bare).period == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    with pytest.raises(ValueError):
        io.load_function(bad)


def test_potential_csv_roundtrip(tmp_path):
    path = tmp_path / "V.csv"
    io.write_potential_csv(path, [0.5, -1 / 3, 2.0], start=-1)
    vals, start = io.read_potential_csv(path)
    assert start == -1 and vals == [0.5, -1 / 3, 2.0]
    assert io.load_function(path).period == 3


def test_potential_csv_extended(tmp_path):
    path = tmp_path / "V.csv"
    with mpmath.workprec(160):
        x = mpmath.mpf(1) + mpmath.mpf(10) ** -40
        io.write_potential_csv(path, [x], start=0)
    vals, _ = io.read_potential_csv(path)
    with mpmath.workprec(160):
        assert vals[0] - 1 > mpmath.mpf(10) ** -41


def test_potential_csv_rejects_gaps(tmp_path):
    path = tmp_path / "V.csv"
    path.write_text("n,V\n0,1\n2,3\n")
    with pytest.raises(ValueError):
        io.read_potential_csv(path)


def test_density_csv(tmp_path):
    prof = density_profile([0.0], FiniteVector.delta(0), 10)
    path = tmp_path / "g.csv"
    io.write_density_csv(path, prof)
    lines = path.read_text().splitlines()
    assert lines[0] == "E,k,g" and len(lines) == 11
    E, k, g = map(float, lines[5].split(","))
    assert abs(g - 1 / (np.pi * np.sqrt(4 - E * E))) < 1e-12
