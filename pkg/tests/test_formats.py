import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ubva.errors import InputError
from ubva.formats import (
    atomic_output_dir,
    dumps_json,
    fmt_float,
    read_json,
    read_matrix,
    write_matrix_binary,
    write_matrix_tsv,
)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip(x):
    assert float(fmt_float(x)) == x


def test_json_roundtrip(tmp_path):
    obj = {"a": 0.1 + 0.2, "b": math.inf, "c": [1, 2.5], "d": np.float64(1 / 3), "e": np.int64(4)}
    text = dumps_json(obj)
    assert "0.30000000000000004" in text and "Infinity" in text
    back = json.loads(text)
    assert back["a"] == 0.1 + 0.2 and back["b"] == math.inf and back["d"] == 1 / 3


def test_matrix_roundtrip(tmp_path):
    m = np.random.default_rng(0).standard_normal((4, 3))
    write_matrix_tsv(tmp_path / "m.tsv", m, ["x", "y", "z"])
    vals, names = read_matrix(tmp_path / "m.tsv")
    assert names == ["x", "y", "z"] and vals.tobytes() == m.tobytes()
    write_matrix_binary(tmp_path / "m.bin", m)
    assert (tmp_path / "m.bin").read_bytes()[:4] == b"CSEV"
    vals, names = read_matrix(tmp_path / "m.bin")
    assert vals.tobytes() == m.tobytes() and names == ["V1", "V2", "V3"]


def test_atomic_dir(tmp_path):
    with pytest.raises(RuntimeError):
        with atomic_output_dir(tmp_path / "out") as d:
            (d / "a.txt").write_text("partial")
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []
    with atomic_output_dir(tmp_path / "out") as d:
        (d / "a.txt").write_text("ok")
    assert (tmp_path / "out" / "a.txt").read_text() == "ok"
    with atomic_output_dir(tmp_path / "out") as d:
        (d / "a.txt").write_text("again")
    assert (tmp_path / "out" / "a.txt").read_text() == "again"
    assert [p.name for p in tmp_path.iterdir()] == ["out"]


def test_read_errors(tmp_path):
    with pytest.raises(InputError):
        read_matrix(tmp_path / "missing.tsv")
    (tmp_path / "j.json").write_text('{"x": 1}')
    assert read_json(tmp_path / "j.json") == {"x": 1}
