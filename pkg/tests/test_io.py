import json

import numpy as np
import pytest

from varinfer import io
from varinfer.errors import ConfigError
from varinfer.model import InnovationSpec, simulate


def test_matrix_roundtrip_is_exact(tmp_path):
    M = np.random.default_rng(0).standard_normal((3, 4)) * 1e-7
    io.write_matrix(tmp_path / "m.csv", M)
    assert io.read_matrix(tmp_path / "m.csv").tobytes() == M.tobytes()
    io.write_matrix(tmp_path / "h.csv", M, header=list("abcd"))
    np.testing.assert_array_equal(io.read_matrix(tmp_path / "h.csv", header=True), M)


@pytest.mark.parametrize("text,fragment", [
    ("1,2\n3,x\n", "row 2, column 2"),
    ("1,2\n3\n", "row 2: expected 2"),
    ("", "no data"),
])
def test_read_matrix_errors(tmp_path, text, fragment):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ConfigError) as info:
        io.read_matrix(path)
    assert fragment in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        io.read_matrix(tmp_path / "nope.csv")
    with pytest.raises(ConfigError):
        io.read_sample(tmp_path / "nope.csv")


def test_sample_roundtrip(tmp_path):
    s = simulate(0.3 * np.eye(3), InnovationSpec(), 10, seed=1)
    io.write_sample(tmp_path / "s.csv", s)
    back = io.read_sample(tmp_path / "s.csv")
    assert back.series.tobytes() == s.series.tobytes()
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "t,x1,x2,x3"


def test_sample_header_checked(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("t,a,b\n0,1,2\n")
    with pytest.raises(ConfigError):
        io.read_sample(path)


def test_json_and_digest(tmp_path):
    obj = {"b": np.arange(3.0), "a": 1}
    io.write_json(tmp_path / "o.json", obj)
    assert json.loads((tmp_path / "o.json").read_text()) == {"a": 1, "b": [0.0, 1.0, 2.0]}
    assert io.digest({"a": 1, "b": 2}) == io.digest({"b": 2, "a": 1})
    assert io.digest({"a": 1}) != io.digest({"a": 2})
    assert io.fmt(0.1) == "0.10000000000000001"
