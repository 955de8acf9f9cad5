import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticesnake.config import RunConfig, load, loads, parse_orientation
from latticesnake.errors import ConfigError
from latticesnake.output import SCHEMAS, read_csv, render, write


def test_round_trip():
    cfg = RunConfig("compare", s=[0.8, 1.0, 0.1], orient=[(1, 0), (1, 1)], J=400,
                    lambda_abs=2535.16315612, scan_appendix=True).validate()
    again = loads(cfg.dumps())
    assert again == cfg and again.dumps() == cfg.dumps()
    assert again.config_hash() == cfg.config_hash()


@given(st.lists(st.floats(1e-6, 4.0), min_size=1, max_size=5))
def test_float_values_round_trip_exactly(values):
    cfg = RunConfig("width", s=values).validate()
    assert loads(cfg.dumps()).s == values


def test_hash_ignores_output_and_jobs():
    a = RunConfig("width", output="a.csv", jobs=1)
    b = RunConfig("width", output="b.csv", jobs=4, fmt="json")
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != RunConfig("width", s=[0.5]).config_hash()


def test_comments_and_repeats():
    cfg = loads("command=width  # sweep\ns=0.5\ns=0.25\n\norient=1,0\norient=2,1\n")
    assert cfg.s == [0.5, 0.25] and cfg.orient == [(1, 0), (2, 1)]


@pytest.mark.parametrize("text,msg", [
    ("s=1", "command"),
    ("command=fly", "command"),
    ("command=width\nmodel=quartic", "model"),
    ("command=width\ns=-1", "s="),
    ("command=width\norient=0,0", "orient"),
    ("command=width\norient=1", "orient"),
    ("command=width\nJ=4", "J="),
    ("command=width\nJ=many", "J="),
    ("command=width\nJ=100\nJ=200", "twice"),
    ("command=width\nbogus=1", "unknown"),
    ("command=width\njust text", "key=value"),
    ("command=depin\nbracket_inner=2\nbracket_outer=1", "bracket"),
    ("command=diagram\nL_min=1", "together"),
    ("command=eigen\nscan_appendix=maybe", "true or false"),
    ("command=depin\nT=0", "positive"),
])
def test_validation_messages(text, msg):
    with pytest.raises(ConfigError, match=msg):
        loads(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load(str(tmp_path / "nope.cfg"))
    p = tmp_path / "run.cfg"
    p.write_text("command=lambda\n")
    assert load(str(p)).command == "lambda"


def test_parse_orientation():
    assert parse_orientation("3,-2") == (3, -2)
    with pytest.raises(ConfigError):
        parse_orientation("3;2")


def test_csv_render_and_read_back():
    rows = [("cubic_const", "square", 1, 0, 0.8, np.float64(0.8 ** 0.5), 2535.0, 1e-7, None)]
    text = render("width", rows, {"b": 1, "a": np.float64(0.1)})
    lines = text.splitlines()
    assert lines[0] == "# schema=width version=1"
    assert lines[1] == '# meta {"a": 0.1, "b": 1}'
    schema, meta, cols, body = read_csv(text, is_text=True)
    assert schema == "width" and meta == {"a": 0.1, "b": 1}
    assert tuple(cols) == SCHEMAS["width"]
    assert float(body[0][5]) == 0.8 ** 0.5 and body[0][8] == ""


def test_json_render():
    doc = json.loads(render("state", [(0, 0.0, np.float64(1.5))], {"x": np.int64(3)}, "json"))
    assert doc["schema"] == "state" and doc["version"] == 1
    assert doc["columns"] == ["j", "z", "u"] and doc["rows"] == [[0, 0.0, 1.5]]
    assert doc["meta"] == {"x": 3}


def test_row_length_checked():
    with pytest.raises(ValueError):
        render("state", [(1, 2)])


def test_write_to_file(tmp_path):
    path = tmp_path / "t.csv"
    text = write(str(path), "trajectory", [(0.0, 1.25)])
    assert path.read_text() == text
