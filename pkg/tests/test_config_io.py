import json

import numpy as np
import pytest

from hsurflab import io
from hsurflab.config import ConfigError, load_config, validate
from hsurflab.rotational import round_sphere


def test_defaults_merge(tmp_path):
    cfg = load_config(None, "height-sweep")
    assert cfg.get("radii")[0] == 0.25 and cfg.get("orientation") == "down"
    assert cfg.seed == 0 and not cfg.quick
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"command": "height-sweep", "radii": [0.5], "seed": 7}))
    cfg = load_config(p, None, {"resolution": 32, "quick": None})
    assert cfg.get("radii") == [0.5] and cfg.seed == 7 and cfg.resolution == 32


@pytest.mark.parametrize("raw", [
    {"command": "flux", "bogus": 1},
    {"command": "nope"},
    {"command": "flux", "field": {"formula": "quartic"}},
    {"command": "solve-graph", "domain": {"kind": "disk", "R": -1.0}},
    {"command": "flux", "surface": {"kind": "torus"}},
    {"command": "solve-graph", "orientation": "sideways"},
])
def test_schema_rejects(raw):
    with pytest.raises(ConfigError):
        validate(raw)


def test_load_rejects(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json", "flux")
    p = tmp_path / "c.json"
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(p, "flux")
    p.write_text(json.dumps({"command": "estrella"}))
    with pytest.raises(ConfigError):
        load_config(p, "flux")


def test_dumps_format():
    text = io.dumps({"b": np.float64(0.1), "a": [1, 2.5], "c": np.nan, "d": np.array([True]),
                     "e": {"z": None}})
    assert text.index('"a"') < text.index('"b"')
    d = json.loads(text)
    assert d["b"] == 0.1 and d["c"] is None and d["d"] == [True]
    assert "0.10000000000000001" in text
    assert '[1, 2.5]' in text
    assert io.dumps({"x": [1.0]}) == io.dumps({"x": [1.0]})
    with pytest.raises(TypeError):
        io.dumps({"x": object()})


def test_csv_and_columns(tmp_path):
    p = io.write_csv(tmp_path / "a.csv", ["k", "v", "ok"], [(1, 0.5, True), (2, np.inf, False)])
    assert p.read_text() == "k,v,ok\n1,0.5,1\n2,inf,0\n"
    q = io.write_columns(tmp_path / "b.csv", {"s": np.arange(2), "t": np.array([0.25, 1.0])})
    assert q.read_text().splitlines() == ["s,t", "0,0.25", "1,1"]


def test_obj_and_surface(tmp_path):
    S = round_sphere(1.0, 8)
    obj, csv = io.write_surface(tmp_path / "s.obj", S, {"H": S.H})
    lines = obj.read_text().splitlines()
    verts = [ln for ln in lines if ln.startswith("v ")]
    faces = [ln for ln in lines if ln.startswith("f ")]
    assert len(verts) == S.n and len(faces) == len(S.faces())
    idx = [int(k) for ln in faces for k in ln.split()[1:]]
    assert min(idx) == 1 and max(idx) == S.n
    rows = csv.read_text().splitlines()
    assert rows[0] == "x,y,z,interior,H" and len(rows) == S.n + 1
