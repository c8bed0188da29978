"""CSV rendering, hashing, and manifest output."""

import json
import math

import numpy as np
import pytest

from ocs.io import (
    config_hash,
    file_sha256,
    read_csv,
    versions,
    write_csv,
    write_manifest,
)


def test_csv_round_trip_preserves_doubles_exactly(tmp_path):
    # %.17g is lossless for binary64, so read-back must be bit-equal
    vals = [1.0 / 3.0, math.pi, 1e-300, -2.5000000000000004, 7.0]
    rows = [(i, v) for i, v in enumerate(vals)]
    path = write_csv(tmp_path / "t.csv", ["i", "x"], rows)
    cols = read_csv(path)
    assert cols["i"].tolist() == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert cols["x"].tolist() == vals


def test_csv_renders_bools_and_strings(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["ok", "tag"],
                     [(True, "wall"), (False, "edge"), (np.bool_(True), "x")])
    text = path.read_text()
    assert "True" not in text and "False" not in text
    cols = read_csv(path)
    assert cols["ok"].tolist() == [1.0, 0.0, 1.0]
    assert cols["tag"].tolist() == ["wall", "edge", "x"]


def test_csv_rejects_complex_values(tmp_path):
    with pytest.raises(TypeError):
        write_csv(tmp_path / "t.csv", ["z"], [(1 + 2j,)])


def test_csv_reruns_are_byte_identical(tmp_path):
    rows = [(k, math.sin(k) * 1e-7) for k in range(50)]
    p1 = write_csv(tmp_path / "a.csv", ["k", "v"], rows)
    p2 = write_csv(tmp_path / "b.csv", ["k", "v"], rows)
    assert file_sha256(p1) == file_sha256(p2)


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [2, 3]}) == config_hash({"b": [2, 3], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_versions_fields():
    v = versions()
    assert set(v) == {"python", "numpy", "scipy", "ocs"}


def test_manifest_contents(tmp_path):
    cfg = {"experiment": "demo", "seed": 3}
    out = write_manifest(
        tmp_path, cfg, seed=3, wall_time_s=0.1234567,
        outputs={"t.csv": "ab" * 32},
        summary={"worst": np.float64(1e-12), "count": np.int64(4),
                 "flags": np.array([True, False]), "z": 1 + 2j},
    )
    data = json.loads(out.read_text())
    assert data["config_hash"] == config_hash(cfg)
    assert data["seed"] == 3
    assert data["wall_time_s"] == 0.123
    assert data["outputs"] == {"t.csv": "ab" * 32}
    # numpy and complex values must already be plain JSON types
    assert data["summary"]["worst"] == 1e-12
    assert data["summary"]["count"] == 4
    assert data["summary"]["flags"] == [True, False]
    assert data["summary"]["z"] == {"re": 1.0, "im": 2.0}
