import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gkdvwaves import io as gio
from gkdvwaves.cli import run


def read(path):
    return path.read_text()


def test_profile_midpoint(tmp_path):
    out = tmp_path / "p.csv"
    code = run(["profile", "--nonlinearity", "6*u", "--c", "1", "--C2", "0", "--C3", "0", "--zmin", "-10",
                "--zmax", "10", "--out", str(out)])
    assert code == 0
    version, cols = gio.read_csv(out)
    assert version == gio.SCHEMA_VERSION
    assert list(cols) == ["z", "y", "y1", "y2", "branch"]
    mid = cols["y"].size // 2
    assert cols["y"][mid] == pytest.approx(0.5, abs=1e-12)


def test_parse_error_exit_2(capsys):
    assert run(["profile", "--nonlinearity", "6*"]) == 2
    assert "offset 2" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["profile", "--bogus"],
    ["nosuch"],
    ["profile", "--a", "alpha*u"],
    ["profile", "--c", "x"],
    ["catalog", "eval", "--id", "nope"],
    ["catalog", "eval", "--id", "kdv_pos", "--c", "-1"],
    ["cascade-table", "--param", "alpha"],
    ["profile", "--config", "/nonexistent/cfg"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_write_failure_exit_2(tmp_path):
    assert run(["catalog", "eval", "--out", str(tmp_path / "missing" / "x.csv")]) == 2


def test_verify_pass(tmp_path):
    out = tmp_path / "v.json"
    assert run(["verify", "--nonlinearity", "u^2", "--c", "1", "--out", str(out)]) == 0
    doc = json.loads(read(out))
    assert doc["pass"] is True and doc["schema_version"] == gio.SCHEMA_VERSION
    assert all(c["pass"] for c in doc["checks"])


def test_verify_failure_exit_1(tmp_path):
    # 1/u has no continuous H2 through 0, so the cascade check on (-1, 1) fails
    out = tmp_path / "v.json"
    code = run(["verify", "--nonlinearity", "1/u", "--ymin", "-1", "--ymax", "1", "--out", str(out)])
    doc = json.loads(read(out))
    assert code == 1 and doc["pass"] is False
    assert any(not c["pass"] for c in doc["checks"])


def test_cascade_table(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["cascade-table", "--a", "6*u", "--ymin", "-1", "--ymax", "1", "--n", "21", "--out", str(out)]) == 0
    _, cols = gio.read_csv(out)
    assert list(cols) == ["y", "H1", "H2", "R", "H3"]
    y = cols["y"]
    assert np.allclose(cols["R"], -2 * y**3 + y**2, atol=1e-14)
    ok = np.isfinite(cols["H3"])
    assert np.all((y[ok] > 0) & (y[ok] <= 0.5))


def test_catalog_list_json(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run(["catalog", "list", "--out", str(out)]) == 0
    doc = json.loads(read(out))
    flags = {e["id"]: e["validated"] for e in doc["entries"]}
    assert flags["kdv_pos"] is True and flags["power_neg"] is False
    assert "kdv_pos" in capsys.readouterr().out


def test_catalog_eval_values(tmp_path):
    out = tmp_path / "e.csv"
    assert run(["catalog", "eval", "--id", "kdv_pos", "--c", "4", "--xmin", "0", "--xmax", "0", "--n", "1",
                "--out", str(out)]) == 0
    _, cols = gio.read_csv(out)
    assert cols["u"][0] == 2.0


def test_evolve_outputs(tmp_path):
    d = tmp_path / "ev"
    assert run(["evolve", "--N", "256", "--T", "1", "--snapshot-every", "0.5", "--out-dir", str(d)]) == 0
    summary = json.loads(read(d / "summary.json"))
    assert [s["file"] for s in summary["snapshots"]] == [f"snapshot_{i:04d}.csv" for i in range(3)]
    assert summary["peak_displacement"] == pytest.approx(1.0, abs=0.05)
    _, cols = gio.read_csv(d / "snapshot_0002.csv")
    assert cols["x"].size == 256


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# speeds\nc = 2\nzmin = -3\nparam = alpha=1.5\n")
    assert run(["profile", "--config", str(cfg), "--zmin", "-4", "--show-config"]) == 0
    text = capsys.readouterr().out
    assert "c = 2\n" in text and "zmin = -4\n" in text and "param = alpha=1.5\n" in text
    # the printed settings are themselves a valid config file
    again = tmp_path / "again.cfg"
    again.write_text(text)
    assert run(["profile", "--config", str(again), "--show-config"]) == 0
    assert capsys.readouterr().out == text


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("speed = 2\n")
    assert run(["profile", "--config", str(cfg)]) == 2
    cfg.write_text("c = fast\n")
    assert run(["profile", "--config", str(cfg)]) == 2


def test_header_only_csv(tmp_path):
    out = tmp_path / "empty.csv"
    gio.emit_csv(["z", "y"], [], out)
    assert read(out) == "# schema_version=1\nz,y\n"
    _, cols = gio.read_csv(out)
    assert cols["z"].size == 0


@given(st.lists(st.floats(allow_nan=False, allow_infinity=True, width=64), min_size=1, max_size=30))
def test_csv_round_trip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "v.csv"
    gio.emit_csv(["v"], [(v,) for v in values], path)
    _, cols = gio.read_csv(path)
    assert np.array_equal(cols["v"], np.array(values))


def test_json_stable_and_nonfinite():
    a = gio.format_json({"b": 1.0, "a": [math.inf, np.float64(0.1)], "c": np.bool_(True)})
    b = gio.format_json({"c": True, "a": [float("inf"), 0.1], "b": 1.0})
    assert a == b
    doc = json.loads(a)
    assert doc["a"][0] == "inf" and list(doc) == sorted(doc)
