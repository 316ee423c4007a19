import json
import struct

import numpy as np
import pytest

from nodalsplit.cli import main
from nodalsplit.config import ConfigError, load_config, parse_config, resolve_jobs
from nodalsplit.output import dump_field, fmt, load_field, read_csv, write_csv, write_json


def test_parse_defaults():
    cfg = parse_config({"command": "analyze"})
    assert cfg.k_list == (4,) and cfg.grid == "auto" and cfg.phi.family == "bump"


@pytest.mark.parametrize("bad,field", [
    ({"command": "nope"}, "command"),
    ({"command": "analyze", "k_list": [4, 2]}, "k_list[1]"),
    ({"command": "analyze", "eta_list": [0.001, -1]}, "eta_list[1]"),
    ({"command": "analyze", "k_list": [4], "eta_list": [0.3]}, "eta_list[0]"),
    ({"command": "analyze", "grid": {"nx": 32, "ny": 64}}, "grid.nx"),
    ({"command": "analyze", "jobs": 0}, "jobs"),
    ({"command": "analyze", "colour": 1}, "colour"),
    ({"command": "analyze", "phi": {"family": "zigzag"}}, "phi"),
])
def test_parse_diagnostics_name_the_field(bad, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(bad)


def test_json_error_reports_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "command": "analyze",\n  "k_list": [4,,]\n}\n')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(p)


def test_digest_ignores_output_location():
    a = parse_config({"command": "analyze", "output_dir": "x", "jobs": 2})
    b = parse_config({"command": "analyze", "output_dir": "y"})
    c = parse_config({"command": "analyze", "k_list": [5]})
    assert a.digest() == b.digest() != c.digest()


def test_env_jobs_wins(monkeypatch):
    monkeypatch.setenv("NODALSPLIT_JOBS", "3")
    assert resolve_jobs(7, 5) == 3
    monkeypatch.delenv("NODALSPLIT_JOBS")
    assert resolve_jobs(7, 5) == 7
    assert resolve_jobs(None, 5) == 5


def test_number_format():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(float("nan")) == "nan"
    assert fmt(True) == "1" and fmt(None) == ""


def test_csv_and_json(tmp_path):
    write_csv(tmp_path / "a.csv", ["x", "y"], [{"x": 1.5, "y": 2}], "abc")
    text = (tmp_path / "a.csv").read_text().splitlines()
    assert text[0] == "# config_hash=abc"
    assert read_csv(tmp_path / "a.csv") == (["x", "y"], [{"x": "1.5", "y": "2"}])
    write_json(tmp_path / "a.json", {"v": float("nan"), "w": 0.1 + 0.2}, "abc")
    d = json.loads((tmp_path / "a.json").read_text())
    assert d["v"] is None and d["w"] == 0.3


def test_field_dump_round_trip(tmp_path, rng):
    f = rng.standard_normal((5, 9))
    p = dump_field(tmp_path / "f.nspl", f, 6, 1e-3)
    raw = p.read_bytes()
    assert len(raw) == 32 + 8 * f.size
    assert struct.unpack_from("<4sIIIIId", raw)[:5] == (b"NSPL", 1, 8, 4, 6)
    g, meta = load_field(p)
    assert np.array_equal(f, g) and meta == {"nx": 8, "ny": 4, "k": 6, "eta": 1e-3}


def _cfg(tmp_path, name, d):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(d))
    return str(p)


def test_analyze_end_to_end_is_deterministic(tmp_path):
    cfg = _cfg(tmp_path, "a", {"command": "analyze", "phi": {"family": "bump", "scale": 1 / 6},
                               "k_list": [4, 5], "flood_rows": 256})
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "o1"), "--jobs", "1"]) == 0
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "o2"), "--jobs", "1"]) == 0
    a = (tmp_path / "o1" / "analysis.csv").read_text()
    assert a == (tmp_path / "o2" / "analysis.csv").read_text()
    cols, rows = read_csv(tmp_path / "o1" / "analysis.csv")
    assert [r["k"] for r in rows] == ["4", "5"]
    assert "<svg" in (tmp_path / "o1" / "exact_k4_v0.svg").read_text()


def test_solve_end_to_end(tmp_path):
    cfg = _cfg(tmp_path, "s", {"command": "solve", "phi": {"family": "bump", "scale": 1 / 6},
                               "k_list": [4], "eta_list": [0.004], "grid": {"nx": 128, "ny": 64},
                               "refine": False})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--jobs", "1"]) == 0
    cols, rows = read_csv(tmp_path / "o" / "eigenvalues.csv")
    assert len(rows) == 2
    dumps = sorted((tmp_path / "o").glob("*.nspl"))
    assert dumps
    f, meta = load_field(dumps[0])
    assert f.shape == (65, 129) and meta["k"] == 4


def test_inadmissible_shape_exit_code(tmp_path):
    cfg = _cfg(tmp_path, "sym", {"command": "analyze",
                                 "phi": {"coefficients": [0, 0, 1, -2, 1], "scale": 1.0}, "k_list": [4]})
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_bad_config_exit_code(tmp_path):
    cfg = _cfg(tmp_path, "bad", {"command": "analyze", "k_list": [1]})
    assert main(["analyze", "--config", cfg]) == 2
