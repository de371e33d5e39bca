import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from balayage import cli, verify
from balayage.config import ConfigError, parse_config
from balayage.grid import build_circle

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "configs"


def _write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return p


def test_circle_config_runs(tmp_path, capsys):
    code = cli.main(["run", str(DEMOS / "circle_atoms.json"), "--out", str(tmp_path / "out")])
    assert code == 0
    rec = json.loads((tmp_path / "out" / "circle_atoms" / "summary.json").read_text())
    assert rec["status"] == "ok" and rec["checks"] == {"bounds": True}
    largest = rec["summary"]["largest_nu"][0]
    assert largest["node"] == 1500
    assert largest["mass"] == pytest.approx(-1.0, abs=1e-6)
    assert (tmp_path / "out" / "circle_atoms" / "fields.csv").exists()
    assert "ok: circle_atoms" in capsys.readouterr().out


def test_infeasible_exits_one(tmp_path, capsys):
    cfg = _write(tmp_path, {"scenarios": [{"name": "bad", "task": "bal",
                                            "manifold": {"kind": "circle", "n_nodes": 50},
                                            "sigma": [{"atom": {"location": 0.5}}]}]})
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "sum(sigma) <= sum(lambda)" in err


def test_malformed_json_reports_position(tmp_path, capsys):
    cfg = _write(tmp_path, '{"scenarios": [\n  {"task": "bal",,}\n]}')
    assert cli.main(["run", str(cfg)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_field_path():
    with pytest.raises(ConfigError, match=r"scenarios\[0\]\.task"):
        parse_config('{"scenarios": [{"name": "x"}]}')
    with pytest.raises(ConfigError, match="unknown task"):
        parse_config('[{"task": "sweep"}]')
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config('[{"name": "a", "task": "bal"}, {"name": "a", "task": "bal"}]')


def test_bad_manifold_field_is_reported(tmp_path, capsys):
    cfg = _write(tmp_path, [{"name": "x", "task": "bal", "manifold": {"kind": "circle", "n_nodes": "many"},
                             "sigma": []}])
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "scenarios[0].manifold.n_nodes" in capsys.readouterr().err


def test_empty_config_writes_nothing(tmp_path):
    cfg = _write(tmp_path, {"scenarios": []})
    out = tmp_path / "o"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    assert not out.exists()


def test_failed_check_exits_two(tmp_path):
    # the atom left at b violates the structure formula
    cfg = _write(tmp_path, [{"name": "s", "task": "bal", "manifold": {"kind": "circle", "n_nodes": 200},
                             "sigma": [{"atom": {"location": 0.25}}, {"atom": {"location": 0.75, "weight": -2}}],
                             "checks": ["structure"]}])
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_runs_are_deterministic(tmp_path):
    cfg = DEMOS / "showcase.json"
    cli.main(["run", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["run", str(cfg), "--out", str(tmp_path / "b"), "--threads", "4"])
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_verify_unknown_module(capsys):
    assert cli.main(["verify", "--filter", "nope"]) == 1


def test_sign_error_in_stiffness_is_caught(monkeypatch, capsys):
    def broken(n):
        m = build_circle(n)
        K = m.stiffness.tolil()
        K[0, 1] = -K[0, 1]
        K[1, 0] = -K[1, 0]
        m.stiffness = K.tocsr()
        return m

    monkeypatch.setattr(verify, "build_circle", broken)
    monkeypatch.setattr(verify, "CRITERIA", [("balayage", verify.criterion_circle_atoms)])
    assert cli.main(["verify", "--filter", "balayage"]) == 2
    assert "FAIL" in capsys.readouterr().out
