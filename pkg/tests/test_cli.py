import json
import subprocess
import sys

import pytest

from defaultgap import experiments as ex
from defaultgap.cli import main


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    names = [l.split("\t")[0] for l in lines]
    assert names == sorted(names) and {"example1", "example2"} <= set(names)
    for l in lines:
        if l.startswith("example"):
            assert "\tExample " in l


def test_malformed_config_writes_nothing(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists() or not any(out.iterdir())


@pytest.mark.parametrize("patch", [{"bogus_field": 1}, {"seed": None}])
def test_invalid_config_fields(tmp_path, patch):
    c = ex.preset_config("ladder")
    c.update(patch)
    c = {k: v for k, v in c.items() if v is not None}
    f = tmp_path / "c.json"
    f.write_text(json.dumps(c))
    out = tmp_path / "out"
    assert main(["run", "--config", str(f), "--out", str(out)]) == 2
    assert not out.exists() or not any(out.iterdir())


def test_bad_arguments_exit_2():
    assert main(["run"]) == 2
    assert main(["run", "--preset", "nope"]) == 2


def test_ladder_experiment(tmp_path):
    assert main(["run", "--experiment", "LadderValidation", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    names = [c["name"] for c in summary["checks"]]
    assert "ladder_tv_max" in names and summary["all_pass"]
    for c in summary["checks"]:
        assert {"name", "value", "threshold", "pass"} <= set(c)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert not any("time" in k for k in manifest)
    assert manifest["seed"] == 0 and manifest["experiment"] == "LadderValidation"


def test_rerun_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["run", "--preset", "example1", "--paths", "2000", "--out", str(tmp_path / d)]) in (0, 1)
    fa = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert fa == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in fa:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_config_file_and_dump_paths(tmp_path):
    c = ex.preset_config("lattice")
    c["n_paths"] = 3000
    f = tmp_path / "lat.json"
    f.write_text(json.dumps(c))
    out = tmp_path / "out"
    code = main(["run", "--config", str(f), "--out", str(out), "--dump-paths", "5", "--seed", "3"])
    assert code in (0, 1)
    assert json.loads((out / "summary.json").read_text())["all_pass"] == (code == 0)
    lines = (out / "paths.csv").read_text().splitlines()
    assert lines[0] == "path,t,log_s" and len(lines) == 5 * 61 + 1
    assert json.loads((out / "manifest.json").read_text())["seed"] == 3


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "defaultgap.cli", "presets"], capture_output=True, text=True)
    assert r.returncode == 0 and "example1" in r.stdout
