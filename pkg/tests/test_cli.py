import json
from pathlib import Path

import pytest

from ignifront.cli import main
from ignifront.config import parse_config
from ignifront.experiments import run_experiment

TW = "experiment = tw-speed\ntheta0 = 0.25\ng = 1\n"


def read_tree(root: Path, exclude=("manifest.json",)) -> dict:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name not in exclude:
            out[str(p.relative_to(root))] = p.read_bytes()
    return out


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        cfg = tmp_path / "tw.cfg"
        cfg.write_text(TW)
        assert main(["validate", str(cfg)]) == 0
        assert "experiment=tw-speed" in capsys.readouterr().out

    def test_validate_reports_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("experiment = tw-speed\ng_min = 2\ng_max = 1\n")
        assert main(["validate", str(cfg)]) == 2
        assert "g_min <= g_max" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert main(["validate", "/does/not/exist.cfg"]) == 2

    def test_run_writes_manifest_and_summary(self, tmp_path):
        cfg = tmp_path / "tw.cfg"
        cfg.write_text(TW)
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        summary = json.loads((out / "acceptance_summary.json").read_text())
        assert manifest["status"] == "done"
        assert manifest["config_hash"] == summary["config_hash"]
        assert summary["all_passed"] is True
        assert all("name" in c and "passed" in c for c in summary["checks"])

    def test_suite_on_homogeneous_defaults_exits_zero(self, tmp_path):
        cfg = tmp_path / "suite.cfg"
        cfg.write_text("experiment = invariant-suite\ng = 1\nseeds = 7\n")
        out = tmp_path / "out"
        assert main(["suite", str(cfg), "--out", str(out)]) == 0


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        cfg = parse_config(TW)
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, out_dir=str(a))
        run_experiment(cfg, out_dir=str(b))
        ta, tb = read_tree(a), read_tree(b)
        assert ta and ta == tb

    @pytest.mark.slow
    def test_worker_count_does_not_change_results(self, tmp_path):
        text = (
            "experiment = speed\nseeds = 2@7\nN = 30\nstride = 10\n"
            "g_min = 1.0\ng_max = 2.0\n"
        )
        cfg1 = parse_config(text + "workers = 1\n")
        cfg2 = parse_config(text + "workers = 2\n")
        a, b = tmp_path / "w1", tmp_path / "w2"
        run_experiment(cfg1, out_dir=str(a))
        run_experiment(cfg2, out_dir=str(b))
        ta = read_tree(a, exclude=("manifest.json", "acceptance_summary.json"))
        tb = read_tree(b, exclude=("manifest.json", "acceptance_summary.json"))
        assert ta and ta == tb
