import json
import subprocess
import sys

import pytest

from softdmp.cli import main


def write(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


class TestCli:
    def test_list_presets(self, capsys):
        assert main(["list-presets"]) == 0
        out = capsys.readouterr().out
        for name in ("fig1-min", "fig3-qlearning", "fig5", "maze-compare"):
            assert name in out

    def test_run_ok(self, tmp_path, capsys):
        cfg = write(tmp_path, {"env": "umaze", "algorithm": "qvi", "eta": "-inf"})
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "values_eta_-inf.csv").exists()
        assert capsys.readouterr().out.strip() == str(tmp_path / "o")

    def test_bad_config_exit_2(self, tmp_path, capsys):
        cfg = write(tmp_path, {"env": "umaze", "algorithm": "qvi", "tol": -1})
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "'tol'" in capsys.readouterr().err

    def test_unknown_preset_exit_2(self, tmp_path):
        assert main(["preset", "nope", "--out", str(tmp_path)]) == 2

    def test_non_convergence_exit_3(self, tmp_path, capsys):
        cfg = write(tmp_path, {"env": "umaze", "algorithm": "qvi", "eta": "-inf", "max_iter": 3})
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 3
        assert "converge" in capsys.readouterr().err

    def test_preset_overrides(self, tmp_path):
        code = main(["preset", "fig3-qlearning", "--episodes", "2", "--max-steps", "5",
                     "--seed-override", "3", "--out", str(tmp_path)])
        assert code == 0
        manifest = json.loads((tmp_path / "max_optimal" / "manifest.json").read_text())
        assert (manifest["episodes"], manifest["max_steps"], manifest["seeds"]) == (2, 5, [3])
        assert (tmp_path / "min_flipped" / "run_min_flipped_seed3.csv").exists()

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "softdmp", "list-presets"], capture_output=True, text=True)
        assert proc.returncode == 0 and "maze-compare" in proc.stdout

    def test_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2
