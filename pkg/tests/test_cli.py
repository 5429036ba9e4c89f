import json
from pathlib import Path

import numpy as np
import pytest

from contourdyn.cli import main
from contourdyn.config import ConfigError, config_from_dict, load_config
from contourdyn.runner import compare_runs, load_grid, run_scenario


def write_config(path, text):
    path.write_text(text)
    return str(path)


PATCH_CFG = """
schema = 1
kind = "patch"

[grid]
n_phi = 64

[time]
horizon = 0.2
dt = 0.01
outputs = 3

[initial]
family = "kirchhoff"
a = 1.5
b = 1.0
strength = 1.0
"""


class TestConfig:
    def test_missing_dt_is_config_error(self, tmp_path):
        cfg = write_config(tmp_path / "bad.toml", """
kind = "patch"
[time]
horizon = 1.0
[initial]
family = "kirchhoff"
a = 1.5
b = 1.0
strength = 1.0
""")
        with pytest.raises(ConfigError):
            load_config(cfg)
        assert main(["run", "--config", cfg]) == 2

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({
                "kind": "warp-drive",
                "time": {"dt": 0.1, "horizon": 1.0},
                "initial": {},
            })

    def test_kind_specific_completeness(self):
        with pytest.raises(ConfigError):
            config_from_dict({
                "kind": "patch",
                "time": {"dt": 0.01, "horizon": 1.0},
                "initial": {"family": "kirchhoff", "a": 1.5},
            })

    def test_dipole_sign_pattern_validated(self, tmp_path):
        # two positive peaks are allowed (co-rotating pair), but a leading
        # negative peak is not a dipole configuration
        cfg = config_from_dict({
            "kind": "dipole",
            "time": {"dt": 0.01, "horizon": 0.05},
            "grid": {"n_phi": 16, "n_w": 8},
            "initial": {
                "family": "gaussian-pair",
                "strength1": -1.0, "strength2": -0.5,
                "core": 0.2, "separation": 2.0,
            },
        })
        with pytest.raises(ConfigError):
            run_scenario(cfg, tmp_path / "out")


class TestRunCommand:
    def test_patch_run_outputs(self, tmp_path):
        cfg = write_config(tmp_path / "patch.toml", PATCH_CFG)
        out = tmp_path / "out"
        code = main(["run", "--config", cfg, "--out", str(out)])
        assert code == 0
        assert (out / "summary.json").exists()
        assert (out / "invariants.csv").exists()
        svgs = sorted(out.glob("contours_*.svg"))
        states = sorted(out.glob("state_*.csv"))
        assert len(svgs) >= 3 and len(states) >= 3
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "ok"
        assert abs(summary["measured_rotation_rate"] - 0.24) < 0.01

    def test_deterministic_outputs(self, tmp_path):
        cfg = write_config(tmp_path / "patch.toml", PATCH_CFG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["run", "--config", cfg, "--out", str(out2)]) == 0
        for name in ["summary.json", "invariants.csv", "contours_0000.svg",
                     "contours_0002.svg", "state_0002.csv"]:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_monopole_symmetric_center_fixed(self, tmp_path):
        cfg = write_config(tmp_path / "mono.toml", """
kind = "monopole"
[grid]
n_phi = 32
n_w = 16
[time]
horizon = 0.05
dt = 0.01
outputs = 2
[initial]
family = "scaled-ellipse"
strength = 1.0
a = 1.2
b = 0.9
eps = 0.35
[monitor]
probe_levels = [0.3, 0.6]
""")
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert max(summary["center_displacements"]) < 1e-8
        lines = (out / "invariants.csv").read_text().strip().splitlines()
        assert lines[0].startswith("schema=1,")
        assert len(lines) >= 3

    def test_halt_preserves_invariants(self, tmp_path):
        # absurd dt drives the monopole multivalued; partial data must remain
        cfg = write_config(tmp_path / "halt.toml", """
kind = "monopole"
[grid]
n_phi = 16
n_w = 8
[time]
horizon = 400.0
dt = 1.0
outputs = 40
[initial]
family = "scaled-ellipse"
strength = 1.0
a = 1.6
b = 0.8
eps = 0.5
""")
        out = tmp_path / "out"
        code = main(["run", "--config", cfg, "--out", str(out)])
        assert code == 3
        assert (out / "invariants.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "halted"

    def test_jobs_fan_out(self, tmp_path):
        cfg_a = write_config(tmp_path / "a.toml", ('out = "%s"\n' % (tmp_path / "oa")) + PATCH_CFG)
        cfg_b = write_config(tmp_path / "b.toml", ('out = "%s"\n' % (tmp_path / "ob")) + PATCH_CFG)
        code = main(["run", "--config", cfg_a, "--config", cfg_b, "--jobs", "2"])
        assert code == 0
        assert (tmp_path / "oa" / "summary.json").exists()
        assert (tmp_path / "ob" / "summary.json").exists()


class TestCompareCommand:
    def test_compare_identical_runs(self, tmp_path):
        cfg = write_config(tmp_path / "mono.toml", """
kind = "monopole"
[grid]
n_phi = 32
n_w = 16
[time]
horizon = 0.05
dt = 0.01
outputs = 2
[initial]
family = "gaussian"
strength = 1.0
core = 0.8
""")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["run", "--config", cfg, "--out", str(out2)]) == 0
        report = compare_runs(out1, out2, tmp_path / "cmp.json")
        assert report["pairs"] > 0
        assert report["hausdorff_max"] < 1e-12
        assert main(["compare", "--a", str(out1), "--b", str(out2)]) == 0

    def test_compare_empty_dirs_error(self, tmp_path):
        (tmp_path / "x").mkdir()
        (tmp_path / "y").mkdir()
        assert main(["compare", "--a", str(tmp_path / "x"), "--b", str(tmp_path / "y")]) == 2


class TestGridSerialization:
    def test_grid_round_trip(self, tmp_path):
        from contourdyn.oracles import grid_from_sampler
        from contourdyn.geometry import gaussian_sampler
        from contourdyn.runner import _save_grid

        grid = grid_from_sampler(gaussian_sampler(1.0, 1.0), 16.0, 32)
        _save_grid(tmp_path / "g.csv", grid)
        back = load_grid(tmp_path / "g.csv")
        assert back.box_size == grid.box_size
        assert np.array_equal(back.omega, grid.omega)
