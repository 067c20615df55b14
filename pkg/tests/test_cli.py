"""Tests for config parsing and the command-line modes."""

import json

import pytest

from src.artifacts import read_csv
from src.cli.main import EXIT_OK, EXIT_USAGE, RunConfig, main, parse_config
from src.errors import ConfigError


def write_config(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return str(path)


class TestParseConfig:
    @pytest.mark.parametrize(
        "preset, mode",
        [
            ("collapse_idc", "pv"),
            ("two_vortex_rotation", "pv"),
            ("localization_alpha05", "localize"),
            ("montecarlo_samesign", "mc"),
        ],
    )
    def test_presets_validate(self, preset, mode):
        cfg = parse_config(preset)
        assert isinstance(cfg, RunConfig)
        assert cfg.mode == mode

    def test_overrides_win(self, tmp_path):
        cfg = parse_config("collapse_idc", {"seed": 42, "output_dir": tmp_path, "threads": None})
        assert cfg.seed == 42
        assert cfg.output_dir == tmp_path

    def test_check_needs_no_file(self):
        cfg = parse_config(None, {"mode": "check"})
        assert cfg.check.scale == "quick"

    def test_missing_section(self):
        with pytest.raises(ConfigError, match="needs a \\[mc\\] section"):
            parse_config(None, {"mode": "mc"})

    def test_unknown_file(self):
        with pytest.raises(ConfigError):
            parse_config("no_such_preset")

    def test_broken_toml(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(write_config(tmp_path, "mode = \n"))

    def test_cutoff_radius_too_large(self, tmp_path):
        text = """
mode = "localize"
[localize]
eps_list = [0.1]
R = 0.05
[localize.blobs]
centers = [[-0.5, 0.0], [0.5, 0.0]]
intensities = [1.0, 1.0]
eps = 0.1
[localize.pde]
alpha = 0.5
t_end = 1.0
"""
        with pytest.raises(ConfigError, match="d0/100"):
            parse_config(write_config(tmp_path, text))

    def test_inadmissible_kappa_schedule(self, tmp_path):
        text = """
mode = "localize"
[localize]
eps_list = [0.1]
[localize.kappa]
p = 1.0
[localize.blobs]
centers = [[-0.5, 0.0], [0.5, 0.0]]
intensities = [1.0, 1.0]
eps = 0.1
[localize.pde]
alpha = 1.0
t_end = 1.0
"""
        with pytest.raises(ConfigError, match="not admissible"):
            parse_config(write_config(tmp_path, text))

    @pytest.mark.parametrize(
        "body, message",
        [
            ("intensities = [1.0, 0.0]\npositions = [[0.0, 0.0], [1.0, 0.0]]", "nonzero"),
            ("intensities = [1.0, 1.0]\npositions = [[0.5, 0.0], [0.5, 0.0]]", "coincide"),
            ("intensities = [1.0]\npositions = [[0.0, 0.0], [1.0, 0.0]]", "positions"),
        ],
    )
    def test_invalid_vortex_system(self, tmp_path, body, message):
        text = f'mode = "pv"\n[pv]\nalpha = 0.5\nt_end = 1.0\n{body}\n'
        with pytest.raises(ConfigError, match=message):
            parse_config(write_config(tmp_path, text))

    def test_seed_range(self):
        with pytest.raises(ConfigError):
            parse_config(None, {"mode": "check", "seed": 2**64})

    def test_config_hash_ignores_output_dir(self, tmp_path):
        a = parse_config("collapse_idc", {"output_dir": tmp_path / "a"})
        b = parse_config("collapse_idc", {"output_dir": tmp_path / "b"})
        assert a.hashed() == b.hashed()


class TestMain:
    def test_unknown_mode_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["plot"])
        assert info.value.code == EXIT_USAGE

    def test_bad_config_exit_code(self, tmp_path):
        assert main(["pv", "--config", "no_such_preset", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_zero_intensity_exit_code(self, tmp_path):
        text = 'mode = "pv"\n[pv]\nalpha = 0.5\nt_end = 1.0\nintensities = [1.0, 0.0]\npositions = [[0.0, 0.0], [1.0, 0.0]]\n'
        assert main(["pv", "--config", write_config(tmp_path, text), "--out", str(tmp_path / "out")]) == EXIT_USAGE

    def test_collapse_preset(self, tmp_path):
        assert main(["pv", "--config", "collapse_idc", "--out", str(tmp_path)]) == EXIT_OK
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["termination"]["kind"] == "collapse_detected"
        frame, metadata = read_csv(tmp_path / "trajectory.csv")
        assert {"config_hash", "seed", "code_version"} <= set(metadata)
        assert (tmp_path / "distance_ratios.csv").exists()

    def test_two_vortex_preset(self, tmp_path):
        assert main(["pv", "--config", "two_vortex_rotation", "--out", str(tmp_path)]) == EXIT_OK
        checks = json.loads((tmp_path / "checks.json").read_text())
        assert checks["closed_form_error"] < 1e-6
        assert checks["bound_violated"] is False

    def test_field_mode(self, tmp_path):
        text = """
mode = "field"
[field]
alpha = 0.5
n = 32
dt = 0.01
t_end = 0.05
gaussians = [{ center = [0.0, 0.0], width = 0.6 }]
"""
        argv = ["field", "--config", write_config(tmp_path, text), "--out", str(tmp_path / "out")]
        code = main(argv + ["--snapshot-stride", "5"])
        assert code == EXIT_OK
        frame, _ = read_csv(tmp_path / "out" / "observables.csv")
        assert list(frame.columns[:3]) == ["t", "l1", "l2"]
        assert (tmp_path / "out" / "final.gsqg").exists()
        assert len(list((tmp_path / "out" / "snapshots").iterdir())) == 2

    def test_monte_carlo_is_byte_identical(self, tmp_path):
        text = """
mode = "mc"
[mc]
n_samples = 3
t_end = 0.2
alpha = 0.5
[mc.sampler]
n_vortices = 3
min_distance = 0.1
"""
        config = write_config(tmp_path, text)
        for name in ("a", "b"):
            assert main(["mc", "--config", config, "--out", str(tmp_path / name), "--seed", "7"]) == EXIT_OK
        for artifact in ("samples.csv", "summary.json"):
            assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()

    def test_check_subset(self, tmp_path):
        text = """
mode = "check"
[check]
only = ["kernels", "single_vortex"]
"""
        assert main(["check", "--config", write_config(tmp_path, text), "--out", str(tmp_path / "out")]) == EXIT_OK
        report = json.loads((tmp_path / "out" / "check.json").read_text())
        assert report["results"] and all(r["passed"] for r in report["results"])

    def test_unknown_check_group(self, tmp_path):
        text = 'mode = "check"\n[check]\nonly = ["nope"]\n'
        assert main(["check", "--config", write_config(tmp_path, text), "--out", str(tmp_path)]) == EXIT_USAGE
