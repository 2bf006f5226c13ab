import importlib.resources
import textwrap

import numpy as np
import pytest

from discrimopt import Box, ConfigError, Lattice, load_config

CONFIG_DIR = importlib.resources.files("discrimopt") / "configs"


def write_config(tmp_path, body):
    path = tmp_path / "problem.config"
    path.write_text(textwrap.dedent(body))
    return path


MINIMAL = """
model:
  name: mm_vs_modmm
design_space:
  type: box
  lower: [0.001]
  upper: [5.0]
initial_design:
  points: [[1.0], [2.0]]
  weights: [0.5, 0.5]
"""


class TestBundledConfigs:
    def test_mm_config_loads(self):
        cfg = load_config(CONFIG_DIR / "mm.config")
        assert isinstance(cfg.space, Box)
        assert cfg.algorithm == "2adapt"
        assert cfg.initial.n_points == 4
        assert cfg.pair.eval_reference([1.0])[0] == pytest.approx(0.6)

    def test_kinetics_config_loads(self):
        cfg = load_config(CONFIG_DIR / "kinetics.config")
        assert isinstance(cfg.space, Lattice)
        assert cfg.space.size == 135
        assert cfg.initial.n_points == 5
        assert cfg.pair.d_y == 3


class TestValidation:
    def test_minimal_config(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MINIMAL))
        assert cfg.algorithm == "2adapt"
        assert cfg.params.eps == 1e-5

    def test_weights_not_summing_to_one(self, tmp_path):
        bad = MINIMAL.replace("[0.5, 0.5]", "[0.5, 0.4]")
        with pytest.raises(ConfigError, match="initial_design.weights"):
            load_config(write_config(tmp_path, bad))

    def test_missing_section(self, tmp_path):
        bad = "\n".join(
            line for line in MINIMAL.splitlines() if "initial_design" not in line
        ).replace("  points: [[1.0], [2.0]]\n", "")
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, "model:\n  name: mm_vs_modmm\n"))

    def test_unknown_field_named(self, tmp_path):
        bad = MINIMAL + "\nalgorithm:\n  name: 2adapt\n  epsilon: 1.0\n"
        with pytest.raises(ConfigError, match="algorithm"):
            load_config(write_config(tmp_path, bad))

    def test_unknown_model(self, tmp_path):
        bad = MINIMAL.replace("mm_vs_modmm", "unknown_pair")
        with pytest.raises(ConfigError, match="unknown model"):
            load_config(write_config(tmp_path, bad))

    def test_unknown_algorithm_name(self, tmp_path):
        bad = MINIMAL + "\nalgorithm:\n  name: gradient_descent\n"
        with pytest.raises(ConfigError, match="algorithm.name"):
            load_config(write_config(tmp_path, bad))

    def test_point_outside_space(self, tmp_path):
        bad = MINIMAL.replace("[[1.0], [2.0]]", "[[1.0], [7.0]]")
        with pytest.raises(ConfigError, match=r"initial_design.points\[1\]"):
            load_config(write_config(tmp_path, bad))

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "broken.config"
        path.write_text("model:\n  name: [unclosed\n")
        with pytest.raises(ConfigError, match="line"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.config")

    def test_lattice_space(self, tmp_path):
        body = MINIMAL.replace(
            "type: box\n  lower: [0.001]\n  upper: [5.0]",
            "type: lattice\n  levels: [[1.0, 2.0, 3.0]]",
        )
        cfg = load_config(write_config(tmp_path, body))
        assert isinstance(cfg.space, Lattice)

    def test_bad_space_type(self, tmp_path):
        bad = MINIMAL.replace("type: box", "type: sphere")
        with pytest.raises(ConfigError, match="design_space.type"):
            load_config(write_config(tmp_path, bad))


class TestAlgorithmDefaults:
    def test_vdm_gets_its_own_defaults(self, tmp_path):
        body = MINIMAL + "\nalgorithm:\n  name: vdm\n"
        cfg = load_config(write_config(tmp_path, body))
        assert cfg.params.max_iter == 1000
        assert cfg.params.lam == 0.0

    def test_explicit_overrides_beat_vdm_defaults(self, tmp_path):
        body = MINIMAL + "\nalgorithm:\n  name: vdm\n  max_iter: 50\n"
        cfg = load_config(write_config(tmp_path, body))
        assert cfg.params.max_iter == 50

    def test_params_for_other_algorithm(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MINIMAL))
        assert cfg.params.max_iter == 100
        assert cfg.params_for("vdm").max_iter == 1000
        assert cfg.params_for("vdm").lam == 0.0

    def test_lambda_key_maps_to_regularizer(self, tmp_path):
        body = MINIMAL + "\nalgorithm:\n  name: 2adapt\n  lambda: 1.0e-6\n"
        cfg = load_config(write_config(tmp_path, body))
        assert cfg.params.lam == 1e-6
