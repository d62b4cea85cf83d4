import numpy as np
import pytest

from bilateral_il.config import ExperimentConfig, demo_mop_lengths, load_config
from bilateral_il.errors import ConfigError


def test_defaults_validate():
    cfg = load_config()
    assert cfg.robot.n_joints == 3
    assert cfg.gain_set().kp.tolist() == [9.0, 16.0, 16.0]
    assert cfg.nn_stride() == 20


def test_yaml_round_trip(tmp_path):
    cfg = ExperimentConfig()
    cfg.seed = 7
    cfg.env.mop_length = 0.5
    path = tmp_path / "c.yaml"
    path.write_text(cfg.to_yaml())
    back = load_config(path)
    assert back.to_dict() == cfg.to_dict()


def test_partial_yaml_overrides(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("seed: 3\ntrain:\n  epochs: 5\n")
    cfg = load_config(path)
    assert cfg.seed == 3 and cfg.train.epochs == 5
    assert cfg.train.hidden is None


@pytest.mark.parametrize("text", [
    "bogus: 1\n",
    "train:\n  epochz: 5\n",
    "robot:\n  dt: 0\n",
    "train:\n  nn_period: 0.0155\n",
    "autoop:\n  mop_schedule: [[1.0, 0.48]]\n",
    "robot:\n  initial_theta: [0, 0]\n",
    "train:\n  profile: huge\n",
    "env:\n  mop_length: -1\n",
    "[1, 2\n",
])
def test_bad_configs_raise(tmp_path, text):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_profiles():
    cfg = ExperimentConfig()
    assert cfg.model_shape() == (2, 32)
    cfg.train.profile = "full"
    assert cfg.model_shape() == (4, 200)
    cfg.train.hidden = 16
    assert cfg.model_shape() == (4, 16)


def test_demo_lengths_cover_range_and_anchors():
    lengths = demo_mop_lengths(15, 0.43, 0.58, [0.48, 0.53])
    assert len(lengths) == 15
    assert min(lengths) == 0.43 and max(lengths) == 0.58
    assert 0.48 in lengths and 0.53 in lengths
    assert lengths == sorted(lengths)


def test_demo_lengths_edge_counts():
    assert demo_mop_lengths(0, 0.43, 0.58) == []
    assert demo_mop_lengths(1, 0.43, 0.58, [0.48]) == [0.48]


def test_initial_pose_grasps_where_stated():
    from bilateral_il.sim import grasp_pose
    cfg = ExperimentConfig()
    g = grasp_pose(np.array(cfg.robot.initial_theta), cfg.env_params())
    assert np.allclose(g, [0.4, -0.2, -0.35], atol=1e-3)
