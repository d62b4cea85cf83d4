import pytest
import yaml

TINY = {
    "operator": {"approach_duration": 1.0, "episode_duration": 2.0},
    "demo": {"episodes": 2},
    "train": {"epochs": 2, "augment_factor": 2, "hidden": 8, "layers": 1},
    "autoop": {"duration": 2.0},
}


@pytest.fixture
def tiny_config(tmp_path):
    """Config file for a seconds-long end-to-end run."""
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY))
    return path
