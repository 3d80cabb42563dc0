import numpy as np
import pytest

from detpatch import detpatch_init
from detpatch.detpatch_config import ConsensusConfig, HeatmapConfig, RunConfig
from detpatch.detpatch_globals import g_detpatch
from detpatch.detpatch_init import WORKERS_ENV
from detpatch.errors import ConfigurationError
from detpatch.mask_method import build_patch_mask


@pytest.fixture
def base_config(tmp_path):
    return {"images": str(tmp_path / "in"), "out": str(tmp_path / "out")}


@pytest.fixture(autouse=True)
def _no_workers_env(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)


def test_defaults(base_config):
    config = detpatch_init(base_config)
    assert config.method == "consensus"
    assert config.models == ["toy:1", "toy:2"]
    assert config.threshold == 0.3
    assert config.candidates == [(10, 0.0)]
    assert config.placement_models == config.models
    assert g_detpatch.config is config
    assert g_detpatch.workers == 1


def test_candidates_order(base_config):
    config = detpatch_init({**base_config, "scales": [6, 10], "grid_ratios": [0.0, 0.5]})
    assert config.candidates == [(6, 0.0), (6, 0.5), (10, 0.0), (10, 0.5)]


def test_stage_configs(base_config):
    config = detpatch_init(
        {**base_config, "patches": 4, "l2_step": 1.0, "sigma": 2.0, "vote_models": ["toy:9"]}
    )
    consensus = config.consensus_config(8)
    assert (consensus.n, consensus.scale, consensus.step) == (4, 8, 1.0)
    assert config.heatmap_config(12).smoothing_sigma == 2.0
    assert config.attack_config().max_iters == 200
    assert config.placement_models == ["toy:9"]


def test_heatmap_sigma_defaults_to_quarter_scale():
    assert HeatmapConfig(scale=12).smoothing_sigma == 3.0


def test_unknown_field_is_named(base_config):
    with pytest.raises(ConfigurationError) as excinfo:
        detpatch_init({**base_config, "patchez": 3})
    assert "patchez" in str(excinfo.value)


@pytest.mark.parametrize(
    "field, value",
    [
        ("models", ["resnet:1"]),
        ("models", []),
        ("grid_ratios", [1.2]),
        ("scales", [0]),
        ("threshold", 2.0),
        ("method", "random"),
        ("workers", 0),
    ],
)
def test_invalid_values(base_config, field, value):
    with pytest.raises(ConfigurationError) as excinfo:
        detpatch_init({**base_config, field: value})
    assert field in str(excinfo.value)


def test_missing_images_field(tmp_path):
    with pytest.raises(ConfigurationError) as excinfo:
        detpatch_init({"out": str(tmp_path)})
    assert "images" in str(excinfo.value)


def test_workers_from_named_env(base_config, monkeypatch):
    monkeypatch.setenv("MY_WORKERS", "3")
    config = detpatch_init({**base_config, "workers": "$MY_WORKERS"})
    assert config.workers == 3
    assert g_detpatch.workers == 3


def test_workers_env_override(base_config, monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "4")
    assert detpatch_init({**base_config, "workers": 2}).workers == 4


def test_unset_env_is_named(base_config, monkeypatch):
    monkeypatch.delenv("DETPATCH_NOT_SET", raising=False)
    with pytest.raises(ConfigurationError) as excinfo:
        detpatch_init({**base_config, "workers": "$DETPATCH_NOT_SET"})
    assert "workers" in str(excinfo.value)


@pytest.mark.parametrize("value, expected", [(5, 5), ("3", 3)])
def test_literal_workers(base_config, value, expected):
    assert detpatch_init({**base_config, "workers": value}).workers == expected


def test_non_numeric_env_workers(base_config, monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigurationError) as excinfo:
        detpatch_init(base_config)
    assert "workers" in str(excinfo.value)


def test_consensus_config_requires_an_iteration():
    with pytest.raises(ValueError):
        ConsensusConfig(l2_iters=0)


def test_run_config_forbids_extra(tmp_path):
    with pytest.raises(ValueError):
        RunConfig(images=tmp_path, out=tmp_path, colour="red")


def test_build_patch_mask_unsupported_config(toy_model, blank_image):
    with pytest.raises(ConfigurationError):
        build_patch_mask({"n": 3}, [toy_model], blank_image)


def test_build_patch_mask_dispatches(toy_model, blank_image):
    placement = build_patch_mask(HeatmapConfig(n=1, scale=4), [toy_model], blank_image)
    assert placement.evidence.shape == (128, 128)
    assert not np.isnan(placement.evidence).any()
