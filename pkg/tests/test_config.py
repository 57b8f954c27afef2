"""Config document loading."""

from __future__ import annotations

import pytest

from worldsim.config import AblationFlags, PipelineConfig, load_config


def test_defaults_are_sane():
    cfg = PipelineConfig()
    assert cfg.budgets.critic_rounds == 2
    assert cfg.budgets.debug_attempts == 3
    assert cfg.budgets.wall_clock_s == 300.0
    assert cfg.budgets.memory_mb == 4096
    assert cfg.eval.motion_threshold == 0.05
    assert cfg.model.temperature == 1.0
    assert "numpy" in cfg.toolbox.allowed_libraries


def test_full_document_round_trip(tmp_path):
    doc = """
model:
  model_id: test-model
  backend: live
  endpoint: http://vlm.example/chat
  temperature: 0.4
  record: true
budgets:
  wall_clock_s: 120
  critic_rounds: 1
  debug_attempts: 2
  n_samples: 3
toolbox:
  segment_backend: live
  allowed_libraries: [numpy, math]
eval:
  motion_threshold: 0.1
  min_blob_px: 4
serve:
  port: 9999
ablation:
  no_critic: true
store_dir: my-runs
"""
    path = tmp_path / "config.yaml"
    path.write_text(doc)
    cfg = load_config(path)
    assert cfg.model.model_id == "test-model"
    assert cfg.model.temperature == 0.4
    assert cfg.budgets.critic_rounds == 1
    assert cfg.budgets.n_samples == 3
    assert cfg.toolbox.segment_backend == "live"
    assert cfg.toolbox.allowed_libraries == ("numpy", "math")
    assert cfg.eval.min_blob_px == 4
    assert cfg.serve.port == 9999
    assert cfg.ablation == AblationFlags(no_critic=True)
    assert cfg.store_dir == "my-runs"


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("model:\n  temprature: 0.5\n")
    with pytest.raises(KeyError, match="model.temprature"):
        load_config(path)


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("modle:\n  model_id: x\n")
    with pytest.raises(KeyError, match="modle"):
        load_config(path)


def test_invalid_budgets_rejected(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("budgets:\n  n_samples: 0\n")
    with pytest.raises(ValueError, match="n_samples"):
        load_config(path)


def test_empty_document_gives_defaults(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("")
    cfg = load_config(path)
    assert cfg.budgets.critic_rounds == 2


def test_snapshot_is_json_serializable():
    import json

    json.dumps(PipelineConfig().snapshot())
