"""Pipeline configuration: one document with sections {model, budgets, toolbox, eval, serve}.

Credentials are never stored in config files; the live VLM backend reads them
from the environment variable named in ``model.api_key_env``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


@dataclass(frozen=True)
class AblationFlags:
    """The four supported ablation modes.

    Each flag alters either the assembled prompt bundles (no_api, no_image,
    no_caption) or the pipeline flow (no_critic skips the critique stage).
    """

    no_api: bool = False
    no_critic: bool = False
    no_image: bool = False
    no_caption: bool = False

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))


# Import allow-list handed to generated programs.  This is configuration, not
# a constant of the system: deployments with physics engines installed extend
# it (e.g. with "pymunk", "pybullet").
DEFAULT_ALLOWED_LIBRARIES: tuple[str, ...] = (
    "numpy",
    "scipy",
    "math",
    "cmath",
    "random",
    "itertools",
    "functools",
    "collections",
    "dataclasses",
    "typing",
    "copy",
    "colorsys",
    "re",
)


@dataclass
class ModelConfig:
    model_id: str = "gemini-2.5-pro"
    backend: str = "replay"  # {live, replay}
    temperature: float = 1.0
    max_output: int = 65536
    endpoint: str = ""
    api_key_env: str = "WORLDSIM_API_KEY"
    transcript_dir: str = "transcripts"
    record: bool = False
    retry_attempts: int = 5
    retry_base_s: float = 1.0


@dataclass
class BudgetConfig:
    wall_clock_s: float = 300.0
    memory_mb: int = 4096
    fps: float = 30.0
    duration_s: float = 5.0
    critic_rounds: int = 2  # K
    debug_attempts: int = 3  # D
    n_samples: int = 1
    traceback_tail_lines: int = 80

    def __post_init__(self) -> None:
        if self.critic_rounds < 0 or self.debug_attempts < 0:
            raise ValueError("critic_rounds and debug_attempts must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass
class ToolboxConfig:
    segment_backend: str = "synthetic"  # {live, synthetic}
    pts3d_backend: str = "synthetic"  # {live, synthetic}
    fixture_dir: str = ""
    allowed_libraries: tuple[str, ...] = DEFAULT_ALLOWED_LIBRARIES
    ransac_seed: int = 0


@dataclass
class EvalConfig:
    motion_threshold: float = 0.05
    min_blob_px: int = 0
    combiner: str = "mean"


@dataclass
class ServeConfig:
    host: str = "127.0.0.1"
    port: int = 8041
    workers: int = 2


@dataclass
class PipelineConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    budgets: BudgetConfig = field(default_factory=BudgetConfig)
    toolbox: ToolboxConfig = field(default_factory=ToolboxConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    serve: ServeConfig = field(default_factory=ServeConfig)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    template_dir: str = ""  # empty = packaged defaults
    store_dir: str = "runs"

    def snapshot(self) -> dict[str, Any]:
        """Full effective config as a JSON-serializable dict."""
        return dataclasses.asdict(self)


def _apply_section(obj: Any, values: dict[str, Any], path: str) -> None:
    names = {f.name for f in dataclasses.fields(obj)}
    for key, value in values.items():
        if key not in names:
            raise KeyError(f"unknown config key {path}.{key}")
        current = getattr(obj, key)
        if isinstance(current, tuple) and isinstance(value, list):
            value = tuple(value)
        setattr(obj, key, value)


def config_from_dict(data: dict[str, Any]) -> PipelineConfig:
    cfg = PipelineConfig()
    sections = {
        "model": cfg.model,
        "budgets": cfg.budgets,
        "toolbox": cfg.toolbox,
        "eval": cfg.eval,
        "serve": cfg.serve,
    }
    for name, values in data.items():
        if name in sections:
            _apply_section(sections[name], values or {}, name)
        elif name == "ablation":
            cfg.ablation = AblationFlags(**(values or {}))
        elif name in ("template_dir", "store_dir"):
            setattr(cfg, name, values)
        else:
            raise KeyError(f"unknown config section {name!r}")
    cfg.budgets.__post_init__()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    """Load a YAML (or JSON) config document."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config root must be a mapping, got {type(data).__name__}")
    return config_from_dict(data)
