"""worldsim: image + caption -> executable world program -> simulated future.

A VLM agent assembles a scene abstraction with perception tools, writes a
simulator program against a fixed contract, runs it in a sandbox, repairs it
from critiques and tracebacks, and is scored with motion-overlap metrics and
a rule-based grid benchmark.

Submodules import lazily: the sandbox child process must boot without pulling
the HTTP/serving stack into every execution.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "AblationFlags": "config",
    "PipelineConfig": "config",
    "load_config": "config",
    "BinaryGrid": "conway",
    "conway_extract_grid": "conway",
    "conway_f1": "conway",
    "conway_oracle_step": "conway",
    "run_conway_benchmark": "conway",
    "seeded_boards": "conway",
    "MotionMaskSet": "metrics",
    "ScoreReport": "metrics",
    "best_of_n": "metrics",
    "motion_masks": "metrics",
    "physics_score": "metrics",
    "score_prediction": "metrics",
    "spatial_iou": "metrics",
    "spatiotemporal_iou": "metrics",
    "weighted_spatial_iou": "metrics",
    "Intervention": "pipeline",
    "Orchestrator": "pipeline",
    "Critique": "prompts",
    "EnvironmentSpec": "prompts",
    "PromptBundle": "prompts",
    "PromptLibrary": "prompts",
    "ToolSpec": "prompts",
    "assemble_critic_prompt": "prompts",
    "assemble_debugger_prompt": "prompts",
    "assemble_generation_prompt": "prompts",
    "assemble_refiner_prompt": "prompts",
    "extract_critique": "prompts",
    "extract_program": "prompts",
    "RefineContext": "refine",
    "RefinementRecord": "refine",
    "VlmSession": "refine",
    "auto_debug": "refine",
    "critique_frames": "refine",
    "refine": "refine",
    "refine_loop": "refine",
    "ExecutionBudget": "sandbox",
    "ExecutionResult": "sandbox",
    "Lineage": "sandbox",
    "SandboxExecutor": "sandbox",
    "WorldProgram": "sandbox",
    "validate_contract": "sandbox",
    "SceneInput": "scene",
    "SpatiotemporalMap": "stmap",
    "spatiotemporal_map": "stmap",
    "RunStore": "store",
    "ChatRequest": "vlm",
    "ChatResponse": "vlm",
    "LiveClient": "vlm",
    "RecordingClient": "vlm",
    "ReplayClient": "vlm",
    "ScriptedClient": "vlm",
    "Transcript": "vlm",
    "TranscriptStore": "vlm",
    "request_digest": "vlm",
    "run_physics_benchmark": "bench",
    "gt_replay_pipeline": "bench",
    "conway_reference_pipeline": "bench",
    "reference_program": "assets",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name: str):
    try:
        module_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    value = getattr(import_module(f".{module_name}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
