"""Orchestration: generate -> execute -> critique -> refine -> evaluate,
plus human interventions on persisted runs."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np
from PIL import Image

from .config import PipelineConfig
from .metrics import ScoreReport, best_of_n, score_prediction
from .params import apply_parameter_patch
from .prompts import PromptLibrary, assemble_generation_prompt, extract_program
from .refine import LoopOutcome, RefineContext, VlmSession, refine_loop
from .sandbox import (
    ExecutionBudget,
    Lineage,
    SandboxExecutor,
    WorldProgram,
    validate_contract,
)
from .scene import SceneInput, load_frame_dir, save_frames
from .stmap import spatiotemporal_map
from .store import RunRecord, RunStore
from .vlm import VlmClient, client_from_config

log = logging.getLogger(__name__)

INTERVENTION_KINDS = ("caption_edit", "parameter_patch", "source_edit")


@dataclass(frozen=True)
class Intervention:
    """A human modification producing a new, re-simulated child run."""

    kind: str
    caption: str | None = None
    patches: dict[str, Any] | None = None
    source: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in INTERVENTION_KINDS:
            raise ValueError(f"unknown intervention kind {self.kind!r}")
        payloads = {
            "caption_edit": self.caption,
            "parameter_patch": self.patches,
            "source_edit": self.source,
        }
        if payloads[self.kind] is None:
            raise ValueError(f"intervention {self.kind} is missing its payload")
        populated = [k for k, v in payloads.items() if v is not None]
        if populated != [self.kind]:
            raise ValueError(f"exactly one payload must be populated, got {populated}")

    @classmethod
    def caption_edit(cls, caption: str) -> "Intervention":
        return cls("caption_edit", caption=caption)

    @classmethod
    def parameter_patch(cls, patches: dict[str, Any]) -> "Intervention":
        return cls("parameter_patch", patches=dict(patches))

    @classmethod
    def source_edit(cls, source: str) -> "Intervention":
        return cls("source_edit", source=source)

    def as_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "payload": {
                "caption_edit": self.caption,
                "parameter_patch": self.patches,
                "source_edit": self.source,
            }[self.kind],
        }


class Orchestrator:
    def __init__(
        self,
        store: RunStore,
        config: PipelineConfig,
        client: VlmClient | None = None,
        executor: SandboxExecutor | None = None,
    ):
        self.store = store
        self.config = config
        self.client = client or client_from_config(config.model)
        self.executor = executor or SandboxExecutor(
            allowed_libraries=config.toolbox.allowed_libraries,
            toolbox_config=config.toolbox,
        )
        self.library = PromptLibrary.load(config.template_dir or None)
        self.env = self.library.environment_spec(config.toolbox.allowed_libraries)
        self.tools = self.library.tool_spec()

    # -- generation -----------------------------------------------------------
    def generate(
        self,
        scene: SceneInput,
        parent_run: str | None = None,
        intervention: Intervention | None = None,
        record: RunRecord | None = None,
    ) -> RunRecord:
        """Run n_samples independent pipelines and persist them as one run.

        ``record`` lets callers pre-allocate the run (e.g. to answer an HTTP
        request with the id before the work finishes).
        """
        if record is None:
            record = self.store.create_run(
                scene,
                self.config.snapshot(),
                parent_run=parent_run,
                intervention=intervention.as_dict() if intervention else None,
            )
        self.store.update_meta(record.run_id, status="running")
        try:
            self._generate_samples(record, scene)
        except Exception as exc:
            self.store.update_meta(record.run_id, status="failed", error=str(exc))
            raise
        return self.store.get(record.run_id)

    def _generate_samples(self, record: RunRecord, scene: SceneInput) -> None:
        cfg = self.config
        samples: list[dict[str, Any]] = []
        prompt_written = False
        for k in range(cfg.budgets.n_samples):
            sample_dir = record.path / "samples" / str(k)
            session = VlmSession(
                client=self.client,
                model_id=cfg.model.model_id,
                temperature=cfg.model.temperature,
                max_output=cfg.model.max_output,
                sample_index=k,
            )
            entry: dict[str, Any] = {"sample_index": k, "status": "failed"}
            bundle = assemble_generation_prompt(
                scene, self.env, self.tools, cfg.ablation, self.library
            )
            if not prompt_written:
                (record.path / "prompt.txt").write_text(bundle.text, encoding="utf-8")
                prompt_written = True
            try:
                source = extract_program(session.ask(bundle))
            except Exception as exc:
                entry["error"] = f"{type(exc).__name__}: {exc}"
                samples.append(entry)
                continue
            program = WorldProgram(source, Lineage(generation_index=k), "generator")
            outcome = self._refine(scene, program, session, sample_dir)
            entry.update(
                stop_reason=outcome.stop_reason,
                executions=outcome.executions,
                critiques=len(outcome.critiques),
                refinements=len(outcome.records),
                program=f"program.{outcome.program.lineage.label}.src",
                lineage=[
                    outcome.program.lineage.generation_index,
                    outcome.program.lineage.refine_index,
                    outcome.program.lineage.debug_index,
                ],
            )
            if outcome.result.ok:
                entry["status"] = "ok"
                save_frames(outcome.result.frames, sample_dir / "frames")
                st = spatiotemporal_map(
                    outcome.result.frames, cfg.eval.motion_threshold
                )
                Image.fromarray(st.image).save(sample_dir / "stmap.png")
            else:
                entry["status"] = outcome.result.status
                entry["error"] = outcome.result.traceback[-2000:]
            samples.append(entry)

        selected = next((s["sample_index"] for s in samples if s["status"] == "ok"), None)
        if selected is not None:
            self.store.promote_sample(record.run_id, selected)
        ok_any = selected is not None
        last_error = next(
            (s.get("error") for s in reversed(samples) if s.get("error")), None
        )
        self.store.update_meta(
            record.run_id,
            samples=samples,
            selected_sample=selected,
            error=None if ok_any else (last_error or "every sample failed"),
        )
        # scores land before the terminal status so a completed run is never
        # observable in a half-evaluated state
        if ok_any and scene.gt_video is not None:
            self.evaluate(record.run_id)
        self.store.update_meta(record.run_id, status="complete" if ok_any else "failed")

    def _refine(self, scene, program, session, sample_dir) -> LoopOutcome:
        cfg = self.config
        budget = ExecutionBudget(
            wall_clock_s=cfg.budgets.wall_clock_s,
            memory_mb=cfg.budgets.memory_mb,
            frame_count=scene.frame_count,
            rng_seed=session.sample_index,
        )
        ctx = RefineContext(
            session=session,
            library=self.library,
            env=self.env,
            tools=self.tools,
            critic_rounds=cfg.budgets.critic_rounds,
            debug_attempts=cfg.budgets.debug_attempts,
            critic_enabled=not cfg.ablation.no_critic,
            include_caption=not cfg.ablation.no_caption,
            motion_threshold=cfg.eval.motion_threshold,
            traceback_tail_lines=cfg.budgets.traceback_tail_lines,
            run_dir=sample_dir,
        )
        return refine_loop(scene, program, self.executor, budget, ctx)

    def predict_frames(self, scene: SceneInput, sample_index: int = 0) -> list[np.ndarray]:
        """One storeless pipeline sample: prompt -> program -> refined frames.

        Raises when the sample ends in a failed execution; benchmark runners
        treat that as a failed sample.
        """
        cfg = self.config
        session = VlmSession(
            client=self.client,
            model_id=cfg.model.model_id,
            temperature=cfg.model.temperature,
            max_output=cfg.model.max_output,
            sample_index=sample_index,
        )
        bundle = assemble_generation_prompt(
            scene, self.env, self.tools, cfg.ablation, self.library
        )
        source = extract_program(session.ask(bundle))
        program = WorldProgram(source, Lineage(generation_index=sample_index), "generator")
        outcome = self._refine(scene, program, session, sample_dir=None)
        if not outcome.result.ok:
            raise RuntimeError(
                f"sample {sample_index} failed ({outcome.result.status}): "
                f"{outcome.result.traceback[-500:]}"
            )
        return outcome.result.frames

    # -- evaluation -------------------------------------------------------------
    def evaluate(
        self, run_id: str, gt_video: Sequence[np.ndarray] | None = None,
        category: str = "",
    ) -> ScoreReport:
        """Score every ok sample against ground truth and keep the best."""
        record = self.store.get(run_id)
        if gt_video is None:
            gt_dir = record.path / "gt"
            if not gt_dir.is_dir():
                raise ValueError(f"run {run_id} has no ground-truth video")
            gt_video = load_frame_dir(gt_dir)
        ok_samples = [s for s in record.meta.get("samples", []) if s["status"] == "ok"]
        if not ok_samples:
            raise RuntimeError("nothing to evaluate: run has no ok samples")
        reports = []
        for entry in ok_samples:
            k = entry["sample_index"]
            frames = record.load_frames(k)
            reports.append(
                score_prediction(
                    frames,
                    gt_video,
                    threshold=self.config.eval.motion_threshold,
                    min_blob_px=self.config.eval.min_blob_px,
                    category=category,
                    sample_index=k,
                )
            )
        best = best_of_n(reports)
        payload = {
            "best": best.as_dict(),
            "samples": [r.as_dict() for r in reports],
        }
        (record.path / "scores.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
        )
        return best

    # -- interventions ------------------------------------------------------------
    def intervene(
        self,
        run_id: str,
        intervention: Intervention,
        child: RunRecord | None = None,
    ) -> RunRecord:
        """Apply a human modification, producing a re-simulated child run."""
        parent = self.store.get(run_id)
        if intervention.kind == "caption_edit":
            scene = replace(parent.scene(), caption=intervention.caption)
            if child is not None:
                # the pre-allocated record still carries the parent caption
                scene.save(child.path)
                child.meta["scene"]["caption"] = intervention.caption
                self.store.update_meta(child.run_id, scene=child.meta["scene"])
            return self.generate(
                scene, parent_run=run_id, intervention=intervention, record=child
            )

        if parent.selected_sample is None:
            raise ValueError("parent run has no ok program to intervene on")
        source = parent.final_program_source()
        if intervention.kind == "parameter_patch":
            new_source = apply_parameter_patch(source, intervention.patches)
        else:  # source_edit
            new_source = intervention.source
            report = validate_contract(new_source, self.config.toolbox.allowed_libraries)
            if not report.ok:
                raise ValueError(f"edited source fails validation: {report.as_text()}")

        lineage_list = parent.meta["samples"][parent.selected_sample].get("lineage", [0, 0, 0])
        program = WorldProgram(
            new_source,
            lineage=Lineage(*lineage_list),
            created_by="human-intervention",
        )
        scene = parent.scene()
        if child is None:
            child = self.store.create_run(
                scene, self.config.snapshot(), parent_run=run_id,
                intervention=intervention.as_dict(),
            )
        self.store.update_meta(child.run_id, status="running")
        (child.path / f"program.{program.lineage.label}.src").write_text(
            program.source, encoding="utf-8"
        )
        budget = ExecutionBudget(
            wall_clock_s=self.config.budgets.wall_clock_s,
            memory_mb=self.config.budgets.memory_mb,
            frame_count=scene.frame_count,
            rng_seed=0,
        )
        result = self.executor.execute(program, scene, budget)
        sample_entry = {
            "sample_index": 0,
            "status": "ok" if result.ok else result.status,
            "program": f"program.{program.lineage.label}.src",
            "lineage": lineage_list,
            "stop_reason": "intervention re-execution",
            "executions": 1,
            "critiques": 0,
            "refinements": 0,
        }
        if result.ok:
            save_frames(result.frames, child.path / "frames")
            st = spatiotemporal_map(result.frames, self.config.eval.motion_threshold)
            Image.fromarray(st.image).save(child.path / "stmap.png")
            self.store.update_meta(
                child.run_id, samples=[sample_entry], selected_sample=0,
            )
            if scene.gt_video is not None:
                self.evaluate(child.run_id)
            self.store.update_meta(child.run_id, status="complete")
        else:
            sample_entry["error"] = result.traceback[-2000:]
            self.store.update_meta(
                child.run_id, status="failed", samples=[sample_entry],
                error=result.traceback[-2000:],
            )
        return self.store.get(child.run_id)
