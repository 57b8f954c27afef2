"""The two-stage critic/refinement loop plus traceback-driven auto-debugging.

The loop executes a program, repairs runtime failures from their tracebacks
(at most D attempts per execution phase), then asks the critic to judge an
ok result; rejections trigger a refinement and another execution phase, for
at most K critic rounds. Total executions never exceed K*(D+1) + 1.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .prompts import (
    Critique,
    EnvironmentSpec,
    PromptLibrary,
    ToolSpec,
    assemble_critic_prompt,
    assemble_refiner_prompt,
    assemble_debugger_prompt,
    extract_critique,
    extract_program,
)
from .sandbox import ExecutionBudget, ExecutionResult, SandboxExecutor, WorldProgram
from .scene import SceneInput
from .stmap import SpatiotemporalMap, spatiotemporal_map
from .vlm import ChatRequest, VlmClient

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VlmSession:
    """A client plus the fixed sampling parameters for one pipeline sample."""

    client: VlmClient
    model_id: str
    temperature: float = 1.0
    max_output: int = 65536
    sample_index: int = 0

    def ask(self, bundle) -> str:
        request = ChatRequest(
            bundle=bundle,
            model_id=self.model_id,
            temperature=self.temperature,
            max_output=self.max_output,
            sample_index=self.sample_index,
        )
        return self.client.complete(request).text


@dataclass
class RefinementRecord:
    round: int
    critique: Critique
    program_before: WorldProgram
    program_after: WorldProgram

    def __post_init__(self) -> None:
        if self.round < 1:
            raise ValueError("refinement rounds are 1-based")
        before = self.program_before.lineage
        after = self.program_after.lineage
        if after.refine_index != before.refine_index + 1:
            raise ValueError("refinement must increment refine_index by exactly 1")


@dataclass
class RefineContext:
    session: VlmSession
    library: PromptLibrary
    env: EnvironmentSpec
    tools: ToolSpec
    critic_rounds: int = 2  # K
    debug_attempts: int = 3  # D
    critic_enabled: bool = True
    include_caption: bool = True
    motion_threshold: float = 0.05
    traceback_tail_lines: int = 80
    run_dir: Path | None = None


@dataclass
class LoopOutcome:
    program: WorldProgram
    result: ExecutionResult | None = None
    records: list[RefinementRecord] = field(default_factory=list)
    critiques: list[Critique] = field(default_factory=list)
    executions: int = 0
    stop_reason: str = "ok"


def critique_frames(
    frames,
    caption: str | None,
    session: VlmSession,
    library: PromptLibrary,
    motion_threshold: float = 0.05,
) -> tuple[Critique, SpatiotemporalMap]:
    """Critic pass: first frame + spatiotemporal map -> structured verdict."""
    st = spatiotemporal_map(frames, motion_threshold=motion_threshold)
    bundle = assemble_critic_prompt(frames[0], st.image, caption, library=library)
    text = session.ask(bundle)
    return extract_critique(text), st


def refine(
    program: WorldProgram,
    critique: Critique,
    session: VlmSession,
    library: PromptLibrary,
) -> WorldProgram:
    """Rewrite a flawed program according to the critic's suggestions."""
    if critique.accurate:
        raise ValueError("refinement must not run when the critic approved")
    bundle = assemble_refiner_prompt(program.source, critique.suggestions, library=library)
    source = extract_program(session.ask(bundle))
    return WorldProgram(source, lineage=program.lineage.bump_refine(), created_by="refiner")


def auto_debug(
    program: WorldProgram,
    traceback_text: str,
    session: VlmSession,
    env: EnvironmentSpec,
    tools: ToolSpec,
    library: PromptLibrary,
    tail_lines: int = 80,
) -> WorldProgram:
    """Correct a program given only its captured traceback and the specs."""
    if not traceback_text.strip():
        raise ValueError("auto_debug requires a non-empty traceback")
    bundle = assemble_debugger_prompt(
        program.source, traceback_text, env, tools, library=library, tail_lines=tail_lines
    )
    source = extract_program(session.ask(bundle))
    return WorldProgram(source, lineage=program.lineage.bump_debug(), created_by="debugger")


def _persist_program(run_dir: Path | None, program: WorldProgram) -> None:
    if run_dir is None:
        return
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / f"program.{program.lineage.label}.src").write_text(
        program.source, encoding="utf-8"
    )


def _persist_round(run_dir: Path | None, round_index: int, critique: Critique,
                   st: SpatiotemporalMap) -> None:
    if run_dir is None:
        return
    payload = {"accurate": critique.accurate, "suggestions": list(critique.suggestions)}
    (run_dir / f"critique.round{round_index}.json").write_text(
        json.dumps(payload, indent=2), encoding="utf-8"
    )
    Image.fromarray(st.image).save(run_dir / f"stmap.round{round_index}.png")


def refine_loop(
    scene: SceneInput,
    program: WorldProgram,
    executor: SandboxExecutor,
    budget: ExecutionBudget,
    ctx: RefineContext,
) -> LoopOutcome:
    """Run execute / auto-debug / critique / refine to a terminal state.

    Always terminates and reports; failures end up as the final result's
    error status rather than exceptions.
    """
    max_executions = ctx.critic_rounds * (ctx.debug_attempts + 1) + 1
    outcome = LoopOutcome(program=program)

    def execute(prog: WorldProgram) -> ExecutionResult:
        outcome.executions += 1
        _persist_program(ctx.run_dir, prog)
        result = executor.execute(prog, scene, budget)
        log.info("execution %d (%s): %s", outcome.executions, prog.lineage.label, result.status)
        return result

    def debug_phase(prog: WorldProgram, result: ExecutionResult):
        attempts = 0
        while (
            not result.ok
            and attempts < ctx.debug_attempts
            and outcome.executions < max_executions
        ):
            try:
                prog = auto_debug(
                    prog, result.traceback, ctx.session, ctx.env, ctx.tools,
                    ctx.library, ctx.traceback_tail_lines,
                )
            except Exception as exc:
                outcome.stop_reason = f"debugger failed: {exc}"
                return prog, result
            attempts += 1
            result = execute(prog)
        if not result.ok:
            if attempts >= ctx.debug_attempts:
                outcome.stop_reason = "debug budget exhausted"
            elif outcome.executions >= max_executions:
                outcome.stop_reason = "execution budget exhausted"
        return prog, result

    result = execute(program)
    program, result = debug_phase(program, result)

    rounds = 0
    caption = scene.caption if ctx.include_caption else None
    while result.ok and ctx.critic_enabled and rounds < ctx.critic_rounds:
        try:
            critique, st = critique_frames(
                result.frames, caption, ctx.session, ctx.library, ctx.motion_threshold
            )
        except Exception as exc:
            outcome.stop_reason = f"critic failed: {exc}"
            break
        rounds += 1
        outcome.critiques.append(critique)
        _persist_round(ctx.run_dir, rounds, critique, st)
        if critique.accurate:
            outcome.stop_reason = "critic approved"
            break
        if outcome.executions >= max_executions:
            outcome.stop_reason = "execution budget exhausted"
            break
        try:
            refined = refine(program, critique, ctx.session, ctx.library)
        except Exception as exc:
            outcome.stop_reason = f"refiner failed: {exc}"
            break
        outcome.records.append(
            RefinementRecord(
                round=rounds, critique=critique,
                program_before=program, program_after=refined,
            )
        )
        program = refined
        result = execute(program)
        program, result = debug_phase(program, result)

    if outcome.stop_reason == "ok":
        if not result.ok:
            outcome.stop_reason = "execution failed"
        elif not ctx.critic_enabled:
            outcome.stop_reason = "critic disabled"
        else:
            outcome.stop_reason = "critic rounds exhausted"

    outcome.program = program
    outcome.result = result
    return outcome
