"""Critic/refine/debug loop behavior and budgets."""

from __future__ import annotations

import numpy as np
import pytest

from worldsim.prompts import Critique, PromptLibrary
from worldsim.refine import (
    RefineContext,
    RefinementRecord,
    VlmSession,
    auto_debug,
    critique_frames,
    refine,
    refine_loop,
)
from worldsim.sandbox import (
    ExecutionBudget,
    ExecutionResult,
    Lineage,
    SandboxExecutor,
    WorldProgram,
)
from worldsim.vlm import ScriptedClient

from conftest import (
    BROKEN_BALL,
    FALLING_BALL,
    RISING_BALL,
    critique_json,
    fenced,
)


@pytest.fixture(scope="module")
def library():
    return PromptLibrary.load()


def make_ctx(responses, library, run_dir=None, critic_rounds=2, debug_attempts=3,
             critic_enabled=True):
    session = VlmSession(ScriptedClient(responses), model_id="test-model")
    return RefineContext(
        session=session,
        library=library,
        env=library.environment_spec(("numpy", "math")),
        tools=library.tool_spec(),
        critic_rounds=critic_rounds,
        debug_attempts=debug_attempts,
        critic_enabled=critic_enabled,
        run_dir=run_dir,
    )


def dummy_frames(n=4, level=0):
    frame = np.full((8, 8, 3), level, dtype=np.uint8)
    return [frame.copy() for _ in range(n)]


class FakeExecutor:
    """Returns queued results without spawning processes."""

    def __init__(self, results):
        self.results = list(results)
        self.executed: list[WorldProgram] = []

    def execute(self, program, scene, budget):
        self.executed.append(program)
        if not self.results:
            raise AssertionError("fake executor exhausted")
        result = self.results.pop(0)
        return result() if callable(result) else result


def ok():
    return ExecutionResult(status="ok", frames=dummy_frames())


def err(tb="Traceback (most recent call last):\n  ...\nValueError: boom"):
    return ExecutionResult(status="runtime_error", traceback=tb)


class TestSingleOps:
    def test_refine_requires_rejection(self, library):
        session = VlmSession(ScriptedClient([]), model_id="m")
        program = WorldProgram(FALLING_BALL)
        with pytest.raises(ValueError, match="critic approved"):
            refine(program, Critique(accurate=True), session, library)

    def test_refine_bumps_refine_index(self, library):
        session = VlmSession(ScriptedClient([fenced(FALLING_BALL)]), model_id="m")
        program = WorldProgram(RISING_BALL, lineage=Lineage(0, 0, 1))
        critique = Critique(accurate=False, suggestions=("ball should fall down",))
        refined = refine(program, critique, session, library)
        assert refined.lineage == Lineage(0, 1, 1)
        assert refined.created_by == "refiner"
        assert refined.source == FALLING_BALL

    def test_auto_debug_bumps_debug_index(self, library):
        session = VlmSession(ScriptedClient([fenced(FALLING_BALL)]), model_id="m")
        program = WorldProgram(BROKEN_BALL)
        fixed = auto_debug(program, "Traceback: AttributeError: segmnt", session,
                           library.environment_spec(("numpy",)), library.tool_spec(),
                           library)
        assert fixed.lineage == Lineage(0, 0, 1)
        assert fixed.created_by == "debugger"

    def test_auto_debug_requires_traceback(self, library):
        session = VlmSession(ScriptedClient([]), model_id="m")
        with pytest.raises(ValueError, match="traceback"):
            auto_debug(WorldProgram(BROKEN_BALL), "", session,
                       library.environment_spec(("numpy",)), library.tool_spec(), library)

    def test_critique_frames_parses_replayed_verdicts(self, library):
        session = VlmSession(
            ScriptedClient([critique_json(False, ["a", "b"]), critique_json(True)]),
            model_id="m",
        )
        frames = dummy_frames()
        rejected, st = critique_frames(frames, "cap", session, library)
        assert rejected.accurate is False and len(rejected.suggestions) == 2
        assert st.image.shape == frames[0].shape
        approved, _ = critique_frames(frames, "cap", session, library)
        assert approved.accurate is True and approved.suggestions == ()

    def test_record_lineage_invariant(self):
        before = WorldProgram(RISING_BALL, lineage=Lineage(0, 0, 0))
        after = WorldProgram(FALLING_BALL, lineage=Lineage(0, 2, 0), created_by="refiner")
        with pytest.raises(ValueError, match="exactly 1"):
            RefinementRecord(1, Critique(False, ("s",)), before, after)


class TestLoopFlow:
    def test_immediate_approval_no_records(self, library, small_scene):
        executor = FakeExecutor([ok()])
        ctx = make_ctx([critique_json(True)], library)
        outcome = refine_loop(small_scene, WorldProgram(FALLING_BALL), executor,
                              ExecutionBudget(10, 256, 4, 0), ctx)
        assert outcome.result.ok
        assert outcome.records == []
        assert outcome.executions == 1
        assert len(outcome.critiques) == 1
        assert outcome.stop_reason == "critic approved"

    def test_reject_once_then_approve(self, library, small_scene):
        executor = FakeExecutor([ok(), ok()])
        ctx = make_ctx(
            [critique_json(False, ["ball should fall"]), fenced(FALLING_BALL),
             critique_json(True)],
            library,
        )
        outcome = refine_loop(small_scene, WorldProgram(RISING_BALL), executor,
                              ExecutionBudget(10, 256, 4, 0), ctx)
        assert len(outcome.records) == 1
        assert outcome.records[0].round == 1
        assert outcome.executions == 2
        assert outcome.program.lineage.refine_index == 1
        assert outcome.stop_reason == "critic approved"

    def test_debug_then_approval(self, library, small_scene):
        executor = FakeExecutor([err(), ok()])
        ctx = make_ctx([fenced(FALLING_BALL), critique_json(True)], library)
        outcome = refine_loop(small_scene, WorldProgram(BROKEN_BALL), executor,
                              ExecutionBudget(10, 256, 4, 0), ctx)
        assert outcome.result.ok
        assert outcome.program.lineage.debug_index == 1
        assert outcome.executions == 2
        assert outcome.records == []

    def test_debug_budget_exhausted(self, library, small_scene):
        executor = FakeExecutor([err(), err(), err(), err()])
        ctx = make_ctx([fenced(BROKEN_BALL)] * 3, library, debug_attempts=3)
        outcome = refine_loop(small_scene, WorldProgram(BROKEN_BALL), executor,
                              ExecutionBudget(10, 256, 4, 0), ctx)
        assert not outcome.result.ok
        assert outcome.executions == 4  # initial + 3 debug attempts
        assert outcome.stop_reason == "debug budget exhausted"
        assert outcome.critiques == []

    def test_critic_disabled_skips_critique_entirely(self, library, small_scene):
        executor = FakeExecutor([ok()])
        ctx = make_ctx([], library, critic_enabled=False)
        outcome = refine_loop(small_scene, WorldProgram(FALLING_BALL), executor,
                              ExecutionBudget(10, 256, 4, 0), ctx)
        assert outcome.result.ok
        assert outcome.critiques == []
        assert outcome.stop_reason == "critic disabled"

    def test_execution_count_bounded_by_documented_formula(self, library, small_scene):
        # worst case: every critique rejects, every refined program fails and
        # is debugged back to ok
        k, d = 2, 3
        responses = []
        results = [ok()]
        for _ in range(k):
            responses.append(critique_json(False, ["still wrong"]))
            responses.append(fenced(RISING_BALL))  # refinement
            results.append(err())
            for _ in range(d):
                responses.append(fenced(FALLING_BALL))  # debug fixes
                results.append(err())
        responses.append(critique_json(False, ["never happy"]))
        executor = FakeExecutor(results + [ok()] * 10)
        ctx = make_ctx(responses + [critique_json(False, ["x"])] * 5, library,
                       critic_rounds=k, debug_attempts=d)
        outcome = refine_loop(small_scene, WorldProgram(FALLING_BALL), executor,
                              ExecutionBudget(10, 256, 4, 0), ctx)
        assert outcome.executions <= k * (d + 1) + 1

    def test_history_lineage_strictly_steps_one_index(self, library, small_scene):
        executor = FakeExecutor([err(), ok(), ok()])
        ctx = make_ctx(
            [fenced(RISING_BALL), critique_json(False, ["fall down"]),
             fenced(FALLING_BALL), critique_json(True)],
            library,
        )
        outcome = refine_loop(small_scene, WorldProgram(BROKEN_BALL), executor,
                              ExecutionBudget(10, 256, 4, 0), ctx)
        lineages = [
            (p.lineage.generation_index, p.lineage.refine_index, p.lineage.debug_index)
            for p in executor.executed
        ]
        assert lineages == [(0, 0, 0), (0, 0, 1), (0, 1, 1)]
        for before, after in zip(lineages, lineages[1:]):
            diffs = [b - a for a, b in zip(before, after)]
            assert all(d >= 0 for d in diffs)
            assert sum(diffs) == 1

    def test_persistence_layout(self, library, small_scene, tmp_path):
        run_dir = tmp_path / "sample0"
        executor = FakeExecutor([err(), ok(), ok()])
        ctx = make_ctx(
            [fenced(RISING_BALL), critique_json(False, ["fall down"]),
             fenced(FALLING_BALL), critique_json(True)],
            library, run_dir=run_dir,
        )
        refine_loop(small_scene, WorldProgram(BROKEN_BALL), executor,
                    ExecutionBudget(10, 256, 4, 0), ctx)
        names = sorted(p.name for p in run_dir.iterdir())
        assert names == [
            "critique.round1.json",
            "critique.round2.json",
            "program.g0.r0.d0.src",
            "program.g0.r0.d1.src",
            "program.g0.r1.d1.src",
            "stmap.round1.png",
            "stmap.round2.png",
        ]


class TestLoopWithRealSandbox:
    def test_broken_then_fixed_program_round_trip(self, library, small_scene):
        executor = SandboxExecutor()
        ctx = make_ctx(
            [fenced(FALLING_BALL), critique_json(True)], library,
        )
        budget = ExecutionBudget(wall_clock_s=60, memory_mb=1024,
                                 frame_count=small_scene.frame_count, rng_seed=0)
        outcome = refine_loop(small_scene, WorldProgram(BROKEN_BALL), executor,
                              budget, ctx)
        assert outcome.result.ok
        assert len(outcome.result.frames) == small_scene.frame_count
        assert outcome.program.lineage.debug_index == 1
        # the scripted "debugger" saw the real captured traceback
        debug_request = ctx.session.client.requests[0]
        assert "AttributeError" in debug_request.bundle.text
        assert "segmnt" in debug_request.bundle.text
