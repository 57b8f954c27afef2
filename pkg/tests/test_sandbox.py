"""Contract validation and isolated execution."""

from __future__ import annotations

import numpy as np
import pytest

from worldsim.assets import reference_program
from worldsim.conway import BinaryGrid, conway_extract_grid, render_grid
from worldsim.sandbox import (
    STATUS_CONTRACT_VIOLATION,
    STATUS_OK,
    STATUS_OOM,
    STATUS_RUNTIME_ERROR,
    STATUS_TIMEOUT,
    ExecutionBudget,
    Lineage,
    SandboxExecutor,
    WorldProgram,
    validate_contract,
)
from worldsim.scene import SceneInput

from conftest import FALLING_BALL, GRAY_PROGRAM, ball_program


class TestValidateContract:
    def test_conforming_source_passes(self):
        report = validate_contract(FALLING_BALL)
        assert report.ok
        assert report.violations == []

    def test_missing_render_frame_reported(self):
        source = (
            "class VideoSimulation(Simulator):\n"
            "    def __init__(self): ...\n"
            "    def fit(self, image, text): ...\n"
            "    def update_simulation(self, dt): ...\n"
        )
        report = validate_contract(source)
        assert report.violations == ["class VideoSimulation does not declare render_frame()"]

    def test_disallowed_import_reported(self):
        source = "import requests\n" + FALLING_BALL
        report = validate_contract(source)
        assert any("disallowed import: requests" in v for v in report.violations)

    def test_allowed_imports_pass(self):
        source = "import math\nfrom scipy import ndimage\n" + FALLING_BALL
        assert validate_contract(source).ok

    def test_syntax_error_reported(self):
        report = validate_contract("class VideoSimulation(Simulator:\n")
        assert any("syntax error" in v for v in report.violations)

    def test_no_contract_class_reported(self):
        report = validate_contract("x = 1\n")
        assert any("no class deriving" in v for v in report.violations)

    def test_reference_programs_validate(self):
        assert validate_contract(reference_program("conway")).ok
        assert validate_contract(reference_program("falling_ball")).ok


@pytest.fixture(scope="module")
def executor() -> SandboxExecutor:
    return SandboxExecutor()


def gray_scene(fps=30.0, duration_s=2.0, size=(32, 24)) -> SceneInput:
    return SceneInput(
        image=np.zeros((size[1], size[0], 3), dtype=np.uint8),
        caption="a static gray field",
        frame_size=size,
        fps=fps,
        duration_s=duration_s,
    )


class TestExecute:
    def test_constant_gray_sequence(self, executor):
        scene = gray_scene(fps=30.0, duration_s=2.0)
        budget = ExecutionBudget(wall_clock_s=60, memory_mb=1024,
                                 frame_count=scene.frame_count, rng_seed=0)
        result = executor.execute(WorldProgram(GRAY_PROGRAM), scene, budget)
        assert result.status == STATUS_OK
        assert len(result.frames) == 60
        assert all(f.shape == (24, 32, 3) for f in result.frames)
        assert all(np.all(f == 128) for f in result.frames)

    def test_division_by_zero_captures_traceback(self, executor):
        source = ball_program(fit_extra="self.scale = 1.0 / 0.0")
        scene = gray_scene(size=(64, 48))
        budget = ExecutionBudget(60, 1024, 5, 0)
        result = executor.execute(WorldProgram(source), scene, budget)
        assert result.status == STATUS_RUNTIME_ERROR
        assert "ZeroDivisionError" in result.traceback
        assert "self.scale = 1.0 / 0.0" in result.traceback
        assert result.frames == []

    def test_unbounded_loop_times_out(self, executor):
        source = ball_program(fit_extra="pass").replace(
            "    def update_simulation(self, dt):",
            "    def update_simulation(self, dt):\n"
            "        while True:\n            pass",
        )
        scene = gray_scene(size=(64, 48))
        budget = ExecutionBudget(wall_clock_s=2, memory_mb=1024, frame_count=5, rng_seed=0)
        import time

        start = time.monotonic()
        result = executor.execute(WorldProgram(source), scene, budget)
        elapsed = time.monotonic() - start
        assert result.status == STATUS_TIMEOUT
        assert elapsed <= 2 + 2 + 3  # budget + grace + process overhead
        assert "wall-clock budget" in result.traceback

    def test_memory_hog_reports_oom(self, executor):
        source = ball_program(
            fit_extra="import numpy as _np; self.hog = _np.ones((1 << 29,), dtype=_np.float64)"
        )
        scene = gray_scene(size=(64, 48))
        budget = ExecutionBudget(wall_clock_s=30, memory_mb=512, frame_count=5, rng_seed=0)
        result = executor.execute(WorldProgram(source), scene, budget)
        assert result.status == STATUS_OOM

    def test_wrong_frame_shape_is_contract_violation(self, executor):
        source = GRAY_PROGRAM.replace(
            "return np.full((h, w, 3), self.PARAMS[\"level\"], dtype=np.uint8)",
            "return np.full((h, w), self.PARAMS[\"level\"], dtype=np.uint8)",
        )
        scene = gray_scene()
        budget = ExecutionBudget(60, 1024, 5, 0)
        result = executor.execute(WorldProgram(source), scene, budget)
        assert result.status == STATUS_CONTRACT_VIOLATION
        assert "render_frame returned" in result.traceback

    def test_invalid_source_fails_before_spawn(self, executor):
        result = executor.execute(
            WorldProgram("import requests\n" + FALLING_BALL), gray_scene(),
            ExecutionBudget(60, 1024, 5, 0),
        )
        assert result.status == STATUS_CONTRACT_VIOLATION
        assert "disallowed import: requests" in result.traceback

    def test_runtime_import_guard_blocks_dynamic_import(self, executor):
        # import hidden behind exec so static validation cannot see it
        source = ball_program(fit_extra='exec("import socket")')
        scene = gray_scene(size=(64, 48))
        result = executor.execute(WorldProgram(source), scene,
                                  ExecutionBudget(60, 1024, 5, 0))
        assert result.status == STATUS_RUNTIME_ERROR
        assert "disallowed import: socket" in result.traceback

    def test_deterministic_frames_for_seeded_rng(self, executor):
        source = ball_program(
            fit_extra="import numpy as _np; self.jitter = _np.random.uniform(-4, 4)"
        ).replace("self.x = self.PARAMS[\"start\"][0] * w",
                  "self.x = self.PARAMS[\"start\"][0] * w + self.jitter")
        scene = gray_scene(size=(64, 48))
        budget = ExecutionBudget(60, 1024, 6, rng_seed=7)
        a = executor.execute(WorldProgram(source), scene, budget)
        b = executor.execute(WorldProgram(source), scene, budget)
        assert a.status == b.status == STATUS_OK
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa, fb)

    def test_conway_reference_on_glider_matches_rule_oracle(self, executor):
        board = BinaryGrid.from_text(
            ".#......\n..#.....\n###.....\n........\n"
            "........\n........\n........\n........"
        )
        frame_size = (8 * 8, 8 * 8)
        scene = SceneInput(
            image=render_grid(board, frame_size),
            caption="Conway's Game of Life on a 8x8 grid",
            frame_size=frame_size,
            fps=10.0,
            duration_s=1.0,
        )
        budget = ExecutionBudget(60, 1024, frame_count=10, rng_seed=0)
        result = executor.execute(
            WorldProgram(reference_program("conway")), scene, budget
        )
        assert result.status == STATUS_OK
        state = board
        for t, frame in enumerate(result.frames, start=1):
            state = naive_life_step(state)
            extracted = conway_extract_grid(frame, 8, 8)
            assert np.array_equal(extracted.cells, state.cells), f"step {t}"

    def test_program_uses_perception_api_via_synthetic_fixture(self, tmp_path):
        from worldsim.config import ToolboxConfig
        from test_toolbox import disk_fixture

        fixture = disk_fixture()
        fixture.save(tmp_path / "fixture")
        executor = SandboxExecutor(
            toolbox_config=ToolboxConfig(fixture_dir=str(tmp_path / "fixture"))
        )
        source = (
            "import numpy as np\n\n\n"
            "class VideoSimulation(Simulator):\n"
            '    PARAMS = {"speed": 20.0}\n\n'
            "    def __init__(self, frame_size=(64, 64), api=None, fps=30):\n"
            "        super().__init__(frame_size=frame_size, api=api, fps=fps)\n\n"
            "    def fit(self, image, text):\n"
            '        mask = self.api.segment(image, ["ball"])[0].mask\n'
            '        disk = self.api.fit_2d_shape(mask, "disk")\n'
            '        self.x, self.y = disk.parameters["center"]\n'
            '        self.r = disk.parameters["radius"]\n\n'
            "    def update_simulation(self, dt):\n"
            '        self.x += self.PARAMS["speed"] * dt\n\n'
            "    def render_frame(self):\n"
            "        w, h = self.frame_size\n"
            "        frame = np.zeros((h, w, 3), dtype=np.uint8)\n"
            "        yy, xx = np.ogrid[:h, :w]\n"
            "        hit = (xx - self.x) ** 2 + (yy - self.y) ** 2 <= self.r ** 2\n"
            "        frame[hit] = (0, 255, 0)\n"
            "        return frame\n"
        )
        scene = SceneInput(
            image=fixture.image,
            caption="a ball glides right",
            frame_size=(64, 64),
            fps=10.0,
            duration_s=0.5,
        )
        result = executor.execute(
            WorldProgram(source), scene, ExecutionBudget(60, 1024, 5, 0)
        )
        assert result.status == STATUS_OK
        # the redrawn ball sits where segmentation + disk fitting found it
        first = result.frames[0]
        assert (first[26, 32] == (0, 255, 0)).all()
        assert (result.frames[-1][26, 36] == (0, 255, 0)).all()  # drifted right

    def test_exit_codes_encode_status_class(self, tmp_path):
        import dataclasses as dc
        import json
        import subprocess
        import sys

        cases = [
            (GRAY_PROGRAM, STATUS_OK, 0),
            (ball_program(fit_extra="1 / 0"), STATUS_RUNTIME_ERROR, 10),
        ]
        for i, (source, status, code) in enumerate(cases):
            run_dir = tmp_path / f"case{i}"
            run_dir.mkdir()
            (run_dir / "program.py").write_text(source)
            gray_scene(fps=10, duration_s=0.2, size=(64, 48)).save(run_dir / "scene")
            budget = ExecutionBudget(30, 1024, 2, 0)
            (run_dir / "budget.json").write_text(json.dumps(dc.asdict(budget)))
            (run_dir / "config.json").write_text(
                json.dumps({"allowed_libraries": ["numpy", "math"], "toolbox": {}})
            )
            proc = subprocess.run(
                [sys.executable, "-m", "worldsim._child_main", str(run_dir)],
                capture_output=True,
            )
            payload = json.loads((run_dir / "result.json").read_text())
            assert payload["status"] == status
            assert proc.returncode == code


def naive_life_step(grid: BinaryGrid) -> BinaryGrid:
    """Direct B3/S23 rule application, cell by cell (test-local oracle)."""
    rows, cols = grid.shape
    out = np.zeros((rows, cols), dtype=bool)
    for i in range(rows):
        for j in range(cols):
            live = 0
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if (di, dj) == (0, 0):
                        continue
                    ni, nj = i + di, j + dj
                    if 0 <= ni < rows and 0 <= nj < cols and grid.cells[ni, nj]:
                        live += 1
            out[i, j] = live == 3 or (grid.cells[i, j] and live == 2)
    return BinaryGrid(out)


class TestLineage:
    def test_bumps(self):
        lineage = Lineage(1, 0, 0)
        assert lineage.bump_debug() == Lineage(1, 0, 1)
        assert lineage.bump_refine() == Lineage(1, 1, 0)
        assert Lineage(0, 1, 2).label == "g0.r1.d2"

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            Lineage(-1, 0, 0)

    def test_unknown_creator_rejected(self):
        with pytest.raises(ValueError, match="creator"):
            WorldProgram("x", created_by="psychic")
