"""Shared fixtures: tiny scenes, canned programs, and scripted VLM stories."""

from __future__ import annotations

import numpy as np
import pytest

from worldsim.config import PipelineConfig
from worldsim.scene import SceneInput

# A compact ball simulation used to build generate/debug/refine stories.
# gravity > 0 falls (image y grows downward); fit_extra injects bugs.
BALL_TEMPLATE = """\
import numpy as np


class VideoSimulation(Simulator):
    PARAMS = {{"gravity": {gravity}, "radius": 4, "start": [0.5, 0.4]}}

    def __init__(self, frame_size=(64, 48), api=None, fps=30):
        super().__init__(frame_size=frame_size, api=api, fps=fps)
        self.x = self.y = self.vy = 0.0

    def fit(self, image, text):
        {fit_extra}
        w, h = self.frame_size
        self.x = self.PARAMS["start"][0] * w
        self.y = self.PARAMS["start"][1] * h
        self.vy = 0.0

    def update_simulation(self, dt):
        w, h = self.frame_size
        r = self.PARAMS["radius"]
        self.vy += self.PARAMS["gravity"] * dt
        self.y = min(max(self.y + self.vy * dt, r), h - r)

    def render_frame(self):
        w, h = self.frame_size
        frame = np.zeros((h, w, 3), dtype=np.uint8)
        yy, xx = np.ogrid[:h, :w]
        mask = (xx - self.x) ** 2 + (yy - self.y) ** 2 <= self.PARAMS["radius"] ** 2
        frame[mask] = 255
        return frame
"""


def ball_program(gravity: float = 60.0, fit_extra: str = "pass") -> str:
    return BALL_TEMPLATE.format(gravity=gravity, fit_extra=fit_extra)


BROKEN_BALL = ball_program(fit_extra='self.api.segmnt(image, ["ball"])')
RISING_BALL = ball_program(gravity=-60.0)
FALLING_BALL = ball_program(gravity=60.0)

GRAY_PROGRAM = """\
import numpy as np


class VideoSimulation(Simulator):
    PARAMS = {"level": 128}

    def __init__(self, frame_size=(1024, 576), api=None, fps=30):
        super().__init__(frame_size=frame_size, api=api, fps=fps)

    def fit(self, image, text):
        pass

    def update_simulation(self, dt):
        pass

    def render_frame(self):
        w, h = self.frame_size
        return np.full((h, w, 3), self.PARAMS["level"], dtype=np.uint8)
"""


def fenced(source: str, prose: str = "Here is the program.") -> str:
    return f"{prose}\n\n```python\n{source}```\n"


def critique_json(accurate: bool, suggestions: list[str] | None = None) -> str:
    import json

    return json.dumps({"accurate": accurate, "suggestions": suggestions or []})


@pytest.fixture
def small_scene() -> SceneInput:
    rng = np.random.default_rng(7)
    image = rng.integers(0, 255, size=(48, 64, 3), dtype=np.uint8)
    return SceneInput(
        image=image,
        caption="a ball drops onto the floor",
        frame_size=(64, 48),
        fps=10.0,
        duration_s=1.0,
    )


@pytest.fixture
def fast_config(tmp_path) -> PipelineConfig:
    cfg = PipelineConfig()
    cfg.store_dir = str(tmp_path / "runs")
    cfg.model.transcript_dir = str(tmp_path / "transcripts")
    cfg.budgets.wall_clock_s = 60.0
    cfg.budgets.memory_mb = 2048
    return cfg


def frames_of(sequence) -> list[np.ndarray]:
    """Promote (T, H, W) gray stacks to uint8 RGB frame lists."""
    out = []
    for frame in sequence:
        arr = np.asarray(frame)
        if arr.ndim == 2:
            arr = np.stack([arr] * 3, axis=-1)
        out.append(arr.astype(np.uint8))
    return out


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if getattr(report, "when", "call") != "call" and status != "error":
                continue
            rows.append((nodeid.split("::")[-1], status == "passed"))
    if not rows:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed in sorted(rows):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}")
