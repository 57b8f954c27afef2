"""Validation and isolated execution of generated world programs.

Each execution runs in a child process with wall-clock and memory limits;
frames come back as lossless PNG files through a run-scoped temp directory,
so a crashing or resource-exhausting program never takes down the
orchestrator and partial output is inspectable after failures.
"""

from __future__ import annotations

import ast
import dataclasses
import json
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import DEFAULT_ALLOWED_LIBRARIES, ToolboxConfig
from .runtime import CONTRACT_METHODS
from .scene import SceneInput, load_frame_dir

STATUS_OK = "ok"
STATUS_RUNTIME_ERROR = "runtime_error"
STATUS_TIMEOUT = "timeout"
STATUS_OOM = "oom"
STATUS_CONTRACT_VIOLATION = "contract_violation"

ERROR_STATUSES = (STATUS_RUNTIME_ERROR, STATUS_TIMEOUT, STATUS_OOM, STATUS_CONTRACT_VIOLATION)

EXIT_CODES = {STATUS_OK: 0, STATUS_RUNTIME_ERROR: 10, STATUS_CONTRACT_VIOLATION: 12, STATUS_OOM: 13}

TIMEOUT_GRACE_S = 2.0


@dataclass(frozen=True)
class Lineage:
    generation_index: int = 0
    refine_index: int = 0
    debug_index: int = 0

    def __post_init__(self) -> None:
        if min(self.generation_index, self.refine_index, self.debug_index) < 0:
            raise ValueError("lineage indices must be >= 0")

    @property
    def label(self) -> str:
        return f"g{self.generation_index}.r{self.refine_index}.d{self.debug_index}"

    def bump_refine(self) -> "Lineage":
        return dataclasses.replace(self, refine_index=self.refine_index + 1)

    def bump_debug(self) -> "Lineage":
        return dataclasses.replace(self, debug_index=self.debug_index + 1)


@dataclass(frozen=True)
class WorldProgram:
    source: str
    lineage: Lineage = Lineage()
    created_by: str = "generator"  # {generator, refiner, debugger, human-intervention}

    def __post_init__(self) -> None:
        if self.created_by not in ("generator", "refiner", "debugger", "human-intervention"):
            raise ValueError(f"unknown creator {self.created_by!r}")


@dataclass(frozen=True)
class ExecutionBudget:
    wall_clock_s: float = 300.0
    memory_mb: int = 4096
    frame_count: int = 150
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.wall_clock_s <= 0 or self.memory_mb <= 0 or self.frame_count <= 0:
            raise ValueError("budget fields must be positive")

    @classmethod
    def for_scene(cls, scene: SceneInput, wall_clock_s: float = 300.0,
                  memory_mb: int = 4096, rng_seed: int = 0) -> "ExecutionBudget":
        return cls(wall_clock_s, memory_mb, scene.frame_count, rng_seed)


@dataclass
class ExecutionResult:
    status: str
    frames: list[np.ndarray] = field(default_factory=list, repr=False)
    traceback: str = ""
    elapsed_s: float = 0.0

    def __post_init__(self) -> None:
        if self.status == STATUS_OK:
            if not self.frames:
                raise ValueError("ok result must carry frames")
        elif self.status in ERROR_STATUSES:
            if not self.traceback:
                raise ValueError(f"{self.status} result must carry a traceback")
        else:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


@dataclass
class ContractReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_text(self) -> str:
        if self.ok:
            return "contract check passed"
        return "contract violations:\n" + "\n".join(f"- {v}" for v in self.violations)


def _class_candidates(tree: ast.Module) -> list[ast.ClassDef]:
    found = []
    for node in ast.walk(tree):
        if not isinstance(node, ast.ClassDef):
            continue
        base_names = {
            base.id if isinstance(base, ast.Name) else getattr(base, "attr", "")
            for base in node.bases
        }
        if "Simulator" in base_names or node.name == "VideoSimulation":
            found.append(node)
    return found


def validate_contract(
    source: str, allowed_libraries: tuple[str, ...] = DEFAULT_ALLOWED_LIBRARIES
) -> ContractReport:
    """Static check: contract class present with all four methods declared,
    imports restricted to the configured allow-list."""
    if not source.strip():
        return ContractReport(["source is empty"])
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        return ContractReport([f"syntax error: {exc.msg} (line {exc.lineno})"])

    violations: list[str] = []
    allowed = set(allowed_libraries)
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                top = alias.name.split(".")[0]
                if top not in allowed:
                    violations.append(f"disallowed import: {top}")
        elif isinstance(node, ast.ImportFrom):
            if node.level:
                violations.append("disallowed import: relative imports are not permitted")
                continue
            top = (node.module or "").split(".")[0]
            if top not in allowed:
                violations.append(f"disallowed import: {top}")

    candidates = _class_candidates(tree)
    if not candidates:
        violations.append("no class deriving the Simulator contract was found")
    else:
        def declared(cls: ast.ClassDef) -> set[str]:
            return {
                item.name
                for item in cls.body
                if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef))
            }

        best = max(candidates, key=lambda c: len(declared(c) & set(CONTRACT_METHODS)))
        for method in CONTRACT_METHODS:
            if method not in declared(best):
                violations.append(f"class {best.name} does not declare {method}()")
    return ContractReport(violations)


class SandboxExecutor:
    """Runs world programs against scenes under a resource budget."""

    def __init__(
        self,
        allowed_libraries: tuple[str, ...] = DEFAULT_ALLOWED_LIBRARIES,
        toolbox_config: ToolboxConfig | None = None,
        keep_dirs: bool = False,
        work_root: str | Path | None = None,
    ):
        self.allowed_libraries = tuple(allowed_libraries)
        self.toolbox_config = toolbox_config or ToolboxConfig()
        self.keep_dirs = keep_dirs
        self.work_root = Path(work_root) if work_root else None

    def execute(
        self, program: WorldProgram, scene: SceneInput, budget: ExecutionBudget
    ) -> ExecutionResult:
        report = validate_contract(program.source, self.allowed_libraries)
        if not report.ok:
            return ExecutionResult(
                status=STATUS_CONTRACT_VIOLATION, traceback=report.as_text()
            )

        if self.work_root:
            self.work_root.mkdir(parents=True, exist_ok=True)
        run_dir = Path(tempfile.mkdtemp(prefix="worldsim-exec-", dir=self.work_root))
        try:
            return self._run_child(program, scene, budget, run_dir)
        finally:
            if not self.keep_dirs:
                shutil.rmtree(run_dir, ignore_errors=True)

    def _run_child(
        self,
        program: WorldProgram,
        scene: SceneInput,
        budget: ExecutionBudget,
        run_dir: Path,
    ) -> ExecutionResult:
        (run_dir / "program.py").write_text(program.source, encoding="utf-8")
        dataclasses.replace(scene, gt_video=None).save(run_dir / "scene")
        (run_dir / "budget.json").write_text(json.dumps(dataclasses.asdict(budget)))
        child_cfg = {
            "allowed_libraries": list(self.allowed_libraries),
            "toolbox": dataclasses.asdict(self.toolbox_config),
        }
        (run_dir / "config.json").write_text(json.dumps(child_cfg))

        start = time.monotonic()
        stderr_path = run_dir / "stderr.txt"
        with open(stderr_path, "wb") as stderr:
            proc = subprocess.Popen(
                [sys.executable, "-m", "worldsim._child_main", str(run_dir)],
                stdout=subprocess.DEVNULL,
                stderr=stderr,
                cwd=run_dir,
                env=_child_env(),
            )
            try:
                proc.wait(timeout=budget.wall_clock_s + TIMEOUT_GRACE_S)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
                elapsed = time.monotonic() - start
                return ExecutionResult(
                    status=STATUS_TIMEOUT,
                    traceback=(
                        f"execution exceeded the wall-clock budget of "
                        f"{budget.wall_clock_s:.1f}s and was killed"
                    ),
                    elapsed_s=elapsed,
                )
        elapsed = time.monotonic() - start

        result_path = run_dir / "result.json"
        if not result_path.is_file():
            stderr_tail = stderr_path.read_text(errors="replace")[-4000:]
            return ExecutionResult(
                status=STATUS_RUNTIME_ERROR,
                traceback=(
                    f"child process exited with code {proc.returncode} without a "
                    f"result\n{stderr_tail}"
                ),
                elapsed_s=elapsed,
            )
        payload = json.loads(result_path.read_text(encoding="utf-8"))
        status = payload["status"]
        if status != STATUS_OK:
            return ExecutionResult(
                status=status,
                traceback=payload.get("traceback") or f"status {status}",
                elapsed_s=elapsed,
            )

        frames = load_frame_dir(run_dir / "frames")
        w, h = scene.frame_size
        if len(frames) != budget.frame_count or any(f.shape != (h, w, 3) for f in frames):
            return ExecutionResult(
                status=STATUS_CONTRACT_VIOLATION,
                traceback=(
                    f"frame contract violated: expected {budget.frame_count} frames "
                    f"of {(h, w, 3)}, got {len(frames)}"
                ),
                elapsed_s=elapsed,
            )
        return ExecutionResult(status=STATUS_OK, frames=frames, elapsed_s=elapsed)


def _child_env() -> dict[str, str]:
    import os

    env = dict(os.environ)
    env["PYTHONHASHSEED"] = "0"  # hash-order determinism inside programs
    return env
