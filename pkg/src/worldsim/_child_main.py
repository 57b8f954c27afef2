"""Child-process entry point for sandboxed world-program execution.

Protocol: the parent writes program.py, scene/, budget.json, and config.json
into a run directory; this process renders frames/%05d.png and a result.json
whose status is also encoded in the exit code.
"""

from __future__ import annotations

import builtins
import json
import random
import sys
import traceback
from pathlib import Path

# Snapshot before the harness pulls in numpy/PIL/etc: only interpreter
# bootstrap modules are implicitly importable by programs.
_PRELOADED_AT_BOOT = frozenset(sys.modules)

PROGRAM_MODULE_NAME = "world_program"

import numpy as np
from PIL import Image

from .runtime import Simulator
from .sandbox import (
    EXIT_CODES,
    STATUS_CONTRACT_VIOLATION,
    STATUS_OK,
    STATUS_OOM,
    STATUS_RUNTIME_ERROR,
)


def _install_import_guard(allowed: set[str]) -> None:
    """Block program-level imports outside the allow-list.

    The check keys on the importing module: only imports issued from program
    code (module name "world_program", or exec'd code without one) are
    checked against the allow-list. Installed libraries and the stdlib
    import freely on their own behalf, since they perform lazy internal
    imports at call time (numpy pulls in ast inside np.load, cv2 pulls in
    platform while bootstrapping). The static allow-list check in
    validate_contract is the primary gate.
    """
    preloaded = _PRELOADED_AT_BOOT
    real_import = builtins.__import__

    def guarded(name, globals=None, locals=None, fromlist=(), level=0):
        importer = (globals or {}).get("__name__") or ""
        if importer and importer.split(".")[0] != PROGRAM_MODULE_NAME:
            return real_import(name, globals, locals, fromlist, level)
        top = name.split(".")[0]
        if level == 0 and top not in allowed and top not in preloaded:
            raise ImportError(f"disallowed import: {top}")
        return real_import(name, globals, locals, fromlist, level)

    builtins.__import__ = guarded


def _set_memory_limit(memory_mb: int) -> None:
    try:
        import resource

        limit = memory_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    except (ImportError, ValueError, OSError):
        pass  # platform without rlimits; the parent still enforces wall clock


def _find_simulator_class(namespace: dict):
    named = namespace.get("VideoSimulation")
    if isinstance(named, type):
        return named
    subclasses = [
        value
        for value in namespace.values()
        if isinstance(value, type) and issubclass(value, Simulator) and value is not Simulator
    ]
    if subclasses:
        return subclasses[-1]
    return None


class _LazyToolboxAPI:
    """Defers the heavy perception imports until a program actually uses the api."""

    def __init__(self, config: dict):
        self._config = config
        self._api = None

    def __getattr__(self, name: str):
        if self._api is None:
            from .config import ToolboxConfig
            from .toolbox import ToolboxAPI, backends_from_config

            tb = self._config.get("toolbox") or {}
            cfg = ToolboxConfig(
                **{k: tuple(v) if isinstance(v, list) else v for k, v in tb.items()}
            )
            self._api = ToolboxAPI(backends_from_config(cfg), ransac_seed=cfg.ransac_seed)
        return getattr(self._api, name)


def _build_api(config: dict):
    return _LazyToolboxAPI(config)


def _write_result(run_dir: Path, status: str, traceback_text: str = "") -> int:
    payload = {"status": status, "traceback": traceback_text}
    (run_dir / "result.json").write_text(json.dumps(payload), encoding="utf-8")
    return EXIT_CODES.get(status, 1)


def main(argv: list[str]) -> int:
    run_dir = Path(argv[1])
    budget = json.loads((run_dir / "budget.json").read_text(encoding="utf-8"))
    config = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))

    from .scene import SceneInput

    scene = SceneInput.load(run_dir / "scene")
    source = (run_dir / "program.py").read_text(encoding="utf-8")
    frame_dir = run_dir / "frames"
    frame_dir.mkdir(exist_ok=True)

    api = _build_api(config)

    seed = int(budget["rng_seed"])
    random.seed(seed)
    np.random.seed(seed % 2**32)

    _set_memory_limit(int(budget["memory_mb"]))
    _install_import_guard(set(config.get("allowed_libraries", [])))

    w, h = scene.frame_size
    try:
        namespace = {"Simulator": Simulator, "__name__": PROGRAM_MODULE_NAME}
        # compiling against the on-disk copy lets tracebacks show source lines
        exec(compile(source, str(run_dir / "program.py"), "exec"), namespace)
        cls = _find_simulator_class(namespace)
        if cls is None:
            return _write_result(
                run_dir, STATUS_CONTRACT_VIOLATION, "no Simulator subclass defined"
            )
        sim = cls(frame_size=(w, h), api=api, fps=scene.fps)
        sim.fit(scene.image, scene.caption)
        dt = 1.0 / scene.fps
        for index in range(int(budget["frame_count"])):
            sim.update_simulation(dt)
            frame = sim.render_frame()
            frame = np.asarray(frame)
            if frame.shape != (h, w, 3) or frame.dtype != np.uint8:
                return _write_result(
                    run_dir,
                    STATUS_CONTRACT_VIOLATION,
                    f"render_frame returned shape {frame.shape} dtype {frame.dtype}, "
                    f"expected {(h, w, 3)} uint8",
                )
            Image.fromarray(frame).save(frame_dir / f"{index:05d}.png")
    except MemoryError:
        return _write_result(run_dir, STATUS_OOM, "memory budget exhausted (MemoryError)")
    except BaseException:
        # normalize the ephemeral run path so tracebacks are reproducible
        text = traceback.format_exc().replace(str(run_dir), "<sandbox>")
        return _write_result(run_dir, STATUS_RUNTIME_ERROR, text)
    return _write_result(run_dir, STATUS_OK)


if __name__ == "__main__":
    sys.exit(main(sys.argv))
