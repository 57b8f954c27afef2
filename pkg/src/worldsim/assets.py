"""Bundled reference world programs (loaded as source text, not imported)."""

from __future__ import annotations

from importlib import resources


def reference_program(name: str) -> str:
    ref = resources.files("worldsim") / "reference_programs" / f"{name}.py"
    if not ref.is_file():
        raise FileNotFoundError(f"no reference program named {name!r}")
    return ref.read_text(encoding="utf-8")
