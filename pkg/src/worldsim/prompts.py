"""Prompt assembly and VLM response parsing.

Templates are versioned text assets loaded at runtime (packaged defaults under
``worldsim/templates/``, overridable with any directory holding the same file
names). The caption placeholder literal is ``[CAPTION]``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .config import AblationFlags
from .scene import SceneInput

CAPTION_PLACEHOLDER = "[CAPTION]"
LIBRARIES_PLACEHOLDER = "[LIBRARIES]"

TEMPLATE_NAMES = ("task", "environment", "tools", "critic", "refiner", "debugger")

CONTRACT_METHODS = ("__init__", "fit", "update_simulation", "render_frame")

# Operations every ToolSpec document must describe exactly once.
TOOLBOX_EXPORTS = (
    "segment",
    "pts3d",
    "intrinsics",
    "predict_ground_plane",
    "fit_3d_shape",
    "fit_2d_shape",
    "generate_surface_mesh",
    "register_simulation_object",
)


class PromptError(ValueError):
    """Base for prompt assembly and parsing failures."""


class TemplateMissingError(PromptError):
    pass


class ProgramExtractionError(PromptError):
    pass


class MalformedCritiqueError(PromptError):
    pass


@dataclass(frozen=True)
class PromptPart:
    """One message part: text or an image attachment, never both."""

    role: str
    text: str | None = None
    image: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.text is None) == (self.image is None):
            raise ValueError("a prompt part holds exactly one of text/image")

    @property
    def kind(self) -> str:
        return "text" if self.text is not None else "image"


@dataclass(frozen=True)
class PromptBundle:
    parts: tuple[PromptPart, ...]
    purpose: str  # {generate, critic, refine, debug}

    def __post_init__(self) -> None:
        if self.purpose not in ("generate", "critic", "refine", "debug"):
            raise ValueError(f"unknown bundle purpose {self.purpose!r}")
        if not any(p.kind == "text" for p in self.parts):
            raise ValueError("a prompt bundle needs at least one text part")

    @property
    def text(self) -> str:
        return "\n\n".join(p.text for p in self.parts if p.text is not None)

    @property
    def images(self) -> list[np.ndarray]:
        return [p.image for p in self.parts if p.image is not None]


@dataclass(frozen=True)
class Critique:
    accurate: bool
    suggestions: tuple[str, ...] = ()


@dataclass(frozen=True)
class EnvironmentSpec:
    """The Simulator base contract plus the import allow-list shown to the VLM."""

    base_contract_source: str
    allowed_libraries: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for method in CONTRACT_METHODS:
            if method not in self.base_contract_source:
                raise ValueError(f"environment contract does not name {method}()")

    def render(self) -> str:
        libs = ", ".join(self.allowed_libraries)
        return self.base_contract_source.replace(LIBRARIES_PLACEHOLDER, libs)


@dataclass(frozen=True)
class ToolSpec:
    api_doc_source: str

    def __post_init__(self) -> None:
        for name in TOOLBOX_EXPORTS:
            count = self.api_doc_source.count(f"def {name}(")
            if count != 1:
                raise ValueError(
                    f"tool spec must document {name} exactly once, found {count}"
                )


@dataclass(frozen=True)
class PromptLibrary:
    templates: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "PromptLibrary":
        templates: dict[str, str] = {}
        if directory is None:
            root = resources.files("worldsim") / "templates"
            for name in TEMPLATE_NAMES:
                ref = root / f"{name}.txt"
                if not ref.is_file():
                    raise TemplateMissingError(f"missing template: {name}.txt")
                templates[name] = ref.read_text(encoding="utf-8")
        else:
            directory = Path(directory)
            for name in TEMPLATE_NAMES:
                path = directory / f"{name}.txt"
                if not path.is_file():
                    raise TemplateMissingError(f"missing template: {path}")
                templates[name] = path.read_text(encoding="utf-8")
        return cls(templates)

    def get(self, name: str) -> str:
        try:
            return self.templates[name]
        except KeyError:
            raise TemplateMissingError(f"missing template: {name}") from None

    def environment_spec(self, allowed_libraries: tuple[str, ...]) -> EnvironmentSpec:
        return EnvironmentSpec(self.get("environment"), tuple(allowed_libraries))

    def tool_spec(self) -> ToolSpec:
        return ToolSpec(self.get("tools"))


def _fill_caption(template: str, caption: str | None) -> str:
    """Substitute the caption, or drop every line carrying the placeholder."""
    if caption:
        return template.replace(CAPTION_PLACEHOLDER, caption)
    lines = [ln for ln in template.splitlines() if CAPTION_PLACEHOLDER not in ln]
    return "\n".join(lines) + ("\n" if template.endswith("\n") else "")


def _fence_for(*texts: str) -> str:
    """A backtick fence strictly longer than any backtick run in the texts."""
    longest = 2
    for text in texts:
        for run in re.findall(r"`+", text):
            longest = max(longest, len(run))
    return "`" * (longest + 1)


def wrap_in_fence(source: str, *context: str) -> str:
    """Wrap source in a python code fence that cannot collide with its content."""
    fence = _fence_for(source, *context)
    body = source if source.endswith("\n") else source + "\n"
    return f"{fence}python\n{body}{fence}"


def assemble_generation_prompt(
    scene: SceneInput,
    env: EnvironmentSpec,
    tools: ToolSpec,
    ablation: AblationFlags = AblationFlags(),
    library: PromptLibrary | None = None,
) -> PromptBundle:
    """Task text (caption embedded), environment spec, tool spec, input image."""
    library = library or PromptLibrary.load()
    scene.require_caption(allow_empty=ablation.no_caption)
    caption = None if ablation.no_caption else scene.caption
    parts = [PromptPart("user", text=_fill_caption(library.get("task"), caption))]
    parts.append(PromptPart("user", text=env.render()))
    if not ablation.no_api:
        parts.append(PromptPart("user", text=tools.api_doc_source))
    if not ablation.no_image:
        parts.append(PromptPart("user", image=scene.image))
    return PromptBundle(tuple(parts), purpose="generate")


def assemble_critic_prompt(
    first_frame: np.ndarray,
    st_map: np.ndarray,
    caption: str | None,
    library: PromptLibrary | None = None,
) -> PromptBundle:
    """Critic instruction plus exactly two images: first frame, then motion map."""
    if first_frame.shape[:2] != st_map.shape[:2]:
        raise ValueError(
            f"first frame {first_frame.shape[:2]} and spatiotemporal map "
            f"{st_map.shape[:2]} must share dimensions"
        )
    library = library or PromptLibrary.load()
    text = _fill_caption(library.get("critic"), caption)
    parts = (
        PromptPart("user", text=text),
        PromptPart("user", image=first_frame),
        PromptPart("user", image=st_map),
    )
    return PromptBundle(parts, purpose="critic")


def assemble_refiner_prompt(
    program_source: str,
    suggestions: list[str] | tuple[str, ...],
    library: PromptLibrary | None = None,
) -> PromptBundle:
    """Flawed source verbatim plus the critic's suggestions as a numbered list."""
    if not suggestions:
        raise PromptError("refinement requires at least one critic suggestion")
    library = library or PromptLibrary.load()
    source_block = wrap_in_fence(program_source, *suggestions)
    numbered = "\n".join(f"{i}. {s}" for i, s in enumerate(suggestions, start=1))
    parts = (
        PromptPart("user", text=library.get("refiner")),
        PromptPart("user", text=f"# FLAWED SOURCE:\n{source_block}"),
        PromptPart("user", text=f"# CRITIC SUGGESTIONS:\n{numbered}"),
    )
    return PromptBundle(parts, purpose="refine")


def assemble_debugger_prompt(
    program_source: str,
    traceback_text: str,
    env: EnvironmentSpec,
    tools: ToolSpec,
    library: PromptLibrary | None = None,
    tail_lines: int = 80,
) -> PromptBundle:
    """Flawed source, traceback tail, environment and tool specs, in that order."""
    if not traceback_text.strip():
        raise PromptError("debugger requires a non-empty traceback")
    library = library or PromptLibrary.load()
    tb_lines = traceback_text.splitlines()
    if len(tb_lines) > tail_lines:
        omitted = len(tb_lines) - tail_lines
        tb_lines = [f"... ({omitted} earlier lines omitted)"] + tb_lines[-tail_lines:]
    traceback_tail = "\n".join(tb_lines)
    parts = (
        PromptPart("user", text=library.get("debugger")),
        PromptPart("user", text=f"# FLAWED SOURCE:\n{wrap_in_fence(program_source)}"),
        PromptPart("user", text=f"# TRACEBACK:\n{traceback_tail}"),
        PromptPart("user", text=env.render()),
        PromptPart("user", text=tools.api_doc_source),
    )
    return PromptBundle(parts, purpose="debug")


_FENCE_RE = re.compile(r"^(`{3,})[^`\n]*\n(.*?)^\1`*[ \t]*$", re.MULTILINE | re.DOTALL)

_CLASS_RE = re.compile(
    r"class\s+\w+\s*\(\s*[^)]*Simulator[^)]*\)|class\s+VideoSimulation\b"
)


def _fenced_blocks(text: str) -> list[str]:
    return [m.group(2) for m in _FENCE_RE.finditer(text)]


def extract_program(response_text: str) -> str:
    """Pull the world-program source out of a VLM response.

    Among all fenced code blocks, returns the largest one that defines a class
    deriving the Simulator contract.
    """
    if not response_text:
        raise ProgramExtractionError("no program found: empty response")
    blocks = _fenced_blocks(response_text)
    if not blocks:
        raise ProgramExtractionError("no program found: response has no fenced code block")
    candidates = [b for b in blocks if _CLASS_RE.search(b)]
    if not candidates:
        raise ProgramExtractionError(
            "no program found: no code block defines a Simulator subclass"
        )
    best = max(candidates, key=len)
    return best.rstrip("\n") + "\n"


def extract_critique(response_text: str) -> Critique:
    """Parse the first well-formed JSON object in the response into a Critique.

    Tolerates surrounding prose and code fencing.
    """
    if not response_text:
        raise MalformedCritiqueError("malformed critique: empty response")
    decoder = json.JSONDecoder()
    obj = None
    for start in re.finditer(r"\{", response_text):
        try:
            obj, _ = decoder.raw_decode(response_text, start.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            break
        obj = None
    if obj is None:
        raise MalformedCritiqueError("malformed critique: no parseable JSON object")
    if not isinstance(obj.get("accurate"), bool):
        raise MalformedCritiqueError("malformed critique: missing boolean 'accurate'")
    raw = obj.get("suggestions", [])
    if not isinstance(raw, list):
        raise MalformedCritiqueError("malformed critique: 'suggestions' must be a list")
    suggestions = tuple(str(s).strip() for s in raw if str(s).strip())
    return Critique(accurate=obj["accurate"], suggestions=suggestions)
