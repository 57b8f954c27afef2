"""Declared-parameter-block interventions.

Generated programs gather tunable constants in one PARAMS mapping at the top
of the class body; patching edits only those value spans textually (guided by
the AST, so surrounding code is untouched byte for byte). Nested mappings are
addressed with dotted paths ("mass.duck").
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Any

PARAMETER_BLOCK_NAME = "PARAMS"


class ParameterNotFoundError(KeyError):
    def __init__(self, path: str, available: list[str]):
        super().__init__(path)
        self.path = path
        self.available = available

    def __str__(self) -> str:
        listing = ", ".join(self.available) or "(none)"
        return f"parameter {self.path!r} not found; available parameters: {listing}"


@dataclass(frozen=True)
class ParameterEntry:
    path: str
    value: Any
    span: tuple[int, int]  # absolute [start, end) offsets of the value expression

    @property
    def type_name(self) -> str:
        return type(self.value).__name__


def _line_offsets(source: str) -> list[int]:
    offsets = [0]
    for line in source.splitlines(keepends=True):
        offsets.append(offsets[-1] + len(line))
    return offsets


def _abs_span(node: ast.AST, offsets: list[int]) -> tuple[int, int]:
    start = offsets[node.lineno - 1] + node.col_offset
    end = offsets[node.end_lineno - 1] + node.end_col_offset
    return start, end


def _find_params_dict(tree: ast.Module) -> ast.Dict | None:
    for node in ast.walk(tree):
        if (
            isinstance(node, ast.Assign)
            and len(node.targets) == 1
            and isinstance(node.targets[0], ast.Name)
            and node.targets[0].id == PARAMETER_BLOCK_NAME
            and isinstance(node.value, ast.Dict)
        ):
            return node.value
    return None


def _flatten(node: ast.Dict, prefix: str, offsets: list[int], out: list[ParameterEntry]) -> None:
    for key_node, value_node in zip(node.keys, node.values):
        if not isinstance(key_node, ast.Constant) or not isinstance(key_node.value, str):
            continue
        path = f"{prefix}{key_node.value}"
        if isinstance(value_node, ast.Dict):
            _flatten(value_node, f"{path}.", offsets, out)
            continue
        try:
            value = ast.literal_eval(value_node)
        except (ValueError, SyntaxError):
            value = None
        out.append(ParameterEntry(path, value, _abs_span(value_node, offsets)))


def parameter_entries(source: str) -> list[ParameterEntry]:
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise ValueError(f"cannot parse program: {exc.msg}") from exc
    params = _find_params_dict(tree)
    if params is None:
        return []
    entries: list[ParameterEntry] = []
    _flatten(params, "", _line_offsets(source), entries)
    return entries


def list_parameters(source: str) -> list[dict[str, Any]]:
    """Name / current value / type rows for UI display."""
    return [
        {"name": e.path, "value": e.value, "type": e.type_name}
        for e in parameter_entries(source)
    ]


def apply_parameter_patch(source: str, patches: dict[str, Any]) -> str:
    """Textually substitute new values for named parameter-block constants."""
    if not patches:
        raise ValueError("parameter patch is empty")
    entries = {e.path: e for e in parameter_entries(source)}
    replacements: list[tuple[tuple[int, int], str]] = []
    for path, value in patches.items():
        if path not in entries:
            raise ParameterNotFoundError(path, sorted(entries))
        replacements.append((entries[path].span, repr(value)))
    result = source
    for (start, end), text in sorted(replacements, key=lambda r: r[0][0], reverse=True):
        result = result[:start] + text + result[end:]
    return result
