"""A small built-in physics runtime for registered simulation objects.

Generated programs are free to use their own simulation libraries; this world
exists so the registration API has a concrete default runtime whose behavior
(point-mass gravity integration) is deterministic and testable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .types import MeshSpec, PrimitiveFit


class UnsupportedKindError(RuntimeError):
    pass


@dataclass
class WorldBody:
    object_id: int
    kind: str
    position: np.ndarray
    velocity: np.ndarray
    mass: float
    payload: Any


@dataclass
class SimulationWorld:
    """Minimal rigid/soft/particle container with gravity stepping.

    ``dimensions`` = 2 restricts the world to rigid bodies and particles;
    soft bodies require a 3D world.
    """

    gravity: tuple[float, ...] = (0.0, -9.81, 0.0)
    dimensions: int = 3
    bodies: dict[int, WorldBody] = field(default_factory=dict)
    _ids: "itertools.count[int]" = field(default_factory=itertools.count)

    @property
    def supported_kinds(self) -> tuple[str, ...]:
        if self.dimensions == 2:
            return ("rigid", "particles")
        return ("rigid", "soft", "particles")

    def add(self, obj: Any, kind: str) -> int:
        if kind not in self.supported_kinds:
            raise UnsupportedKindError(
                f"unsupported kind {kind!r} for a {self.dimensions}D world "
                f"(supported: {', '.join(self.supported_kinds)})"
            )
        position, mass = _initial_state(obj)
        object_id = next(self._ids)
        self.bodies[object_id] = WorldBody(
            object_id=object_id,
            kind=kind,
            position=position,
            velocity=np.zeros_like(position),
            mass=mass,
            payload=obj,
        )
        return object_id

    def step(self, dt: float) -> None:
        g = np.asarray(self.gravity, dtype=np.float64)[: self.dimensions + (3 - self.dimensions)]
        for body in self.bodies.values():
            if body.mass <= 0:  # static
                continue
            body.velocity = body.velocity + g[: len(body.velocity)] * dt
            body.position = body.position + body.velocity * dt


def _initial_state(obj: Any) -> tuple[np.ndarray, float]:
    if isinstance(obj, MeshSpec):
        position = obj.vertices.mean(axis=0) if len(obj.vertices) else np.zeros(3)
        return position, obj.mass
    if isinstance(obj, PrimitiveFit):
        params = obj.parameters
        for key in ("center", "axis_point"):
            if key in params:
                return np.asarray(params[key], dtype=np.float64), 1.0
        return np.zeros(3), 1.0
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] in (2, 3):  # particle set
        return arr.mean(axis=0), 1.0
    raise ValueError(f"cannot register object of type {type(obj).__name__}")


def register_simulation_object(world: SimulationWorld, obj: Any, kind: str) -> int:
    """Instantiate an object in the physics runtime; ids are stable per run."""
    if not isinstance(world, SimulationWorld):
        raise ValueError("world must be a SimulationWorld handle")
    return world.add(obj, kind)
