"""The perception and geometry toolbox handed to generated world programs."""

from __future__ import annotations

import numpy as np

from .backends import (
    BackendUnavailable,
    SyntheticBackend,
    SyntheticFixture,
    ToolboxBackends,
    UnconfiguredBackend,
    backends_from_config,
    register_live_backend,
)
from .mesh import generate_surface_mesh
from .ransac import FitError, fit_3d_shape, predict_ground_plane
from .shapes2d import fit_2d_shape
from .types import (
    CameraIntrinsics,
    MeshSpec,
    PlaneFit,
    PointMap,
    PrimitiveFit,
    SegmentMask,
)
from .world import SimulationWorld, UnsupportedKindError, register_simulation_object

__all__ = [
    "BackendUnavailable",
    "CameraIntrinsics",
    "FitError",
    "MeshSpec",
    "PlaneFit",
    "PointMap",
    "PrimitiveFit",
    "SegmentMask",
    "SimulationWorld",
    "SyntheticBackend",
    "SyntheticFixture",
    "ToolboxAPI",
    "ToolboxBackends",
    "UnconfiguredBackend",
    "UnsupportedKindError",
    "backends_from_config",
    "fit_2d_shape",
    "fit_3d_shape",
    "generate_surface_mesh",
    "predict_ground_plane",
    "register_live_backend",
    "register_simulation_object",
]


class ToolboxAPI:
    """Facade exposing every toolbox operation; instances are passed to
    generated programs as the ``api`` constructor argument."""

    def __init__(self, backends: ToolboxBackends | None = None, ransac_seed: int = 0):
        if backends is None:
            backends = ToolboxBackends(
                segmentation=UnconfiguredBackend("segment", "none"),
                geometry=UnconfiguredBackend("pts3d", "none"),
            )
        self._backends = backends
        self._seed = ransac_seed

    # -- perception (backend-pluggable) ------------------------------------
    def segment(self, image: np.ndarray, object_queries: list[str]) -> list[SegmentMask]:
        if not object_queries:
            raise ValueError("segment requires at least one query")
        return self._backends.segmentation.segment(image, list(object_queries))

    def pts3d(self, image: np.ndarray) -> PointMap:
        return self._backends.geometry.pts3d(image)

    def intrinsics(self, image: np.ndarray) -> CameraIntrinsics:
        return self._backends.geometry.intrinsics(image)

    # -- geometry (native) ---------------------------------------------------
    def predict_ground_plane(
        self, points, iterations: int = 500, inlier_threshold: float = 0.01
    ) -> PlaneFit:
        return predict_ground_plane(
            points, iterations=iterations, inlier_threshold=inlier_threshold, seed=self._seed
        )

    def fit_3d_shape(
        self, point_cloud, shape_class: str, iterations: int = 500, inlier_threshold: float = 0.01
    ) -> PrimitiveFit:
        return fit_3d_shape(
            point_cloud,
            shape_class,
            iterations=iterations,
            inlier_threshold=inlier_threshold,
            seed=self._seed,
        )

    def fit_2d_shape(self, mask, shape_class: str) -> PrimitiveFit:
        return fit_2d_shape(mask, shape_class)

    def generate_surface_mesh(self, vertices, indices, mass: float = 0.0) -> MeshSpec:
        return generate_surface_mesh(vertices, indices, mass)

    # -- simulation interface -------------------------------------------------
    def create_world(self, gravity=(0.0, -9.81, 0.0), dimensions: int = 3) -> SimulationWorld:
        return SimulationWorld(gravity=tuple(gravity), dimensions=dimensions)

    def register_simulation_object(self, world: SimulationWorld, obj, kind: str) -> int:
        return register_simulation_object(world, obj, kind)
