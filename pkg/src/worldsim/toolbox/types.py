"""Value types produced by the perception toolbox."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

UNIT_TOL = 1e-9


@dataclass
class SegmentMask:
    query: str
    mask: np.ndarray  # H x W bool
    bbox: tuple[int, int, int, int]  # (x0, y0, x1, y1), exclusive upper bounds
    confidence: float

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=bool)
        x0, y0, x1, y1 = self.bbox
        h, w = mask.shape
        if not (0 <= x0 <= x1 <= w and 0 <= y0 <= y1 <= h):
            raise ValueError(f"bbox {self.bbox} outside {w}x{h} image bounds")
        outside = mask.copy()
        outside[y0:y1, x0:x1] = False
        if outside.any():
            raise ValueError("mask has set pixels outside its bbox")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")
        self.mask = mask


@dataclass
class PointMap:
    points: np.ndarray  # H x W x 3 float
    valid: np.ndarray  # H x W bool

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.points.shape[:2] != self.valid.shape or self.points.shape[2] != 3:
            raise ValueError("points must be HxWx3 with an HxW validity mask")
        if not np.isfinite(self.points[self.valid]).all():
            raise ValueError("valid point-map entries must be finite")

    def valid_points(self) -> np.ndarray:
        """N x 3 array of the valid entries."""
        return self.points[self.valid]


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


@dataclass
class PlaneFit:
    """Plane n.x = d with canonicalized unit normal."""

    normal: np.ndarray
    offset: float
    inliers: np.ndarray  # int indices into the input cloud
    inlier_ratio: float
    rms_residual: float = 0.0

    def __post_init__(self) -> None:
        self.normal = np.asarray(self.normal, dtype=np.float64)
        if abs(np.linalg.norm(self.normal) - 1.0) > UNIT_TOL:
            raise ValueError("plane normal must be unit length")
        self.inliers = np.asarray(self.inliers, dtype=np.int64)


@dataclass
class PrimitiveFit:
    """A fitted primitive; `parameters` layout depends on shape_class.

    sphere:   center (3,), radius
    cuboid:   center (3,), half_extents (3,), rotation (3x3, rows = box axes)
    cylinder: axis_point (3,), axis_direction (3,), radius, height
    disk:     center (2,), radius            (pixel coordinates)
    polygon:  vertices (N x 2)               (pixel coordinates)
    """

    shape_class: str
    parameters: dict[str, Any]
    inliers: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    rms_residual: float = 0.0

    def __post_init__(self) -> None:
        if self.rms_residual < 0:
            raise ValueError("rms_residual must be >= 0")
        radius = self.parameters.get("radius")
        if radius is not None and radius <= 0 and self.shape_class != "disk":
            raise ValueError(f"{self.shape_class} radius must be positive")
        half = self.parameters.get("half_extents")
        if half is not None and not (np.asarray(half) > 0).all():
            raise ValueError("cuboid half extents must be positive")
        self.inliers = np.asarray(self.inliers, dtype=np.int64)


@dataclass
class MeshSpec:
    vertices: np.ndarray  # N x 3 float
    indices: np.ndarray  # M x 3 int triangle list
    mass: float = 0.0  # 0 marks a static body
    dropped_triangles: int = 0

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1, 3)
        if self.mass < 0:
            raise ValueError("mass must be >= 0")
        n = len(self.vertices)
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError(
                f"triangle indices must lie in [0, {n}); got "
                f"[{self.indices.min()}, {self.indices.max()}]"
            )


def triangle_areas(vertices: np.ndarray, indices: np.ndarray) -> np.ndarray:
    a = vertices[indices[:, 0]]
    b = vertices[indices[:, 1]]
    c = vertices[indices[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
