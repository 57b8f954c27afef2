"""Surface mesh validation."""

from __future__ import annotations

import logging

import numpy as np

from .types import MeshSpec, triangle_areas

log = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-12


def generate_surface_mesh(vertices, indices, mass: float = 0.0) -> MeshSpec:
    """Validate a triangle mesh, dropping degenerate (zero-area) triangles.

    Raises on out-of-range indices; the number of dropped triangles is
    reported on the returned spec.
    """
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    indices = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
    if len(indices) and (indices.min() < 0 or indices.max() >= len(vertices)):
        raise ValueError(
            f"triangle index out of range: mesh has {len(vertices)} vertices, "
            f"indices span [{indices.min()}, {indices.max()}]"
        )
    areas = triangle_areas(vertices, indices) if len(indices) else np.zeros(0)
    keep = areas > DEGENERATE_AREA
    dropped = int((~keep).sum())
    if dropped:
        log.warning("dropped %d degenerate triangles", dropped)
    return MeshSpec(
        vertices=vertices,
        indices=indices[keep],
        mass=mass,
        dropped_triangles=dropped,
    )
