"""Robust plane and 3D-primitive fitting.

All fits are RANSAC over class-specific minimal solvers followed by a
least-squares refinement on the consensus set, so complete shape parameters
are recovered even from partial coverage (a hemisphere still yields a full
sphere). Fits are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .types import PlaneFit, PrimitiveFit


class FitError(RuntimeError):
    """No acceptable model found (degenerate input or consensus too small)."""


DEFAULT_MIN_INLIER_RATIO = 0.2

_EPS = 1e-12


def _as_cloud(points, min_points: int, what: str) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < min_points:
        raise ValueError(f"{what} needs at least {min_points} points, got {len(pts)}")
    return pts


def _canonical_sign(vector: np.ndarray, up_axis: np.ndarray) -> float:
    """Sign making the component along up_axis (ties: +y, +x, +z) non-negative."""
    for value in (float(vector @ up_axis), vector[1], vector[0], vector[2]):
        if abs(value) > 1e-9:
            return 1.0 if value > 0 else -1.0
    return 1.0


def _plane_residuals(pts: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    return np.abs(pts @ normal - offset)


def _lsq_plane(pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Orthogonal least-squares plane through a point set."""
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    normal = vt[-1]
    return normal, float(normal @ centroid)


def predict_ground_plane(
    points,
    iterations: int = 500,
    inlier_threshold: float = 0.01,
    seed: int = 0,
    up_axis=(0.0, 1.0, 0.0),
) -> PlaneFit:
    """RANSAC plane fit with least-squares refinement on the consensus set.

    The returned normal is unit length, oriented so its component along
    ``up_axis`` is non-negative (ties broken toward +y, then +x, +z).
    """
    pts = _as_cloud(points, 3, "plane fit")
    up = np.asarray(up_axis, dtype=np.float64)
    n = len(pts)

    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9) < 2:
        raise ValueError("all points are collinear; plane is underdetermined")

    rng = np.random.default_rng(seed)
    best_count = -1
    best_model: tuple[np.ndarray, float] | None = None
    if n == 3:
        normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        normal = normal / np.linalg.norm(normal)
        best_model = (normal, float(normal @ pts[0]))
    else:
        for _ in range(iterations):
            idx = rng.choice(n, size=3, replace=False)
            a, b, c = pts[idx]
            normal = np.cross(b - a, c - a)
            norm = np.linalg.norm(normal)
            if norm < _EPS:
                continue
            normal = normal / norm
            offset = float(normal @ a)
            count = int((_plane_residuals(pts, normal, offset) <= inlier_threshold).sum())
            if count > best_count:
                best_count = count
                best_model = (normal, offset)
    if best_model is None:
        raise FitError("plane fit found no non-degenerate sample")

    normal, offset = best_model
    inliers = np.flatnonzero(_plane_residuals(pts, normal, offset) <= inlier_threshold)
    if len(inliers) >= 3:
        normal, offset = _lsq_plane(pts[inliers])
        inliers = np.flatnonzero(_plane_residuals(pts, normal, offset) <= inlier_threshold)

    sign = _canonical_sign(normal, up)
    normal = normal * sign
    offset = offset * sign
    residuals = _plane_residuals(pts[inliers], normal, offset)
    rms = float(np.sqrt(np.mean(residuals**2))) if len(inliers) else 0.0
    return PlaneFit(
        normal=normal,
        offset=float(offset),
        inliers=inliers,
        inlier_ratio=len(inliers) / n,
        rms_residual=rms,
    )


# ---------------------------------------------------------------------------
# Sphere


def _sphere_from_four(p: np.ndarray) -> tuple[np.ndarray, float] | None:
    a = 2.0 * (p[1:] - p[0])
    b = (p[1:] ** 2).sum(axis=1) - (p[0] ** 2).sum()
    det = np.linalg.det(a)
    if abs(det) < _EPS:
        return None
    center = np.linalg.solve(a, b)
    radius = float(np.linalg.norm(p[0] - center))
    if radius < _EPS:
        return None
    return center, radius


def _sphere_lsq(pts: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Algebraic least-squares sphere (exact for noise-free samples)."""
    a = np.column_stack([2.0 * pts, np.ones(len(pts))])
    b = (pts**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    center = sol[:3]
    r2 = sol[3] + center @ center
    if r2 <= 0:
        return None
    return center, float(np.sqrt(r2))


def _sphere_residuals(pts, center, radius) -> np.ndarray:
    return np.abs(np.linalg.norm(pts - center, axis=1) - radius)


# ---------------------------------------------------------------------------
# Cylinder


def _estimate_normals(pts: np.ndarray, k: int = 10) -> np.ndarray:
    """Per-point surface normals from local PCA over k nearest neighbors."""
    k = min(k, len(pts) - 1)
    tree = cKDTree(pts)
    _, nbrs = tree.query(pts, k=k + 1)
    normals = np.empty_like(pts)
    for i, idx in enumerate(nbrs):
        local = pts[idx] - pts[idx].mean(axis=0)
        _, _, vt = np.linalg.svd(local, full_matrices=False)
        normals[i] = vt[-1]
    return normals


def _axis_from_normals(normals: np.ndarray) -> np.ndarray:
    """Direction most orthogonal to all surface normals."""
    cov = normals.T @ normals
    eigvals, eigvecs = np.linalg.eigh(cov)
    return eigvecs[:, np.argmin(eigvals)]


def _plane_basis(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0])
    if abs(direction @ helper) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(direction, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(direction, e1)
    return e1, e2


def _circle_lsq_2d(xy: np.ndarray) -> tuple[np.ndarray, float] | None:
    a = np.column_stack([2.0 * xy, np.ones(len(xy))])
    b = (xy**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    center = sol[:2]
    r2 = sol[2] + center @ center
    if r2 <= 0:
        return None
    return center, float(np.sqrt(r2))


def _cylinder_residuals(pts, axis_point, direction, radius) -> np.ndarray:
    q = pts - axis_point
    along = q @ direction
    radial = q - np.outer(along, direction)
    return np.abs(np.linalg.norm(radial, axis=1) - radius)


def _cylinder_model(pts: np.ndarray, normals: np.ndarray):
    direction = _axis_from_normals(normals)
    e1, e2 = _plane_basis(direction)
    xy = np.column_stack([pts @ e1, pts @ e2])
    circle = _circle_lsq_2d(xy)
    if circle is None:
        return None
    center2d, radius = circle
    axis_point = center2d[0] * e1 + center2d[1] * e2
    return axis_point, direction, radius


# ---------------------------------------------------------------------------
# Cuboid


def _box_surface_distance(q: np.ndarray, center: np.ndarray, half: np.ndarray) -> np.ndarray:
    """|signed distance| to an axis-aligned box surface, in the box frame."""
    d = np.abs(q - center) - half
    outside = np.linalg.norm(np.maximum(d, 0.0), axis=1)
    inside = np.minimum(d.max(axis=1), 0.0)
    return np.abs(outside + inside)


def _cuboid_extents(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = q.min(axis=0)
    hi = q.max(axis=0)
    return (lo + hi) / 2.0, (hi - lo) / 2.0


def fit_3d_shape(
    points,
    shape_class: str,
    iterations: int = 500,
    inlier_threshold: float = 0.01,
    seed: int = 0,
    min_inlier_ratio: float = DEFAULT_MIN_INLIER_RATIO,
) -> PrimitiveFit:
    """RANSAC fit of a sphere, cylinder, or cuboid to a 3D point cloud."""
    if shape_class == "sphere":
        return _fit_sphere(points, iterations, inlier_threshold, seed, min_inlier_ratio)
    if shape_class == "cylinder":
        return _fit_cylinder(points, iterations, inlier_threshold, seed, min_inlier_ratio)
    if shape_class == "cuboid":
        return _fit_cuboid(points, iterations, inlier_threshold, seed, min_inlier_ratio)
    raise ValueError(f"unknown shape_class {shape_class!r}")


def _require_consensus(count: int, total: int, min_ratio: float, what: str) -> None:
    if count / total < min_ratio:
        raise FitError(
            f"no {what} model reached min inlier ratio {min_ratio} "
            f"(best {count}/{total})"
        )


def _fit_sphere(points, iterations, threshold, seed, min_ratio) -> PrimitiveFit:
    pts = _as_cloud(points, 4, "sphere fit")
    n = len(pts)
    rng = np.random.default_rng(seed)
    best_count = -1
    best = None
    for _ in range(iterations):
        idx = rng.choice(n, size=4, replace=False)
        model = _sphere_from_four(pts[idx])
        if model is None:
            continue
        center, radius = model
        count = int((_sphere_residuals(pts, center, radius) <= threshold).sum())
        if count > best_count:
            best_count = count
            best = model
    if best is None:
        raise FitError("sphere fit found no non-degenerate sample")
    _require_consensus(best_count, n, min_ratio, "sphere")

    center, radius = best
    inliers = np.flatnonzero(_sphere_residuals(pts, center, radius) <= threshold)
    refined = _sphere_lsq(pts[inliers])
    if refined is not None:
        center, radius = refined
        inliers = np.flatnonzero(_sphere_residuals(pts, center, radius) <= threshold)
    residuals = _sphere_residuals(pts[inliers], center, radius)
    return PrimitiveFit(
        shape_class="sphere",
        parameters={"center": center, "radius": radius},
        inliers=inliers,
        rms_residual=float(np.sqrt(np.mean(residuals**2))) if len(inliers) else 0.0,
    )


def _fit_cylinder(points, iterations, threshold, seed, min_ratio) -> PrimitiveFit:
    pts = _as_cloud(points, 5, "cylinder fit")
    n = len(pts)
    normals = _estimate_normals(pts)
    rng = np.random.default_rng(seed)
    best_count = -1
    best = None
    for _ in range(iterations):
        idx = rng.choice(n, size=5, replace=False)
        model = _cylinder_model(pts[idx], normals[idx])
        if model is None:
            continue
        axis_point, direction, radius = model
        count = int(
            (_cylinder_residuals(pts, axis_point, direction, radius) <= threshold).sum()
        )
        if count > best_count:
            best_count = count
            best = model
    if best is None:
        raise FitError("cylinder fit found no non-degenerate sample")
    _require_consensus(best_count, n, min_ratio, "cylinder")

    axis_point, direction, radius = best
    inliers = np.flatnonzero(
        _cylinder_residuals(pts, axis_point, direction, radius) <= threshold
    )
    refined = _cylinder_model(pts[inliers], normals[inliers])
    if refined is not None:
        axis_point, direction, radius = refined
        inliers = np.flatnonzero(
            _cylinder_residuals(pts, axis_point, direction, radius) <= threshold
        )

    sign = _canonical_sign(direction, np.array([0.0, 1.0, 0.0]))
    direction = direction * sign
    along = (pts[inliers] - axis_point) @ direction
    height = float(along.max() - along.min()) if len(inliers) else 0.0
    mid = float((along.max() + along.min()) / 2.0) if len(inliers) else 0.0
    axis_point = axis_point + mid * direction
    residuals = _cylinder_residuals(pts[inliers], axis_point, direction, radius)
    return PrimitiveFit(
        shape_class="cylinder",
        parameters={
            "axis_point": axis_point,
            "axis_direction": direction,
            "radius": radius,
            "height": height,
        },
        inliers=inliers,
        rms_residual=float(np.sqrt(np.mean(residuals**2))) if len(inliers) else 0.0,
    )


def _fit_cuboid(points, iterations, threshold, seed, min_ratio) -> PrimitiveFit:
    pts = _as_cloud(points, 6, "cuboid fit")
    n = len(pts)
    rng = np.random.default_rng(seed)
    best_count = -1
    best_rot: np.ndarray | None = None
    for _ in range(iterations):
        idx = rng.choice(n, size=5, replace=False)
        a, b, c, p4, p5 = pts[idx]
        n1 = np.cross(b - a, c - a)
        norm1 = np.linalg.norm(n1)
        if norm1 < _EPS:
            continue
        n1 /= norm1
        n2 = np.cross(n1, p5 - p4)
        norm2 = np.linalg.norm(n2)
        if norm2 < _EPS:
            continue
        n2 /= norm2
        rot = np.vstack([n1, n2, np.cross(n1, n2)])
        q = pts @ rot.T
        center, half = _cuboid_extents(q)
        if (half < _EPS).any():
            continue
        count = int((_box_surface_distance(q, center, half) <= threshold).sum())
        if count > best_count:
            best_count = count
            best_rot = rot
    if best_rot is None:
        raise FitError("cuboid fit found no non-degenerate sample")
    _require_consensus(best_count, n, min_ratio, "cuboid")

    q = pts @ best_rot.T
    center, half = _cuboid_extents(q)
    inliers = np.flatnonzero(_box_surface_distance(q, center, half) <= threshold)
    if len(inliers):
        center, half = _cuboid_extents(q[inliers])
        inliers = np.flatnonzero(_box_surface_distance(q, center, half) <= threshold)
    residuals = _box_surface_distance(q[inliers], center, half)
    return PrimitiveFit(
        shape_class="cuboid",
        parameters={
            "center": best_rot.T @ center,
            "half_extents": half,
            "rotation": best_rot,
        },
        inliers=inliers,
        rms_residual=float(np.sqrt(np.mean(residuals**2))) if len(inliers) else 0.0,
    )
