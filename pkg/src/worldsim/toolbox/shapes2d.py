"""2D primitive fitting on binary masks (disks and polygons)."""

from __future__ import annotations

import cv2
import numpy as np

from .types import PrimitiveFit

MAX_POLYGON_VERTICES = 12
POLYGON_TOLERANCE_PX = 1.0


def _boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """Centers (x, y) of set pixels touching an unset pixel or the image edge."""
    padded = np.pad(mask, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    boundary = mask & ~interior
    ys, xs = np.nonzero(boundary)
    return np.column_stack([xs + 0.5, ys + 0.5])


def _circle_lsq(xy: np.ndarray) -> tuple[np.ndarray, float]:
    a = np.column_stack([2.0 * xy, np.ones(len(xy))])
    b = (xy**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    center = sol[:2]
    r2 = max(sol[2] + center @ center, 0.0)
    return center, float(np.sqrt(r2))


def _fit_disk(mask: np.ndarray) -> PrimitiveFit:
    ys, xs = np.nonzero(mask)
    if len(xs) == 1:
        # Single-pixel convention: the pixel's footprint is a 1x1 square,
        # reported as a radius-0.5 disk at its center.
        center = np.array([xs[0] + 0.5, ys[0] + 0.5])
        return PrimitiveFit("disk", {"center": center, "radius": 0.5})
    boundary = _boundary_pixels(mask)
    center, radius = _circle_lsq(boundary)
    residuals = np.abs(np.linalg.norm(boundary - center, axis=1) - radius)
    return PrimitiveFit(
        "disk",
        {"center": center, "radius": radius},
        inliers=np.arange(len(boundary)),
        rms_residual=float(np.sqrt(np.mean(residuals**2))),
    )


def _fit_polygon(mask: np.ndarray) -> PrimitiveFit:
    contours, _ = cv2.findContours(
        mask.astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE
    )
    if not contours:
        raise ValueError("mask has no contour")
    contour = max(contours, key=cv2.contourArea)
    epsilon = POLYGON_TOLERANCE_PX
    approx = cv2.approxPolyDP(contour, epsilon, closed=True)
    while len(approx) > MAX_POLYGON_VERTICES:
        epsilon *= 1.5
        approx = cv2.approxPolyDP(contour, epsilon, closed=True)
    vertices = approx.reshape(-1, 2).astype(np.float64)
    return PrimitiveFit("polygon", {"vertices": vertices})


def fit_2d_shape(mask, shape_class: str) -> PrimitiveFit:
    """Fit a disk (least-squares circle on boundary pixels) or a polygon
    (contour + vertex-count-bounded simplification) to a binary mask."""
    mask = np.asarray(mask).astype(bool)
    if mask.ndim != 2:
        raise ValueError("mask must be a 2D binary raster")
    if not mask.any():
        raise ValueError("mask is empty")
    if shape_class == "disk":
        return _fit_disk(mask)
    if shape_class == "polygon":
        return _fit_polygon(mask)
    raise ValueError(f"unknown shape_class {shape_class!r}")
