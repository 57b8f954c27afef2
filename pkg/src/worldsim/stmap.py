"""Spatiotemporal motion maps: when did each pixel move, as a single image.

Moving pixels are painted with a linear blue-to-red hue ramp over their motion
time (blue = early, red = late) on top of a dimmed grayscale copy of the first
frame, so a whole simulation is judgeable at a glance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

HUE_EARLY_DEG = 240.0  # blue
HUE_LATE_DEG = 0.0  # red


def to_gray(frame: np.ndarray) -> np.ndarray:
    """Luma in [0, 1] from an HxWx3 uint8 frame."""
    return np.asarray(frame, dtype=np.float64) @ GRAY_WEIGHTS / 255.0


@dataclass
class SpatiotemporalMap:
    image: np.ndarray  # H x W x 3 uint8 rendering
    motion_time: np.ndarray  # H x W float in [0, 1], NaN where static
    motion_mag: np.ndarray  # H x W float >= 0, peak per-step magnitude

    @property
    def colored(self) -> np.ndarray:
        return np.isfinite(self.motion_time)


def _hue_ramp_rgb(times: np.ndarray) -> np.ndarray:
    """Map motion times in [0, 1] to fully saturated RGB along blue->red.

    Piecewise-linear HSV->RGB (s = v = 1) restricted to hue in [0, 240].
    """
    hue = HUE_EARLY_DEG + (HUE_LATE_DEG - HUE_EARLY_DEG) * times
    breaks = [0.0, 60.0, 120.0, 180.0, 240.0]
    r = np.interp(hue, breaks, [1.0, 1.0, 0.0, 0.0, 0.0])
    g = np.interp(hue, breaks, [0.0, 1.0, 1.0, 1.0, 0.0])
    b = np.interp(hue, breaks, [0.0, 0.0, 0.0, 1.0, 1.0])
    return np.stack([r, g, b], axis=-1)


def spatiotemporal_map(frames, motion_threshold: float = 0.05) -> SpatiotemporalMap:
    """Build the motion map of a frame sequence.

    Per-step magnitude m_t = |gray(f_t) - gray(f_{t-1})|; a pixel's motion time
    is the argmax step t normalized to t/(T-1), defined only where the peak
    magnitude clears the threshold.
    """
    if len(frames) < 2:
        raise ValueError("spatiotemporal map needs at least 2 frames")
    grays = np.stack([to_gray(f) for f in frames])
    if any(f.shape != frames[0].shape for f in frames):
        raise ValueError("frames must share dimensions")
    diffs = np.abs(np.diff(grays, axis=0))  # (T-1, H, W)
    mag = diffs.max(axis=0)
    moving = mag > motion_threshold
    # diff index i is the transition into frame i+1
    step = diffs.argmax(axis=0) + 1
    times = np.where(moving, step / (len(frames) - 1), np.nan)

    base = (to_gray(frames[0]) * 0.5 * 255.0).astype(np.uint8)
    image = np.stack([base] * 3, axis=-1)
    if moving.any():
        colors = (_hue_ramp_rgb(times[moving]) * 255.0).round().astype(np.uint8)
        image[moving] = colors
    return SpatiotemporalMap(image=image, motion_time=times, motion_mag=mag)
