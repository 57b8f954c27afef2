"""Spatiotemporal motion map construction and rendering."""

from __future__ import annotations

import colorsys

import numpy as np
import pytest

from worldsim.stmap import spatiotemporal_map, to_gray

from conftest import frames_of


def static_video(t=8, h=12, w=16, level=90):
    return frames_of([np.full((h, w), level) for _ in range(t)])


def single_pixel_video(t_star: int, t=11, h=8, w=8, pixel=(3, 4)):
    frames = []
    for t_index in range(t):
        frame = np.zeros((h, w))
        if t_index >= t_star:
            frame[pixel] = 255
        frames.append(frame)
    return frames_of(frames)


def ball_video(t=36, h=24, w=64, radius=3.0, speed=2.0):
    """Ball crossing left -> right, entering from off-screen."""
    frames = []
    for t_index in range(t):
        cx = -(radius + 1.0) + speed * t_index
        cy = h / 2
        yy, xx = np.mgrid[:h, :w]
        disk = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2
        frames.append(np.where(disk, 255, 0))
    return frames_of(frames)


def hue_of(rgb) -> float:
    r, g, b = (float(v) / 255.0 for v in rgb)
    return colorsys.rgb_to_hsv(r, g, b)[0]


class TestMotionTime:
    def test_static_sequence_has_no_colored_pixels(self):
        st = spatiotemporal_map(static_video(), motion_threshold=0.05)
        assert not st.colored.any()
        expected = (to_gray(static_video()[0]) * 0.5 * 255).astype(np.uint8)
        assert np.array_equal(st.image, np.stack([expected] * 3, axis=-1))

    @pytest.mark.parametrize("t_star", [1, 3, 7, 10])
    def test_single_moving_pixel_exact_motion_time(self, t_star):
        frames = single_pixel_video(t_star)
        st = spatiotemporal_map(frames, motion_threshold=0.05)
        assert st.colored.sum() == 1
        assert st.motion_time[3, 4] == t_star / (len(frames) - 1)

    def test_early_motion_is_blue_end_of_ramp(self):
        # motion confined to the first 10% of a 40-frame sequence
        frames = []
        for t_index in range(40):
            frame = np.zeros((8, 8))
            if 1 <= t_index < 4:
                frame[2, 2 + t_index] = 255
            elif t_index >= 4:
                frame[2, 5] = 255
            frames.append(frame)
        st = spatiotemporal_map(frames_of(frames), motion_threshold=0.05)
        times = st.motion_time[st.colored]
        assert len(times)
        assert (times <= 0.1 + 1e-12).all()
        for y, x in zip(*np.nonzero(st.colored)):
            assert hue_of(st.image[y, x]) > 0.5  # blue end

    def test_colored_pixels_subset_of_moving(self):
        st = spatiotemporal_map(ball_video(), motion_threshold=0.05)
        assert (st.motion_mag[st.colored] > 0.05).all()

    def test_fewer_than_two_frames_rejected(self):
        with pytest.raises(ValueError, match="2 frames"):
            spatiotemporal_map(static_video(t=1))


class TestBallTrail:
    def test_hue_monotone_along_x_pixelwise(self):
        st = spatiotemporal_map(ball_video(), motion_threshold=0.05)
        rows_checked = 0
        for y in range(st.motion_time.shape[0]):
            xs = np.nonzero(st.colored[y])[0]
            if len(xs) < 2:
                continue
            rows_checked += 1
            times = st.motion_time[y, xs]  # xs ascends
            assert (np.diff(times) >= 0).all(), f"row {y} not monotone"
            hues = [hue_of(st.image[y, x]) for x in xs]
            assert all(h1 >= h2 - 1e-9 for h1, h2 in zip(hues, hues[1:]))
        assert rows_checked >= 3

    def test_hue_ramp_monotone_in_motion_time(self):
        from worldsim.stmap import _hue_ramp_rgb

        times = np.linspace(0, 1, 33)
        hues = [colorsys.rgb_to_hsv(*rgb)[0] for rgb in _hue_ramp_rgb(times)]
        assert all(h1 >= h2 for h1, h2 in zip(hues, hues[1:]))
        assert hues[0] == pytest.approx(240 / 360)  # blue at t=0
        assert hues[-1] == pytest.approx(0.0)  # red at t=1
