"""Motion metrics against naive double-loop reference implementations.

Random instances use integer-valued magnitude fields: float accumulation over
integers below 2^53 is exact, so the vectorized path and the loop oracle must
agree bit for bit; any disagreement is a formula bug, not rounding noise.
"""

from __future__ import annotations

import numpy as np
import pytest

from worldsim.metrics import (
    MotionMaskSet,
    ScoreReport,
    best_of_n,
    motion_masks,
    physics_score,
    resample_frames,
    score_prediction,
    spatial_iou,
    spatiotemporal_iou,
    weighted_spatial_iou,
)

from conftest import frames_of


# --------------------------------------------------------------------------
# oracles (naive double loops, no numpy reductions)


def oracle_spatial(a: MotionMaskSet, b: MotionMaskSet) -> float:
    inter = union = 0
    h, w = a.shape
    for y in range(h):
        for x in range(w):
            pa, pb = bool(a.aggregate_any[y, x]), bool(b.aggregate_any[y, x])
            inter += pa and pb
            union += pa or pb
    return 1.0 if union == 0 else inter / union


def oracle_weighted(a: MotionMaskSet, b: MotionMaskSet) -> float:
    num = den = 0.0
    h, w = a.shape
    for y in range(h):
        for x in range(w):
            pa, pb = float(a.aggregate_mag[y, x]), float(b.aggregate_mag[y, x])
            num += min(pa, pb)
            den += max(pa, pb)
    return 1.0 if den == 0.0 else num / den


def oracle_spatiotemporal(a: MotionMaskSet, b: MotionMaskSet) -> float:
    values = []
    t, h, w = a.per_frame.shape
    for k in range(t):
        inter = union = 0
        for y in range(h):
            for x in range(w):
                pa, pb = bool(a.per_frame[k, y, x]), bool(b.per_frame[k, y, x])
                inter += pa and pb
                union += pa or pb
        if union:
            values.append(inter / union)
    return 1.0 if not values else sum(values) / len(values)


def random_mask_set(seed: int, t=4, h=8, w=8) -> MotionMaskSet:
    rng = np.random.default_rng(seed)
    per_frame = rng.random((t, h, w)) < 0.3
    mags = rng.integers(0, 256, size=(t, h, w)).astype(np.float64)
    return MotionMaskSet.from_per_frame(per_frame, mags.sum(axis=0))


def square_set(x0, y0, size=10, hw=32) -> MotionMaskSet:
    per = np.zeros((1, hw, hw), dtype=bool)
    per[0, y0:y0 + size, x0:x0 + size] = True
    return MotionMaskSet.from_per_frame(per)


# --------------------------------------------------------------------------


class TestOracleEquivalence:
    def test_bit_equal_on_random_instances(self):
        # the full 1000-seed sweep runs in the acceptance suite
        for seed in range(100):
            a = random_mask_set(2 * seed)
            b = random_mask_set(2 * seed + 1)
            assert spatial_iou(a, b) == oracle_spatial(a, b)
            assert weighted_spatial_iou(a, b) == oracle_weighted(a, b)
            assert spatiotemporal_iou(a, b) == oracle_spatiotemporal(a, b)

    def test_symmetry_and_bounds(self):
        for seed in range(25):
            a = random_mask_set(3 * seed)
            b = random_mask_set(3 * seed + 2)
            for metric in (spatial_iou, weighted_spatial_iou, spatiotemporal_iou):
                ab, ba = metric(a, b), metric(b, a)
                assert ab == ba
                assert 0.0 <= ab <= 1.0

    def test_self_equality_is_exactly_one(self):
        for seed in range(10):
            a = random_mask_set(seed)
            assert spatial_iou(a, a) == 1.0
            assert weighted_spatial_iou(a, a) == 1.0
            assert spatiotemporal_iou(a, a) == 1.0


class TestSpatialIoU:
    def test_identical_masks(self):
        a = square_set(4, 4)
        assert spatial_iou(a, square_set(4, 4)) == 1.0

    def test_disjoint_masks(self):
        assert spatial_iou(square_set(0, 0), square_set(20, 20)) == 0.0

    def test_half_shifted_square_is_one_third(self):
        assert spatial_iou(square_set(0, 0), square_set(5, 0)) == pytest.approx(1 / 3)

    def test_both_empty_is_one(self):
        empty = MotionMaskSet.from_per_frame(np.zeros((2, 4, 4), dtype=bool))
        assert spatial_iou(empty, empty) == 1.0

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError, match="sizes differ"):
            spatial_iou(square_set(0, 0, hw=32), square_set(0, 0, hw=16))


class TestWeightedSpatialIoU:
    def test_double_magnitude_scores_half(self):
        per = np.ones((1, 4, 4), dtype=bool)
        g = MotionMaskSet.from_per_frame(per, np.full((4, 4), 3.0))
        p = MotionMaskSet.from_per_frame(per, np.full((4, 4), 6.0))
        assert weighted_spatial_iou(p, g) == 0.5

    def test_reduces_to_spatial_on_binary_fields(self):
        a = square_set(0, 0)
        b = square_set(5, 0)
        bin_a = MotionMaskSet.from_per_frame(a.per_frame, a.aggregate_any.astype(float))
        bin_b = MotionMaskSet.from_per_frame(b.per_frame, b.aggregate_any.astype(float))
        assert weighted_spatial_iou(bin_a, bin_b) == spatial_iou(a, b)

    def test_both_zero_is_one(self):
        empty = MotionMaskSet.from_per_frame(np.zeros((1, 4, 4), dtype=bool))
        assert weighted_spatial_iou(empty, empty) == 1.0


class TestSpatiotemporalIoU:
    def test_identical_stacks(self):
        a = random_mask_set(5)
        assert spatiotemporal_iou(a, a) == 1.0

    def test_time_offset_matches_oracle(self):
        per_a = np.zeros((4, 6, 6), dtype=bool)
        per_a[0, :3, :3] = True
        per_a[1, :3, :3] = True
        per_b = np.zeros((4, 6, 6), dtype=bool)
        per_b[2, :3, :3] = True
        per_b[3, :3, :3] = True
        a, b = MotionMaskSet.from_per_frame(per_a), MotionMaskSet.from_per_frame(per_b)
        assert spatiotemporal_iou(a, b) == oracle_spatiotemporal(a, b) == 0.0

    def test_empty_pred_vs_active_gt_scores_zero(self):
        pred = MotionMaskSet.from_per_frame(np.zeros((10, 5, 5), dtype=bool))
        per_gt = np.zeros((10, 5, 5), dtype=bool)
        per_gt[2:5, 1:3, 1:3] = True
        gt = MotionMaskSet.from_per_frame(per_gt)
        assert spatiotemporal_iou(pred, gt) == 0.0

    def test_both_empty_frames_skipped(self):
        per_a = np.zeros((3, 4, 4), dtype=bool)
        per_a[1, 0, 0] = True
        per_b = per_a.copy()
        a, b = MotionMaskSet.from_per_frame(per_a), MotionMaskSet.from_per_frame(per_b)
        assert spatiotemporal_iou(a, b) == 1.0  # frames 0 and 2 skipped

    def test_stack_shape_mismatch_rejected(self):
        a = MotionMaskSet.from_per_frame(np.zeros((3, 4, 4), dtype=bool))
        b = MotionMaskSet.from_per_frame(np.zeros((4, 4, 4), dtype=bool))
        with pytest.raises(ValueError, match="stacks differ"):
            spatiotemporal_iou(a, b)


class TestMotionMasks:
    def test_static_video_all_zero(self):
        frames = frames_of([np.full((6, 6), 50)] * 5)
        masks = motion_masks(frames, threshold=0.05)
        assert not masks.per_frame.any()
        assert not masks.aggregate_any.any()
        assert masks.aggregate_mag.sum() == 0.0

    def test_toggling_pixel_set_in_every_mask(self):
        frames = []
        for t in range(6):
            frame = np.zeros((5, 5))
            frame[2, 2] = 255 if t % 2 else 0
            frames.append(frame)
        masks = motion_masks(frames_of(frames), threshold=0.05, min_blob_px=0)
        assert masks.per_frame[:, 2, 2].all()
        assert masks.per_frame.sum() == len(frames) - 1

    def test_small_speckle_removed(self):
        frames = [np.zeros((8, 8)), np.zeros((8, 8))]
        frames[1][0, 0] = 255
        frames[1][0, 1] = 255  # 2-px speckle
        frames[1][4:7, 4:7] = 255  # 9-px blob survives
        masks = motion_masks(frames_of(frames), threshold=0.05, min_blob_px=4)
        assert not masks.per_frame[0, 0, 0] and not masks.per_frame[0, 0, 1]
        assert masks.per_frame[0, 4:7, 4:7].all()

    def test_needs_two_frames(self):
        with pytest.raises(ValueError, match="2 frames"):
            motion_masks(frames_of([np.zeros((4, 4))]))


class TestScores:
    def test_physics_score_extremes_and_mean(self):
        assert physics_score((1.0, 1.0, 1.0)) == 100.0
        assert physics_score((0.0, 0.0, 0.0)) == 0.0
        assert physics_score((0.6, 0.3, 0.3)) == pytest.approx(40.0)

    def test_physics_score_custom_combiner(self):
        assert physics_score((0.4, 0.9, 0.1), combiner=min) == pytest.approx(10.0)

    def test_component_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            physics_score((1.2, 0.5, 0.5))
        with pytest.raises(ValueError):
            physics_score((0.5, 0.5))

    def _report(self, combined, sample_index):
        return ScoreReport(
            spatial_iou=0.5, weighted_spatial_iou=0.5, spatiotemporal_iou=0.5,
            combined=combined, sample_index=sample_index,
        )

    def test_best_of_n_picks_table_maximum(self):
        reports = [self._report(c, i) for i, c in enumerate([47.0, 46.2, 20.0])]
        best = best_of_n(reports)
        assert best.combined == 47.0
        assert best.n_samples == 3

    def test_best_of_n_single(self):
        report = self._report(33.0, 0)
        assert best_of_n([report]).combined == 33.0

    def test_best_of_n_tie_prefers_lowest_sample_index(self):
        reports = [self._report(50.0, 2), self._report(50.0, 0), self._report(50.0, 1)]
        assert best_of_n(reports).sample_index == 0

    def test_best_of_n_empty_rejected(self):
        with pytest.raises(ValueError):
            best_of_n([])


class TestScorePrediction:
    def _video(self, offset=0):
        frames = []
        for t in range(8):
            frame = np.zeros((16, 16))
            x = 2 + t + offset
            frame[6:10, x:x + 3] = 255
            frames.append(frame)
        return frames_of(frames)

    def test_self_identity_scores_100(self):
        video = self._video()
        report = score_prediction(video, video)
        assert report.combined == 100.0
        assert not report.resampled

    def test_different_motion_scores_below_100(self):
        report = score_prediction(self._video(), self._video(offset=4))
        assert report.combined < 100.0

    def test_resampling_recorded(self):
        gt = self._video()
        pred = gt[::2]
        report = score_prediction(pred, gt)
        assert report.resampled

    def test_resample_nearest(self):
        frames = [np.full((2, 2, 3), v, dtype=np.uint8) for v in range(5)]
        out = resample_frames(frames, 3)
        assert [int(f[0, 0, 0]) for f in out] == [0, 2, 4]
        out = resample_frames(frames, 9)
        assert len(out) == 9
