import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity

from strokevid.data import make_synthetic_dataset, procedural_glyphs
from strokevid.errors import InputError
from strokevid.evaluation import (
    intensity_centroid,
    psnr,
    ssim,
    stroke_adherence,
)
from strokevid.strokes import StrokeKeypoints


class TestPsnr:
    def test_identical_capped(self):
        a = np.random.default_rng(0).random((1, 16, 16))
        assert psnr(a, a.copy()) == 100.0

    def test_zero_vs_one(self):
        a = np.zeros((1, 8, 8))
        b = np.ones((1, 8, 8))
        assert psnr(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_half_difference(self):
        a = np.zeros((1, 8, 8))
        b = np.full((1, 8, 8), 0.5)
        assert psnr(a, b) == pytest.approx(10 * math.log10(4), abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((1, 8, 8)), rng.random((1, 8, 8))
        assert psnr(a, b) == psnr(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            psnr(np.zeros((1, 8, 8)), np.zeros((1, 4, 4)))

    def test_global_permutation_invariance(self):
        rng = np.random.default_rng(2)
        a, b = rng.random(64), rng.random(64)
        perm = rng.permutation(64)
        assert psnr(a.reshape(1, 8, 8), b.reshape(1, 8, 8)) == pytest.approx(
            psnr(a[perm].reshape(1, 8, 8), b[perm].reshape(1, 8, 8))
        )


class TestSsim:
    def test_identical_is_one(self):
        a = np.random.default_rng(3).random((1, 16, 16))
        assert ssim(a, a.copy()) == pytest.approx(1.0)

    def test_constant_images_closed_form(self):
        # means 0.2 / 0.8, zero variances: only the luminance term matters
        a = np.full((1, 16, 16), 0.2)
        b = np.full((1, 16, 16), 0.8)
        c1 = 0.01 ** 2
        expected = (2 * 0.2 * 0.8 + c1) / (0.2 ** 2 + 0.8 ** 2 + c1)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-9)

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            a = rng.random((24, 24))
            b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
            ref = structural_similarity(
                a, b, win_size=11, gaussian_weights=True, sigma=1.5,
                use_sample_covariance=False, data_range=1.0,
            )
            assert ssim(a[None], b[None]) == pytest.approx(ref, abs=1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a, b = rng.random((1, 16, 16)), rng.random((1, 16, 16))
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_too_small_image(self):
        with pytest.raises(InputError):
            ssim(np.zeros((1, 8, 8)), np.zeros((1, 8, 8)))


class TestStrokeAdherence:
    def test_ground_truth_clips_within_paste_bound(self):
        clips = make_synthetic_dataset(5, (64, 64), procedural_glyphs(15), 9, seed=6)
        for clip in clips:
            res = stroke_adherence(clip.frames[1:], clip.keypoints)
            assert res.missing_steps == 0
            assert res.mean_px <= 0.51

    def test_translated_clip(self):
        from strokevid.data import make_moving_glyph_clip

        kp = StrokeKeypoints(tuple((20.0, 20.0) for _ in range(5)), (64, 64))
        clip = make_moving_glyph_clip(procedural_glyphs(15)[0], kp, (64, 64))
        shifted = np.roll(clip.frames, 5, axis=3)  # +5 px in x
        res = stroke_adherence(shifted[1:], clip.keypoints)
        assert res.mean_px == pytest.approx(5.0, abs=1e-9)

    def test_matches_centroid_summation_oracle(self):
        rng = np.random.default_rng(8)
        frames = rng.random((4, 1, 32, 32))
        kp = StrokeKeypoints(tuple((8.0 + i, 9.0 + i) for i in range(5)), (32, 32))
        res = stroke_adherence(frames, kp)
        dists = []
        for t in range(4):
            img = frames[t, 0]
            yy, xx = np.mgrid[0:32, 0:32]
            cx = (xx * img).sum() / img.sum()
            cy = (yy * img).sum() / img.sum()
            tx, ty = kp.points[t + 1]
            dists.append(math.hypot(cx - tx, cy - ty))
        assert res.mean_px == pytest.approx(float(np.mean(dists)), abs=1e-9)

    def test_all_black_frame_excluded(self):
        frames = np.zeros((3, 1, 32, 32))
        frames[0, 0, 10, 10] = 1.0
        frames[2, 0, 12, 12] = 1.0
        kp = StrokeKeypoints(tuple((10.0, 10.0) for _ in range(4)), (32, 32))
        res = stroke_adherence(frames, kp)
        assert res.missing_steps == 1
        assert np.isnan(res.per_step[1])
        assert math.isfinite(res.mean_px)

    def test_centroid_of_black_frame_is_none(self):
        assert intensity_centroid(np.zeros((1, 8, 8))) is None
