import numpy as np
import pytest

from kinverify.errors import ConfigError, DataError
from kinverify.imaging import (
    Image,
    MsrConfig,
    gaussian_kernel_1d,
    gaussian_surround,
    load_image,
    msr_enhance,
    msr_log_ratio,
    resize,
    save_image,
    to_grayscale,
)


def bilinear_oracle(src: np.ndarray, width: int, height: int) -> np.ndarray:
    """Scalar-loop bilinear interpolation at half-pixel centers, edge clamped."""
    h_in, w_in = src.shape[:2]
    out = np.zeros((height, width) + src.shape[2:], dtype=np.float64)
    for r in range(height):
        for c in range(width):
            sy = min(max((r + 0.5) * h_in / height - 0.5, 0.0), h_in - 1.0)
            sx = min(max((c + 0.5) * w_in / width - 0.5, 0.0), w_in - 1.0)
            y0, x0 = int(np.floor(sy)), int(np.floor(sx))
            y1, x1 = min(y0 + 1, h_in - 1), min(x0 + 1, w_in - 1)
            fy, fx = sy - y0, sx - x0
            out[r, c] = (
                src[y0, x0] * (1 - fy) * (1 - fx)
                + src[y0, x1] * (1 - fy) * fx
                + src[y1, x0] * fy * (1 - fx)
                + src[y1, x1] * fy * fx
            )
    return out


def conv_oracle(src: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Dense double-loop correlation with replicate padding."""
    h, w = src.shape
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros_like(src)
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for i in range(kh):
                for j in range(kw):
                    rr = min(max(r + i - ry, 0), h - 1)
                    cc = min(max(c + j - rx, 0), w - 1)
                    acc += kernel[i, j] * src[rr, cc]
            out[r, c] = acc
    return out


class TestImageType:
    def test_invariants(self):
        img = Image(np.zeros((4, 5)))
        assert (img.width, img.height, img.channels) == (5, 4, 1)
        color = Image(np.zeros((4, 5, 3)))
        assert color.channels == 3

    def test_rejects_bad_shapes(self):
        with pytest.raises(DataError):
            Image(np.zeros((4, 5, 2)))
        with pytest.raises(DataError):
            Image(np.zeros((0, 5)))
        with pytest.raises(DataError):
            Image(np.array([[0.0, np.nan]]))


class TestLoadImage:
    def test_byte_scaling(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_text("P2\n2 2\n255\n0 255\n128 64\n")
        img = load_image(str(p))
        expected = np.array([[0.0, 1.0], [128 / 255, 64 / 255]])
        np.testing.assert_allclose(img.pixels, expected, rtol=0, atol=0)

    def test_missing_file(self):
        with pytest.raises(DataError, match="file not found"):
            load_image("/nonexistent/nope.png")

    def test_png_roundtrip_224(self, tmp_path):
        rng = np.random.default_rng(0)
        img = Image(rng.random((224, 224, 3)))
        p = tmp_path / "face.png"
        save_image(str(p), img)
        loaded = load_image(str(p))
        assert (loaded.width, loaded.height, loaded.channels) == (224, 224, 3)
        assert loaded.pixels.min() >= 0.0 and loaded.pixels.max() <= 1.0

    def test_ppm_color(self, tmp_path):
        p = tmp_path / "t.ppm"
        p.write_text("P3\n1 1\n255\n255 0 0\n")
        img = load_image(str(p))
        np.testing.assert_allclose(img.pixels, [[[1.0, 0.0, 0.0]]])

    def test_pgm_roundtrip(self, tmp_path):
        img = Image(np.linspace(0, 1, 12).reshape(3, 4))
        p = tmp_path / "r.pgm"
        save_image(str(p), img)
        again = load_image(str(p))
        np.testing.assert_allclose(again.pixels, img.pixels, atol=1 / 255)


class TestGrayscale:
    def test_identity_on_gray(self):
        img = Image(np.random.default_rng(1).random((5, 5)))
        assert to_grayscale(img) is img

    def test_white_pixel(self):
        img = Image(np.ones((1, 1, 3)))
        assert to_grayscale(img).pixels[0, 0] == pytest.approx(1.0)

    def test_red_pixel(self):
        px = np.zeros((1, 1, 3))
        px[0, 0, 0] = 1.0
        assert to_grayscale(Image(px)).pixels[0, 0] == pytest.approx(0.299)


class TestResize:
    def test_identity_same_dims(self):
        img = Image(np.random.default_rng(2).random((6, 7)))
        out = resize(img, 7, 6)
        np.testing.assert_array_equal(out.pixels, img.pixels)

    def test_constant_stays_constant(self):
        img = Image(np.full((5, 9), 0.37))
        out = resize(img, 4, 13)
        np.testing.assert_allclose(out.pixels, 0.37, rtol=0, atol=1e-12)

    def test_ramp_matches_oracle(self):
        src = np.arange(16, dtype=np.float64).reshape(4, 4) / 15.0
        out = resize(Image(src), 2, 2)
        np.testing.assert_allclose(out.pixels, bilinear_oracle(src, 2, 2), atol=1e-12)

    def test_random_matches_oracle(self):
        rng = np.random.default_rng(3)
        src = rng.random((7, 5))
        out = resize(Image(src), 9, 4)
        np.testing.assert_allclose(out.pixels, bilinear_oracle(src, 9, 4), atol=1e-12)
        color = rng.random((5, 6, 3))
        out3 = resize(Image(color), 3, 8)
        np.testing.assert_allclose(out3.pixels, bilinear_oracle(color, 3, 8), atol=1e-12)

    def test_zero_target_rejected(self):
        with pytest.raises(ConfigError):
            resize(Image(np.zeros((3, 3))), 0, 3)


class TestGaussianSurround:
    def test_constant_preserved(self):
        img = Image(np.full((16, 16), 0.6))
        out = gaussian_surround(img, 2.0)
        np.testing.assert_allclose(out.pixels, 0.6, atol=1e-12)

    def test_impulse_response_is_kernel(self):
        sigma = 1.0
        k1 = gaussian_kernel_1d(sigma)
        r = len(k1) // 2
        n = 4 * r + 1
        px = np.zeros((n, n))
        px[n // 2, n // 2] = 1.0
        out = gaussian_surround(Image(px), sigma).pixels
        kernel2d = np.outer(k1, k1)
        patch = out[n // 2 - r : n // 2 + r + 1, n // 2 - r : n // 2 + r + 1]
        np.testing.assert_allclose(patch, kernel2d, atol=1e-12)
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(4)
        src = rng.random((4, 4))
        sigma = 1.0
        k1 = gaussian_kernel_1d(sigma)
        kernel2d = np.outer(k1, k1)
        out = gaussian_surround(Image(src), sigma).pixels
        np.testing.assert_allclose(out, conv_oracle(src, kernel2d), atol=1e-12)

    def test_mean_preserved_on_interior_dominated_images(self):
        # constant margin wider than the truncation radius: no mass can leak
        rng = np.random.default_rng(5)
        sigma = 1.5
        r = int(np.ceil(3 * sigma))
        n = 8 * int(np.ceil(sigma)) + 2 * r
        for _ in range(5):
            px = np.full((n, n), 0.5)
            px[r:-r, r:-r] = rng.random((n - 2 * r, n - 2 * r))
            out = gaussian_surround(Image(px), sigma).pixels
            assert out.mean() == pytest.approx(px.mean(), abs=1e-6)

    def test_non_positive_sigma(self):
        with pytest.raises(ConfigError):
            gaussian_surround(Image(np.zeros((4, 4))), 0.0)


class TestMsrConfig:
    def test_defaults(self):
        cfg = MsrConfig()
        assert cfg.scales == (15.0, 80.0, 250.0)
        assert sum(cfg.weights) == pytest.approx(1.0)

    def test_validation(self):
        with pytest.raises(ConfigError):
            MsrConfig(scales=(5.0, 5.0))
        with pytest.raises(ConfigError):
            MsrConfig(scales=(-1.0,))
        with pytest.raises(ConfigError):
            MsrConfig(scales=(1.0, 2.0), weights=(0.7, 0.7))
        with pytest.raises(ConfigError):
            MsrConfig(eps=0.0)


class TestMsrEnhance:
    def test_constant_image_maps_to_half(self):
        img = Image(np.full((12, 12), 0.3))
        cfg = MsrConfig(scales=(1.0, 2.0))
        pre = msr_log_ratio(img, cfg).pixels
        assert np.max(np.abs(pre)) < 1e-9
        out = msr_enhance(img, cfg)
        np.testing.assert_allclose(out.pixels, 0.5)

    def test_global_gain_invariance(self):
        rng = np.random.default_rng(6)
        cfg = MsrConfig(scales=(1.0, 2.5), eps=1e-10)
        base = 0.1 + 0.9 * rng.random((10, 10))
        for k in (0.5, 1.3, 2.0):
            a = msr_log_ratio(Image(base), cfg).pixels
            b = msr_log_ratio(Image(k * base), cfg).pixels
            assert np.max(np.abs(a - b)) < 1e-5

    def test_matches_composition_oracle(self):
        # independent oracle: brute-force blur composed with elementwise logs
        rng = np.random.default_rng(7)
        src = rng.random((8, 8))
        sigma, eps = 2.0, 1e-6
        cfg = MsrConfig(scales=(sigma,), eps=eps)
        k1 = gaussian_kernel_1d(sigma)
        blurred = conv_oracle(src, np.outer(k1, k1))
        expected = np.log(src + eps) - np.log(blurred + eps)
        got = msr_log_ratio(Image(src), cfg).pixels
        np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_output_in_unit_range_no_nans(self):
        rng = np.random.default_rng(8)
        cfg = MsrConfig(scales=(1.0, 3.0))
        for _ in range(5):
            img = Image(rng.random((9, 11)))
            out = msr_enhance(img, cfg).pixels
            assert np.all(np.isfinite(out))
            assert out.min() >= 0.0 and out.max() <= 1.0

    def test_color_channels_processed_independently(self):
        rng = np.random.default_rng(9)
        px = rng.random((8, 8, 3))
        cfg = MsrConfig(scales=(1.5,))
        out = msr_enhance(Image(px), cfg).pixels
        for c in range(3):
            single = msr_enhance(Image(px[:, :, c]), cfg).pixels
            np.testing.assert_allclose(out[:, :, c], single, atol=1e-12)
