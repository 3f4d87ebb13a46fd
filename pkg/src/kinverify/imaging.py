"""Image loading, grayscale conversion, resizing and Multiscale Retinex enhancement.

Images are held as float64 arrays in row-major (height, width) layout,
single channel as a 2-D array and color as (height, width, 3). Values are
scaled to [0, 1] on load; retinex log-ratios may leave that range until
renormalized.
"""

import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DataError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# classical three-scale retinex configuration
DEFAULT_MSR_SCALES = (15.0, 80.0, 250.0)


@dataclass(frozen=True)
class Image:
    """A loaded raster image: float64 pixels, 1 or 3 channels."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            pass
        elif px.ndim == 3 and px.shape[2] == 3:
            pass
        else:
            raise DataError(f"image must be HxW or HxWx3, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DataError("zero-dimension image")
        if not np.all(np.isfinite(px)):
            raise DataError("image contains non-finite values")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]


@dataclass(frozen=True)
class MsrConfig:
    """Multiscale retinex settings: Gaussian surround sigmas, mixing weights, log guard."""

    scales: tuple = DEFAULT_MSR_SCALES
    weights: tuple = ()
    eps: float = 1e-6

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if len(scales) == 0:
            raise ConfigError("at least one retinex scale required")
        if any(s <= 0 for s in scales):
            raise ConfigError("retinex scales must be strictly positive")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ConfigError("retinex scales must be strictly increasing")
        weights = tuple(float(w) for w in self.weights)
        if not weights:
            weights = tuple(1.0 / len(scales) for _ in scales)
        if len(weights) != len(scales):
            raise ConfigError("one weight per scale required")
        if any(w < 0 for w in weights):
            raise ConfigError("retinex weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigError("retinex weights must sum to 1")
        if not (self.eps > 0):
            raise ConfigError("log-domain guard eps must be positive")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "weights", weights)


def _parse_pnm_text(path: str) -> np.ndarray:
    """Parse ASCII PGM (P2) / PPM (P3) used for test fixtures."""
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read()
    tokens = []
    for line in raw.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] not in ("P2", "P3"):
        raise DataError(f"unsupported format: {path}")
    kind = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
        values = np.array([int(t) for t in tokens[4:]], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise DataError(f"malformed {kind} file: {path}") from exc
    if maxval <= 0:
        raise DataError(f"malformed {kind} file: non-positive maxval")
    channels = 1 if kind == "P2" else 3
    if values.size != width * height * channels:
        raise DataError(f"malformed {kind} file: payload length mismatch")
    values = values / float(maxval)
    if kind == "P2":
        return values.reshape(height, width)
    return values.reshape(height, width, 3)


def load_image(path: str) -> Image:
    """Load an 8-bit PNG/JPEG (via Pillow) or ASCII PGM/PPM image, scaled to [0, 1]."""
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    ext = os.path.splitext(path)[1].lower()
    if ext in (".pgm", ".ppm"):
        with open(path, "rb") as fh:
            magic = fh.read(2)
        if magic in (b"P2", b"P3"):
            return Image(_parse_pnm_text(path))
    try:
        from PIL import Image as PilImage

        with PilImage.open(path) as im:
            if im.mode in ("L", "I;16", "I"):
                im = im.convert("L")
                arr = np.asarray(im, dtype=np.float64) / 255.0
            else:
                im = im.convert("RGB")
                arr = np.asarray(im, dtype=np.float64) / 255.0
    except DataError:
        raise
    except Exception as exc:
        raise DataError(f"unreadable image file: {path}: {exc}") from exc
    return Image(arr)


def save_image(path: str, img: Image) -> None:
    """Write an image as ASCII PGM/PPM or (via Pillow) PNG, clipping to [0, 1]."""
    px = np.clip(img.pixels, 0.0, 1.0)
    quant = np.rint(px * 255.0).astype(np.int64)
    ext = os.path.splitext(path)[1].lower()
    if ext in (".pgm", ".ppm"):
        kind = "P2" if img.channels == 1 else "P3"
        if (kind == "P2") != (ext == ".pgm"):
            raise DataError("channel count does not match pgm/ppm extension")
        lines = [kind, f"{img.width} {img.height}", "255"]
        flat = quant.reshape(img.height, -1)
        for row in flat:
            lines.append(" ".join(str(int(v)) for v in row))
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
        return
    from PIL import Image as PilImage

    data = quant.astype(np.uint8)
    mode = "L" if img.channels == 1 else "RGB"
    PilImage.fromarray(data, mode=mode).save(path)


def to_grayscale(img: Image) -> Image:
    """Collapse RGB to a single luma channel (0.299 R + 0.587 G + 0.114 B)."""
    if img.channels == 1:
        return img
    w = np.array(LUMA_WEIGHTS, dtype=np.float64)
    return Image(img.pixels @ w)


def resize(img: Image, width: int, height: int) -> Image:
    """Bilinear resize to exactly (width, height).

    Sample points use the half-pixel-center convention
    src = (dst + 0.5) * (in / out) - 0.5, clamped at the borders, so
    resizing to the same dims is the identity and constants stay constant.
    """
    if width < 1 or height < 1:
        raise ConfigError("resize target dimensions must be >= 1")
    if width == img.width and height == img.height:
        return img
    src = img.pixels if img.channels == 3 else img.pixels[:, :, None]

    def axis_coords(n_out, n_in):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1.0)
        lo = np.floor(pos).astype(np.int64)
        lo = np.minimum(lo, n_in - 1)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = pos - lo
        return lo, hi, frac

    y0, y1, fy = axis_coords(height, img.height)
    x0, x1, fx = axis_coords(width, img.width)
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    if img.channels == 1:
        out = out[:, :, 0]
    return Image(out)


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian, truncated at radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_surround(img: Image, sigma: float) -> Image:
    """Convolve with a normalized 2-D Gaussian (separable), replicate-edge padding."""
    k = gaussian_kernel_1d(sigma)

    def blur_plane(plane):
        tmp = ndimage.correlate1d(plane, k, axis=0, mode="nearest")
        return ndimage.correlate1d(tmp, k, axis=1, mode="nearest")

    if img.channels == 1:
        return Image(blur_plane(img.pixels))
    out = np.stack([blur_plane(img.pixels[:, :, c]) for c in range(3)], axis=2)
    return Image(out)


def msr_log_ratio(img: Image, cfg: MsrConfig = MsrConfig()) -> Image:
    """Raw multiscale retinex response, before any renormalization.

    Per channel: sum over scales of weight * (log(I + eps) - log(blur_s(I) + eps)).
    Multiplying all intensities by a positive constant leaves this output
    (nearly) unchanged once eps is small relative to the intensities.
    """
    src = img.pixels if img.channels == 3 else img.pixels[:, :, None]
    out = np.zeros_like(src)
    log_src = np.log(src + cfg.eps)
    for sigma, weight in zip(cfg.scales, cfg.weights):
        blurred = gaussian_surround(img, sigma).pixels
        if img.channels == 1:
            blurred = blurred[:, :, None]
        out += weight * (log_src - np.log(blurred + cfg.eps))
    if img.channels == 1:
        out = out[:, :, 0]
    return Image(out)


def msr_enhance(img: Image, cfg: MsrConfig = MsrConfig()) -> Image:
    """Multiscale retinex enhancement, min-max renormalized to [0, 1] per channel.

    A channel whose retinex response is (numerically) constant maps to a
    uniform 0.5 so that downstream descriptors stay well defined.
    """
    response = msr_log_ratio(img, cfg).pixels
    planes = response if img.channels == 3 else response[:, :, None]
    out = np.empty_like(planes)
    for c in range(planes.shape[2]):
        plane = planes[:, :, c]
        lo, hi = plane.min(), plane.max()
        if hi - lo < 1e-12:
            out[:, :, c] = 0.5
        else:
            out[:, :, c] = (plane - lo) / (hi - lo)
    if img.channels == 1:
        out = out[:, :, 0]
    return Image(out)
