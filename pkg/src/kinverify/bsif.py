"""Multi-scale Binarized Statistical Image Features.

A filter bank of 8 zero-mean square kernels turns each pixel into an 8-bit
code (one bit per filter response sign); a 4x4 grid of 256-bin block
histograms summarizes the code map into a 4096-vector per window size, and
six window sizes stack into the 6x4096 shallow feature matrix of a face.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DataError
from .imaging import Image

BSIF_WINDOWS = (3, 5, 7, 9, 11, 13)
N_FILTERS = 8
CODE_BINS = 2**N_FILTERS
BLOCK_GRID = 4
FEATURE_DIM = BLOCK_GRID * BLOCK_GRID * CODE_BINS  # 4096

_ZERO_MEAN_TOL = 1e-6

# Absolute guard under which a response counts as zero (bit 0). Zero-mean
# filters leave ~1e-16 float residue on constant inputs; genuine responses
# on [0, 1] images sit many orders of magnitude above this.
RESPONSE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class FilterBank:
    """8 zero-mean WxW kernels for one BSIF window size.

    Responses are sliding inner products (kernels are not flipped); the
    filter at index i contributes bit value 2**i to the pixel code.
    """

    window: int
    filters: np.ndarray  # (8, W, W)

    def __post_init__(self):
        if self.window not in BSIF_WINDOWS:
            raise ConfigError(
                f"window must be one of {BSIF_WINDOWS}, got {self.window}"
            )
        filt = np.asarray(self.filters, dtype=np.float64)
        if filt.shape != (N_FILTERS, self.window, self.window):
            raise DataError(
                f"filter count must be {N_FILTERS} kernels of "
                f"{self.window}x{self.window}, got shape {filt.shape}"
            )
        if not np.all(np.isfinite(filt)):
            raise DataError("filter bank contains non-finite values")
        means = filt.reshape(N_FILTERS, -1).mean(axis=1)
        if np.max(np.abs(means)) > _ZERO_MEAN_TOL:
            raise DataError(
                f"filters must be zero-mean within {_ZERO_MEAN_TOL:g} "
                f"(worst mean {np.max(np.abs(means)):.3g})"
            )
        object.__setattr__(self, "filters", filt)


def load_filterbank(path: str) -> FilterBank:
    """Read a text filter-bank file.

    Format: line 1 is `BSIF <W> <n_filters>`, followed by n_filters blocks
    of W lines of W space-separated floats.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if not lines or not lines[0].startswith("BSIF"):
        raise DataError(f"malformed filter bank file: missing BSIF header ({path})")
    head = lines[0].split()
    if len(head) != 3:
        raise DataError(f"malformed filter bank header: {lines[0]!r}")
    try:
        window, n_filters = int(head[1]), int(head[2])
    except ValueError as exc:
        raise DataError(f"malformed filter bank header: {lines[0]!r}") from exc
    if window % 2 == 0:
        raise DataError(f"window must be odd, got {window}")
    if n_filters != N_FILTERS:
        raise DataError(f"filter count must be {N_FILTERS}, got {n_filters}")
    body = lines[1:]
    if len(body) != n_filters * window:
        raise DataError(
            f"filter bank body must have {n_filters * window} rows, got {len(body)}"
        )
    rows = []
    for ln in body:
        vals = ln.split()
        if len(vals) != window:
            raise DataError(f"filter row must have {window} entries: {ln!r}")
        try:
            rows.append([float(v) for v in vals])
        except ValueError as exc:
            raise DataError(f"non-numeric filter entry in row {ln!r}") from exc
    filters = np.array(rows, dtype=np.float64).reshape(n_filters, window, window)
    return FilterBank(window, filters)


def save_filterbank(path: str, bank: FilterBank) -> None:
    """Write a bank in the text format read by load_filterbank."""
    lines = [f"BSIF {bank.window} {N_FILTERS}"]
    for f in bank.filters:
        for row in f:
            lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def generate_fallback_bank(window: int, seed: int) -> FilterBank:
    """Deterministic substitute bank when no learned filters are supplied.

    Draws 8 kernels from a seeded standard normal, removes each kernel's
    mean, then Gram-Schmidt orthonormalizes them as flattened vectors.
    Mean removal survives orthonormalization because zero-mean vectors form
    a subspace.
    """
    if window % 2 == 0:
        raise ConfigError(f"window must be odd, got {window}")
    rng = np.random.default_rng(seed)
    flat = rng.standard_normal((N_FILTERS, window * window))
    flat -= flat.mean(axis=1, keepdims=True)
    basis = []
    for v in flat:
        for b in basis:
            v = v - (v @ b) * b
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise DataError(
                f"degenerate random draw for fallback bank (window={window}, seed={seed})"
            )
        basis.append(v / norm)
    filters = np.array(basis).reshape(N_FILTERS, window, window)
    return FilterBank(window, filters)


def filter_responses(img: Image, bank: FilterBank) -> np.ndarray:
    """Per-filter linear responses, shape (8, H, W), replicate-edge padding."""
    if img.channels != 1:
        raise DataError("BSIF requires a single-channel image")
    if img.height < bank.window or img.width < bank.window:
        raise DataError(
            f"image {img.height}x{img.width} smaller than window {bank.window}"
        )
    return np.stack(
        [ndimage.correlate(img.pixels, f, mode="nearest") for f in bank.filters]
    )


def bsif_code(img: Image, bank: FilterBank) -> np.ndarray:
    """Binarize filter responses into per-pixel 8-bit codes (uint8 H x W).

    Bit i is set iff response of filter i is strictly positive, so an
    all-zero image codes to 0 everywhere.
    """
    responses = filter_responses(img, bank)
    bits = responses > 0
    weights = (2 ** np.arange(N_FILTERS, dtype=np.uint32))[:, None, None]
    return (bits * weights).sum(axis=0).astype(np.uint8)


def block_histogram(codes: np.ndarray, grid: int = BLOCK_GRID, bins: int = CODE_BINS) -> np.ndarray:
    """Concatenated per-block code histograms, row-major over a grid x grid split.

    Blocks are near-equal rectangles; remainder pixels go to the last row /
    column of blocks. Output length grid*grid*bins; entries are counts.
    """
    codes = np.asarray(codes)
    if codes.ndim != 2:
        raise DataError("code map must be 2-D")
    h, w = codes.shape
    if h < grid or w < grid:
        raise DataError(f"code map {h}x{w} smaller than {grid}x{grid} grid")
    bh, bw = h // grid, w // grid
    out = np.zeros(grid * grid * bins, dtype=np.int64)
    for br in range(grid):
        r0 = br * bh
        r1 = (br + 1) * bh if br < grid - 1 else h
        for bc in range(grid):
            c0 = bc * bw
            c1 = (bc + 1) * bw if bc < grid - 1 else w
            hist = np.bincount(codes[r0:r1, c0:c1].ravel(), minlength=bins)
            out[(br * grid + bc) * bins : (br * grid + bc + 1) * bins] = hist
    return out


def multiscale_bsif(img: Image, banks) -> np.ndarray:
    """Stack block histograms for all six window sizes into a (6, 4096) matrix.

    `banks` must cover exactly the windows 3, 5, 7, 9, 11, 13 in ascending
    order; row i of the result comes from bank i.
    """
    windows = tuple(b.window for b in banks)
    if len(set(windows)) != len(windows):
        raise ConfigError(f"duplicate window sizes in banks: {windows}")
    if windows != BSIF_WINDOWS:
        raise ConfigError(
            f"banks must cover windows {BSIF_WINDOWS} in ascending order, got {windows}"
        )
    rows = [block_histogram(bsif_code(img, bank)) for bank in banks]
    return np.array(rows, dtype=np.float64)


def default_banks(seed: int, windows=BSIF_WINDOWS):
    """Fallback banks for every window, seeded per window size."""
    return [generate_fallback_bank(w, seed + w) for w in windows]
