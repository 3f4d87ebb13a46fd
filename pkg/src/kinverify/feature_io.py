"""Binary matrix container for precomputed features (deep and cached shallow).

File layout, little-endian throughout:

    bytes 0-7   magic "KINFEAT1"
    u32         rows
    u32         cols
    u16         id length in bytes
    ...         sample id, UTF-8
    rows*cols   float32 payload, row-major

Deep features arrive through this boundary as 2x4096 matrices (fc6 and fc7
activations of a face); the same container caches 6x4096 shallow matrices.
Payloads are IEEE-754 single precision, so round-trips are bit-exact for
float32 data.
"""

import os
import struct

import numpy as np

from .errors import DataError

MAGIC = b"KINFEAT1"
DEEP_ROWS = 2
DEEP_COLS = 4096

_HEADER = struct.Struct("<IIH")


def write_matrix_file(path: str, matrix: np.ndarray, sample_id: str = "") -> None:
    """Write a 2-D matrix; float64 input is cast to float32."""
    m = np.ascontiguousarray(matrix, dtype=np.float32)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DataError(f"matrix must be 2-D and non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataError("matrix contains non-finite values")
    ident = sample_id.encode("utf-8")
    if len(ident) > 0xFFFF:
        raise DataError("sample id longer than 65535 bytes")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(m.shape[0], m.shape[1], len(ident)))
        fh.write(ident)
        fh.write(m.tobytes(order="C"))


def read_matrix_file(path: str):
    """Read a container file; returns (sample_id, float32 matrix)."""
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + _HEADER.size:
        raise DataError(f"truncated feature file: {path}")
    if blob[: len(MAGIC)] != MAGIC:
        raise DataError(f"bad magic in feature file: {path}")
    rows, cols, id_len = _HEADER.unpack_from(blob, len(MAGIC))
    if rows < 1 or cols < 1:
        raise DataError(f"invalid shape {rows}x{cols} in feature file: {path}")
    off = len(MAGIC) + _HEADER.size
    if len(blob) < off + id_len:
        raise DataError(f"truncated sample id in feature file: {path}")
    try:
        sample_id = blob[off : off + id_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"sample id is not valid UTF-8: {path}") from exc
    off += id_len
    expected = rows * cols * 4
    if len(blob) - off != expected:
        raise DataError(
            f"payload length mismatch: expected {expected} bytes, "
            f"got {len(blob) - off} ({path})"
        )
    matrix = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=off)
    matrix = matrix.reshape(rows, cols).astype(np.float32)
    if not np.all(np.isfinite(matrix)):
        raise DataError(f"feature file contains non-finite entries: {path}")
    return sample_id, matrix


def read_feature_file(path: str, expected_rows: int = DEEP_ROWS, expected_cols=DEEP_COLS):
    """Read a deep-feature matrix, validating its shape.

    Defaults enforce the 2x4096 layout (fc6 row 0, fc7 row 1); pass
    expected_cols=None to accept any width (reduced-scale feature sets).
    Returns (sample_id, float32 matrix).
    """
    sample_id, matrix = read_matrix_file(path)
    rows, cols = matrix.shape
    if rows != expected_rows or (expected_cols is not None and cols != expected_cols):
        want_cols = "any" if expected_cols is None else expected_cols
        raise DataError(
            f"expected {expected_rows}x{want_cols} deep feature, got {rows}x{cols} ({path})"
        )
    return sample_id, matrix


def l2_normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm; all-zero rows are left as zeros."""
    m = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise DataError("matrix contains non-finite values")
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return m / safe
