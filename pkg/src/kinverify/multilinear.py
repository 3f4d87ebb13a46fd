"""Dense third-order tensor algebra and the symmetric generalized eigensolver.

Tensors are plain float64 ndarrays of shape (I1, I2, I3); mode arguments
are 1-indexed. The mode-n unfolding has I_n rows and the remaining modes
cycle in ascending index order along the columns (the fastest-varying
column index is the highest remaining mode), i.e. it is the C-order
reshape of moveaxis(t, n-1, 0).
"""

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, NumericalError

_SYM_TOL = 1e-8


def _check_tensor(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ConfigError(f"expected a third-order tensor, got ndim={t.ndim}")
    return t


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ConfigError(f"mode must be 1, 2 or 3, got {mode}")
    return mode


def unfold(tensor, mode: int) -> np.ndarray:
    """Mode-n unfolding of a third-order tensor.

    Parameters
    ----------
    tensor : ndarray, shape (I1, I2, I3)
    mode : int
        1-indexed mode whose fibers become the rows.

    Returns
    -------
    ndarray of shape (I_mode, product of the other two dims)
    """
    t = _check_tensor(tensor)
    mode = _check_mode(mode)
    return np.reshape(np.moveaxis(t, mode - 1, 0), (t.shape[mode - 1], -1))


def fold(matrix, mode: int, dims) -> np.ndarray:
    """Inverse of `unfold`: rebuild the tensor of shape `dims` from its mode-n unfolding."""
    mode = _check_mode(mode)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ConfigError(f"dims must have length 3, got {dims}")
    m = np.asarray(matrix, dtype=np.float64)
    other = [d for i, d in enumerate(dims) if i != mode - 1]
    if m.shape != (dims[mode - 1], other[0] * other[1]):
        raise ConfigError(
            f"matrix shape {m.shape} inconsistent with dims {dims} at mode {mode}"
        )
    moved = m.reshape((dims[mode - 1], *other))
    return np.moveaxis(moved, 0, mode - 1)


def mode_n_product(tensor, matrix, mode: int) -> np.ndarray:
    """Multiply a matrix against the given mode of a third-order tensor.

    The mode-n dim of the result equals matrix.shape[0]; other dims are
    unchanged. Equivalent to fold(matrix @ unfold(tensor, mode), mode, new_dims).
    """
    t = _check_tensor(tensor)
    mode = _check_mode(mode)
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ConfigError("projection must be a matrix")
    if m.shape[1] != t.shape[mode - 1]:
        raise ConfigError(
            f"matrix cols {m.shape[1]} != tensor dim {t.shape[mode - 1]} along mode {mode}"
        )
    dims = list(t.shape)
    dims[mode - 1] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, dims)


def _check_square(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {m.shape}")
    return m


def _check_symmetric(m, name: str) -> np.ndarray:
    m = _check_square(m, name)
    if m.size and np.max(np.abs(m - m.T)) > _SYM_TOL * max(1.0, np.max(np.abs(m))):
        raise NumericalError(f"{name} is not symmetric within {_SYM_TOL:g}")
    return 0.5 * (m + m.T)


def cholesky(matrix) -> np.ndarray:
    """Lower-triangular Cholesky factor L with L @ L.T == matrix.

    Raises NumericalError for inputs that are not symmetric positive
    definite.
    """
    m = _check_symmetric(matrix, "matrix")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "matrix is not positive definite (Cholesky failed); "
            "consider regularize() with a small shrinkage"
        ) from exc


def regularize(matrix, lam: float) -> np.ndarray:
    """Trace-scaled ridge: matrix + lam * trace(matrix)/n * I."""
    m = _check_square(matrix, "matrix")
    if lam < 0:
        raise ConfigError("shrinkage must be non-negative")
    if lam == 0 or m.shape[0] == 0:
        return m.copy()
    return m + (lam * np.trace(m) / m.shape[0]) * np.eye(m.shape[0])


def _canonical_sign(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive (deterministic)."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_generalized_eig(a, b):
    """Solve A v = lambda B v for symmetric A and SPD B.

    Reduction through B's Cholesky factor: with B = L L^T the problem
    becomes the standard symmetric eigenproblem of L^-1 A L^-T, and
    eigenvectors are back-substituted through L^T. Eigenvalues come out in
    descending order; eigenvector columns are B-orthonormal
    (v_i^T B v_j = delta_ij).

    Returns
    -------
    (eigenvalues, eigenvectors) : (ndarray (n,), ndarray (n, n))
        Eigenvectors are the matrix columns, aligned with the eigenvalues.
    """
    a = _check_symmetric(a, "A")
    b = _check_symmetric(b, "B")
    if a.shape != b.shape:
        raise ConfigError(f"A and B must have equal shapes, got {a.shape} vs {b.shape}")
    lower = cholesky(b)
    # C = L^-1 A L^-T, kept symmetric against round-off
    y = solve_triangular(lower, a, lower=True)
    c = solve_triangular(lower, y.T, lower=True).T
    c = 0.5 * (c + c.T)
    vals, vecs = np.linalg.eigh(c)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    vectors = solve_triangular(lower.T, vecs, lower=False)
    return vals, _canonical_sign(vectors)
