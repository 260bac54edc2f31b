"""Dense complex matrix helpers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; this module only
adds the checks and conventions the rest of the package relies on.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch, SingularMatrix

#: condition number above which a solve is treated as singular
SINGULAR_COND = 1e12


def as_cmatrix(a, shape=None, name="matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array, optionally checking shape."""
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got ndim={arr.ndim}")
    if shape is not None:
        rows, cols = shape
        if (rows is not None and arr.shape[0] != rows) or (
            cols is not None and arr.shape[1] != cols
        ):
            raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def fro(a) -> float:
    """Frobenius norm (the package-wide matrix norm)."""
    return float(np.linalg.norm(a))


def herm(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Commutator ``[a, b] = ab - ba`` (batched over leading axes)."""
    return a @ b - b @ a


def diag_comm(d: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``[diag(d), rho]`` computed entrywise as ``(d_j - d_k) rho_jk``."""
    d = np.asarray(d)
    return (d[:, None] - d[None, :]) * rho


def cmat_solve(lhs, rhs, *, max_cond=SINGULAR_COND, return_cond=False):
    """Solve ``lhs @ X = rhs``.

    Parameters
    ----------
    lhs : (n, n) array_like
    rhs : (n, k) array_like
    max_cond : float
        Threshold on the 2-norm condition number; above it the matrix is
        declared singular.
    return_cond : bool
        Also return the condition estimate.

    Raises
    ------
    SingularMatrix
        If ``cond(lhs) > max_cond``.
    """
    lhs = np.asarray(lhs, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if lhs.ndim != 2 or lhs.shape[0] != lhs.shape[1]:
        raise ShapeMismatch(f"lhs must be square, got {lhs.shape}")
    if rhs.shape[0] != lhs.shape[0]:
        raise ShapeMismatch(f"rhs has {rhs.shape[0]} rows, lhs is {lhs.shape}")
    cond = float(np.linalg.cond(lhs)) if lhs.size else 1.0
    if not np.isfinite(cond) or cond > max_cond:
        raise SingularMatrix(f"matrix is numerically singular (cond={cond:.3e})", cond)
    x = np.linalg.solve(lhs, rhs)
    if return_cond:
        return x, cond
    return x
