"""Minimal complex dense linear-algebra kernel shared by all detectors.

Matrices and vectors are plain C-ordered (row-major) numpy ``complex128``
arrays; there is no wrapper type. Least-squares solves go through a QR
factorization rather than normal equations, and every solve checks the
triangular factor's diagonal so that a (near-)rank-deficient candidate
support surfaces as :class:`DegenerateSupportError` instead of a garbage
solution.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg.lapack import ztrtrs, zunmqr, zgeqrf

# Relative diagonal tolerance below which a system counts as rank deficient.
# Gaussian channel submatrices at simulation sizes sit far above this; it only
# catches pathological supports (duplicated or zero columns).
RANK_RTOL = 1e-10


class DegenerateSupportError(ValueError):
    """Candidate support columns are rank deficient; the support is invalid."""


def lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve min_X ||b - a @ X||_F for a full-column-rank ``a``.

    Parameters
    ----------
    a : (m, n) complex ndarray, m >= n
    b : (m,) or (m, p) complex ndarray

    Returns
    -------
    (n,) or (n, p) ndarray minimizing the Frobenius-norm residual; equals
    (a^H a)^{-1} a^H b for full-rank ``a`` but is computed via Householder
    QR (LAPACK geqrf/unmqr/trtrs), never via normal equations.

    Raises
    ------
    DegenerateSupportError
        If m < n or the QR diagonal signals rank deficiency at RANK_RTOL.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    m, n = a.shape
    if m < n:
        raise DegenerateSupportError(f"underdetermined system: {m} rows < {n} columns")
    b2d = b[:, None] if b.ndim == 1 else b
    if n == 0:
        return np.zeros((0,) if b.ndim == 1 else (0, b2d.shape[1]), dtype=np.complex128)
    qr, tau, _, info = zgeqrf(a)
    if info != 0:
        raise RuntimeError(f"geqrf failed with info={info}")
    diag = np.abs(np.diagonal(qr)[:n])
    if diag.min() <= RANK_RTOL * diag.max():
        raise DegenerateSupportError("rank-deficient support columns")
    qhb, _, info = zunmqr("L", "C", qr, tau, b2d, max(1, b2d.shape[1] * 32))
    if info != 0:
        raise RuntimeError(f"unmqr failed with info={info}")
    x, info = ztrtrs(qr[:n], qhb[:n], lower=0)
    if info != 0:
        raise RuntimeError(f"trtrs failed with info={info}")
    return x[:, 0] if b.ndim == 1 else x


def lstsq_stacked(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched :func:`lstsq`: solve ``j`` independent systems in one call.

    Parameters
    ----------
    a : (j, m, n) complex ndarray, m >= n
    b : (j, m) complex ndarray

    Returns
    -------
    (j, n) ndarray of per-system least-squares solutions.

    Raises
    ------
    DegenerateSupportError
        If any one of the stacked systems is rank deficient.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    _, m, n = a.shape
    if m < n:
        raise DegenerateSupportError(f"underdetermined system: {m} rows < {n} columns")
    q, r = np.linalg.qr(a)
    diag = np.abs(np.diagonal(r, axis1=1, axis2=2))
    if n > 0 and np.any(diag.min(axis=1) <= RANK_RTOL * diag.max(axis=1)):
        raise DegenerateSupportError("rank-deficient support columns in stacked solve")
    rhs = np.matmul(q.conj().transpose(0, 2, 1), b[:, :, None])
    return np.linalg.solve(r, rhs)[:, :, 0]


def hermitian_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return a^H @ b for arrays with matching leading (row) dimension."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"row mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a.conj().T @ b


def frobenius_norm(a: np.ndarray) -> float:
    """sqrt of the sum of squared entry moduli (l2 norm for vectors)."""
    return float(np.linalg.norm(np.asarray(a)))
