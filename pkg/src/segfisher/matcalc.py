"""Dense matrix calculus on small real matrices.

Matrices are plain ``numpy.ndarray`` objects. Symmetric matrices are stored
densely and canonically symmetrized, ``S <- (S + S.T) / 2``. Positive
definiteness is always certified by a Cholesky factorization, never by an
eigenvalue threshold.

``vec`` stacks columns (Fortran order), so that

    vec(A @ B @ C) == kron(C.T, A) @ vec(B).
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg as sla

from segfisher.errors import (
    ContractError,
    DomainError,
    NotPositiveDefiniteError,
    NumericalError,
)

SYMMETRY_RTOL = 1e-12
PSD_CLAMP_RTOL = 1e-10

__all__ = [
    "vec",
    "unvec",
    "kron",
    "inner",
    "sym",
    "as_matrix",
    "as_sym",
    "symmetrizer",
    "eigh",
    "sqrt_psd",
    "inv_sqrt_pd",
    "cholesky",
    "is_pd",
    "logdet_pd",
    "inv_pd",
    "solve_pd",
    "matrix_to_json",
    "matrix_from_json",
    "load_matrix",
]


def as_matrix(A: ArrayLike) -> NDArray[np.float64]:
    """Return ``A`` as a finite 2-D float array (scalars become 1x1)."""
    arr = np.array(A, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ContractError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("matrix entries must be finite")
    return arr


def sym(S: ArrayLike) -> NDArray[np.float64]:
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def as_sym(S: ArrayLike, rtol: float = SYMMETRY_RTOL) -> NDArray[np.float64]:
    """Validate that ``S`` is square and symmetric, and return its symmetrized copy.

    Raises
    ------
    ContractError
        If ``S`` is not square or its asymmetry exceeds ``rtol * max|S|``.
    """
    S = as_matrix(S)
    if S.shape[0] != S.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if np.max(np.abs(S - S.T), initial=0.0) > rtol * scale:
        raise ContractError("matrix is not symmetric")
    return sym(S)


def vec(A: ArrayLike) -> NDArray[np.float64]:
    """Stack the columns of ``A``: ``vec(A)[i + j*rows] == A[i, j]``."""
    return as_matrix(A).reshape(-1, order="F")


def unvec(v: ArrayLike, rows: int, cols: int | None = None) -> NDArray[np.float64]:
    """Inverse of :func:`vec`."""
    cols = rows if cols is None else cols
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise ContractError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def kron(A: ArrayLike, B: ArrayLike) -> NDArray[np.float64]:
    """Kronecker product, block ``(i, j)`` equal to ``A[i, j] * B``."""
    return np.kron(as_matrix(A), as_matrix(B))


def inner(A: ArrayLike, B: ArrayLike) -> float:
    """Frobenius scalar product ``tr(A.T @ B)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ContractError(f"shape mismatch {A.shape} vs {B.shape}")
    return float(np.sum(A * B))


def symmetrizer(d: int) -> NDArray[np.float64]:
    """Orthogonal projector ``(I + K) / 2`` of R^{d*d} onto vec(S_d).

    ``K`` is the commutation matrix, ``K vec(X) = vec(X.T)``. The covariance
    of ``vec(X)`` for a symmetric random matrix ``X`` is always of the form
    ``P @ V @ P``.
    """
    n = d * d
    K = np.zeros((n, n))
    for i in range(d):
        for j in range(d):
            K[i + j * d, j + i * d] = 1.0
    return 0.5 * (np.eye(n) + K)


def eigh(S: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Symmetric eigendecomposition with reproducible ordering and signs.

    Eigenvalues are ascending. Each eigenvector is flipped so that its
    largest-magnitude component is positive (first such index on ties).

    Raises
    ------
    NumericalError
        If LAPACK does not converge.
    """
    S = as_sym(S)
    try:
        w, Q = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc
    idx = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[idx, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return w, Q * signs


def _spectral_norm_bound(S: NDArray[np.float64]) -> float:
    return float(np.linalg.norm(S, 2)) if S.size else 0.0


def sqrt_psd(S: ArrayLike) -> NDArray[np.float64]:
    """Symmetric PSD square root.

    Eigenvalues down to ``-1e-10 * ||S||`` are clamped to zero; anything more
    negative raises :class:`DomainError`.
    """
    S = as_sym(S)
    w, Q = eigh(S)
    tol = PSD_CLAMP_RTOL * _spectral_norm_bound(S)
    if w.size and w[0] < -tol:
        raise DomainError(f"matrix is not PSD (smallest eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return sym((Q * np.sqrt(w)) @ Q.T)


def inv_sqrt_pd(S: ArrayLike) -> NDArray[np.float64]:
    """Symmetric inverse square root of a PD matrix."""
    S = as_sym(S)
    if not is_pd(S):
        raise NotPositiveDefiniteError("matrix is not positive definite")
    w, Q = eigh(S)
    return sym((Q / np.sqrt(w)) @ Q.T)


def cholesky(S: ArrayLike) -> NDArray[np.float64]:
    """Lower Cholesky factor; raises :class:`NotPositiveDefiniteError` on failure."""
    S = as_sym(S)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def is_pd(S: ArrayLike) -> bool:
    try:
        cholesky(S)
    except (NotPositiveDefiniteError, ContractError):
        return False
    return True


def logdet_pd(S: ArrayLike) -> float:
    """``log det S`` for PD ``S`` as ``2 * sum(log(diag(L)))``."""
    L = cholesky(S)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def solve_pd(S: ArrayLike, B: ArrayLike) -> NDArray[np.float64]:
    """Solve ``S X = B`` for PD ``S`` through its Cholesky factor."""
    L = cholesky(S)
    return sla.cho_solve((L, True), np.asarray(B, dtype=float))


def inv_pd(S: ArrayLike) -> NDArray[np.float64]:
    S = as_sym(S)
    return sym(solve_pd(S, np.eye(S.shape[0])))


# -- JSON interchange ------------------------------------------------------


def matrix_to_json(A: ArrayLike) -> dict[str, Any]:
    A = as_matrix(A)
    rows, cols = A.shape
    return {"rows": rows, "cols": cols, "data": [float(x) for x in A.reshape(-1)]}


def matrix_from_json(obj: dict[str, Any] | list, symmetric: bool = False) -> NDArray[np.float64]:
    """Parse ``{"rows": n, "cols": m, "data": [row-major]}``.

    A nested list of rows is also accepted. With ``symmetric=True`` the result
    is validated as square and symmetric.
    """
    if isinstance(obj, list):
        A = as_matrix(obj)
    else:
        try:
            rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"malformed matrix object: {exc}") from exc
        if rows <= 0 or cols <= 0:
            raise ContractError("rows and cols must be positive")
        if len(data) != rows * cols:
            raise ContractError(f"expected {rows * cols} entries, got {len(data)}")
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
            raise ContractError("matrix data must be numbers")
        if not all(math.isfinite(x) for x in data):
            raise ContractError("matrix entries must be finite")
        A = np.array(data, dtype=float).reshape(rows, cols)
    return as_sym(A) if symmetric else A


def load_matrix(path: str | Path, symmetric: bool = False) -> NDArray[np.float64]:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractError(f"{path}: invalid JSON ({exc})") from exc
    return matrix_from_json(obj, symmetric=symmetric)
