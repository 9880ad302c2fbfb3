"""Gaussian family N(u, Sigma) with known location, as an exponential family on S_d.

The sufficient statistic is ``T(x) = -1/2 (x - u)(x - u)^T``, the canonical
parameter is the precision ``s = Sigma^{-1}`` and the mean is
``m = -Sigma / 2``. Covariance segments ``theta*C + D`` correspond to mean
segments with ``A = -C/2`` and ``B = -D/2``.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from segfisher import matcalc as mc
from segfisher.errors import ContractError, DomainError, PoleError
from segfisher.expfam import FamilyModel, fisher_mean, reparam_info
from segfisher.segment import (
    SegmentModel,
    info_theta_quadratic,
    require_pd_combination,
    second_difference,
    segment_spectrum,
)

LOGDET_REL_STEP = 1e-4


def _neg_inv(m: NDArray[np.float64]) -> NDArray[np.float64]:
    # inverse of a negative definite matrix
    return -mc.inv_pd(-m)


def gaussian_family(d: int, u: ArrayLike | None = None) -> FamilyModel:
    """Gaussian exponential family on S_d with fixed location ``u``.

    ``u`` only matters for sampling; every information formula is ``u``-free.
    """
    if d < 1:
        raise ContractError("dimension must be >= 1")
    u = np.zeros(d) if u is None else np.asarray(u, dtype=float).reshape(d)

    return FamilyModel(
        name="gaussian",
        dim=d,
        cumulant=lambda s: -0.5 * mc.logdet_pd(s),
        mean_map=lambda s: -0.5 * mc.inv_pd(s),
        inverse_mean_map=lambda m: -0.5 * _neg_inv(mc.as_sym(m)),
        variance_function=lambda m: 2.0 * mc.kron(m, m),
        canonical_domain_test=mc.is_pd,
        mean_domain_test=lambda m: mc.is_pd(-np.asarray(m)),
        trace_constant=-d / 2.0,
        mean_cone_sign=-1,
        params=(("u", tuple(u.tolist())),),
    )


def location(fam: FamilyModel) -> NDArray[np.float64]:
    return np.array(dict(fam.params).get("u", (0.0,) * fam.dim), dtype=float)


def covariance_segment(C: ArrayLike, D: ArrayLike, theta0: float = 0.0, u: ArrayLike | None = None) -> SegmentModel:
    """Mean segment of the covariance model ``{N(u, theta*C + D)}``."""
    C = mc.as_sym(C)
    D = mc.as_sym(D)
    return SegmentModel(-0.5 * C, -0.5 * D, gaussian_family(C.shape[0], u), theta0)


def fisher_covariance(Sigma: ArrayLike) -> NDArray[np.float64]:
    """Information of ``{N(u, Sigma)}`` in ``Sigma``: pull ``J(m)`` back through ``m = -Sigma/2``."""
    Sigma = mc.as_sym(Sigma)
    d = Sigma.shape[0]
    jac = -0.5 * np.eye(d * d)
    return reparam_info(fisher_mean(gaussian_family(d), -0.5 * Sigma), jac)


def gaussian_segment_info_quadratic(C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """Generic quadratic-form route for the covariance segment, anchored at ``theta``."""
    require_pd_combination(C, D, theta)
    return info_theta_quadratic(covariance_segment(C, D, theta0=theta), theta)


def gaussian_segment_info_trace(C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """``J(theta) = 1/2 tr(C S^{-1} C S^{-1})`` with ``S = theta*C + D``."""
    C, _, S = require_pd_combination(C, D, theta)
    M = mc.solve_pd(S, C)
    return 0.5 * float(np.trace(M @ M))


def logdet_second_derivative(C: ArrayLike, D: ArrayLike, theta: float, rel_step: float = LOGDET_REL_STEP) -> float:
    """Central second difference of ``theta -> log det(theta*C + D)``.

    The step is ``rel_step * max(1, |theta|)``, halved while the stencil
    leaves the PD cone.
    """
    C, D, _ = require_pd_combination(C, D, theta)
    return second_difference(
        lambda t: mc.logdet_pd(t * C + D),
        theta,
        lambda t: mc.is_pd(t * C + D),
        rel_step,
    )


def gaussian_segment_info_logdet(C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """``J(theta) = -1/2 d^2/dtheta^2 log det(theta*C + D)``, by finite differences."""
    return -0.5 * logdet_second_derivative(C, D, theta)


def eigen_info_sum(a: ArrayLike, theta: float) -> float:
    """``sum_j (a_j / (1 + a_j*theta))^2``; raises :class:`PoleError` at a pole."""
    a = np.asarray(a, dtype=float)
    den = 1.0 + a * theta
    if np.any(np.abs(den) <= 1e-15 * np.maximum(1.0, np.abs(a * theta))):
        raise PoleError(f"1 + a_j*theta vanishes at theta={theta}")
    return float(np.sum((a / den) ** 2))


def gaussian_segment_info_eigen(C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """``J(theta) = 1/2 sum_j (a_j / (1 + a_j*theta))^2``, a the spectrum of D^{-1/2} C D^{-1/2}."""
    return 0.5 * eigen_info_sum(segment_spectrum(C, D), theta)


# -- structured examples ---------------------------------------------------


def circulant_matrix(d: int) -> NDArray[np.float64]:
    """Symmetric circulant matrix with first row ``e_2 + e_d``; needs ``d >= 3``."""
    if d < 3:
        raise ContractError("circulant direction needs d >= 3")
    A = np.zeros((d, d))
    for i in range(d):
        A[i, (i + 1) % d] = 1.0
        A[i, (i - 1) % d] = 1.0
    return A


def tridiagonal_matrix(d: int) -> NDArray[np.float64]:
    """Zero-diagonal tridiagonal matrix with unit off-diagonals; needs ``d >= 2``."""
    if d < 2:
        raise ContractError("tridiagonal direction is zero for d < 2")
    return np.eye(d, k=1) + np.eye(d, k=-1)


def circulant_eigenvalues(d: int) -> NDArray[np.float64]:
    if d < 3:
        raise ContractError("circulant direction needs d >= 3")
    return np.array([2.0 * math.cos(2.0 * math.pi * j / d) for j in range(d)])


def tridiagonal_eigenvalues(d: int) -> NDArray[np.float64]:
    if d < 2:
        raise ContractError("tridiagonal direction is zero for d < 2")
    return np.array([2.0 * math.cos(j * math.pi / (d + 1)) for j in range(1, d + 1)])


def structured_eigen_sum(a: NDArray[np.float64], theta: float) -> float:
    total = eigen_info_sum(a, theta)
    if np.any(1.0 + a * theta <= 0.0):
        raise DomainError(f"theta={theta} is outside the segment domain")
    return total


def circulant_info(d: int, theta: float) -> float:
    """Closed form for ``{N(0, theta*A + I)}`` with ``A`` the circulant matrix."""
    return 0.5 * structured_eigen_sum(circulant_eigenvalues(d), theta)


def tridiag_info(d: int, theta: float) -> float:
    """Closed form for ``{N(0, theta*C + I)}`` with ``C`` the tridiagonal matrix."""
    return 0.5 * structured_eigen_sum(tridiagonal_eigenvalues(d), theta)


# -- sufficient statistic --------------------------------------------------


def sufficient_statistics(x: ArrayLike, u: ArrayLike) -> NDArray[np.float64]:
    """``T(x_i) = -1/2 (x_i - u)(x_i - u)^T`` for each row of ``x``."""
    z = np.asarray(x, dtype=float) - np.asarray(u, dtype=float)
    return -0.5 * np.einsum("...i,...j->...ij", z, z)
