"""Noncentral Wishart family gamma(p, a; sigma).

cumulant ``k(s) = -p log det(-s) + tr(a (-s)^{-1})`` on ``s in -S_d^+``, with
``sigma = (-s)^{-1}``:

* mean        ``m = p sigma + sigma a sigma``
* covariance  ``v = p sigma(x)sigma + (sigma a sigma)(x)sigma + sigma(x)(sigma a sigma)``

For non-singular ``a`` the mean map is inverted in closed form. Every PD
``m`` then has a PD preimage, so the mean domain is taken to be ``S_d^+``.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from segfisher import matcalc as mc
from segfisher.errors import AdmissibilityError, DomainError, UnsupportedCaseError
from segfisher.expfam import FamilyModel
from segfisher.segment import SegmentModel, info_theta_quadratic
from segfisher.wishart import gindikin_check, is_half_integer

RANK_RTOL = 1e-10


def _psd_rank(a: NDArray[np.float64]) -> int:
    w = mc.eigh(a)[0]
    scale = max(float(np.max(np.abs(w))), 1e-300)
    if w[0] < -RANK_RTOL * scale:
        raise DomainError("noncentrality a must be positive semidefinite")
    return int(np.sum(w > RANK_RTOL * scale))


def _check_parameters(p: float, a: ArrayLike) -> NDArray[np.float64]:
    a = mc.as_sym(a)
    d = a.shape[0]
    if not gindikin_check(d, p):
        raise AdmissibilityError(f"p={p} is not in the Gindikin set for d={d}")
    rank = _psd_rank(a)
    if is_half_integer(p) and round(2 * p) < d - 1 and rank > round(2 * p):
        raise AdmissibilityError(f"a has rank {rank} > 2p={round(2 * p)}")
    return a


def nc_mean(p: float, a: ArrayLike, sigma: ArrayLike) -> NDArray[np.float64]:
    """``m = p sigma + sigma a sigma``."""
    a = mc.as_sym(a)
    sigma = mc.as_sym(sigma)
    if not mc.is_pd(sigma):
        raise DomainError("sigma must be positive definite")
    return mc.sym(p * sigma + sigma @ a @ sigma)


def nc_covariance(p: float, a: ArrayLike, sigma: ArrayLike) -> NDArray[np.float64]:
    """Kronecker form of ``k''(s)`` at ``s = -sigma^{-1}``, d^2 x d^2."""
    a = mc.as_sym(a)
    sigma = mc.as_sym(sigma)
    if not mc.is_pd(sigma):
        raise DomainError("sigma must be positive definite")
    sas = mc.sym(sigma @ a @ sigma)
    return mc.sym(p * mc.kron(sigma, sigma) + mc.kron(sas, sigma) + mc.kron(sigma, sas))


def nc_inverse_mean(p: float, a: ArrayLike, m: ArrayLike) -> NDArray[np.float64]:
    """Scale ``sigma`` with ``nc_mean(p, a, sigma) == m``, for non-singular ``a``.

    With ``X = a^{1/2} m a^{1/2}`` the matrix ``Y = a^{1/2} sigma a^{1/2}``
    solves ``Y^2 + p Y = X``, so
    ``sigma = -(p/2) a^{-1} + a^{-1/2} (X + p^2/4 I)^{1/2} a^{-1/2}``.
    The root is evaluated on the spectrum of ``X`` as
    ``x / (sqrt(x + p^2/4) + p/2)``, which avoids cancellation for small ``a``.

    Raises
    ------
    UnsupportedCaseError
        If ``a`` is singular.
    DomainError
        If ``m`` is not positive definite.
    """
    a = mc.as_sym(a)
    m = mc.as_sym(m)
    if not mc.is_pd(a):
        _psd_rank(a)
        raise UnsupportedCaseError("inverse mean map needs a non-singular noncentrality a")
    if not mc.is_pd(m):
        raise DomainError("mean must be positive definite")
    wa, Qa = mc.eigh(a)
    a_half = (Qa * np.sqrt(wa)) @ Qa.T
    a_mhalf = (Qa / np.sqrt(wa)) @ Qa.T
    x, Q = mc.eigh(mc.sym(a_half @ m @ a_half))
    y = x / (np.sqrt(x + p * p / 4.0) + p / 2.0)
    Y = (Q * y) @ Q.T
    return mc.sym(a_mhalf @ Y @ a_mhalf)


def nc_wishart_family(d: int, p: float, a: ArrayLike) -> FamilyModel:
    """Natural exponential family ``W(p, a; s) = gamma(p, a; (-s)^{-1})``."""
    a = _check_parameters(p, a)
    if a.shape != (d, d):
        raise DomainError(f"a must be {d}x{d}")
    p = float(p)

    def cumulant(s):
        neg = -np.asarray(s)
        return -p * mc.logdet_pd(neg) + float(np.trace(a @ mc.inv_pd(neg)))

    def mean_map(s):
        return nc_mean(p, a, mc.inv_pd(-np.asarray(s)))

    def inverse_mean_map(m):
        return -mc.inv_pd(nc_inverse_mean(p, a, m))

    def variance_function(m):
        return nc_covariance(p, a, nc_inverse_mean(p, a, m))

    return FamilyModel(
        name="ncwishart",
        dim=d,
        cumulant=cumulant,
        mean_map=mean_map,
        inverse_mean_map=inverse_mean_map,
        variance_function=variance_function,
        canonical_domain_test=lambda s: mc.is_pd(-np.asarray(s)),
        mean_domain_test=mc.is_pd,
        trace_constant=None,
        mean_cone_sign=1,
        params=(("p", p), ("a", tuple(map(tuple, a.tolist())))),
    )


def noncentrality(fam: FamilyModel) -> NDArray[np.float64]:
    return np.array(dict(fam.params)["a"], dtype=float)


def nc_segment_info(p: float, a: ArrayLike, A: ArrayLike, B: ArrayLike, theta: float) -> float:
    """``vec(A)^T V(theta*A + B)^{-1} vec(A)`` with ``V = v o psi``."""
    a = mc.as_sym(a)
    fam = nc_wishart_family(a.shape[0], p, a)
    m = theta * mc.as_sym(A) + mc.as_sym(B)
    if not mc.is_pd(m):
        raise DomainError(f"theta*A + B is not positive definite at theta={theta}")
    return info_theta_quadratic(SegmentModel(A, B, fam, theta0=theta), theta)


def nc_isotropic_info(p: float, d: int, alpha: float, beta: float, theta: float) -> float:
    """Closed form for ``a = I``, ``A = alpha I``, ``B = beta I``.

    ``alpha^2 d / ((p^2 + 2 mu) sqrt(mu + p^2/4) - 2 p mu - p^3/2)`` with
    ``mu = theta*alpha + beta``.
    """
    mu = theta * alpha + beta
    if mu <= 0:
        raise DomainError(f"theta*alpha + beta must be positive, got {mu}")
    den = (p * p + 2.0 * mu) * math.sqrt(mu + p * p / 4.0) - 2.0 * p * mu - p**3 / 2.0
    return alpha * alpha * d / den
