"""Central Wishart family gamma(p; sigma) generated by the Riesz measure mu_p.

Canonical parameter ``s = -sigma^{-1}``, mean ``m = p * sigma``. The scale
parametrization ``gamma(p; sigma)`` is the public one; a scale segment
``theta*C + D`` is the mean segment ``A = p*C``, ``B = p*D``.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from segfisher import matcalc as mc
from segfisher.errors import AdmissibilityError, ContractError, DomainError
from segfisher.expfam import FamilyModel
from segfisher.gaussian import (
    circulant_eigenvalues,
    eigen_info_sum,
    logdet_second_derivative,
    structured_eigen_sum,
    tridiagonal_eigenvalues,
)
from segfisher.segment import (
    SegmentModel,
    info_theta_quadratic,
    require_pd_combination,
    segment_spectrum,
)

_HALF_INT_TOL = 1e-12


def is_half_integer(p: float) -> bool:
    """True when ``2p`` is a positive integer."""
    two_p = 2.0 * p
    return two_p >= 1.0 - _HALF_INT_TOL and abs(two_p - round(two_p)) <= _HALF_INT_TOL


def gindikin_check(d: int, p: float) -> bool:
    """Membership of ``p`` in the Gindikin set {1/2, ..., (d-1)/2} U ((d-1)/2, inf)."""
    if d < 1 or not math.isfinite(p) or p <= 0:
        return False
    if p > (d - 1) / 2.0:
        return True
    return is_half_integer(p) and round(2.0 * p) <= d - 1


def _require_gindikin(d: int, p: float) -> None:
    if not gindikin_check(d, p):
        raise AdmissibilityError(f"p={p} is not in the Gindikin set for d={d}")


def wishart_family(d: int, p: float) -> FamilyModel:
    """Natural exponential family ``W(p; s)``, ``s`` in ``-S_d^+``.

    cumulant ``-p log det(-s)``, mean ``p (-s)^{-1}``, inverse mean
    ``-p m^{-1}``, variance ``(1/p) m (x) m``.
    """
    _require_gindikin(d, p)
    p = float(p)
    return FamilyModel(
        name="wishart",
        dim=d,
        cumulant=lambda s: -p * mc.logdet_pd(-np.asarray(s)),
        mean_map=lambda s: p * mc.inv_pd(-np.asarray(s)),
        inverse_mean_map=lambda m: -p * mc.inv_pd(m),
        variance_function=lambda m: mc.kron(m, m) / p,
        canonical_domain_test=lambda s: mc.is_pd(-np.asarray(s)),
        mean_domain_test=mc.is_pd,
        trace_constant=-p * d,
        mean_cone_sign=1,
        params=(("p", p),),
    )


def shape(fam: FamilyModel) -> float:
    return float(dict(fam.params)["p"])


def scale_segment(p: float, C: ArrayLike, D: ArrayLike, theta0: float = 0.0) -> SegmentModel:
    """Mean segment of ``{gamma(p; theta*C + D)}``."""
    C = mc.as_sym(C)
    D = mc.as_sym(D)
    return SegmentModel(p * C, p * D, wishart_family(C.shape[0], p), theta0)


def wishart_segment_info_trace(p: float, C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """``p tr((C (theta*C + D)^{-1})^2)``."""
    C, _, S = require_pd_combination(C, D, theta)
    _require_gindikin(C.shape[0], p)
    M = mc.solve_pd(S, C)
    return p * float(np.trace(M @ M))


def wishart_segment_info_logdet(p: float, C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """``-p d^2/dtheta^2 log det(theta*C + D)`` by finite differences."""
    _require_gindikin(mc.as_sym(C).shape[0], p)
    return -p * logdet_second_derivative(C, D, theta)


def wishart_segment_info_eigen(p: float, C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """``p sum_j (a_j / (1 + a_j*theta))^2`` with a the spectrum of D^{-1/2} C D^{-1/2}."""
    _require_gindikin(mc.as_sym(C).shape[0], p)
    return p * eigen_info_sum(segment_spectrum(C, D), theta)


def wishart_segment_info_quadratic(p: float, C: ArrayLike, D: ArrayLike, theta: float) -> float:
    require_pd_combination(C, D, theta)
    return info_theta_quadratic(scale_segment(p, C, D, theta0=theta), theta)


def wishart_segment_info(p: float, C: ArrayLike, D: ArrayLike, theta: float) -> float:
    """Information of ``{gamma(p; theta*C + D)}`` at ``theta`` (trace formula)."""
    return wishart_segment_info_trace(p, C, D, theta)


def wishart_two_scale_info(p: float, sigma1: ArrayLike, sigma2: ArrayLike, theta: float) -> float:
    """Information of ``{gamma(p; theta*sigma1 + (1 - theta)*sigma2)}``.

    Evaluated directly as ``p tr(((sigma1 - sigma2) sigma_theta^{-1})^2)``.
    """
    s1 = mc.as_sym(sigma1)
    s2 = mc.as_sym(sigma2)
    if s1.shape != s2.shape:
        raise ContractError(f"shape mismatch {s1.shape} vs {s2.shape}")
    _require_gindikin(s1.shape[0], p)
    diff = s1 - s2
    if not np.any(diff):
        raise ContractError("sigma1 == sigma2 gives a zero segment direction")
    s_theta = theta * s1 + (1.0 - theta) * s2
    if not mc.is_pd(s_theta):
        raise DomainError(f"sigma_theta is not positive definite at theta={theta}")
    M = diff @ mc.inv_pd(s_theta)
    return p * float(np.trace(M @ M))


def wishart_circulant_info(p: float, d: int, theta: float) -> float:
    """Closed form for ``{gamma(p; theta*A + I)}``, ``A`` circulant."""
    _require_gindikin(d, p)
    return p * structured_eigen_sum(circulant_eigenvalues(d), theta)


def wishart_tridiag_info(p: float, d: int, theta: float) -> float:
    """Closed form for ``{gamma(p; theta*C + I)}``, ``C`` tridiagonal."""
    _require_gindikin(d, p)
    return p * structured_eigen_sum(tridiagonal_eigenvalues(d), theta)


def laplace_transform(p: float, sigma: ArrayLike, t: ArrayLike) -> float:
    """``E exp(-tr(t X)) = det(I + sigma t)^{-p}`` for ``X ~ gamma(p; sigma)``."""
    sigma = mc.as_sym(sigma)
    t = mc.as_sym(t)
    sign, logdet = np.linalg.slogdet(np.eye(sigma.shape[0]) + sigma @ t)
    if sign <= 0:
        raise DomainError("I + sigma t must have positive determinant")
    return math.exp(-p * logdet)
