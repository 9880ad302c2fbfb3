"""Submodels parametrized by a segment of means ``m = theta * A + B``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular

from segfisher import matcalc as mc
from segfisher.errors import ContractError, DomainError, PreconditionError
from segfisher.expfam import FamilyModel, cholesky_inverse

ZERO_EIGENVALUE_TOL = 1e-12
FD_THETA_REL_STEP = 1e-4
MAX_STEP_HALVINGS = 60
STENCIL_CLEARANCE = 10.0


@dataclass(frozen=True)
class ThetaInterval:
    """Open interval ``(lower, upper)``; either end may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ContractError(f"empty interval ({self.lower}, {self.upper})")

    def __contains__(self, theta: float) -> bool:
        return self.lower < theta < self.upper

    def __str__(self) -> str:
        return f"({_fmt_end(self.lower)}, {_fmt_end(self.upper)})"

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)


def _fmt_end(x: float) -> str:
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return f"{x:.10g}"


@dataclass(frozen=True)
class SegmentModel:
    """The submodel ``{Q(theta*A + B): theta in Theta}`` of ``family``.

    ``theta0`` is an anchor with ``theta0*A + B`` in the mean domain; the
    reported domain is the connected component containing it.
    """

    A: NDArray[np.float64]
    B: NDArray[np.float64]
    family: FamilyModel
    theta0: float = 0.0

    def __post_init__(self):
        A = mc.as_sym(self.A)
        B = mc.as_sym(self.B)
        d = self.family.dim
        if A.shape != (d, d) or B.shape != (d, d):
            raise ContractError(f"A and B must be {d}x{d}")
        if not np.any(A):
            raise ContractError("segment direction A must be nonzero")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "theta0", float(self.theta0))
        if not self.family.mean_domain_test(self.mean(self.theta0)):
            raise DomainError(f"anchor theta0={self.theta0} is outside the mean domain")

    def mean(self, theta: float) -> NDArray[np.float64]:
        return theta * self.A + self.B


def segment_spectrum(C: ArrayLike, D: ArrayLike) -> NDArray[np.float64]:
    """Ascending eigenvalues of ``D^{-1/2} C D^{-1/2}`` for PD ``D``.

    Computed as the spectrum of the similar matrix ``L^{-1} C L^{-T}`` where
    ``D = L L^T``.
    """
    C = mc.as_sym(C)
    D = mc.as_sym(D)
    if C.shape != D.shape:
        raise ContractError(f"shape mismatch {C.shape} vs {D.shape}")
    L = mc.cholesky(D)
    W = solve_triangular(L, C, lower=True)
    W = solve_triangular(L, W.T, lower=True)
    return mc.eigh(mc.sym(W))[0]


def interval_from_spectrum(theta0: float, lam: NDArray[np.float64]) -> ThetaInterval:
    scale = max(1.0, float(np.max(np.abs(lam))))
    lam = np.where(np.abs(lam) < ZERO_EIGENVALUE_TOL * scale, 0.0, lam)
    pos = lam[lam > 0]
    neg = lam[lam < 0]
    lower = theta0 - 1.0 / pos.max() if pos.size else -math.inf
    upper = theta0 - 1.0 / neg.min() if neg.size else math.inf
    return ThetaInterval(lower, upper)


def segment_domain(seg: SegmentModel) -> ThetaInterval:
    """Open interval of ``theta`` for which ``theta*A + B`` stays in the mean domain.

    With ``R = theta0*A + B`` (sign-adjusted to be PD) and ``lambda_j`` the
    eigenvalues of ``R^{-1/2} A R^{-1/2}``, the interval is
    ``(theta0 - 1/max(lambda+), theta0 - 1/min(lambda-))``.
    """
    s = seg.family.mean_cone_sign
    lam = segment_spectrum(s * seg.A, s * seg.mean(seg.theta0))
    return interval_from_spectrum(seg.theta0, lam)


def pd_segment_domain(C: ArrayLike, D: ArrayLike, theta0: float = 0.0) -> ThetaInterval:
    """Interval of ``theta`` with ``theta*C + D`` PD, anchored at ``theta0``."""
    C = mc.as_sym(C)
    D = mc.as_sym(D)
    if not np.any(C):
        raise ContractError("segment direction must be nonzero")
    R = theta0 * C + D
    if not mc.is_pd(R):
        raise DomainError(f"theta0={theta0} does not give a PD matrix")
    return interval_from_spectrum(float(theta0), segment_spectrum(C, R))


def require_pd_combination(C: ArrayLike, D: ArrayLike, theta: float):
    """Validate ``theta*C + D`` is PD; return symmetrized ``C``, ``D`` and the combination."""
    C = mc.as_sym(C)
    D = mc.as_sym(D)
    if C.shape != D.shape:
        raise ContractError(f"shape mismatch {C.shape} vs {D.shape}")
    S = theta * C + D
    if not mc.is_pd(S):
        raise DomainError(f"theta*C + D is not positive definite at theta={theta}")
    return C, D, S


def _require_theta(seg: SegmentModel, theta: float) -> NDArray[np.float64]:
    m = seg.mean(theta)
    if not seg.family.mean_domain_test(m):
        raise DomainError(f"theta={theta} is outside the segment domain")
    return m


def info_theta_quadratic(seg: SegmentModel, theta: float) -> float:
    """``J(theta) = vec(A)^T V(theta*A + B)^{-1} vec(A)``."""
    m = _require_theta(seg, theta)
    V = seg.family.variance_function(m)
    a = mc.vec(seg.A)
    return float(a @ cholesky_inverse(V) @ a)


def second_difference(h_fun, theta: float, inside, rel_step: float) -> float:
    """Central second difference of ``h_fun`` at ``theta``.

    The step starts at ``rel_step * max(1, |theta|)`` and is halved until
    ``theta +- 10h`` both lie inside the domain, which keeps the truncation
    error small near a boundary.
    """
    h = rel_step * max(1.0, abs(theta))
    for _ in range(MAX_STEP_HALVINGS):
        reach = STENCIL_CLEARANCE * h
        if inside(theta - reach) and inside(theta + reach):
            return (h_fun(theta + h) - 2.0 * h_fun(theta) + h_fun(theta - h)) / h**2
        h *= 0.5
    raise DomainError(f"finite-difference stencil around theta={theta} leaves the domain")


def info_theta_cumulant(seg: SegmentModel, theta: float, rel_step: float = FD_THETA_REL_STEP) -> float:
    """``J(theta) = -d^2/dtheta^2 k(psi(theta*A + B))`` by central differences.

    Only valid when ``<m, psi(m)>`` is constant on the mean domain.
    """
    fam = seg.family
    if fam.trace_constant is None:
        raise PreconditionError(f"{fam.name}: <m, psi(m)> is not constant; cumulant route undefined")
    _require_theta(seg, theta)

    def h_fun(t: float) -> float:
        return fam.cumulant(fam.inverse_mean_map(seg.mean(t)))

    def inside(t: float) -> bool:
        return fam.mean_domain_test(seg.mean(t))

    return -second_difference(h_fun, theta, inside, rel_step)


def interior_grid(interval: ThetaInterval, count: int, margin: float = 0.1, anchor: float = 0.0) -> NDArray[np.float64]:
    """``count`` points strictly inside ``interval``, away from finite ends.

    A finite end is approached to within ``margin`` of the reference width; an
    infinite side is truncated at three times that width from ``anchor``.
    """
    lo, hi = interval.lower, interval.upper
    if interval.is_bounded:
        width = hi - lo
    elif math.isfinite(lo):
        width = max(abs(anchor - lo), 1.0)
        hi = anchor + 3.0 * width
    elif math.isfinite(hi):
        width = max(abs(hi - anchor), 1.0)
        lo = anchor - 3.0 * width
    else:
        width = 1.0
        lo, hi = anchor - 3.0, anchor + 3.0
    a = lo + margin * width if math.isfinite(interval.lower) else lo
    b = hi - margin * width if math.isfinite(interval.upper) else hi
    return np.linspace(a, b, count)
