"""Cross-formula and oracle checks behind ``segfisher verify``.

Each check compares two independent evaluations of the same quantity and
reports a relative residual against a tolerance. A fault can be injected into
the variance function of every family (``variance_fault``) as a negative
control: the quadratic-form route then disagrees with the closed forms.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from numpy.typing import NDArray

from segfisher import matcalc as mc
from segfisher.estimate import (
    RngStream,
    mc_score_covariance,
    sample_gaussian,
    sample_wishart,
)
from segfisher.expfam import FamilyModel, fd_gradient, fd_hessian
from segfisher.gaussian import (
    circulant_info,
    circulant_matrix,
    eigen_info_sum,
    gaussian_family,
    gaussian_segment_info_logdet,
    gaussian_segment_info_trace,
    sufficient_statistics,
    tridiag_info,
    tridiagonal_matrix,
)
from segfisher.segment import (
    SegmentModel,
    info_theta_quadratic,
    interior_grid,
    pd_segment_domain,
    segment_spectrum,
)
from segfisher.wishart import (
    wishart_circulant_info,
    wishart_family,
    wishart_segment_info_logdet,
    wishart_segment_info_trace,
)
from segfisher.wishart_noncentral import (
    nc_inverse_mean,
    nc_isotropic_info,
    nc_mean,
    nc_wishart_family,
)

FAMILIES = ("gaussian", "wishart", "ncwishart")
ROUTE_TOL = 1e-5
CLOSED_FORM_TOL = 1e-10
GRADIENT_TOL = 1e-5
HESSIAN_TOL = 1e-4
ROUNDTRIP_TOL = 1e-9
N_SE = 3.0


@dataclass(frozen=True)
class CheckResult:
    family: str
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)


def rel_err(x: float, ref: float) -> float:
    return abs(x - ref) / max(abs(ref), 1e-300)


def rel_err_matrix(X: NDArray[np.float64], ref: NDArray[np.float64]) -> float:
    return float(np.max(np.abs(X - ref)) / max(float(np.max(np.abs(ref))), 1e-300))


def with_variance_fault(fam: FamilyModel, factor: float) -> FamilyModel:
    """Copy of ``fam`` whose variance function is scaled by ``factor``."""
    V = fam.variance_function
    return dataclasses.replace(fam, variance_function=lambda m: factor * V(m))


# -- segment information routes ------------------------------------------------


def segment_info_routes(
    family: str,
    C: NDArray[np.float64],
    D: NDArray[np.float64],
    theta: float,
    p: float = 0.5,
    anchor: float = 0.0,
    fam: Optional[FamilyModel] = None,
) -> dict[str, float]:
    """``J(theta)`` of the covariance (Gaussian) or scale (Wishart) segment ``theta*C + D``.

    Four routes: the quadratic form through ``V(m)^{-1}``, the trace formula,
    a finite-difference second derivative of ``log det`` and the eigenvalue
    sum. The eigenvalue route uses the spectrum at ``anchor`` (where
    ``anchor*C + D`` must be PD), so ``D`` itself need not be PD.
    """
    d = C.shape[0]
    if family == "gaussian":
        fam = fam or gaussian_family(d)
        A, B, scale = -0.5 * C, -0.5 * D, 0.5
        trace = gaussian_segment_info_trace(C, D, theta)
        logdet = gaussian_segment_info_logdet(C, D, theta)
    elif family == "wishart":
        fam = fam or wishart_family(d, p)
        A, B, scale = p * C, p * D, p
        trace = wishart_segment_info_trace(p, C, D, theta)
        logdet = wishart_segment_info_logdet(p, C, D, theta)
    else:
        raise ValueError(f"no covariance-segment routes for family {family!r}")
    quadratic = info_theta_quadratic(SegmentModel(A, B, fam, theta0=theta), theta)
    a = segment_spectrum(C, anchor * C + D)
    eigen = scale * eigen_info_sum(a, theta - anchor)
    return {"quadratic": quadratic, "trace": trace, "logdet": logdet, "eigen": eigen}


def max_disagreement(routes: dict[str, float]) -> float:
    ref = routes["trace"]
    return max(rel_err(v, ref) for v in routes.values())


def random_pd_pair(d: int, rng: np.random.Generator) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Random symmetric ``C`` and well-conditioned PD ``D``."""
    G = rng.standard_normal((d, d))
    D = G @ G.T + d * np.eye(d)
    H = rng.standard_normal((d, d))
    return mc.sym(H + H.T), mc.sym(D)


# -- individual check groups ------------------------------------------------------


def _route_checks(family: str, p: float, fault: Optional[float], rng) -> list[CheckResult]:
    label = family if family == "gaussian" else f"wishart p={p}"
    out = []
    cases = [
        ("circulant d=4", circulant_matrix(4), np.eye(4)),
        ("tridiagonal d=3", tridiagonal_matrix(3), np.eye(3)),
    ]
    for k in range(3):
        d = 2 + k
        C, D = random_pd_pair(d, rng)
        cases.append((f"random d={d}", C, D))
    for name, C, D in cases:
        d = C.shape[0]
        fam = gaussian_family(d) if family == "gaussian" else wishart_family(d, p)
        if fault is not None:
            fam = with_variance_fault(fam, fault)
        worst = 0.0
        for theta in interior_grid(pd_segment_domain(C, D), 9):
            worst = max(worst, max_disagreement(segment_info_routes(family, C, D, float(theta), p, fam=fam)))
        out.append(CheckResult(label, f"four routes agree, {name}", worst, ROUTE_TOL))
    return out


def _anchor_checks(family: str, p: float) -> list[CheckResult]:
    if family == "gaussian":
        return [
            CheckResult("gaussian", "circulant d=4 theta=0 gives 4", rel_err(gaussian_segment_info_trace(circulant_matrix(4), np.eye(4), 0.0), 4.0), CLOSED_FORM_TOL),
            CheckResult("gaussian", "tridiagonal d=3 theta=0 gives 2", rel_err(gaussian_segment_info_trace(tridiagonal_matrix(3), np.eye(3), 0.0), 2.0), CLOSED_FORM_TOL),
            CheckResult("gaussian", "circulant closed form d=5 theta=0.2", rel_err(circulant_info(5, 0.2), gaussian_segment_info_trace(circulant_matrix(5), np.eye(5), 0.2)), CLOSED_FORM_TOL),
            CheckResult("gaussian", "tridiagonal closed form d=4 theta=-0.3", rel_err(tridiag_info(4, -0.3), gaussian_segment_info_trace(tridiagonal_matrix(4), np.eye(4), -0.3)), CLOSED_FORM_TOL),
        ]
    return [
        CheckResult(f"wishart p={p}", "circulant d=4 theta=0 gives 8p", rel_err(wishart_segment_info_trace(p, circulant_matrix(4), np.eye(4), 0.0), 8.0 * p), CLOSED_FORM_TOL),
        CheckResult(f"wishart p={p}", "circulant closed form d=6 theta=0.1", rel_err(wishart_circulant_info(p, 6, 0.1), wishart_segment_info_trace(p, circulant_matrix(6), np.eye(6), 0.1)), CLOSED_FORM_TOL),
    ]


def _half_shape_check(rng) -> CheckResult:
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 5))
        C, D = random_pd_pair(d, rng)
        iv = pd_segment_domain(C, D)
        theta = float(rng.choice(interior_grid(iv, 11)))
        worst = max(worst, rel_err(wishart_segment_info_trace(0.5, C, D, theta), gaussian_segment_info_trace(C, D, theta)))
    return CheckResult("wishart p=0.5", "p=1/2 matches the Gaussian", worst, 1e-12)


def _cumulant_checks(label: str, fam: FamilyModel, s: NDArray[np.float64]) -> list[CheckResult]:
    m = fam.mean_map(s)
    G = fd_gradient(fam.cumulant, s)
    H = fd_hessian(fam.cumulant, s, h=1e-4 * max(1.0, float(np.linalg.norm(s))))
    P = mc.symmetrizer(fam.dim)
    V = P @ fam.variance_function(m) @ P
    return [
        CheckResult(label, "mean map = gradient of cumulant", rel_err_matrix(m, G), GRADIENT_TOL),
        CheckResult(label, "variance function = Hessian of cumulant", rel_err_matrix(V, H), HESSIAN_TOL),
    ]


def _score_check(label: str, fam: FamilyModel, A, B, theta: float, stats) -> list[CheckResult]:
    info = info_theta_quadratic(SegmentModel(A, B, fam, theta0=theta), theta)
    sc = mc_score_covariance(fam, theta * A + B, stats, direction=A)
    return [
        CheckResult(label, "score variance within 3 SE of J(theta)", abs(float(sc.second_moment) - info) / float(sc.second_moment_se), N_SE),
        CheckResult(label, "score mean within 3 SE of zero", abs(float(sc.mean)) / float(sc.mean_se), N_SE),
    ]


def gaussian_checks(fault: Optional[float] = None, seed: int = 20240101, samples: int = 20000) -> list[CheckResult]:
    rng = RngStream(seed, 0).generator()
    out = _route_checks("gaussian", 0.5, fault, rng)
    out += _anchor_checks("gaussian", 0.5)
    fam = gaussian_family(3)
    if fault is not None:
        fam = with_variance_fault(fam, fault)
    S = np.array([[2.0, 0.3, 0.0], [0.3, 1.5, -0.2], [0.0, -0.2, 1.0]])
    out += _cumulant_checks("gaussian", fam, mc.inv_pd(S))
    A = -0.5 * np.diag([1.0, 2.0, 0.5])
    B = -0.5 * np.eye(3)
    x = sample_gaussian(np.zeros(3), -2.0 * (0.7 * A + B), samples, RngStream(seed, 1).generator())
    out += _score_check("gaussian", fam, A, B, 0.7, sufficient_statistics(x, np.zeros(3)))
    return out


def wishart_checks(fault: Optional[float] = None, seed: int = 20240102, samples: int = 20000) -> list[CheckResult]:
    rng = RngStream(seed, 0).generator()
    out = []
    for p in (0.5, 1.0, 2.5):
        out += _route_checks("wishart", p, fault, rng)
        out += _anchor_checks("wishart", p)
    out.append(_half_shape_check(rng))
    fam = wishart_family(2, 1.5)
    if fault is not None:
        fam = with_variance_fault(fam, fault)
    out += _cumulant_checks("wishart p=1.5", fam, -np.array([[1.0, 0.2], [0.2, 0.8]]))
    A = np.array([[1.0, 0.5], [0.5, 2.0]])
    B = np.eye(2)
    m = 1.0 * A + B
    stats = sample_wishart(1.5, m / 1.5, samples, RngStream(seed, 1).generator())
    out += _score_check("wishart p=1.5", fam, A, B, 1.0, stats)
    return out


def ncwishart_checks(fault: Optional[float] = None, seed: int = 20240103) -> list[CheckResult]:
    rng = RngStream(seed, 0).generator()
    a = np.array([[1.0, 0.3], [0.3, 0.5]])
    fam = nc_wishart_family(2, 1.0, a)
    if fault is not None:
        fam = with_variance_fault(fam, fault)
    out = _cumulant_checks("ncwishart p=1", fam, -np.array([[1.2, -0.1], [-0.1, 0.9]]))
    worst = 0.0
    for _ in range(10):
        G = rng.standard_normal((2, 2))
        sigma = G @ G.T + 0.5 * np.eye(2)
        m = nc_mean(1.0, a, sigma)
        worst = max(worst, rel_err_matrix(nc_mean(1.0, a, nc_inverse_mean(1.0, a, m)), m))
    out.append(CheckResult("ncwishart p=1", "inverse mean map round trip", worst, ROUNDTRIP_TOL))
    worst = 0.0
    for d, p in ((1, 1.0), (2, 2.0), (3, 1.0)):
        f = nc_wishart_family(d, p, np.eye(d))
        if fault is not None:
            f = with_variance_fault(f, fault)
        for theta in (0.0, 0.5, 2.0):
            seg = SegmentModel(np.eye(d), 0.5 * np.eye(d), f, theta0=theta)
            worst = max(worst, rel_err(info_theta_quadratic(seg, theta), nc_isotropic_info(p, d, 1.0, 0.5, theta)))
    out.append(CheckResult("ncwishart", "isotropic closed form", worst, 1e-8))
    return out


_GROUPS: dict[str, Callable[..., list[CheckResult]]] = {
    "gaussian": gaussian_checks,
    "wishart": wishart_checks,
    "ncwishart": ncwishart_checks,
}


def run_checks(families: Iterable[str] = FAMILIES, variance_fault: Optional[float] = None) -> list[CheckResult]:
    """Run the check groups of ``families`` in the fixed order gaussian, wishart, ncwishart."""
    wanted = set(families)
    unknown = wanted - set(FAMILIES)
    if unknown:
        raise ValueError(f"unknown families: {sorted(unknown)}")
    results = []
    for name in FAMILIES:
        if name in wanted:
            results += _GROUPS[name](fault=variance_fault)
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  [{r.family}] {r.name}: residual={r.residual:.3e} tol={r.tolerance:.1e}")
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)


__all__ = [
    "CheckResult",
    "FAMILIES",
    "format_report",
    "max_disagreement",
    "random_pd_pair",
    "run_checks",
    "segment_info_routes",
    "with_variance_fault",
]
