"""Sampling, segment estimators and Monte Carlo efficiency experiments.

Every stochastic routine takes an explicit ``numpy.random.Generator``. The
experiment harness derives one counter-based (Philox) stream per replicate
from ``(seed, replicate_index)``, so results do not depend on how replicates
are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from segfisher import matcalc as mc
from segfisher.errors import ContractError, DomainError, UnsupportedCaseError
from segfisher.expfam import FamilyModel, fisher_mean
from segfisher.gaussian import gaussian_family, sufficient_statistics
from segfisher.segment import SegmentModel, info_theta_quadratic
from segfisher.wishart import gindikin_check, is_half_integer, wishart_family
from segfisher.wishart_noncentral import nc_inverse_mean, nc_wishart_family

MIN_REPLICATES_FOR_VARIANCE = 1000
N_SE = 3.0


@dataclass(frozen=True)
class RngStream:
    """Reproducible Philox stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ContractError("rng must be an RngStream or numpy Generator")


# -- samplers ----------------------------------------------------------------


def sample_gaussian(u: ArrayLike, Sigma: ArrayLike, n: int, rng) -> NDArray[np.float64]:
    """``n`` draws of N(u, Sigma) as an ``(n, d)`` array."""
    Sigma = mc.as_sym(Sigma)
    u = np.asarray(u, dtype=float).reshape(Sigma.shape[0])
    return u + _gaussian_noise(mc.cholesky(Sigma), n, _as_generator(rng))


def _gaussian_noise(L, n, gen):
    return gen.standard_normal((n, L.shape[0])) @ L.T


def sample_wishart(p: float, sigma: ArrayLike, n: int, rng) -> NDArray[np.float64]:
    """``n`` draws of gamma(p; sigma) as an ``(n, d, d)`` array.

    Uses the Bartlett decomposition when ``p > (d-1)/2``; otherwise ``2p`` must
    be an integer and each draw is a sum of ``2p`` Gaussian outer products.
    Note gamma(p; sigma) is the classical Wishart with ``2p`` degrees of
    freedom and scale ``sigma/2``.
    """
    return _wishart_sampler(p, sigma)(n, _as_generator(rng))


def _wishart_sampler(p: float, sigma: ArrayLike):
    sigma = mc.as_sym(sigma)
    d = sigma.shape[0]
    if not gindikin_check(d, p):
        raise DomainError(f"p={p} is not in the Gindikin set for d={d}")
    L = mc.cholesky(sigma / 2.0)
    if p > (d - 1) / 2.0:

        def draw(n, gen):
            T = np.zeros((n, d, d))
            for i in range(d):
                T[:, i, i] = np.sqrt(gen.chisquare(2.0 * p - i, size=n))
                if i:
                    T[:, i, :i] = gen.standard_normal((n, i))
            F = L @ T
            return mc.sym(F @ np.swapaxes(F, 1, 2))

    elif is_half_integer(p):
        k = int(round(2 * p))

        def draw(n, gen):
            F = np.swapaxes(gen.standard_normal((n, k, d)) @ L.T, 1, 2)
            return mc.sym(F @ np.swapaxes(F, 1, 2))

    else:
        raise UnsupportedCaseError(f"cannot sample singular Wishart with p={p}")
    return draw


def sample_nc_wishart(p: float, a: ArrayLike, sigma: ArrayLike, count: int, rng) -> NDArray[np.float64]:
    """``count`` draws of gamma(p, a; sigma) for ``2p`` a positive integer.

    Each draw is ``sum_j Y_j Y_j^T`` with ``Y_j ~ N(M_j, sigma/2)`` and
    ``M M^T = sigma a sigma``.
    """
    return _nc_wishart_sampler(p, a, sigma)(count, _as_generator(rng))


def _nc_wishart_sampler(p: float, a: ArrayLike, sigma: ArrayLike):
    if not is_half_integer(p):
        raise UnsupportedCaseError("noncentral sampling needs 2p to be an integer")
    a = mc.as_sym(a)
    sigma = mc.as_sym(sigma)
    d = sigma.shape[0]
    k = int(round(2 * p))
    w, Q = mc.eigh(mc.sym(sigma @ a @ sigma))
    scale = max(float(np.max(np.abs(w))), 1e-300)
    if w[0] < -1e-10 * scale:
        raise DomainError("noncentrality a must be positive semidefinite")
    keep = w > 1e-10 * scale
    if int(keep.sum()) > k:
        raise UnsupportedCaseError(f"rank of a exceeds 2p={k}")
    M = np.zeros((d, k))
    r = int(keep.sum())
    M[:, :r] = Q[:, keep] * np.sqrt(w[keep])
    L = mc.cholesky(sigma / 2.0)

    def draw(count, gen):
        Y = M + L @ gen.standard_normal((count, d, k))
        return mc.sym(Y @ np.swapaxes(Y, 1, 2))

    return draw


# -- estimators and bounds -----------------------------------------------------


def _checked_pairing(A: NDArray[np.float64], C: NDArray[np.float64]) -> float:
    ac = mc.inner(A, C)
    if abs(ac) <= 1e-14 * np.linalg.norm(A) * np.linalg.norm(C):
        raise ContractError("<A, C> must be nonzero")
    return ac


def theta_hat(C: ArrayLike, A: ArrayLike, B: ArrayLike, stats: ArrayLike) -> float:
    """``<Xbar - B, C> / <A, C>``.

    ``stats`` is either the sample mean of the sufficient statistics, a
    ``(d, d)`` matrix, or the individual statistics as ``(n, d, d)``. For
    Gaussian data the statistics are ``T(x) = -1/2 (x - u)(x - u)^T``.
    """
    A = mc.as_sym(A)
    B = mc.as_sym(B)
    C = mc.as_sym(C)
    ac = _checked_pairing(A, C)
    stats = np.asarray(stats, dtype=float)
    xbar = stats.mean(axis=0) if stats.ndim == 3 else stats
    return mc.inner(xbar - B, C) / ac


def theta_hat_variance(fam: FamilyModel, A: ArrayLike, B: ArrayLike, C: ArrayLike, theta: float, n: int) -> float:
    """Exact ``Var theta_hat_C = vec(C)^T V(theta*A + B) vec(C) / (n <A, C>^2)``."""
    A = mc.as_sym(A)
    C = mc.as_sym(C)
    m = fam.require_mean(theta * A + mc.as_sym(B))
    ac = _checked_pairing(A, C)
    c = mc.vec(C)
    return float(c @ fam.variance_function(m) @ c) / (n * ac * ac)


def cramer_rao_bound(fam: FamilyModel, A: ArrayLike, B: ArrayLike, theta: float, n: int) -> float:
    """``1 / (n J(theta))`` for the segment ``theta*A + B``."""
    seg = SegmentModel(A, B, fam, theta0=theta)
    return 1.0 / (n * info_theta_quadratic(seg, theta))


@dataclass(frozen=True)
class ScoreSummary:
    """Empirical first two moments of the score, with standard errors."""

    mean: NDArray[np.float64]
    mean_se: NDArray[np.float64]
    second_moment: NDArray[np.float64]
    second_moment_se: NDArray[np.float64]
    samples: int


def mc_score_covariance(
    fam: FamilyModel,
    point: ArrayLike,
    stats: ArrayLike,
    direction: Optional[ArrayLike] = None,
    parametrization: str = "mean",
) -> ScoreSummary:
    """Monte Carlo estimate of ``E[score score^T]`` from sufficient statistics.

    Scores at the true parameter:

    * ``"canonical"``: ``point`` is ``s``; score ``vec(T - k'(s))``.
    * ``"mean"``: ``point`` is ``m``; score ``J(m) vec(T - m)``.

    With a segment ``direction`` ``A`` (mean parametrization only) the score is
    the scalar ``vec(A)^T J(m) vec(T - m)`` and all moments are scalars.
    """
    stats = np.asarray(stats, dtype=float)
    N = stats.shape[0]
    if parametrization == "canonical":
        s = fam.require_canonical(point)
        m = fam.mean_map(s)
        Z = _vec_rows(stats - m)
    elif parametrization == "mean":
        m = fam.require_mean(point)
        Z = _vec_rows(stats - m) @ fisher_mean(fam, m)
    else:
        raise ContractError(f"unknown parametrization {parametrization!r}")
    if direction is not None:
        if parametrization != "mean":
            raise ContractError("a segment direction needs the mean parametrization")
        Z = Z @ mc.vec(direction)
        prod = Z * Z
        return ScoreSummary(
            mean=np.float64(Z.mean()),
            mean_se=np.float64(Z.std(ddof=1) / math.sqrt(N)),
            second_moment=np.float64(prod.mean()),
            second_moment_se=np.float64(prod.std(ddof=1) / math.sqrt(N)),
            samples=N,
        )
    prod = np.einsum("ni,nj->nij", Z, Z)
    return ScoreSummary(
        mean=Z.mean(axis=0),
        mean_se=Z.std(axis=0, ddof=1) / math.sqrt(N),
        second_moment=prod.mean(axis=0),
        second_moment_se=prod.std(axis=0, ddof=1) / math.sqrt(N),
        samples=N,
    )


def _vec_rows(X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Row ``i`` is ``vec(X[i])``."""
    return np.swapaxes(X, 1, 2).reshape(X.shape[0], -1)


# -- efficiency experiments ----------------------------------------------------

FAMILIES = ("gaussian", "wishart", "ncwishart")


@dataclass(frozen=True)
class McExperiment:
    """Monte Carlo configuration on a mean segment ``theta*A + B``.

    ``estimator_C=None`` selects ``C = A^{-1}``.
    """

    family: str
    A: NDArray[np.float64]
    B: NDArray[np.float64]
    theta: float
    n: int
    replicates: int
    seed: int
    p: Optional[float] = None
    a: Optional[NDArray[np.float64]] = None
    u: Optional[NDArray[np.float64]] = None
    estimator_C: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ContractError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.family != "gaussian" and self.p is None:
            raise ContractError(f"{self.family} needs a shape parameter p")
        if self.family == "ncwishart" and self.a is None:
            raise ContractError("ncwishart needs a noncentrality matrix a")
        if self.n < 1 or self.replicates < 2:
            raise ContractError("need n >= 1 and replicates >= 2")
        object.__setattr__(self, "A", mc.as_sym(self.A))
        object.__setattr__(self, "B", mc.as_sym(self.B))
        object.__setattr__(self, "theta", float(self.theta))
        if self.estimator_C is not None:
            object.__setattr__(self, "estimator_C", mc.as_sym(self.estimator_C))
        self.segment()  # validates theta inside the domain

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def family_model(self) -> FamilyModel:
        if self.family == "gaussian":
            return gaussian_family(self.dim, self.location())
        if self.family == "wishart":
            return wishart_family(self.dim, self.p)
        return nc_wishart_family(self.dim, self.p, self.a)

    def segment(self) -> SegmentModel:
        return SegmentModel(self.A, self.B, self.family_model(), theta0=self.theta)

    def location(self) -> NDArray[np.float64]:
        return np.zeros(self.dim) if self.u is None else np.asarray(self.u, dtype=float)

    def estimator(self) -> NDArray[np.float64]:
        if self.estimator_C is not None:
            return self.estimator_C
        try:
            return mc.sym(np.linalg.inv(self.A))
        except np.linalg.LinAlgError as exc:
            raise ContractError("A is singular; estimator C = A^{-1} undefined") from exc

    def statistic_sampler(self):
        """``(n, gen) -> (n, d, d)`` sufficient statistics at the true mean ``theta*A + B``."""
        m = self.theta * self.A + self.B
        if self.family == "gaussian":
            L = mc.cholesky(-2.0 * m)
            return lambda n, gen: sufficient_statistics(_gaussian_noise(L, n, gen), 0.0)
        if self.family == "wishart":
            return _wishart_sampler(self.p, m / self.p)
        return _nc_wishart_sampler(self.p, self.a, nc_inverse_mean(self.p, self.a, m))

    def draw_statistics(self, gen: np.random.Generator) -> NDArray[np.float64]:
        return self.statistic_sampler()(self.n, gen)

    @classmethod
    def from_dict(cls, cfg: dict[str, Any]) -> "McExperiment":
        """Build from a JSON-style dict (matrices in the matcalc JSON format).

        The segment is given either as a mean segment ``A``/``B`` or, for the
        Gaussian and central Wishart families, as a covariance/scale segment
        ``C``/``D``. ``estimator_C`` is a matrix or the string ``"inverseA"``.
        """
        try:
            family = cfg["family"]
            p = None if cfg.get("p") is None else float(cfg["p"])
            if "A" in cfg:
                A = mc.matrix_from_json(cfg["A"], symmetric=True)
                B = mc.matrix_from_json(cfg["B"], symmetric=True)
            elif "C" in cfg:
                C = mc.matrix_from_json(cfg["C"], symmetric=True)
                D = mc.matrix_from_json(cfg["D"], symmetric=True)
                if family == "gaussian":
                    A, B = -0.5 * C, -0.5 * D
                elif family == "wishart" and p is not None:
                    A, B = p * C, p * D
                else:
                    raise ContractError("C/D segments need family gaussian, or wishart with p")
            else:
                raise ContractError("config needs A/B or C/D")
            est = cfg.get("estimator_C", "inverseA")
            est_C = None if est in (None, "inverseA") else mc.matrix_from_json(est, symmetric=True)
            a = None if cfg.get("a") is None else mc.matrix_from_json(cfg["a"], symmetric=True)
            u = None if cfg.get("u") is None else np.asarray(cfg["u"], dtype=float).reshape(-1)
            return cls(
                family=family,
                A=A,
                B=B,
                theta=float(cfg["theta"]),
                n=int(cfg["n"]),
                replicates=int(cfg["replicates"]),
                seed=int(cfg["seed"]),
                p=p,
                a=a,
                u=u,
                estimator_C=est_C,
            )
        except KeyError as exc:
            raise ContractError(f"missing config key {exc}") from exc


def collinear_offset(A: NDArray[np.float64], B: NDArray[np.float64], rtol: float = 1e-12) -> Optional[float]:
    """``c`` with ``B == c*A`` (to ``rtol``), or ``None``."""
    c = mc.inner(A, B) / mc.inner(A, A)
    if np.linalg.norm(B - c * A) <= rtol * max(1.0, np.linalg.norm(B)):
        return float(c)
    return None


def _proportional(X: NDArray[np.float64], Y: NDArray[np.float64], rtol: float = 1e-10) -> bool:
    k = mc.inner(X, Y) / mc.inner(Y, Y)
    return k != 0 and np.linalg.norm(X - k * Y) <= rtol * np.linalg.norm(X)


@dataclass(frozen=True)
class McSummary:
    family: str
    theta: float
    n: int
    replicates: int
    seed: int
    estimator_mean: float
    estimator_mean_se: float
    bias: float
    estimator_variance: float
    estimator_variance_se: float
    theoretical_variance: float
    cramer_rao_bound: float
    efficiency_ratio: float
    efficiency_ratio_se: float
    hypothesis: str
    efficient: Optional[bool]
    efficient_label: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "theta": self.theta,
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "estimator_mean": self.estimator_mean,
            "estimator_mean_se": self.estimator_mean_se,
            "bias": self.bias,
            "estimator_variance": self.estimator_variance,
            "estimator_variance_se": self.estimator_variance_se,
            "theoretical_variance": self.theoretical_variance,
            "cramer_rao_bound": self.cramer_rao_bound,
            "efficiency_ratio": self.efficiency_ratio,
            "efficiency_ratio_se": self.efficiency_ratio_se,
            "hypothesis": self.hypothesis,
            "efficient": self.efficient_label,
            "diagnostics": dict(self.diagnostics),
        }


def simulate_theta_hats(exp: McExperiment) -> NDArray[np.float64]:
    """One ``theta_hat`` per replicate, replicate ``r`` drawn from stream ``(seed, r)``."""
    C = exp.estimator()
    ac = _checked_pairing(exp.A, C)
    offset = mc.inner(exp.B, C)
    draw = exp.statistic_sampler()
    out = np.empty(exp.replicates)
    for r in range(exp.replicates):
        xbar = draw(exp.n, RngStream(exp.seed, r).generator()).mean(axis=0)
        out[r] = (mc.inner(xbar, C) - offset) / ac
    return out


def run_efficiency_experiment(exp: McExperiment) -> McSummary:
    """Simulate ``theta_hat_C`` and compare its variance with the exact value and the bound."""
    fam = exp.family_model()
    C = exp.estimator()
    est = simulate_theta_hats(exp)
    R = exp.replicates
    mean = float(est.mean())
    var = float(est.var(ddof=1))
    m4 = float(np.mean((est - mean) ** 4))
    var_se = math.sqrt(max(m4 - var * var, 0.0) / R)
    theo = theta_hat_variance(fam, exp.A, exp.B, C, exp.theta, exp.n)
    crb = cramer_rao_bound(fam, exp.A, exp.B, exp.theta, exp.n)
    ratio = crb / var
    ratio_se = ratio * var_se / var

    c = collinear_offset(exp.A, exp.B)
    invertible = abs(np.linalg.det(exp.A)) > 0
    uses_inverse = invertible and _proportional(C, np.linalg.inv(exp.A))
    diagnostics: dict[str, Any] = {}
    if exp.family != "ncwishart" and invertible:
        Ainv = np.linalg.inv(exp.A)
        m = exp.theta * exp.A + exp.B
        D_theta = m @ Ainv @ m @ Ainv
        d = exp.dim
        diagnostics = {
            "trace_D_over_d2": float(np.trace(D_theta)) / d**2,
            "inverse_trace_D_inv": 1.0 / float(np.trace(np.linalg.inv(D_theta))),
        }
    if exp.family != "ncwishart" and c is not None and uses_inverse:
        hypothesis = "B=cA, C=A^-1"
        diagnostics["c"] = c
        if R < MIN_REPLICATES_FOR_VARIANCE:
            efficient, label = None, "n/a (fewer than 1000 replicates)"
        else:
            efficient = abs(ratio - 1.0) <= N_SE * ratio_se
            label = "true" if efficient else "false"
    else:
        hypothesis = "none"
        efficient, label = None, "n/a (open question)"

    return McSummary(
        family=exp.family,
        theta=exp.theta,
        n=exp.n,
        replicates=R,
        seed=exp.seed,
        estimator_mean=mean,
        estimator_mean_se=math.sqrt(var / R),
        bias=mean - exp.theta,
        estimator_variance=var,
        estimator_variance_se=var_se,
        theoretical_variance=theo,
        cramer_rao_bound=crb,
        efficiency_ratio=ratio,
        efficiency_ratio_se=ratio_se,
        hypothesis=hypothesis,
        efficient=efficient,
        efficient_label=label,
        diagnostics=diagnostics,
    )


# -- exact rational comparison -------------------------------------------------


def _frac_matrix(X) -> list[list[Fraction]]:
    return [[Fraction(v) for v in row] for row in np.asarray(X, dtype=object).tolist()]


def _frac_inverse(M: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(M)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise DomainError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv_p = 1 / aug[col][col]
        aug[col] = [v * inv_p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _frac_mul(X, Y):
    return [[sum((X[i][k] * Y[k][j] for k in range(len(Y))), Fraction(0)) for j in range(len(Y[0]))] for i in range(len(X))]


def _frac_trace(X) -> Fraction:
    return sum((X[i][i] for i in range(len(X))), Fraction(0))


def exact_variance_and_bound(p, A, B, C, theta, n: int = 1) -> tuple[Fraction, Fraction]:
    """Exact ``(Var theta_hat_C, 1/(n J(theta)))`` in rational arithmetic.

    For a variance function ``V(m) = (1/p) m (x) m`` (Wishart with shape
    ``p``; the Gaussian family is ``p = 1/2``) the two quantities reduce to
    ``tr(mCmC) / (p n <A,C>^2)`` and ``1 / (n p tr(m^{-1} A m^{-1} A))``.
    Entries of ``A``, ``B``, ``C`` and ``theta``, ``p`` must be exact
    (ints or ``Fraction``).
    """
    p, theta = Fraction(p), Fraction(theta)
    A, B, C = _frac_matrix(A), _frac_matrix(B), _frac_matrix(C)
    d = len(A)
    m = [[theta * A[i][j] + B[i][j] for j in range(d)] for i in range(d)]
    ac = sum((A[i][j] * C[i][j] for i in range(d) for j in range(d)), Fraction(0))
    if ac == 0:
        raise ContractError("<A, C> must be nonzero")
    mC = _frac_mul(m, C)
    var = _frac_trace(_frac_mul(mC, mC)) / (p * n * ac * ac)
    mA = _frac_mul(_frac_inverse(m), A)
    info = p * _frac_trace(_frac_mul(mA, mA))
    return var, 1 / (n * info)
