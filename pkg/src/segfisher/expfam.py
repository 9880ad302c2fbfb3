"""Family-agnostic Fisher information for exponential families on S_d.

A :class:`FamilyModel` bundles the closed forms of one concrete family: the
cumulant function ``k`` on the canonical domain, the mean map ``k'``, its
inverse ``psi`` and the variance function ``V(m) = k''(psi(m))``.

Information matrices act on ``vec`` coordinates of d x d matrices, so they are
d^2 x d^2. The Kronecker forms used for ``V`` (``m (x) m`` and friends) agree
with the true covariance of ``vec(X)`` on the symmetric subspace; the true
covariance of a symmetric random matrix is ``P V P`` with ``P`` the
symmetrizer. Every scalar quantity built from symmetric directions is the
same under either convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg as sla

from segfisher import matcalc as mc
from segfisher.errors import ContractError, DomainError, NumericalError

Matrix = NDArray[np.float64]

FD_REL_STEP = 1e-5
TRACE_CONDITION_TOL = 1e-9


@dataclass(frozen=True)
class FamilyModel:
    """Behavioral description of an exponential family on S_d.

    ``mean_cone_sign`` records the affine sign convention of the mean domain:
    the mean domain is ``sign * S_d^+`` for the Gaussian (``-1``) and Wishart
    (``+1``) families.
    """

    name: str
    dim: int
    cumulant: Callable[[Matrix], float]
    mean_map: Callable[[Matrix], Matrix]
    inverse_mean_map: Callable[[Matrix], Matrix]
    variance_function: Callable[[Matrix], Matrix]
    canonical_domain_test: Callable[[Matrix], bool]
    mean_domain_test: Callable[[Matrix], bool]
    trace_constant: Optional[float] = None
    mean_cone_sign: int = 1
    params: tuple = ()

    def require_mean(self, m: ArrayLike) -> Matrix:
        m = mc.as_sym(m)
        if m.shape != (self.dim, self.dim):
            raise ContractError(f"expected a {self.dim}x{self.dim} mean, got {m.shape}")
        if not self.mean_domain_test(m):
            raise DomainError(f"point is outside the mean domain of the {self.name} family")
        return m

    def require_canonical(self, s: ArrayLike) -> Matrix:
        s = mc.as_sym(s)
        if s.shape != (self.dim, self.dim):
            raise ContractError(f"expected a {self.dim}x{self.dim} parameter, got {s.shape}")
        if not self.canonical_domain_test(s):
            raise DomainError(f"point is outside the canonical domain of the {self.name} family")
        return s


def cholesky_inverse(V: Matrix) -> Matrix:
    try:
        L = mc.cholesky(mc.sym(V))
    except DomainError as exc:
        raise NumericalError("variance function is numerically singular") from exc
    return mc.sym(sla.cho_solve((L, True), np.eye(V.shape[0])))


def fisher_canonical(fam: FamilyModel, s: ArrayLike) -> Matrix:
    """Information in the canonical parameter: ``I(s) = k''(s) = V(k'(s))``."""
    s = fam.require_canonical(s)
    return mc.sym(fam.variance_function(fam.mean_map(s)))


def fisher_mean(fam: FamilyModel, m: ArrayLike) -> Matrix:
    """Information in the mean parameter: ``J(m) = V(m)^{-1}``.

    The inverse is taken through a Cholesky factorization of the closed-form
    variance function.
    """
    m = fam.require_mean(m)
    return cholesky_inverse(fam.variance_function(m))


def reparam_info(inner_info: ArrayLike, jacobian: ArrayLike) -> Matrix | float:
    """Pull information back through a reparametrization: ``f'^T I f'``.

    A 1-D ``jacobian`` (e.g. ``vec(A)`` for a segment) yields a scalar.
    """
    info = np.asarray(inner_info, dtype=float)
    jac = np.asarray(jacobian, dtype=float)
    if info.ndim != 2 or info.shape[0] != info.shape[1]:
        raise ContractError(f"information must be square, got {info.shape}")
    if jac.ndim == 1:
        if jac.shape[0] != info.shape[0]:
            raise ContractError(f"jacobian length {jac.shape[0]} != {info.shape[0]}")
        return float(jac @ info @ jac)
    if jac.ndim != 2 or jac.shape[0] != info.shape[0]:
        raise ContractError(f"jacobian shape {jac.shape} incompatible with {info.shape}")
    return mc.sym(jac.T @ info @ jac)


def check_trace_condition(fam: FamilyModel, probes: Iterable[ArrayLike]) -> Optional[float]:
    """Return ``C`` if ``<m, psi(m)>`` is the same constant on every probe, else ``None``."""
    values = []
    for m in probes:
        m = fam.require_mean(m)
        values.append(mc.inner(m, fam.inverse_mean_map(m)))
    if not values:
        raise ContractError("at least one probe is required")
    ref = values[0]
    tol = TRACE_CONDITION_TOL * max(1.0, abs(ref))
    if all(abs(v - ref) <= tol for v in values):
        return float(np.mean(values))
    return None


# -- finite-difference oracles ---------------------------------------------


def fd_step(x: ArrayLike, rel: float = FD_REL_STEP) -> float:
    return rel * max(1.0, float(np.linalg.norm(np.asarray(x, dtype=float))))


def fd_gradient(fun: Callable[[Matrix], float], x: ArrayLike, h: float | None = None) -> Matrix:
    """Central-difference gradient of a scalar function of a symmetric matrix.

    ``fun`` is evaluated at symmetrized perturbations, so the result is the
    symmetric gradient ``G`` with ``dfun(u) = <G, u>``.
    """
    x = mc.as_sym(x)
    h = fd_step(x) if h is None else h
    d = x.shape[0]
    G = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = h
            G[i, j] = (fun(mc.sym(x + E)) - fun(mc.sym(x - E))) / (2.0 * h)
    return G


def fd_hessian(fun: Callable[[Matrix], float], x: ArrayLike, h: float | None = None) -> Matrix:
    """Central-difference Hessian in ``vec`` coordinates, d^2 x d^2.

    Because perturbations are symmetrized, the result approximates
    ``P k'' P`` where ``P`` is :func:`segfisher.matcalc.symmetrizer`.
    """
    x = mc.as_sym(x)
    h = fd_step(x) if h is None else h
    d = x.shape[0]
    n = d * d
    basis = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        basis.append(mc.unvec(e, d))
    f0 = fun(x)
    H = np.empty((n, n))
    for a in range(n):
        fpa = fun(mc.sym(x + basis[a]))
        fma = fun(mc.sym(x - basis[a]))
        H[a, a] = (fpa - 2.0 * f0 + fma) / h**2
        for b in range(a + 1, n):
            fpp = fun(mc.sym(x + basis[a] + basis[b]))
            fpm = fun(mc.sym(x + basis[a] - basis[b]))
            fmp = fun(mc.sym(x - basis[a] + basis[b]))
            fmm = fun(mc.sym(x - basis[a] - basis[b]))
            H[a, b] = H[b, a] = (fpp - fpm - fmp + fmm) / (4.0 * h**2)
    return H


def fd_jacobian(fun: Callable[[Matrix], Matrix], x: ArrayLike, h: float | None = None) -> Matrix:
    """Central-difference Jacobian ``vec(fun)'`` in ``vec`` coordinates (symmetrized inputs)."""
    x = mc.as_sym(x)
    h = fd_step(x) if h is None else h
    d = x.shape[0]
    n = d * d
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        E = mc.unvec(e, d)
        cols.append((mc.vec(fun(mc.sym(x + E))) - mc.vec(fun(mc.sym(x - E)))) / (2.0 * h))
    return np.column_stack(cols)
