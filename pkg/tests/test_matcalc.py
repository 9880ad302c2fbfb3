import json
import math

import numpy as np
import pytest
from conftest import random_spd
from hypothesis import given, settings
from hypothesis import strategies as st

from segfisher import matcalc as mc
from segfisher.errors import ContractError, DomainError, NotPositiveDefiniteError
from segfisher.gaussian import circulant_matrix, tridiagonal_matrix
from segfisher.segment import pd_segment_domain


def test_vec_column_stacking():
    assert mc.vec(np.eye(2)).tolist() == [1, 0, 0, 1]
    assert mc.vec([[1, 2], [3, 4]]).tolist() == [1, 3, 2, 4]


def test_unvec_inverts_vec(rng):
    X = rng.standard_normal((2, 3))
    np.testing.assert_array_equal(mc.unvec(mc.vec(X), 2, 3), X)


def test_vec_of_triple_product(rng):
    A = rng.standard_normal((2, 3))
    B = rng.standard_normal((3, 3))
    C = rng.standard_normal((3, 2))
    np.testing.assert_allclose(mc.vec(A @ B @ C), mc.kron(C.T, A) @ mc.vec(B), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_vec_identity_property(m, k, n, seed):
    r = np.random.default_rng(seed)
    A, B, C = r.standard_normal((m, k)), r.standard_normal((k, k)), r.standard_normal((k, n))
    np.testing.assert_allclose(mc.vec(A @ B @ C), mc.kron(C.T, A) @ mc.vec(B), atol=1e-10)


def test_kron_examples(rng):
    np.testing.assert_array_equal(mc.kron(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_array_equal(mc.kron(np.diag([2.0, 3.0]), np.eye(2)), np.diag([2.0, 2.0, 3.0, 3.0]))
    A, B = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    K = mc.kron(A, B)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    assert K[3 * i + k, 3 * j + l] == A[i, j] * B[k, l]


def test_symmetrizer_projects_onto_symmetric(rng):
    P = mc.symmetrizer(3)
    np.testing.assert_allclose(P @ P, P, atol=1e-15)
    X = rng.standard_normal((3, 3))
    np.testing.assert_allclose(mc.unvec(P @ mc.vec(X), 3), 0.5 * (X + X.T))


def test_eigh_examples():
    w, _ = mc.eigh(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    w, Q = mc.eigh(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3])
    np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-15)
    w, _ = mc.eigh(circulant_matrix(4))
    np.testing.assert_allclose(w, [-2, 0, 0, 2], atol=1e-12)


def test_eigh_rejects_nonsymmetric():
    with pytest.raises(ContractError):
        mc.eigh([[1.0, 2.0], [0.0, 1.0]])


def test_sqrt_psd(rng):
    np.testing.assert_allclose(mc.sqrt_psd(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(mc.sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    G = rng.standard_normal((4, 2))
    S = G @ G.T
    R = mc.sqrt_psd(S)
    np.testing.assert_allclose(R @ R, S, atol=1e-9)
    with pytest.raises(DomainError):
        mc.sqrt_psd(-np.eye(2))


def test_logdet_pd():
    assert mc.logdet_pd(np.eye(4)) == 0.0
    assert math.isclose(mc.logdet_pd(np.diag([2.0, 8.0])), math.log(16.0), rel_tol=1e-15)
    C, theta = tridiagonal_matrix(3), 0.2
    lam = np.linalg.eigvalsh(C)
    expected = math.log(np.prod(1.0 + theta * lam))
    assert math.isclose(mc.logdet_pd(theta * C + np.eye(3)), expected, rel_tol=1e-12)
    with pytest.raises(NotPositiveDefiniteError):
        mc.logdet_pd(-np.eye(2))


def test_is_pd_flips_at_domain_endpoints():
    assert mc.is_pd(np.eye(2))
    assert not mc.is_pd(-np.eye(2))
    C, D = tridiagonal_matrix(3), np.eye(3)
    iv = pd_segment_domain(C, D)
    eps = 1e-9
    assert mc.is_pd((iv.upper - eps) * C + D) and not mc.is_pd((iv.upper + eps) * C + D)
    assert mc.is_pd((iv.lower + eps) * C + D) and not mc.is_pd((iv.lower - eps) * C + D)


def test_solve_and_inverse(rng):
    S = random_spd(rng, 4)
    b = rng.standard_normal((4, 2))
    np.testing.assert_allclose(S @ mc.solve_pd(S, b), b, atol=1e-12)
    np.testing.assert_allclose(mc.inv_pd(S) @ S, np.eye(4), atol=1e-12)
    R = mc.inv_sqrt_pd(S)
    np.testing.assert_allclose(R @ S @ R, np.eye(4), atol=1e-12)


def test_as_sym_contract():
    with pytest.raises(ContractError):
        mc.as_sym(np.ones((2, 3)))
    with pytest.raises(ContractError):
        mc.as_sym([[1.0, 2.0], [2.5, 1.0]])
    with pytest.raises(ContractError):
        mc.as_matrix([[1.0, math.nan], [0.0, 1.0]])


def test_json_round_trip(tmp_path):
    A = np.array([[1.0, 0.25], [0.25, 3.0]])
    obj = mc.matrix_to_json(A)
    assert obj["rows"] == 2 and obj["cols"] == 2
    np.testing.assert_array_equal(mc.matrix_from_json(obj, symmetric=True), A)
    path = tmp_path / "a.json"
    path.write_text(json.dumps(obj))
    np.testing.assert_array_equal(mc.load_matrix(path, symmetric=True), A)
    np.testing.assert_array_equal(mc.matrix_from_json([[1, 2], [2, 1]]), [[1, 2], [2, 1]])


@pytest.mark.parametrize(
    "obj",
    [
        {"rows": 2, "cols": 2, "data": [1, 2, 3]},
        {"rows": 2, "data": [1, 2, 3, 4]},
        {"rows": 2, "cols": 2, "data": [1, "x", 3, 4]},
        "not a matrix",
    ],
)
def test_json_malformed(obj):
    with pytest.raises(ContractError):
        mc.matrix_from_json(obj)


def test_load_matrix_bad_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ContractError):
        mc.load_matrix(path)
