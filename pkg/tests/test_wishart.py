import math

import numpy as np
import pytest
from conftest import random_spd, random_sym

from segfisher import matcalc as mc
from segfisher.errors import AdmissibilityError, ContractError, DomainError, PoleError
from segfisher.gaussian import (
    circulant_matrix,
    gaussian_segment_info_trace,
    tridiagonal_matrix,
)
from segfisher.wishart import (
    gindikin_check,
    is_half_integer,
    laplace_transform,
    scale_segment,
    shape,
    wishart_circulant_info,
    wishart_family,
    wishart_segment_info,
    wishart_segment_info_eigen,
    wishart_segment_info_logdet,
    wishart_segment_info_quadratic,
    wishart_tridiag_info,
    wishart_two_scale_info,
)


def test_gindikin():
    assert gindikin_check(3, 1.0)
    assert not gindikin_check(3, 0.75)
    assert gindikin_check(1, 0.3)
    assert gindikin_check(4, 0.5) and gindikin_check(4, 1.5) and not gindikin_check(4, 1.2)
    assert not gindikin_check(2, 0.0) and not gindikin_check(2, -1.0) and not gindikin_check(2, math.nan)
    assert is_half_integer(2.5) and not is_half_integer(0.3)


def test_family():
    fam = wishart_family(2, 2.0)
    assert shape(fam) == 2.0 and fam.trace_constant == -4.0
    np.testing.assert_allclose(fam.inverse_mean_map(2.0 * np.eye(2)), -np.eye(2))
    np.testing.assert_allclose(fam.variance_function(np.eye(2)), 0.5 * np.eye(4))
    J = mc.inv_pd(wishart_family(2, 1.0).variance_function(2 * np.eye(2)))
    np.testing.assert_allclose(J, 0.25 * np.eye(4), atol=1e-15)
    with pytest.raises(AdmissibilityError):
        wishart_family(3, 0.75)


def test_segment_info_examples():
    assert wishart_segment_info(2.0, [[1.0]], [[0.0]], 3.0) == pytest.approx(2 / 9, rel=1e-15)
    v = wishart_segment_info(1.0, tridiagonal_matrix(2), np.eye(2), 0.1)
    assert v == pytest.approx((1 / 1.1) ** 2 + (1 / 0.9) ** 2, rel=1e-14)
    assert v == pytest.approx(2.06101, abs=1e-5)
    with pytest.raises(DomainError):
        wishart_segment_info(1.0, np.eye(2), -np.eye(2), 0.5)
    with pytest.raises(AdmissibilityError):
        wishart_segment_info(0.75, np.eye(3), np.eye(3), 0.0)


def test_half_shape_equals_gaussian(rng):
    for _ in range(20):
        d = int(rng.integers(1, 5))
        C, D = random_sym(rng, d), random_spd(rng, d)
        assert wishart_segment_info(0.5, C, D, 0.0) == pytest.approx(gaussian_segment_info_trace(C, D, 0.0), rel=1e-12)


def test_routes_agree(rng):
    C, D = random_sym(rng, 3), random_spd(rng, 3)
    for p in (1.0, 2.5):
        t = wishart_segment_info(p, C, D, 0.05)
        assert wishart_segment_info_quadratic(p, C, D, 0.05) == pytest.approx(t, rel=1e-10)
        assert wishart_segment_info_eigen(p, C, D, 0.05) == pytest.approx(t, rel=1e-10)
        assert wishart_segment_info_logdet(p, C, D, 0.05) == pytest.approx(t, rel=1e-5)


def test_scale_segment_mean():
    seg = scale_segment(2.0, np.eye(2), np.eye(2))
    np.testing.assert_allclose(seg.mean(1.0), 4.0 * np.eye(2))


def test_two_scale():
    with pytest.raises(ContractError):
        wishart_two_scale_info(1.0, np.eye(2), np.eye(2), 0.3)
    assert wishart_two_scale_info(1.0, 2 * np.eye(2), np.eye(2), 0.0) == pytest.approx(2.0, rel=1e-15)
    r = np.random.default_rng(3)
    s1, s2 = random_spd(r, 3), random_spd(r, 3)
    expected = wishart_segment_info(1.5, s1 - s2, s2, 0.5)
    assert wishart_two_scale_info(1.5, s1, s2, 0.5) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        wishart_two_scale_info(1.0, np.eye(2), 3 * np.eye(2), 2.0)


def test_structured():
    assert wishart_circulant_info(1.0, 4, 0.0) == pytest.approx(8.0, rel=1e-15)
    assert wishart_tridiag_info(0.5, 3, 0.0) == pytest.approx(2.0, rel=1e-14)
    assert wishart_circulant_info(2.0, 3, 0.0) == pytest.approx(12.0, rel=1e-14)
    assert wishart_circulant_info(2.5, 6, 0.1) == pytest.approx(wishart_segment_info(2.5, circulant_matrix(6), np.eye(6), 0.1), rel=1e-10)
    with pytest.raises(PoleError):
        wishart_circulant_info(1.0, 4, -0.5)


def test_laplace_transform():
    assert laplace_transform(2.0, np.eye(1), np.eye(1)) == pytest.approx(0.25)
    assert laplace_transform(1.0, np.eye(2), np.zeros((2, 2))) == 1.0
