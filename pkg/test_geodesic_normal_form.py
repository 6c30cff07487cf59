import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cxhyp.ball_geometry import BallPoint, mobius_apply
from cxhyp.errors import DomainError, NotHyperbolicError
from cxhyp.geodesic_normal_form import (
    AxisSegment,
    ElementKind,
    axis_nodes,
    axis_sample,
    classify,
    conjugate_to_model,
    decompose,
    geodesic_length,
    jacobian_reality_check,
    normal_form_matrix,
    one_form_weight,
    one_form_weight_u,
)
from cxhyp.indefinite_linalg import GroupElement, random_element, sigma
from cxhyp.quadrature import integrate_1d


def _conjugated(lam, seed, n=1):
    a = random_element(seed, 0.4, n, real=True)
    g0 = normal_form_matrix(lam, n)
    return a @ g0 @ a.inverse()


def test_classify_examples(gamma0_l2):
    assert classify(gamma0_l2) is ElementKind.HYPERBOLIC_REAL_ENDPOINTS
    assert classify(GroupElement.identity(2)) is ElementKind.OTHER
    assert classify(random_element(3, 0.8, 2, compact=True)) is ElementKind.OTHER


def test_decompose_normal_form_is_fixed_point():
    g = normal_form_matrix(3.0, 2)
    dec = decompose(g)
    assert dec.lam == pytest.approx(3.0, abs=1e-12)
    assert np.max(np.abs(dec.gamma0.entries - g.entries)) < 1e-10
    s = sigma(2)
    back = s @ dec.A_gamma.entries.conj().T @ s @ g.entries @ dec.A_gamma.entries
    assert np.max(np.abs(back - g.entries)) < 1e-10
    assert dec.signs == (1,)


def test_decompose_axis_maps(dec_l2):
    assert np.allclose(dec_l2.X.coords, [1.0])
    assert np.allclose(dec_l2.Y.coords, [-1.0])
    assert np.allclose(dec_l2.A_gamma.entries, -np.eye(2), atol=1e-12)
    g0_origin = mobius_apply(dec_l2.gamma0, BallPoint.axis(1, 0.0))
    assert g0_origin.coords[-1] == pytest.approx(0.6, abs=1e-10)


@pytest.mark.parametrize('n', [1, 2])
@pytest.mark.parametrize('seed', [1, 2, 7, 19])
def test_decompose_round_trip(seed, n):
    dec = decompose(_conjugated(2.0, seed, n))
    assert dec.lam == pytest.approx(2.0, abs=1e-8)
    assert dec.length == pytest.approx(2.0 * math.log(2.0), abs=1e-8)
    ai = np.linalg.inv(dec.A_gamma.entries)
    assert np.max(np.abs(dec.A_inverse.entries - ai)) < 1e-9


def test_decompose_round_trip_higher_dimension():
    dec = decompose(_conjugated(3.0, 5, n=2))
    assert dec.lam == pytest.approx(3.0, abs=1e-8)
    assert len(dec.v_list) == 1


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2]), st.floats(1.5, 4.0))
def test_decompose_round_trip_random_conjugates(seed, n, lam):
    g = _conjugated(lam, seed, n)
    dec = decompose(g)
    assert dec.lam == pytest.approx(lam, abs=1e-8)
    assert dec.length == pytest.approx(2.0 * math.log(lam), abs=1e-8)

    A = dec.A_gamma.entries
    scale = max(1.0, float(np.max(np.abs(A)))) ** 2
    s = sigma(n)
    assert np.max(np.abs(s @ A.conj().T @ s - np.linalg.inv(A))) <= 1e-8 * scale
    assert np.max(np.abs(dec.A_inverse.entries @ A - np.eye(n + 1))) <= 1e-8 * scale

    back = s @ A.conj().T @ s @ g.entries @ A
    expected = normal_form_matrix(dec.lam, n, dec.signs.count(-1)).entries
    assert np.max(np.abs(back - expected)) <= 1e-8 * scale * max(1.0, lam)
    assert np.max(np.abs(dec.gamma0.entries - expected)) <= 1e-12


@pytest.mark.parametrize('n', [1, 2])
def test_decompose_geodesic_is_preserved(n):
    g = _conjugated(2.0, 11, n)
    dec = decompose(g)
    for u in np.linspace(-0.8, 0.8, 7):
        z = mobius_apply(dec.A_gamma, BallPoint.axis(n, float(u)))
        back = mobius_apply(dec.A_inverse, mobius_apply(g, z)).coords
        if n > 1:
            assert np.max(np.abs(back[:-1])) < 1e-9
        assert abs(back[-1].imag) < 1e-9


def test_decompose_inversion():
    g = normal_form_matrix(0.5, 1)
    assert decompose(g).lam == pytest.approx(2.0)
    dec = decompose(g, endpoints=(np.array([1.0]), np.array([-1.0])))
    assert dec.inverted
    assert dec.lam == pytest.approx(2.0)


def test_decompose_rejects_identity():
    with pytest.raises(NotHyperbolicError):
        decompose(GroupElement.identity(1))


@pytest.mark.parametrize('lam,expected', [
    (2.0, 2 * math.log(2.0)), (math.e, 2.0), (-3.0, 2 * math.log(3.0)),
])
def test_geodesic_length(lam, expected):
    assert geodesic_length(lam) == pytest.approx(expected, abs=1e-14)


def test_geodesic_length_rejects_unit_lambda():
    with pytest.raises(DomainError):
        geodesic_length(1.0)


def test_axis_sample(dec_l2):
    with pytest.raises(DomainError):
        axis_sample(dec_l2, 1)
    pts = axis_sample(dec_l2, 2)
    assert len(pts) == 2
    assert all(0.0 < p.coords[-1].real < 0.6 for p, _ in pts)
    _, w = axis_nodes(dec_l2, 12, panels=3)
    assert math.fsum(w) == pytest.approx(0.6, abs=1e-14)
    assert AxisSegment.from_lambda(2.0, 1).t_max == pytest.approx(0.6)


def test_one_form_weight():
    assert one_form_weight(BallPoint.axis(1, 0.0)) == pytest.approx(math.sqrt(1.0 / math.pi))
    assert one_form_weight(BallPoint.axis(2, 0.3)) == pytest.approx(one_form_weight(BallPoint.axis(2, -0.3)))
    with pytest.raises(DomainError):
        one_form_weight_u(1, 1.0)
    with pytest.raises(DomainError):
        one_form_weight(BallPoint([0.1, 0.3]))


def test_one_form_integral_is_log_lambda():
    res = integrate_1d(lambda u: 1.0 / (1.0 - u * u), 0.0, 0.6)
    assert res.value == pytest.approx(math.log(2.0), abs=1e-12)


def test_reality_check_real_normal_form(dec_l2):
    rep = jacobian_reality_check(dec_l2, samples=8)
    assert rep.model_imag == 0.0
    assert rep.geodesic_imag == 0.0


@pytest.mark.parametrize('n', [1, 2])
@pytest.mark.parametrize('seed', [1, 2, 7])
def test_reality_check_conjugated(seed, n):
    dec = decompose(_conjugated(2.0, seed, n))
    rep = jacobian_reality_check(dec, samples=16, k=4)
    assert rep.max_imag <= 1e-9
    assert rep.invariance <= 1e-8


def test_reality_check_needs_even_exponent():
    with pytest.raises(DomainError):
        jacobian_reality_check(decompose(normal_form_matrix(3.0, 2)), k=3)


def test_conjugate_to_model_recovers_gamma0():
    g = _conjugated(2.0, 13)
    dec = decompose(g)
    (h,) = conjugate_to_model([g], dec)
    assert np.max(np.abs(h.entries - dec.gamma0.entries)) < 1e-8
