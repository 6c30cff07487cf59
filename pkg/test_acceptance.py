"""Long-running numerical experiments; run with ``pytest -m slow``."""
import math

import numpy as np
import pytest

from cxhyp.asymptotics import (
    correction_exponent_fit,
    inner_peak_fprime,
    inner_peak_fsecond,
    j2_asymptote,
    j2_closed_form,
    ratio_decay_fit,
    theorem_constant,
)
from cxhyp.ball_geometry import reproducing_check, weight_constant, weight_constant_asymptote
from cxhyp.cli import main
from cxhyp.geodesic_normal_form import decompose
from cxhyp.group_enum import min_displacement_off_axis, word_ball
from cxhyp.series_inner_products import j1_decay_fit, j2_integral

pytestmark = pytest.mark.slow

GEOMETRIC_KS = [25 * 2 ** j for j in range(6)]


@pytest.mark.parametrize('n', [1, 2, 3])
def test_j2_converges_to_theorem_constant(n):
    lam = 2.0
    ratios = [j2_integral(n, k, lam) / theorem_constant(n, k, 2 * math.log(lam)) for k in GEOMETRIC_KS]
    dev = np.abs(np.array(ratios) - 1.0)
    assert dev[-1] <= 3.0 / GEOMETRIC_KS[-1]
    assert np.all(np.diff(dev) < 0)


@pytest.mark.parametrize('n,lam', [(n, lam) for n in (1, 2, 3) for lam in (1.5, 2.0, 4.0)])
def test_j2_quadrature_matches_closed_form(n, lam):
    ks = [20, 80, 320]
    devs = []
    for k in ks:
        value = j2_integral(n, k, lam)
        assert value == pytest.approx(j2_closed_form(n, k, lam), rel=1e-8)
        devs.append(abs(value / j2_asymptote(n, k, lam) - 1.0))
    assert devs[0] > devs[1] > devs[2]
    assert max(d * k for d, k in zip(devs, ks)) < 1.0


@pytest.mark.parametrize('n,expected', [(1, -0.5), (2, 0.5)])
def test_correction_order(n, expected):
    ks = [50, 100, 150, 200, 300, 400, 600, 800]
    samples = [(k, j2_integral(n, k, 2.0), j2_asymptote(n, k, 2.0)) for k in ks]
    assert correction_exponent_fit(samples) == pytest.approx(expected, abs=0.15)


def test_sweep_final_ratio(capsys):
    assert main(["sweep", "--n", "1", "--lambda", "2", "--k-min", "50", "--k-max", "400",
                 "--k-step", "50", "--format", "csv"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert last[1] == "400"
    assert abs(float(last[6]) - 1.0) <= 0.02


@pytest.mark.parametrize('u', [0.0, 0.3, 0.7])
def test_inner_peak_second_derivative_matches_finite_difference(u):
    fp = inner_peak_fprime(u)
    h = 1e-5
    fd = (fp(u + h) - fp(u - h)) / (2 * h)
    exact = -(1 - u * u) ** -2.5
    assert inner_peak_fsecond(u)(u) == pytest.approx(exact, rel=1e-12)
    assert fd == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize('f', [[1.0], [0.0, 1.0], [0.0, 0.0, 1.0]])
def test_reproducing_property_monomials(f):
    assert reproducing_check(f, 3, points=[0.0, 0.4, -0.2 + 0.5j]) <= 1e-6


def test_off_axis_displacement_on_octagon_ball(octagon):
    dec = decompose(octagon[0])
    ball = word_ball(octagon[:4], 3)
    delta0 = min_displacement_off_axis(ball.elements, dec)
    assert delta0 > 0.0
    fitted, analytic = j1_decay_fit(1, delta0)
    assert fitted == pytest.approx(analytic, rel=0.01)


@pytest.mark.parametrize('n', [1, 2, 3])
def test_weight_constant_stirling_order(n):
    ks = [10, 20, 50, 100, 200, 500, 1000]
    ratios = [weight_constant(n, k) / weight_constant_asymptote(n, k) for k in ks]
    assert ratio_decay_fit(ks, ratios) == pytest.approx(-1.0, abs=0.1)
