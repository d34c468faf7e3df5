import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from app.special import SpecialFunctionError, gamma_cdf, gamma_pdf, gamma_sample, normal_cdf, normal_pdf


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    assert math.isclose(normal_cdf(1.0) - normal_cdf(-1.0), 0.682689492137086, rel_tol=1e-12)
    assert math.isclose(normal_cdf(3.0, mean=1.0, sd=2.0), normal_cdf(1.0), rel_tol=1e-15)
    # deep tail keeps relative accuracy
    assert math.isclose(normal_cdf(-10.0), 7.619853024160527e-24, rel_tol=1e-12)


def test_normal_pdf_value():
    assert math.isclose(normal_pdf(0.0), 1.0 / math.sqrt(2.0 * math.pi), rel_tol=1e-15)


def test_gamma_cdf_exponential_case():
    for x in (0.1, 1.0, 4.5):
        assert math.isclose(gamma_cdf(x, 1.0, 1.0), 1.0 - math.exp(-x), rel_tol=1e-12)
    assert gamma_cdf(-1.0, 2.0, 1.0) == 0.0


def test_gamma_cdf_matches_series():
    # P(3, 3) = 1 - e^-3 (1 + 3 + 9/2)
    expected = 1.0 - math.exp(-3.0) * (1.0 + 3.0 + 4.5)
    assert math.isclose(gamma_cdf(6.0, 3.0, 2.0), expected, rel_tol=1e-10)


def test_gamma_pdf_integrates_to_cdf():
    xs = np.linspace(0.0, 5.0, 20_001)
    pdf = gamma_pdf(xs, 2.5, 0.8)
    area = trapezoid(pdf, xs)
    assert math.isclose(area, gamma_cdf(5.0, 2.5, 0.8), rel_tol=1e-6)


def test_gamma_sampler_moments():
    rng = np.random.default_rng(0)
    draws = gamma_sample(rng, np.full(200_000, 0.7), 2.0)
    assert abs(draws.mean() - 1.4) < 0.02
    assert abs(draws.var() - 2.8) < 0.1
    assert np.all(draws > 0)


@pytest.mark.parametrize("shape,scale", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, float("nan"))])
def test_invalid_parameters(shape, scale):
    with pytest.raises(SpecialFunctionError):
        gamma_cdf(1.0, shape, scale)
    with pytest.raises(SpecialFunctionError):
        gamma_sample(np.random.default_rng(0), shape, scale)


def test_invalid_normal_sd():
    with pytest.raises(SpecialFunctionError):
        normal_cdf(0.0, sd=0.0)
