import math

import numpy as np
import pytest
from scipy import stats

from app.losses import (
    PsiDelta,
    dc_parts,
    expected_weighted_risk,
    loss_01,
    loss_psi,
    population_minimizer,
    subgrad_g2,
)


def test_loss_01_uses_sign_zero_positive():
    assert loss_01(0.0) == 0.0
    assert loss_01(-0.3) == 1.0
    assert loss_01(2.0) == 0.0


def test_loss_psi_examples():
    L = PsiDelta(0.1)
    assert math.isclose(loss_psi(L, 0.05), 0.5)
    assert loss_psi(L, -0.5) == 1.0
    assert loss_psi(L, 0.1) == 0.0


def test_dc_parts_examples():
    L = PsiDelta(0.1)
    g1, g2 = dc_parts(L, -0.5)
    assert math.isclose(g1, 6.0) and math.isclose(g2, 5.0)
    assert g1 - g2 == 1.0
    g1, g2 = dc_parts(L, 0.05)
    assert math.isclose(g1, 0.5) and g2 == 0.0
    assert dc_parts(L, 1.0) == (0.0, 0.0)


def test_subgrad_g2_choice():
    L = PsiDelta(0.1)
    assert math.isclose(subgrad_g2(L, -1.0), -10.0)
    assert subgrad_g2(L, 0.5) == 0.0
    assert subgrad_g2(L, 0.0) == 0.0


@pytest.mark.parametrize("delta", [0.5, 0.1, 0.01])
def test_loss_identities_on_dense_grid(delta):
    L = PsiDelta(delta)
    u = np.linspace(-3.0, 3.0, 10_001)
    psi = loss_psi(L, u)
    g1, g2 = dc_parts(L, u)
    assert np.array_equal(psi, g1 - g2)
    assert np.all((psi >= 0.0) & (psi <= 1.0))
    assert np.all(psi >= loss_01(u) - 1.0)
    # u = 0 itself sits on the psi cap while sign(0) = +1 keeps the 0-1 loss at 0
    outside = (u < 0) | (u >= delta)
    assert np.array_equal(psi[outside], loss_01(u[outside]))


def test_dc_parts_are_convex():
    rng = np.random.default_rng(3)
    L = PsiDelta(0.2)
    for _ in range(500):
        a, b = rng.uniform(-2, 2, size=2)
        for part in (0, 1):
            fa, fb = dc_parts(L, a)[part], dc_parts(L, b)[part]
            mid = dc_parts(L, 0.5 * (a + b))[part]
            assert mid <= 0.5 * (fa + fb) + 1e-12


def test_psi_approaches_01_as_delta_shrinks():
    u = np.array([-0.5, -1e-3, 1e-3, 0.5])
    errors = [np.abs(loss_psi(PsiDelta(d), u) - loss_01(u)).max() for d in (0.5, 0.1, 1e-4)]
    assert errors[-1] == 0.0
    assert errors[0] >= errors[1] >= errors[2]


def test_invalid_delta_rejected():
    with pytest.raises(ValueError):
        PsiDelta(0.0)
    with pytest.raises(ValueError):
        PsiDelta(float("nan"))


def test_expected_weighted_risk_of_01_loss_is_error_sum():
    pos, neg = stats.norm(1.5, 1.0), stats.norm(0.0, 1.0)
    c = 0.75
    risk = expected_weighted_risk(c, pos, neg, 0.5, loss_01)
    # P(X < c | +1) + P(X >= c | -1)
    assert math.isclose(risk, pos.cdf(c) + neg.sf(c), abs_tol=1e-7)


def test_population_minimizer_is_fisher_consistent():
    pos, neg = stats.norm(1.5, 1.0), stats.norm(0.0, 1.0)
    errors = [
        abs(population_minimizer(pos, neg, 0.5, delta, bounds=(-1.0, 2.5)) - 0.75)
        for delta in (0.5, 0.1, 0.01)
    ]
    assert errors[-1] < 0.01
    # quadrature noise limits argmin resolution to about 1e-4
    assert errors[0] + 2e-3 >= errors[1]
    assert errors[1] + 2e-3 >= errors[2]
