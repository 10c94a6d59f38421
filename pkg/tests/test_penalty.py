import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fcp_learn.penalty import (
    KinkError,
    PenaltyParams,
    h1_derivative,
    h1_value,
    mcp_derivative,
    mcp_second_derivative,
    mcp_subdifferential_at_zero,
    mcp_value,
    soft_threshold,
)

P12 = PenaltyParams(lam=1.0, a=2.0)


def quad_mcp(theta, params):
    """Integral form of the penalty, evaluated numerically."""
    integrand = lambda t: max(params.a * params.lam - t, 0.0) / params.a
    return quad(integrand, 0.0, abs(theta), points=[params.knot] if abs(theta) > params.knot else None)[0]


@pytest.mark.parametrize("theta,expected", [(0.0, 0.0), (2.0, 1.0), (1.0, 0.75), (5.0, 1.0)])
def test_mcp_value_examples(theta, expected):
    assert mcp_value(theta, P12) == pytest.approx(expected, abs=1e-15)


def test_mcp_value_matches_quadrature():
    assert quad_mcp(1.0, P12) == pytest.approx(0.75, abs=1e-12)
    rng = np.random.default_rng(0)
    for theta in rng.uniform(-6, 6, 200):
        params = PenaltyParams(rng.uniform(0.1, 2), rng.uniform(0.1, 3))
        assert mcp_value(theta, params) == pytest.approx(quad_mcp(theta, params), abs=1e-10)


def test_invalid_params():
    with pytest.raises(ValueError):
        PenaltyParams(0.0, 1.0)
    with pytest.raises(ValueError):
        PenaltyParams(1.0, -1.0)


@pytest.mark.parametrize("theta,expected", [(1.0, 0.5), (3.0, 0.0), (-1.0, -0.5)])
def test_mcp_derivative_examples(theta, expected):
    assert mcp_derivative(theta, P12) == pytest.approx(expected)
    h = 1e-6
    fd = (mcp_value(theta + h, P12) - mcp_value(theta - h, P12)) / (2 * h)
    assert fd == pytest.approx(expected, abs=1e-8)


def test_mcp_derivative_kink():
    with pytest.raises(KinkError):
        mcp_derivative(0.0, P12)
    with pytest.raises(KinkError):
        mcp_derivative(np.array([1.0, 0.0]), P12)


def test_derivative_matches_finite_differences_random():
    rng = np.random.default_rng(1)
    params = PenaltyParams(0.7, 1.3)
    theta = rng.uniform(-3, 3, 1000)
    keep = (np.abs(theta) > 1e-3) & (np.abs(np.abs(theta) - params.knot) > 1e-3)
    theta = theta[keep]
    h = 1e-6
    fd = (mcp_value(theta + h, params) - mcp_value(theta - h, params)) / (2 * h)
    d = mcp_derivative(theta, params)
    scale = np.maximum(np.abs(d), 1e-3)
    assert np.all(np.abs(fd - d) / scale < 1e-6)


@pytest.mark.parametrize("lam,a", [(1.0, 2.0), (0.25, 0.3), (2.0, 1.0)])
def test_subdifferential_at_zero(lam, a):
    assert mcp_subdifferential_at_zero(PenaltyParams(lam, a)) == (-lam, lam)


def test_second_derivative():
    assert mcp_second_derivative(1.0, P12) == -0.5
    assert mcp_second_derivative(3.0, P12) == 0.0
    assert mcp_second_derivative(2.0, P12) is None
    assert mcp_second_derivative(-2.0, P12) is None
    assert mcp_second_derivative(0.0, P12) is None


def test_h1_examples():
    assert h1_value(0.0, P12) == 0.0 and h1_derivative(0.0, P12) == 0.0
    assert h1_value(1.0, P12) == pytest.approx(-0.25)
    assert h1_value(1.0, P12) + 1.0 == pytest.approx(mcp_value(1.0, P12))
    assert h1_derivative(3.0, P12) == -1.0


def test_decomposition_identity_on_grid():
    params = PenaltyParams(0.8, 1.5)
    grid = np.linspace(-4, 4, 20001)
    lhs = mcp_value(grid, params)
    rhs = h1_value(grid, params) + params.lam * np.abs(grid)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_bounds_and_monotonicity_on_grid():
    params = PenaltyParams(0.6, 0.9)
    grid = np.linspace(0, 3, 30001)
    v = mcp_value(grid, params)
    assert np.all(v >= 0) and np.all(v <= params.cap + 1e-15)
    assert np.all(np.diff(v) >= -1e-15)
    assert np.allclose(mcp_value(-grid, params), v)
    assert np.all(v <= params.lam * grid + 1e-15)


@settings(max_examples=300, deadline=None)
@given(x=st.floats(-10, 10), y=st.floats(-10, 10), lam=st.floats(0.05, 3), a=st.floats(0.05, 3))
def test_h1_derivative_lipschitz(x, y, lam, a):
    params = PenaltyParams(lam, a)
    gap = abs(h1_derivative(x, params) - h1_derivative(y, params))
    assert gap <= abs(x - y) / a + 1e-12


@pytest.mark.parametrize("x,t,expected", [(3.0, 1.0, 2.0), (-0.5, 1.0, 0.0), (-3.0, 1.0, -2.0)])
def test_soft_threshold_examples(x, t, expected):
    assert soft_threshold(x, t) == expected


def test_soft_threshold_negative_threshold():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-5, 5), t=st.floats(0, 3))
def test_soft_threshold_is_prox(x, t):
    grid = np.linspace(-6, 6, 120001)
    obj = 0.5 * (grid - x) ** 2 + t * np.abs(grid)
    assert abs(soft_threshold(x, t) - grid[np.argmin(obj)]) <= 1e-4 + 1e-12
