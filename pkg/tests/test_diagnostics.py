import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from circreg.circular import TWO_PI
from circreg.diagnostics import (circular_linear_correlation, qq_points, residual_summary,
                                 watson_u2_statistic, watson_u2_vonmises)
from circreg.distributions import AngularErrorSpec, make_rng
from circreg.errors import EmptySampleError, InvalidInputError


@given(st.lists(st.floats(0, 1), min_size=2, max_size=60))
def test_u2_equals_cvm_minus_mean_correction(z):
    z = np.array(z)
    w2 = stats.cramervonmises(z, "uniform").statistic
    assert watson_u2_statistic(z) == pytest.approx(w2 - z.size * (z.mean() - 0.5) ** 2,
                                                   abs=1e-10)


def test_u2_minimum_on_ideal_grid():
    n = 40
    z = (2 * np.arange(1, n + 1) - 1) / (2 * n)
    assert watson_u2_statistic(z) == pytest.approx(1 / (12 * n))


def test_well_specified_does_not_reject_low_kappa():
    e = AngularErrorSpec("vonmises", 1.0, mu=2.0).sample(500, make_rng(0))
    res = watson_u2_vonmises(e)
    assert not res.reject
    assert res.estimated_kappa == pytest.approx(1.0, rel=0.2)
    assert res.critical_value == 0.079 and res.n == 500


def test_rotation_invariant():
    e = AngularErrorSpec("vonmises", 2.0).sample(200, make_rng(1))
    a = watson_u2_vonmises(e).statistic
    b = watson_u2_vonmises(e + 2.5).statistic
    assert a == pytest.approx(b, abs=1e-9)


def test_bimodal_rejects():
    rng = make_rng(2)
    spec = AngularErrorSpec("vonmises", 20.0)
    e = np.concatenate([spec.sample(250, rng), spec.sample(250, rng) + 2.0])
    assert watson_u2_vonmises(e).reject


def test_watson_validation():
    with pytest.raises(InvalidInputError):
        watson_u2_vonmises(np.linspace(0, 1, 9))
    with pytest.raises(InvalidInputError):
        watson_u2_vonmises(np.linspace(0, 1, 20), level=0.01)


def test_qq_identity_and_shape():
    theta = AngularErrorSpec("vonmises", 2.0).sample(100, make_rng(3))
    qq = qq_points(theta, theta)
    assert qq.shape == (100, 2)
    assert np.allclose(qq[:, 0], qq[:, 1])
    assert qq_points(theta, theta[:30]).shape == (30, 2)
    with pytest.raises(EmptySampleError):
        qq_points([], theta)


def multiple_correlation(x, theta):
    """Multiple correlation of x on (cos, sin) from least squares."""
    A = np.column_stack([np.ones_like(x), np.cos(theta), np.sin(theta)])
    fitted = A @ np.linalg.lstsq(A, x, rcond=None)[0]
    return np.sqrt(1 - np.sum((x - fitted) ** 2) / np.sum((x - x.mean()) ** 2))


@given(st.integers(0, 10_000))
def test_correlation_matches_regression(seed):
    rng = make_rng(seed)
    x = rng.standard_normal(50)
    theta = (rng.uniform(0, 1) * x + rng.vonmises(0, 1, 50)) % TWO_PI
    r = circular_linear_correlation(x, theta)
    assert 0 <= r <= 1
    assert r == pytest.approx(multiple_correlation(x, theta), abs=1e-9)
    assert circular_linear_correlation(3 * x - 2, theta + 1.0) == pytest.approx(r, abs=1e-9)


def test_correlation_validation():
    with pytest.raises(InvalidInputError):
        circular_linear_correlation([1, 1, 1, 1], [0.1, 0.5, 1.0, 2.0])
    with pytest.raises(InvalidInputError):
        circular_linear_correlation([1, 2], [0.1, 0.5])
    with pytest.raises(InvalidInputError):
        circular_linear_correlation([1, 2, 3], [0.1, 0.5])


def test_residual_summary():
    obs = AngularErrorSpec("vonmises", 2.0).sample(50, make_rng(4))
    resid, watson, qq = residual_summary(obs, np.zeros(50))
    assert np.allclose(resid, obs)
    assert watson.n == 50 and qq.shape == (50, 2)
