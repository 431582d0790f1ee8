"""
Samplers for predictors and angular errors, plus the von Mises CDF.

Randomness always comes from a ``numpy.random.Generator``; use
:func:`make_rng` to build one from a ``(seed, stream...)`` key so parallel
workers get independent, reproducible substreams.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from .circular import TWO_PI, resultant_length, wrap_angle
from .errors import InvalidInputError


class ErrorFamily(str, Enum):
    VON_MISES = "vonmises"
    WRAPPED_CAUCHY = "wrappedcauchy"


class PredictorFamily(str, Enum):
    NORMAL = "normal"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class AngularErrorSpec:
    """Law of the angular error: family, mean direction and concentration.

    ``concentration`` is kappa > 0 for von Mises and rho in (0, 1) for the
    wrapped Cauchy.
    """

    family: ErrorFamily
    concentration: float
    mu: float = 0.0

    def __post_init__(self):
        family = ErrorFamily(self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "mu", wrap_angle(self.mu))
        c = float(self.concentration)
        if family is ErrorFamily.VON_MISES and not c > 0:
            raise InvalidInputError(f"von Mises kappa must be > 0, got {c}")
        if family is ErrorFamily.WRAPPED_CAUCHY and not 0 < c < 1:
            raise InvalidInputError(f"wrapped Cauchy rho must be in (0, 1), got {c}")
        object.__setattr__(self, "concentration", c)

    def sample(self, n, rng):
        if self.family is ErrorFamily.VON_MISES:
            return sample_von_mises(self, n, rng)
        return sample_wrapped_cauchy(self, n, rng)


@dataclass(frozen=True)
class PredictorSpec:
    family: PredictorFamily = PredictorFamily.NORMAL

    def __post_init__(self):
        object.__setattr__(self, "family", PredictorFamily(self.family))


def make_rng(seed, *stream):
    """Generator for substream ``stream`` of ``seed``.

    Identical ``(seed, stream)`` keys always give identical sequences, and
    distinct keys give statistically independent ones.
    """
    if seed is None:
        raise InvalidInputError("a seed is required for reproducible sampling")
    key = tuple(int(s) for s in stream)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def _check_n(n):
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"sample size must be >= 1, got {n}")
    return n


def sample_von_mises(spec, n, rng):
    """
    Draw ``n`` angles from vM(mu, kappa).

    Rejection sampler with a wrapped Cauchy envelope (Best & Fisher, 1979).
    Candidates are generated in vectorised batches until ``n`` are accepted.
    """
    if spec.family is not ErrorFamily.VON_MISES:
        raise InvalidInputError("spec is not a von Mises law")
    n = _check_n(n)
    kappa = spec.concentration
    tau = 1.0 + np.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - np.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)

    out = np.empty(n)
    filled = 0
    while filled < n:
        m = max(16, int(1.3 * (n - filled)))
        u1, u2, u3 = rng.random((3, m))
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        accept = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        theta = np.where(u3 > 0.5, np.arccos(f), -np.arccos(f))[accept]
        take = min(theta.size, n - filled)
        out[filled:filled + take] = theta[:take]
        filled += take
    return wrap_angle(spec.mu + out)


def sample_wrapped_cauchy(spec, n, rng):
    """Draw ``n`` angles from WC(mu, rho) by the tangent-half-angle transform."""
    if spec.family is not ErrorFamily.WRAPPED_CAUCHY:
        raise InvalidInputError("spec is not a wrapped Cauchy law")
    n = _check_n(n)
    rho = spec.concentration
    u = rng.random(n)
    theta = 2.0 * np.arctan((1.0 - rho) / (1.0 + rho) * np.tan(np.pi * (u - 0.5)))
    return wrap_angle(spec.mu + theta)


def sample_predictor(spec, n, rng):
    n = _check_n(n)
    if spec.family is PredictorFamily.NORMAL:
        return rng.standard_normal(n)
    u = rng.random(n)
    return np.tan(np.pi * (u - 0.5))


def _vm_kernel(u, mu, kappa):
    # scaled by exp(-kappa) so large kappa cannot overflow
    return np.exp(kappa * (np.cos(u - mu) - 1.0))


def _vm_integral(a, b, mu, kappa):
    if b <= a:
        return 0.0
    # tell quad where the mode is when it falls inside the interval
    points = [p for p in (mu, mu + np.pi, mu - np.pi) if a < p < b] or None
    val, _ = integrate.quad(
        _vm_kernel, a, b, args=(mu, kappa), points=points,
        epsabs=1e-13, epsrel=1e-12, limit=200,
    )
    return val


def von_mises_cdf(theta, mu=0.0, kappa=1.0):
    """
    ``P(0 <= Theta <= theta)`` for Theta ~ vM(mu, kappa) on ``[0, 2*pi)``.

    Computed by adaptive quadrature of the density; accepts a scalar or an
    array of angles.  For arrays the integral is accumulated between sorted
    points so each stretch of the circle is integrated once.
    """
    kappa = float(kappa)
    if not kappa >= 0:
        raise InvalidInputError(f"kappa must be >= 0, got {kappa}")
    mu = wrap_angle(mu)
    arr = np.asarray(theta, dtype=float)
    scalar = arr.ndim == 0
    t = np.atleast_1d(arr).ravel()
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("angles must be finite")
    # the upper limit 2*pi is allowed so F(2*pi) == 1
    t = np.where(t == TWO_PI, TWO_PI, wrap_angle(t))
    if kappa == 0.0:
        out = t / TWO_PI
    else:
        total = _vm_integral(0.0, mu, mu, kappa) + _vm_integral(mu, TWO_PI, mu, kappa)
        order = np.argsort(t, kind="stable")
        cum = np.empty(t.size)
        acc, prev = 0.0, 0.0
        for idx in order:
            acc += _vm_integral(prev, t[idx], mu, kappa)
            prev = t[idx]
            cum[idx] = acc
        out = np.clip(cum / total, 0.0, 1.0)
    if scalar:
        return float(out[0])
    return out.reshape(arr.shape)


def estimate_kappa(sample):
    """
    Concentration estimate from the mean resultant length.

    Piecewise rational approximation to the inverse of ``A1 = I1/I0``
    (Best & Fisher, 1981).
    """
    rbar = resultant_length(sample)
    if rbar < 0.53:
        return 2.0 * rbar + rbar**3 + 5.0 * rbar**5 / 6.0
    if rbar < 0.85:
        return -0.4 + 1.39 * rbar + 0.43 / (1.0 - rbar)
    if rbar >= 1.0:
        return np.inf
    return 1.0 / (rbar**3 - 4.0 * rbar**2 + 3.0 * rbar)
