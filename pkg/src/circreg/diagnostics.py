"""Residual diagnostics: Watson's U^2 against the von Mises family, QQ pairs,
and a circular-linear correlation coefficient."""

from dataclasses import dataclass

import numpy as np

from .circular import as_sample, circular_mean_and_resultant, circular_quantile, wrap_angle
from .distributions import estimate_kappa, von_mises_cdf
from .errors import EmptySampleError, InvalidInputError

# Upper 5% point used for the estimated-parameter von Mises case.
WATSON_CRITICAL = {0.05: 0.079}


@dataclass
class WatsonResult:
    statistic: float
    critical_value: float
    significance_level: float
    reject: bool
    estimated_mu: float
    estimated_kappa: float
    n: int


def watson_u2_statistic(z):
    """U^2 of probability-integral-transformed values ``z`` in [0, 1]."""
    z = np.sort(np.asarray(z, dtype=float))
    n = z.size
    i = np.arange(1, n + 1)
    return float(np.sum((z - (2 * i - 1) / (2.0 * n)) ** 2)
                 + 1.0 / (12.0 * n) - n * (z.mean() - 0.5) ** 2)


def watson_u2_vonmises(residuals, level=0.05):
    """
    Watson's U^2 goodness-of-fit test of a von Mises law with estimated
    mean direction and concentration.

    Parameters
    ----------
    residuals : array_like
        At least 10 angles.
    level : float
        Only 0.05 is supported.

    Returns
    -------
    WatsonResult
        ``reject`` is True when the statistic exceeds the critical value.
    """
    theta = as_sample(residuals)
    if theta.size < 10:
        raise InvalidInputError(f"Watson's test needs at least 10 angles, got {theta.size}")
    if level not in WATSON_CRITICAL:
        raise InvalidInputError(f"unsupported significance level {level}; use 0.05")
    mu, _ = circular_mean_and_resultant(theta)
    kappa = estimate_kappa(theta)
    if not np.isfinite(kappa):
        # all residuals identical: the fitted law is a point mass
        z = np.full(theta.size, 0.5)
    else:
        z = von_mises_cdf(theta, mu, kappa)
    stat = watson_u2_statistic(z)
    crit = WATSON_CRITICAL[level]
    return WatsonResult(
        statistic=stat, critical_value=crit, significance_level=level,
        reject=bool(stat > crit), estimated_mu=mu, estimated_kappa=float(kappa),
        n=int(theta.size),
    )


def qq_points(observed, predicted):
    """
    Circular QQ pairs.

    The p-th circular quantile of ``observed`` is paired with the p-th of
    ``predicted`` for ``p = (i - 0.5)/m``, ``m = min(len(observed),
    len(predicted))``.  Returns an ``(m, 2)`` array.
    """
    obs = as_sample(observed)
    pred = as_sample(predicted)
    if obs.size == 0 or pred.size == 0:
        raise EmptySampleError("QQ pairs need two non-empty samples")
    m = min(obs.size, pred.size)
    p = (np.arange(1, m + 1) - 0.5) / m
    return np.column_stack([
        np.atleast_1d(circular_quantile(obs, p)),
        np.atleast_1d(circular_quantile(pred, p)),
    ])


def _corr(a, b):
    a = a - a.mean()
    b = b - b.mean()
    return float(np.dot(a, b) / np.sqrt(np.dot(a, a) * np.dot(b, b)))


def circular_linear_correlation(xs, thetas):
    """
    Circular-linear correlation coefficient in [0, 1] (Mardia, 1976).

    With ``rxc = corr(x, cos)``, ``rxs = corr(x, sin)``, ``rcs = corr(cos, sin)``::

        R = sqrt((rxc^2 + rxs^2 - 2 rxc rxs rcs) / (1 - rcs^2))
    """
    x = np.asarray(xs, dtype=float).ravel()
    theta = as_sample(thetas)
    if x.size != theta.size:
        raise InvalidInputError("xs and thetas differ in length")
    if x.size < 3:
        raise InvalidInputError("correlation needs at least 3 pairs")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("xs must be finite")
    c, s = np.cos(theta), np.sin(theta)
    tiny = 1e-12
    for name, v in (("x", x), ("cos(theta)", c), ("sin(theta)", s)):
        if np.std(v) <= tiny * max(1.0, np.abs(v).max()):
            raise InvalidInputError(f"{name} has zero variance")
    rxc, rxs, rcs = _corr(x, c), _corr(x, s), _corr(c, s)
    denom = 1.0 - rcs * rcs
    if denom <= tiny:
        raise InvalidInputError("cos(theta) and sin(theta) are collinear")
    r2 = (rxc * rxc + rxs * rxs - 2.0 * rxc * rxs * rcs) / denom
    return float(np.sqrt(min(1.0, max(0.0, r2))))


def residual_summary(observed, predicted):
    """Residuals, Watson result and QQ pairs in one go (used by the CLI)."""
    resid = wrap_angle(as_sample(observed) - as_sample(predicted))
    return resid, watson_u2_vonmises(resid), qq_points(observed, predicted)
