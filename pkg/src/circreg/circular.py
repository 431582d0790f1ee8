"""
Circular arithmetic and summary statistics.

Angles are plain floats (or float arrays) in radians.  Every function that
returns an angle returns it in the canonical range ``[0, 2*pi)``.
"""

import numpy as np

from .errors import EmptySampleError, InvalidInputError, UndefinedMeanError

TWO_PI = 2.0 * np.pi

# Below this mean resultant length the mean direction is reported as undefined.
RESULTANT_EPS = 1e-12


def wrap_angle(raw):
    """
    Reduce angles to the canonical range ``[0, 2*pi)``.

    Parameters
    ----------
    raw : float or array_like
        Angles in radians. Must be finite.

    Returns
    -------
    float or np.ndarray
        Same shape as the input.
    """
    arr = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("angles must be finite")
    out = np.remainder(arr, TWO_PI)
    # remainder(-tiny, 2pi) rounds up to exactly 2pi
    out = np.where(out >= TWO_PI, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def as_sample(angles):
    """Validate and wrap a 1-d angle sample."""
    arr = np.atleast_1d(np.asarray(angles, dtype=float))
    if arr.ndim != 1:
        raise InvalidInputError("angle sample must be one-dimensional")
    return wrap_angle(arr)


def angular_residual(observed, predicted):
    """Residual ``(observed - predicted) mod 2*pi``; works elementwise on arrays."""
    return wrap_angle(np.asarray(observed, dtype=float) - np.asarray(predicted, dtype=float))


def signed_angle(angle):
    """Map an angle to ``[-pi, pi)``; handy for plotting residuals."""
    return wrap_angle(np.asarray(angle, dtype=float) + np.pi) - np.pi


def wrap_distance(a, b):
    """Shortest arc length between two angles, in ``[0, pi]``."""
    d = wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return np.minimum(d, TWO_PI - d)


def resultant_length(sample):
    """Mean resultant length ``|mean(exp(i*theta))|`` of a sample."""
    theta = as_sample(sample)
    if theta.size == 0:
        raise EmptySampleError("resultant length of an empty sample")
    c = np.cos(theta).sum()
    s = np.sin(theta).sum()
    return float(min(1.0, np.hypot(c, s) / theta.size))


def circular_mean_and_resultant(sample):
    """
    Mean direction and mean resultant length.

    Parameters
    ----------
    sample : array_like
        Angles in radians, at least one.

    Returns
    -------
    mean : float
        ``atan2(sum sin, sum cos)`` wrapped to ``[0, 2*pi)``.
    resultant_length : float
        In ``[0, 1]``.  ``1 - resultant_length`` is the circular variance.

    Raises
    ------
    EmptySampleError
        For an empty sample.
    UndefinedMeanError
        If the resultant length is below ``RESULTANT_EPS``; the computed
        length is attached to the exception.
    """
    theta = as_sample(sample)
    if theta.size == 0:
        raise EmptySampleError("circular mean of an empty sample")
    c = np.cos(theta).sum()
    s = np.sin(theta).sum()
    rbar = float(min(1.0, np.hypot(c, s) / theta.size))
    if rbar < RESULTANT_EPS:
        raise UndefinedMeanError(
            f"mean direction undefined (resultant length {rbar:.3g})", rbar
        )
    return wrap_angle(np.arctan2(s, c)), rbar


def circular_mean(sample):
    return circular_mean_and_resultant(sample)[0]


def circular_variance(sample):
    return 1.0 - resultant_length(sample)


def circular_quantile(sample, p):
    """
    Quantile of a circular sample.

    The sample is rotated so that its mean direction sits at ``pi``, the
    ordinary linearly interpolated quantile (type 7) of the rotated values is
    taken, and the result is rotated back.

    ``p`` may be a scalar or an array of probabilities in ``[0, 1]``.
    """
    theta = as_sample(sample)
    if theta.size == 0:
        raise EmptySampleError("quantile of an empty sample")
    probs = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(probs)) or np.any((probs < 0) | (probs > 1)):
        raise InvalidInputError("quantile probabilities must lie in [0, 1]")
    mean, _ = circular_mean_and_resultant(theta)
    shift = np.pi - mean
    rotated = wrap_angle(theta + shift)
    q = np.quantile(rotated, probs)
    return wrap_angle(q - shift)


def arc_width(lower, upper):
    """Counter-clockwise arc length from ``lower`` to ``upper``."""
    return wrap_angle(np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float))


def arc_contains(lower, upper, angle, tol=0.0):
    """
    True where ``angle`` lies on the counter-clockwise arc ``lower -> upper``.

    Arcs that straddle zero have ``lower > upper``; containment is always
    decided on the circle.  ``tol`` widens the arc by that much on each side.
    """
    width = arc_width(lower, upper)
    offset = wrap_angle(np.asarray(angle, dtype=float) - np.asarray(lower, dtype=float))
    inside = offset <= width + tol
    if tol > 0:
        inside = inside | (offset >= TWO_PI - tol)
    return inside
