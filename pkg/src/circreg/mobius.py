"""
Mobius link from the real line onto the unit circle.

``M(x) = beta0 * (x - beta1) / (x - conj(beta1))`` with ``beta0 = exp(i*b0)``
and ``beta1 = b1 + i*b2``.  For real ``x`` numerator and denominator are
conjugates, so ``|M(x)| = 1`` and the regression curve is ``arg M(x)``.

Sign of b2 fixes the direction in which the curve winds: conjugating beta1
reflects the curve, ``link(x, (0, b1, -b2)) == -link(x, (0, b1, b2))``.
"""

from dataclasses import dataclass

import numpy as np

from .circular import wrap_angle
from .errors import DegenerateParameterError, InvalidInputError


@dataclass(frozen=True)
class ModelParams:
    """Regression parameters; ``b0`` is stored wrapped to ``[0, 2*pi)``."""

    b0: float
    b1: float
    b2: float

    def __post_init__(self):
        vals = (float(self.b0), float(self.b1), float(self.b2))
        if not all(np.isfinite(vals)):
            raise InvalidInputError(f"parameters must be finite, got {vals}")
        if vals[2] == 0.0:
            raise DegenerateParameterError("b2 must be non-zero")
        object.__setattr__(self, "b0", wrap_angle(vals[0]))
        object.__setattr__(self, "b1", vals[1])
        object.__setattr__(self, "b2", vals[2])

    @property
    def beta0(self):
        return complex(np.cos(self.b0), np.sin(self.b0))

    @property
    def beta1(self):
        return complex(self.b1, self.b2)

    def as_array(self):
        return np.array([self.b0, self.b1, self.b2])

    @classmethod
    def parse(cls, text):
        """Build from ``"b0,b1,b2"``."""
        try:
            b0, b1, b2 = (float(v) for v in text.split(","))
        except ValueError:
            raise InvalidInputError(f"params must look like 'b0,b1,b2', got {text!r}") from None
        return cls(b0, b1, b2)


def link_values(x, b0, b1, b2):
    """
    Broadcasting kernel for the link: ``b0 + arg(x - beta1) - arg(x - conj(beta1))``.

    Returns unwrapped values so callers can wrap once.  No validation.
    """
    dx = x - b1
    return b0 + np.arctan2(-b2, dx) - np.arctan2(b2, dx)


def mobius_map(x, params):
    """Image of real ``x`` on the unit circle, as ``(re, im)``."""
    x = float(x)
    if not np.isfinite(x):
        raise InvalidInputError("x must be finite")
    beta1 = params.beta1
    w = params.beta0 * (x - beta1) / (x - beta1.conjugate())
    return w.real, w.imag


def link(x, params):
    """Conditional mean direction ``arg M(x)`` in ``[0, 2*pi)``."""
    x = float(x)
    if not np.isfinite(x):
        raise InvalidInputError("x must be finite")
    return wrap_angle(link_values(x, params.b0, params.b1, params.b2))


def predict_curve(xs, params):
    """Vectorised :func:`link`; raises on the first non-finite predictor."""
    xs = np.asarray(xs, dtype=float).ravel()
    bad = np.flatnonzero(~np.isfinite(xs))
    if bad.size:
        raise InvalidInputError(f"non-finite predictor at index {bad[0]}")
    if xs.size == 0:
        return np.empty(0)
    return wrap_angle(link_values(xs, params.b0, params.b1, params.b2))
