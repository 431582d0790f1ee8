"""
Area-based loss on a curved (ring) torus.

The torus with major radius R and minor radius r has area element
``r * (R + r*cos(theta)) dphi dtheta``.  Integrating it over the coordinate
square ``[0, t] x [0, t]`` gives

    A(t) = r*R*t**2 + r**2 * t * sin(t)

The squared size of an angle psi is the smaller of the two squares joining
``(0, 0)`` and ``(psi, psi)``, going either way round: ``min(A(psi),
A(2*pi - psi))``.  Averaging it over residuals gives the regression loss.
"""

from dataclasses import dataclass

import numpy as np

from .circular import TWO_PI, as_sample, wrap_angle
from .errors import EmptySampleError, InvalidInputError


@dataclass(frozen=True)
class TorusGeometry:
    """Radii of a ring torus, ``R > r > 0``."""

    R: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        R, r = float(self.R), float(self.r)
        if not (np.isfinite(R) and np.isfinite(r)) or not (R > r > 0):
            raise InvalidInputError(f"torus needs R > r > 0, got R={R}, r={r}")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "r", r)

    @classmethod
    def parse(cls, text):
        """Build from a ``"R,r"`` string as used on the command line."""
        try:
            R, r = (float(v) for v in text.split(","))
        except ValueError:
            raise InvalidInputError(f"geometry must look like 'R,r', got {text!r}") from None
        return cls(R, r)


DEFAULT_GEOMETRY = TorusGeometry()


def area_element(theta, geom=DEFAULT_GEOMETRY):
    """Area density ``r*(R + r*cos(theta))`` per unit ``dphi dtheta``."""
    return geom.r * (geom.R + geom.r * np.cos(theta))


def square_area(t, geom=DEFAULT_GEOMETRY):
    """Area of the coordinate square ``[0, t]^2`` on the torus (no minimisation)."""
    t = np.asarray(t, dtype=float)
    return geom.r * geom.R * t * t + geom.r * geom.r * t * np.sin(t)


def _square_of_angle(psi, R, r):
    # psi already wrapped; used on hot paths by the estimator
    comp = TWO_PI - psi
    a = r * R * psi * psi + r * r * psi * np.sin(psi)
    b = r * R * comp * comp + r * r * comp * np.sin(comp)
    return np.minimum(a, b)


def square_of_angle(psi, geom=DEFAULT_GEOMETRY):
    """
    Squared size of an angle measured as torus area.

    Parameters
    ----------
    psi : float or array_like
        Angle(s) in radians; wrapped to ``[0, 2*pi)`` first.
    geom : TorusGeometry

    Returns
    -------
    float or np.ndarray
        ``min(A(psi), A(2*pi - psi))`` with ``A`` the square area.
    """
    psi = wrap_angle(psi)
    out = _square_of_angle(np.asarray(psi), geom.R, geom.r)
    if np.ndim(out) == 0:
        return float(out)
    return out


def msae(residuals, geom=DEFAULT_GEOMETRY):
    """Mean square angle error: the average torus-area square of the residuals."""
    psi = as_sample(residuals)
    if psi.size == 0:
        raise EmptySampleError("msae needs at least one residual")
    return float(np.mean(_square_of_angle(psi, geom.R, geom.r)))
