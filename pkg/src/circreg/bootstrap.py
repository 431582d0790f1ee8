"""
Residual bootstrap intervals for the conditional mean direction (CI) and for
a new response (PI).

Both procedures fit once, keep the angular residuals, and for each replicate
b regenerate responses ``fitted_i + e*_i`` from residuals drawn with
replacement, refit, and evaluate the refitted curve at ``x_j``.  The PI
replicate additionally adds one more resampled residual.  The interval is
the pair of equal-tail circular quantiles of the B replicate angles.
"""

from dataclasses import dataclass
from functools import partial

import numpy as np

from ._parallel import map_jobs
from .circular import arc_width, circular_quantile, wrap_angle
from .distributions import make_rng
from .errors import FitError, InvalidInputError
from .estimation import Dataset, FitConfig, fit
from .mobius import link, link_values

MIN_REPLICATES = 100


@dataclass
class IntervalResult:
    """An arc ``lower -> upper`` (counter-clockwise) on the circle.

    If the arc straddles zero then ``lower > upper``.
    """

    kind: str
    lower: float
    upper: float
    center: float
    level: float
    B: int
    bootstrap_angles: np.ndarray
    params: object = None

    @property
    def width(self):
        return float(arc_width(self.lower, self.upper))


def _refit_config(config, refit_starts):
    n = config.n_starts if refit_starts is None else int(refit_starts)
    if n < 1:
        raise InvalidInputError("refit_starts must be >= 1")
    return config.with_(n_starts=n, algebraic_start=False, grid_starts=0)


def _replicate(b, data, fitted, residuals, warm, x_j, config, seed, predictive):
    rng = make_rng(seed, b)
    n = residuals.size
    y = wrap_angle(fitted + residuals[rng.integers(0, n, n)])
    try:
        res = fit(Dataset(data.x, y), config, warm_start=warm, rng=rng)
    except FitError as exc:
        raise FitError(f"bootstrap replicate {b} failed to fit", exc.diagnostics) from exc
    value = link(x_j, res.params)
    if predictive:
        value = wrap_angle(value + residuals[rng.integers(0, n)])
    return value


def _bootstrap(kind, data, x_j, B, level, config, seed, refit_starts, fit_result, jobs):
    B = int(B)
    if B < MIN_REPLICATES:
        raise InvalidInputError(f"B must be >= {MIN_REPLICATES} for stable quantiles, got {B}")
    if not 0 < level < 1:
        raise InvalidInputError(f"level must lie in (0, 1), got {level}")
    x_j = float(x_j)
    if not np.isfinite(x_j):
        raise InvalidInputError("x_j must be finite")
    if seed is None:
        seed = config.seed
    if fit_result is None:
        try:
            fit_result = fit(data, config)
        except FitError as exc:
            raise FitError("initial fit failed", exc.diagnostics) from exc
    p = fit_result.params
    fitted = wrap_angle(link_values(data.x, p.b0, p.b1, p.b2))
    residuals = np.asarray(fit_result.residuals)

    work = partial(
        _replicate, data=data, fitted=fitted, residuals=residuals, warm=p,
        x_j=x_j, config=_refit_config(config, refit_starts), seed=seed,
        predictive=(kind == "pi"),
    )
    angles = np.asarray(map_jobs(work, range(B), jobs))
    alpha = 1.0 - level
    lower, upper = circular_quantile(angles, [alpha / 2.0, 1.0 - alpha / 2.0])
    return IntervalResult(
        kind=kind, lower=float(lower), upper=float(upper), center=link(x_j, p),
        level=float(level), B=B, bootstrap_angles=angles, params=p,
    )


def bootstrap_ci(data, x_j, B=1000, level=0.95, config=FitConfig(), seed=None,
                 refit_starts=None, fit_result=None, jobs=1):
    """
    Bootstrap confidence interval for the mean direction at ``x_j``.

    Parameters
    ----------
    data : Dataset
    x_j : float
        Predictor value at which the conditional mean is wanted.
    B : int
        Number of replicates, at least 100.
    level : float
        Nominal coverage in (0, 1).
    config : FitConfig
        Used for the initial fit and, with ``refit_starts`` starts (the
        original estimate being one of them), for every refit.
    seed : int, optional
        Replicate b draws from substream ``(seed, b)``; defaults to
        ``config.seed``.
    refit_starts : int, optional
        Defaults to ``config.n_starts``.
    fit_result : FitResult, optional
        Reuse an existing fit of ``data`` instead of fitting again.
    jobs : int
        Worker processes for the replicates.
    """
    return _bootstrap("ci", data, x_j, B, level, config, seed, refit_starts, fit_result, jobs)


def bootstrap_pi(data, x_j, B=1000, level=0.95, config=FitConfig(), seed=None,
                 refit_starts=None, fit_result=None, jobs=1):
    """Bootstrap prediction interval for a new response at ``x_j``.

    Same arguments as :func:`bootstrap_ci`.
    """
    return _bootstrap("pi", data, x_j, B, level, config, seed, refit_starts, fit_result, jobs)
