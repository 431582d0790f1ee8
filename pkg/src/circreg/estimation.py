"""
Least-area estimation of the Mobius regression parameters.

The loss is minimised by multi-start L-BFGS-B (``scipy.optimize``) with a
central-difference gradient.  All perturbed parameter vectors of one
gradient evaluation are pushed through the link in a single broadcast, so a
loss-plus-gradient call costs one pass over the data.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .circular import TWO_PI, as_sample, wrap_angle
from .distributions import make_rng
from .errors import DegenerateParameterError, FitError, InvalidInputError
from .mobius import ModelParams, link_values
from .torus import DEFAULT_GEOMETRY, TorusGeometry, _square_of_angle

log = logging.getLogger(__name__)

# |b2| is never allowed below this inside the optimiser
B2_FLOOR = 1e-4


@dataclass(frozen=True)
class Dataset:
    """Paired observations ``(x_i, theta_i)``; theta is wrapped on construction."""

    x: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).ravel()
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.isfinite(x))[0])
            raise InvalidInputError(f"non-finite predictor at index {bad}")
        theta = as_sample(np.ravel(self.theta))
        if x.size != theta.size:
            raise InvalidInputError(f"{x.size} predictors but {theta.size} angles")
        x.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "theta", theta)

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class FitConfig:
    """
    Settings for :func:`fit`.

    ``start_ranges`` are the uniform ranges random starts are drawn from;
    ``bounds`` are the optimiser box.  ``None`` for b0 means unbounded: the
    loss is 2*pi periodic in b0 and the estimate is wrapped at the end.
    Deterministic starts are run in addition to the random ones: one from
    :func:`algebraic_estimate` if ``algebraic_start`` is set, and the best
    ``grid_starts`` points of :func:`profile_grid`.
    """

    geometry: TorusGeometry = DEFAULT_GEOMETRY
    n_starts: int = 50
    start_ranges: tuple = ((0.0, TWO_PI), (-10.0, 10.0), (0.0, 10.0))
    bounds: tuple = (None, (-50.0, 50.0), (-50.0, 50.0))
    fd_step: float = 1e-6
    grad_tol: float = 1e-8
    max_iters: int = 500
    seed: int = 0
    algebraic_start: bool = True
    grid_starts: int = 3

    def __post_init__(self):
        if int(self.n_starts) < 1:
            raise InvalidInputError("n_starts must be >= 1")
        if not self.fd_step > 0:
            raise InvalidInputError("fd_step must be > 0")
        if int(self.max_iters) < 1:
            raise InvalidInputError("max_iters must be >= 1")
        for k, ((lo, hi), box) in enumerate(zip(self.start_ranges, self.bounds)):
            if not lo <= hi:
                raise InvalidInputError(f"start range {k} is inverted")
            if box is not None and not (box[0] <= lo and hi <= box[1]):
                raise InvalidInputError(f"start range {k} is not inside the bounds")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class StartRecord:
    index: int
    start: tuple
    initial_loss: float
    final_loss: float
    params: tuple
    iterations: int
    converged: bool
    message: str


@dataclass
class FitResult:
    params: ModelParams
    loss: float
    per_start_losses: list
    converged: bool
    iterations: int
    residuals: np.ndarray
    seed: int
    best_start: int = 0
    starts: list = field(default_factory=list, repr=False)


def _guard_b2(b2):
    return np.where(b2 < 0, np.minimum(b2, -B2_FLOOR), np.maximum(b2, B2_FLOOR))


def _batch_loss(P, x, theta, R, r):
    """Loss for each row of ``P`` (shape ``(k, 3)``); b2 is floored, not rejected."""
    b0 = P[:, 0:1]
    b1 = P[:, 1:2]
    b2 = _guard_b2(P[:, 2:3])
    psi = np.remainder(theta - link_values(x, b0, b1, b2), TWO_PI)
    return _square_of_angle(psi, R, r).mean(axis=1)


_STENCIL = np.vstack([np.zeros(3), np.eye(3), -np.eye(3)])


def _loss_and_grad(p, x, theta, R, r, h):
    vals = _batch_loss(p + h * _STENCIL, x, theta, R, r)
    return vals[0], (vals[1:4] - vals[4:7]) / (2.0 * h)


def _check_fit_inputs(data, geom):
    if not isinstance(data, Dataset):
        raise InvalidInputError("expected a Dataset")
    if not isinstance(geom, TorusGeometry):
        raise InvalidInputError("expected a TorusGeometry")


def loss_at(params, data, geom=DEFAULT_GEOMETRY):
    """Mean square angle error of ``params`` on ``data``."""
    _check_fit_inputs(data, geom)
    if len(data) == 0:
        raise InvalidInputError("empty dataset")
    p = np.asarray([params.b0, params.b1, params.b2], dtype=float)
    if p[2] == 0.0:
        raise DegenerateParameterError("b2 == 0: the link is constant")
    return float(_batch_loss(p[None, :], data.x, data.theta, geom.R, geom.r)[0])


def fd_gradient(params, data, geom=DEFAULT_GEOMETRY, h=1e-6):
    """
    Central-difference gradient of :func:`loss_at` with respect to (b0, b1, b2).

    b0 is perturbed as a raw scalar; wrapping only happens inside the link.
    """
    _check_fit_inputs(data, geom)
    h = float(h)
    if not h > 0:
        raise InvalidInputError("finite-difference step must be > 0")
    p = np.asarray([params.b0, params.b1, params.b2], dtype=float)
    if p[2] == 0.0 or abs(p[2]) <= h:
        raise DegenerateParameterError(
            f"perturbing b2={p[2]:g} by h={h:g} crosses b2 == 0; use a smaller step"
        )
    _, g = _loss_and_grad(p, data.x, data.theta, geom.R, geom.r, h)
    return tuple(float(v) for v in g)


def algebraic_estimate(data):
    """
    Closed-form rough estimate of (b0, b1, b2).

    For ``u = exp(i*theta)`` the model reads ``u*(x - conj(beta1)) =
    beta0*(x - beta1)``, which is linear in ``conj(beta1)``, ``beta0`` and
    ``beta0*beta1``.  Solving it by weighted complex least squares is exact
    on noiseless data; with noise the estimate is biased towards ``b2 = 0``,
    so it is only ever used as a starting point.
    """
    x, u = data.x, np.exp(1j * data.theta)
    w = 1.0 / np.sqrt(1.0 + x * x)
    A = np.column_stack([u, x.astype(complex), -np.ones(x.size, dtype=complex)]) * w[:, None]
    sol, *_ = np.linalg.lstsq(A, u * x * w, rcond=None)
    beta1 = np.conj(sol[0])
    b2 = beta1.imag
    if not np.all(np.isfinite(sol)) or sol[1] == 0:
        return None
    b2 = np.copysign(max(abs(b2), 1e-2), b2)
    return np.array([wrap_angle(np.angle(sol[1])), beta1.real, b2])


def profile_grid(data, geom=DEFAULT_GEOMETRY, n_b1=25, n_b2=16):
    """
    Score a coarse (b1, b2) grid with b0 profiled out.

    b1 runs over predictor quantiles (the curve turns fastest at x = b1), |b2|
    is log-spaced relative to the predictor spread, both signs are tried.  For
    each pair b0 is set to the mean direction of ``theta - link(x; 0, b1, b2)``.

    Returns
    -------
    params : np.ndarray, shape (k, 3)
    losses : np.ndarray, shape (k,)
        Sorted by increasing loss.
    """
    x, theta = data.x, data.theta
    b1 = np.unique(np.quantile(x, np.linspace(0.02, 0.98, n_b1)))
    q75, q25 = np.quantile(x, [0.75, 0.25])
    scale = q75 - q25
    if not scale > 0:
        scale = max(float(np.std(x)), 1.0)
    mags = scale * np.logspace(-2, 1, n_b2)
    B1, B2 = np.meshgrid(b1, np.concatenate([mags, -mags]))
    B1, B2 = B1.ravel(), B2.ravel()
    offsets = theta - link_values(x, 0.0, B1[:, None], B2[:, None])
    b0 = np.arctan2(np.sin(offsets).sum(axis=1), np.cos(offsets).sum(axis=1))
    P = np.column_stack([wrap_angle(b0), B1, B2])
    losses = _batch_loss(P, x, theta, geom.R, geom.r)
    order = np.argsort(losses, kind="stable")
    return P[order], losses[order]


def _draw_starts(config, count, rng):
    lo = np.array([rg[0] for rg in config.start_ranges])
    hi = np.array([rg[1] for rg in config.start_ranges])
    return lo + (hi - lo) * rng.random((count, 3))


def _run_start(p0, x, theta, config):
    geom = config.geometry
    args = (x, theta, geom.R, geom.r, config.fd_step)
    initial = float(_batch_loss(p0[None, :], x, theta, geom.R, geom.r)[0])
    res = minimize(
        _loss_and_grad, p0, args=args, jac=True, method="L-BFGS-B",
        bounds=[b if b is not None else (None, None) for b in config.bounds],
        options={"maxiter": int(config.max_iters), "gtol": config.grad_tol,
                 "ftol": 1e-15, "maxcor": 10},
    )
    p = np.asarray(res.x, dtype=float).copy()
    p[0] = wrap_angle(p[0])
    final = float(_batch_loss(p[None, :], x, theta, geom.R, geom.r)[0])
    if not np.isfinite(final) or final > initial:
        p, final = p0.copy(), initial
    return p, initial, final, int(res.nit), bool(res.success), str(res.message)


def fit(data, config=FitConfig(), warm_start=None, rng=None):
    """
    Multi-start least-area fit.

    Parameters
    ----------
    data : Dataset
        At least three observations.
    config : FitConfig
    warm_start : ModelParams, optional
        Used as start 0; the remaining ``n_starts - 1`` starts are random.
    rng : numpy.random.Generator, optional
        Source for random starts.  Defaults to a generator seeded from
        ``config.seed``.

    Returns
    -------
    FitResult
        The start with the smallest final loss (ties go to the lowest index).
    """
    _check_fit_inputs(data, config.geometry)
    if len(data) < 3:
        raise InvalidInputError(f"fitting needs at least 3 observations, got {len(data)}")
    if rng is None:
        rng = make_rng(config.seed)

    n_random = config.n_starts - (1 if warm_start is not None else 0)
    starts = _draw_starts(config, n_random, rng) if n_random > 0 else np.empty((0, 3))
    head = []
    if warm_start is not None:
        head.append(warm_start.as_array())
    if config.algebraic_start:
        guess = algebraic_estimate(data)
        if guess is not None:
            lo = [b[0] if b is not None else -np.inf for b in config.bounds]
            hi = [b[1] if b is not None else np.inf for b in config.bounds]
            head.append(np.clip(guess, lo, hi))
    if config.grid_starts > 0:
        grid, _ = profile_grid(data, config.geometry)
        head.extend(grid[: config.grid_starts])
    if head:
        starts = np.vstack([np.array(head), starts])

    records = []
    for k, p0 in enumerate(starts):
        try:
            p, init, final, nit, ok, msg = _run_start(p0, data.x, data.theta, config)
        except (FloatingPointError, ValueError) as exc:
            p, init, final, nit, ok, msg = p0, np.nan, np.nan, 0, False, repr(exc)
        records.append(StartRecord(k, tuple(p0), init, final, tuple(p), nit, ok, msg))

    usable = [rec for rec in records
              if np.isfinite(rec.final_loss) and abs(rec.params[2]) > B2_FLOOR]
    if not usable:
        raise FitError("no start produced a usable fit", diagnostics=records)
    best = min(usable, key=lambda rec: (rec.final_loss, rec.index))
    params = ModelParams(*best.params)
    pred = wrap_angle(link_values(data.x, params.b0, params.b1, params.b2))
    residuals = wrap_angle(data.theta - pred)
    log.debug("fit: best start %d loss %.6g after %d iterations",
              best.index, best.final_loss, best.iterations)
    return FitResult(
        params=params,
        loss=float(_batch_loss(params.as_array()[None, :], data.x, data.theta,
                               config.geometry.R, config.geometry.r)[0]),
        per_start_losses=[rec.final_loss for rec in records],
        converged=best.converged,
        iterations=best.iterations,
        residuals=residuals,
        seed=config.seed,
        best_start=best.index,
        starts=records,
    )
