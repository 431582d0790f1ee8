"""
Monte Carlo harness: simulation tables, named scenarios and bootstrap
coverage studies.

Replicate r of a run with seed s draws everything (predictors, errors,
random optimiser starts) from substream ``(s, r)``, so results do not depend
on the number of worker processes.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from ._parallel import map_jobs
from .bootstrap import _bootstrap
from .circular import arc_contains, arc_width, circular_mean_and_resultant, wrap_angle
from .distributions import (AngularErrorSpec, ErrorFamily, PredictorFamily, PredictorSpec,
                            make_rng, sample_predictor)
from .errors import FitError, InvalidInputError
from .estimation import Dataset, FitConfig, fit
from .mobius import ModelParams, link, predict_curve

MAX_FAILURE_FRACTION = 0.05
FULL_REPLICATIONS = 10_000

# Optimiser settings for simulation replicates: fewer random starts than a
# one-off data fit, the deterministic starts do most of the work.
SIM_FIT = FitConfig(n_starts=5)

# Degenerate intervals are compared with this slack (radians).
CONTAINMENT_TOL = 1e-7


@dataclass(frozen=True)
class SimConfig:
    """One simulation design; ``error=None`` gives noiseless responses."""

    truth: ModelParams
    predictor: PredictorSpec
    error: AngularErrorSpec
    n: int
    replications: int = 500
    fit: FitConfig = SIM_FIT
    seed: int = 0

    def __post_init__(self):
        if int(self.replications) < 1:
            raise InvalidInputError("replications must be >= 1")
        if int(self.n) < 3:
            raise InvalidInputError("n must be >= 3")


@dataclass
class SimSummary:
    b0_circular_mean: float
    b0_circular_variance: float
    b1_mean: float
    b1_se: float
    b2_mean: float
    b2_se: float
    replications_completed: int
    b1_sd: float = 0.0
    b2_sd: float = 0.0
    failures: int = 0
    estimates: np.ndarray = field(default=None, repr=False)


def simulate_dataset(truth, predictor, error, n, rng):
    """Draw one dataset ``theta = link(x, truth) + eps``; ``error=None`` means eps = 0."""
    x = sample_predictor(predictor, n, rng)
    eps = error.sample(n, rng) if error is not None else 0.0
    return Dataset(x, wrap_angle(predict_curve(x, truth) + eps))


def _one_replicate(r, config):
    rng = make_rng(config.seed, r)
    data = simulate_dataset(config.truth, config.predictor, config.error, config.n, rng)
    try:
        res = fit(data, config.fit, rng=rng)
    except FitError:
        return None
    return res.params.as_array()


def summarize_estimates(est):
    """Aggregate an ``(R, 3)`` array of (b0, b1, b2) estimates."""
    est = np.asarray(est, dtype=float)
    k = est.shape[0]
    mean_b0, rbar = circular_mean_and_resultant(est[:, 0])
    sd = est[:, 1:].std(axis=0, ddof=1) if k > 1 else np.zeros(2)
    se = sd / math.sqrt(k)
    return SimSummary(
        b0_circular_mean=mean_b0, b0_circular_variance=1.0 - rbar,
        b1_mean=float(est[:, 1].mean()), b1_se=float(se[0]),
        b2_mean=float(est[:, 2].mean()), b2_se=float(se[1]),
        replications_completed=k, b1_sd=float(sd[0]), b2_sd=float(sd[1]),
        estimates=est,
    )


def run_simulation(config, jobs=1):
    """
    Repeat simulate-then-fit ``config.replications`` times and summarise.

    b0 is summarised by its circular mean and circular variance, b1 and b2 by
    their mean, standard deviation and standard error of the mean.  Failed
    fits are dropped; more than 5% failures is an error.
    """
    results = map_jobs(partial(_one_replicate, config=config), range(config.replications), jobs)
    est = np.array([p for p in results if p is not None])
    failures = config.replications - est.shape[0]
    if failures > MAX_FAILURE_FRACTION * config.replications:
        raise FitError(f"{failures} of {config.replications} replicate fits failed")
    summary = summarize_estimates(est)
    summary.failures = failures
    return summary


# ---------------------------------------------------------------------------
# Table definitions.  "reported" holds the means printed in the original
# simulation tables, keyed by (n, concentration); the n = 100 rows stand
# where the text mentions n = 150.

_VM, _WC = ErrorFamily.VON_MISES, ErrorFamily.WRAPPED_CAUCHY
_NORMAL, _CAUCHY = PredictorFamily.NORMAL, PredictorFamily.CAUCHY

TABLES = {
    "T1": dict(
        truth=(0.0, 1.5, 0.5), error=_VM, predictor=_NORMAL, concentrations=(0.5, 1.0, 10.0),
        reported={
            (50, 0.5): (0.04382, 1.2674, 0.4333), (50, 1.0): (0.0058, 1.3740, 0.4914),
            (50, 10.0): (0.0058, 1.4880, 0.4900), (100, 0.5): (0.0015, 1.3945, 0.4592),
            (100, 1.0): (0.0117, 1.4717, 0.4758), (100, 10.0): (-0.0002, 1.5001, 0.50003),
            (500, 0.5): (0.0096, 1.4328, 0.4717), (500, 1.0): (-0.0002, 1.4976, 0.4999),
            (500, 10.0): (-0.0001, 1.499672, 0.4999),
        }),
    "T2": dict(
        truth=(math.pi / 6, -0.7, 2.4), error=_VM, predictor=_NORMAL, concentrations=(0.5, 1.0, 10.0),
        reported={
            (50, 0.5): (0.6189, -0.5468, 2.2522), (50, 1.0): (0.5616, -0.6344, 2.3540),
            (50, 10.0): (0.5242, -0.6982, 2.4016), (100, 0.5): (0.5567, -0.5587, 2.3522),
            (100, 1.0): (0.5260, -0.6939, 2.3916), (100, 10.0): (0.5242, -0.6982, 2.4016),
            (500, 0.5): (0.5445, -0.6691, 2.4020), (500, 1.0): (0.5315, -0.6906, 2.4009),
            (500, 10.0): (0.5237, -0.6998, 2.4002),
        }),
    "T3": dict(
        truth=(0.0, 1.5, 0.5), error=_WC, predictor=_CAUCHY, concentrations=(0.3, 0.6, 0.8),
        reported={
            (50, 0.3): (0.0743, 1.3164, 0.4066), (50, 0.6): (0.0033, 1.4552, 0.4938),
            (50, 0.8): (0.0048, 1.4732, 0.4913), (100, 0.3): (-0.0114, 1.3835, 0.4578),
            (100, 0.6): (0.0182, 1.4696, 0.4679), (100, 0.8): (-0.0015, 1.4990, 0.5008),
            (500, 0.3): (0.0080, 1.4809, 0.4919), (500, 0.6): (0.0001, 1.5001, 0.5001),
            (500, 0.8): (-0.0002, 1.4999, 0.5000),
        }),
    "T4": dict(
        truth=(math.pi / 6, -0.7, 2.4), error=_WC, predictor=_CAUCHY, concentrations=(0.3, 0.6, 0.8),
        reported={
            (50, 0.3): (0.5806, -0.5718, 2.1248), (50, 0.6): (0.5347, -0.6711, 2.4250),
            (50, 0.8): (0.5248, -0.6886, 2.3940), (100, 0.3): (0.5690, -0.6338, 2.3527),
            (100, 0.6): (0.5266, -0.6894, 2.3955), (100, 0.8): (0.5263, -0.6941, 2.4025),
            (500, 0.3): (0.5334, -0.6826, 2.4053), (500, 0.6): (0.5256, -0.6991, 2.4008),
            (500, 0.8): (0.5244, -0.6992, 2.3988),
        }),
}
SAMPLE_SIZES = (50, 100, 500)

SCENARIOS = {
    "vm_negative_b2": dict(truth=(0.0, -1.1, -1.8), error=_VM, concentration=5.0,
                           predictor=_NORMAL, n=500, reported=(-0.0001, -1.0997, -1.7996)),
    "wc_rotated": dict(truth=(2 * math.pi / 3, -0.6, -0.8), error=_WC, concentration=0.5,
                       predictor=_CAUCHY, n=500, reported=(2.0938, -0.5993, -0.8001)),
}


def _row_seed(seed, *key):
    return int(np.random.SeedSequence(int(seed), spawn_key=tuple(key)).generate_state(1)[0])


def replications_for_scale(scale):
    scale = float(scale)
    if not 0 < scale <= 1:
        raise InvalidInputError(f"scale must lie in (0, 1], got {scale}")
    return math.ceil(FULL_REPLICATIONS * scale - 1e-9)


def table_configs(table_id, scale, seed=0, fit_config=SIM_FIT, rows=None):
    """``(n, concentration, SimConfig)`` for every row of a table, in print order."""
    if table_id not in TABLES:
        raise InvalidInputError(f"unknown table {table_id!r}; choose from {sorted(TABLES)}")
    spec = TABLES[table_id]
    reps = replications_for_scale(scale)
    out = []
    for k, (n, conc) in enumerate((n, c) for n in SAMPLE_SIZES for c in spec["concentrations"]):
        if rows is not None and (n, conc) not in rows:
            continue
        cfg = SimConfig(
            truth=ModelParams(*spec["truth"]), predictor=PredictorSpec(spec["predictor"]),
            error=AngularErrorSpec(spec["error"], conc), n=n, replications=reps,
            fit=fit_config, seed=_row_seed(seed, k),
        )
        out.append((n, conc, cfg))
    return out


def scenario_config(name, replications=500, seed=0, fit_config=SIM_FIT):
    if name not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    spec = SCENARIOS[name]
    return SimConfig(
        truth=ModelParams(*spec["truth"]), predictor=PredictorSpec(spec["predictor"]),
        error=AngularErrorSpec(spec["error"], spec["concentration"]), n=spec["n"],
        replications=replications, fit=fit_config,
        seed=_row_seed(seed, 1000 + sorted(SCENARIOS).index(name)),
    )


def summary_row(label, n, conc, summary, reported):
    row = {"table": label, "n": n, "concentration": conc}
    row.update({k: v for k, v in asdict(summary).items() if k != "estimates"})
    row["reported_b0"], row["reported_b1"], row["reported_b2"] = reported
    return row


def reproduce_table(table_id, scale=0.05, seed=0, fit_config=SIM_FIT, rows=None, jobs=1):
    """
    Run the (n x concentration) grid of one simulation table.

    ``replications = ceil(10000 * scale)`` per row.  ``rows`` optionally
    restricts the grid to a set of ``(n, concentration)`` pairs.  Returns a
    list of dicts, one per row, including the originally reported means.
    """
    out = []
    for n, conc, cfg in table_configs(table_id, scale, seed, fit_config, rows):
        summary = run_simulation(cfg, jobs=jobs)
        out.append(summary_row(table_id, n, conc, summary, TABLES[table_id]["reported"][(n, conc)]))
    return out


TABLE_COLUMNS = (
    "table", "n", "concentration", "replications_completed", "failures",
    "b0_circular_mean", "b0_circular_variance", "b1_mean", "b1_se", "b1_sd",
    "b2_mean", "b2_se", "b2_sd", "reported_b0", "reported_b1", "reported_b2",
)


def write_table_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in TABLE_COLUMNS])


def _cell(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_metadata(path, **meta):
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Coverage

@dataclass
class CoverageResult:
    mode: str
    coverage: float
    iterations: int
    hits: np.ndarray = field(repr=False)
    widths: np.ndarray = field(repr=False)
    x_j: float = 0.0
    level: float = 0.95
    B: int = 0

    def __float__(self):
        return self.coverage


def _one_coverage(i, config, x_j, B, level, mode, refit_starts):
    rng = make_rng(config.seed, i)
    data = simulate_dataset(config.truth, config.predictor, config.error, config.n, rng)
    res = fit(data, config.fit, rng=rng)
    interval = _bootstrap(mode, data, x_j, B, level, config.fit, _row_seed(config.seed, i),
                          refit_starts, res, 1)
    mean = link(x_j, config.truth)
    if mode == "pi" and config.error is not None:
        target = wrap_angle(mean + config.error.sample(1, rng)[0])
    else:
        target = mean
    hit = bool(arc_contains(interval.lower, interval.upper, target, tol=CONTAINMENT_TOL))
    return hit, float(arc_width(interval.lower, interval.upper))


def run_coverage(config, x_j, B=200, level=0.95, iterations=200, mode="ci",
                 refit_starts=1, jobs=1):
    """
    Empirical coverage of bootstrap intervals.

    For each iteration a fresh dataset is simulated from ``config``, the
    interval at ``x_j`` is built, and it is checked (on the circle) against
    the true mean direction (``mode="ci"``) or a freshly drawn response
    (``mode="pi"``).  ``refit_starts`` is passed on to the bootstrap.
    """
    if mode not in ("ci", "pi"):
        raise InvalidInputError(f"mode must be 'ci' or 'pi', got {mode!r}")
    if int(iterations) < 50:
        raise InvalidInputError(f"coverage needs at least 50 iterations, got {iterations}")
    work = partial(_one_coverage, config=config, x_j=float(x_j), B=B, level=level,
                   mode=mode, refit_starts=refit_starts)
    out = map_jobs(work, range(int(iterations)), jobs)
    hits = np.array([h for h, _ in out])
    widths = np.array([w for _, w in out])
    return CoverageResult(mode=mode, coverage=float(hits.mean()), iterations=int(iterations),
                          hits=hits, widths=widths, x_j=float(x_j), level=level, B=int(B))
