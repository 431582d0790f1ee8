"""
Command-line interface.

Every subcommand writes its outputs plus one ``manifest.json`` into
``--out``.  Exit status: 0 on success, 1 on usage errors (bad flags, missing
files), 2 on data or fitting errors.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from .bootstrap import bootstrap_ci, bootstrap_pi
from .circular import signed_angle, wrap_angle
from .diagnostics import circular_linear_correlation, qq_points, watson_u2_vonmises
from .distributions import AngularErrorSpec, PredictorSpec, make_rng
from .errors import CircRegError
from .estimation import Dataset, FitConfig, fit
from .experiments import (SCENARIOS, SIM_FIT, TABLES, SimConfig, reproduce_table,
                          run_coverage, run_simulation, scenario_config, simulate_dataset,
                          summary_row, write_metadata, write_table_csv)
from .ingest import daily_aggregate, parse_minute_csv, parse_schema, select_range, write_daily_csv
from .mobius import ModelParams, predict_curve
from .torus import TorusGeometry

log = logging.getLogger("circreg")

# Documents the plot-data files; copied into each manifest.
COLUMNS = {
    "fit_points.csv": {
        "x": "predictor",
        "theta": "observed angle in [0, 2pi)",
        "predicted": "fitted mean direction in [0, 2pi)",
        "residual": "(theta - predicted) mod 2pi",
        "residual_signed": "residual mapped to [-pi, pi) for plotting",
    },
    "fit_curve.csv": {
        "x": "grid over the observed predictor range",
        "fitted": "fitted regression curve",
        "truth": "true curve (only with --truth)",
    },
    "qq.csv": {
        "p": "probability level (i - 0.5)/m",
        "observed_quantile": "circular quantile of observed angles",
        "predicted_quantile": "circular quantile of fitted angles",
    },
    "bootstrap_angles.csv": {"replicate": "b", "angle": "replicate response at x_j"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    p.add_argument("--geometry", default="2,1", help="torus radii R,r (default 2,1)")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for Monte Carlo work")
    return p


def _data_args(p):
    p.add_argument("--input", required=True, help="CSV with predictor and response columns")
    p.add_argument("--response", default="theta_high",
                   help="response column (default theta_high; 'theta' is used if absent)")
    p.add_argument("--predictor", default="predictor_x",
                   help="predictor column (default predictor_x; 'x' is used if absent)")


def build_parser():
    common = _common()
    parser = _Parser(prog="circreg", description="Least-area circular regression: fit, intervals, diagnostics, simulation.")
    parser.add_argument("--version", action="version", version=f"circreg {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="minute OHLCV CSV -> daily angles")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", default="", help="overrides like high=High,unix=timestamp")
    p.add_argument("--start", help="first UTC date kept, YYYY-MM-DD")
    p.add_argument("--end", help="last UTC date kept, YYYY-MM-DD")

    p = sub.add_parser("fit", parents=[common], help="least-area fit")
    _data_args(p)
    p.add_argument("--starts", type=int, default=50, help="random starts (default 50)")
    p.add_argument("--truth", help="b0,b1,b2 of a known curve to overlay")

    p = sub.add_parser("predict", parents=[common], help="evaluate the regression curve")
    p.add_argument("--params", required=True, help="b0,b1,b2")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--x", help="comma-separated predictor values")
    g.add_argument("--input", help="CSV with a predictor column")
    p.add_argument("--predictor", default="predictor_x")

    for name, what in (("ci", "confidence interval"), ("pi", "prediction interval")):
        p = sub.add_parser(name, parents=[common], help=f"bootstrap {what} at --x")
        _data_args(p)
        p.add_argument("--x", type=float, required=True)
        p.add_argument("--B", type=int, default=1000)
        p.add_argument("--level", type=float, default=0.95)
        p.add_argument("--starts", type=int, default=50)
        p.add_argument("--refit-starts", type=int, default=5,
                       help="starts per bootstrap refit, the original estimate included")

    p = sub.add_parser("diagnose", parents=[common], help="residuals, Watson test, QQ, correlation")
    _data_args(p)
    p.add_argument("--params", required=True, help="b0,b1,b2")

    p = sub.add_parser("simulate", parents=[common], help="simulation tables and scenarios")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--table", choices=sorted(TABLES))
    g.add_argument("--scenario", choices=sorted(SCENARIOS))
    p.add_argument("--scale", type=float, default=0.05,
                   help="fraction of 10000 replications per table row (default 0.05)")
    p.add_argument("--replications", type=int, default=500, help="for --scenario")
    p.add_argument("--starts", type=int, default=SIM_FIT.n_starts)

    p = sub.add_parser("coverage", parents=[common], help="bootstrap coverage study")
    p.add_argument("--mode", choices=("ci", "pi"), required=True)
    p.add_argument("--truth", default="0,1.5,0.5")
    p.add_argument("--family", choices=("vonmises", "wrappedcauchy"), default="vonmises")
    p.add_argument("--concentration", type=float, default=3.0)
    p.add_argument("--predictor-family", choices=("normal", "cauchy"), default="normal")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--B", type=int, default=200)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--starts", type=int, default=SIM_FIT.n_starts)
    p.add_argument("--refit-starts", type=int, default=1)

    p = sub.add_parser("sample", parents=[common], help="write a simulated (x, theta) dataset")
    p.add_argument("--truth", default="0,1.5,0.5")
    p.add_argument("--family", choices=("vonmises", "wrappedcauchy"), default="vonmises")
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--predictor-family", choices=("normal", "cauchy"), default="normal")
    p.add_argument("--n", type=int, default=500)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="write to this directory instead of the recorded one")
    return parser


# ---------------------------------------------------------------------------
# helpers

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require_file(path):
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    return path


def _geometry(args):
    try:
        return TorusGeometry.parse(args.geometry)
    except ValueError as exc:
        raise UsageError(f"--geometry: {exc}") from None


def _params(text, flag):
    try:
        return ModelParams.parse(text)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _load_pairs(path, predictor, response):
    """(x, theta) pairs from a CSV; rows with an exclusion reason or no predictor are skipped."""
    with open(_require_file(path), newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if predictor not in fields and "x" in fields:
            predictor = "x"
        if response not in fields and "theta" in fields:
            response = "theta"
        for col in (predictor, response):
            if col not in fields:
                raise CircRegError(f"column {col!r} not found in {path}")
        xs, ths = [], []
        for row in reader:
            if row.get("excluded_reason"):
                continue
            if not row[predictor] or not row[response]:
                continue
            xs.append(float(row[predictor]))
            ths.append(float(row[response]))
    return Dataset(np.array(xs), np.array(ths))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _num(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _params_dict(p):
    return {"b0": p.b0, "b1": p.b1, "b2": p.b2}


def _fit_config(args, starts):
    return FitConfig(geometry=_geometry(args), n_starts=starts, seed=args.seed)


# ---------------------------------------------------------------------------
# subcommands; each returns (outputs, inputs)

def cmd_ingest(args):
    path = _require_file(args.input)
    bars, rejects = parse_minute_csv(path, parse_schema(args.schema))
    records = select_range(daily_aggregate(bars) if bars else [], args.start, args.end)
    daily = os.path.join(args.out, "daily.csv")
    with open(daily, "w", newline="") as fh:
        write_daily_csv(records, fh)
    rej = os.path.join(args.out, "rejects.csv")
    _write_rows(rej, ("row", "reason"), [(r.row, r.reason) for r in rejects])
    usable = sum(r.usable for r in records)
    log.info("ingest: %d bars, %d rejects, %d days (%d usable)",
             len(bars), len(rejects), len(records), usable)
    return [daily, rej], [path]


def _fit_outputs(out, data, res, truth=None):
    p = res.params
    pred = predict_curve(data.x, p)
    points = os.path.join(out, "fit_points.csv")
    _write_rows(points, tuple(COLUMNS["fit_points.csv"]),
                zip(data.x, data.theta, pred, res.residuals, signed_angle(res.residuals)))
    grid = np.linspace(data.x.min(), data.x.max(), 201)
    cols = [grid, predict_curve(grid, p)]
    header = ["x", "fitted"]
    if truth is not None:
        cols.append(predict_curve(grid, truth))
        header.append("truth")
    curve = os.path.join(out, "fit_curve.csv")
    _write_rows(curve, header, zip(*cols))
    return [points, curve]


def cmd_fit(args):
    data = _load_pairs(args.input, args.predictor, args.response)
    res = fit(data, _fit_config(args, args.starts))
    truth = _params(args.truth, "--truth") if args.truth else None
    summary = os.path.join(args.out, "fit.json")
    _write_json(summary, {
        "params": _params_dict(res.params), "loss": res.loss, "n": len(data),
        "converged": res.converged, "iterations": res.iterations,
        "best_start": res.best_start, "per_start_losses": res.per_start_losses,
        "seed": res.seed, "geometry": asdict(_geometry(args)),
    })
    print(f"b0={res.params.b0:.6f} b1={res.params.b1:.6f} b2={res.params.b2:.6f} "
          f"loss={res.loss:.6g} n={len(data)}")
    return [summary] + _fit_outputs(args.out, data, res, truth), [args.input]


def cmd_predict(args):
    p = _params(args.params, "--params")
    inputs = []
    if args.input:
        with open(_require_file(args.input), newline="") as fh:
            reader = csv.DictReader(fh)
            col = args.predictor if args.predictor in (reader.fieldnames or []) else "x"
            xs = np.array([float(r[col]) for r in reader if r.get(col)])
        inputs.append(args.input)
    else:
        try:
            xs = np.array([float(v) for v in args.x.split(",")])
        except ValueError:
            raise UsageError(f"--x must be comma-separated numbers, got {args.x!r}") from None
    out = os.path.join(args.out, "predictions.csv")
    _write_rows(out, ("x", "predicted"), zip(xs, predict_curve(xs, p)))
    return [out], inputs


def _cmd_interval(args, kind):
    data = _load_pairs(args.input, args.predictor, args.response)
    func = bootstrap_ci if kind == "ci" else bootstrap_pi
    res = func(data, args.x, B=args.B, level=args.level, config=_fit_config(args, args.starts),
               seed=args.seed, refit_starts=args.refit_starts, jobs=args.jobs)
    summary = os.path.join(args.out, "interval.json")
    _write_json(summary, {
        "kind": kind, "x": args.x, "lower": res.lower, "upper": res.upper,
        "center": res.center, "width": res.width, "level": res.level, "B": res.B,
        "params": _params_dict(res.params),
    })
    angles = os.path.join(args.out, "bootstrap_angles.csv")
    _write_rows(angles, ("replicate", "angle"), enumerate(res.bootstrap_angles, start=1))
    print(f"{kind} at x={args.x}: [{res.lower:.6f}, {res.upper:.6f}] center={res.center:.6f}")
    return [summary, angles], [args.input]


def cmd_diagnose(args):
    data = _load_pairs(args.input, args.predictor, args.response)
    p = _params(args.params, "--params")
    pred = predict_curve(data.x, p)
    resid = wrap_angle(data.theta - pred)
    watson = watson_u2_vonmises(resid)
    qq = qq_points(data.theta, pred)
    corr = circular_linear_correlation(data.x, data.theta)
    res_path = os.path.join(args.out, "residuals.csv")
    _write_rows(res_path, ("index", "x", "residual", "residual_signed"),
                zip(range(len(data)), data.x, resid, signed_angle(resid)))
    qq_path = os.path.join(args.out, "qq.csv")
    m = qq.shape[0]
    _write_rows(qq_path, tuple(COLUMNS["qq.csv"]),
                zip((np.arange(1, m + 1) - 0.5) / m, qq[:, 0], qq[:, 1]))
    diag = os.path.join(args.out, "diagnostics.json")
    _write_json(diag, {"watson": asdict(watson), "correlation": corr,
                       "params": _params_dict(p), "n": len(data)})
    verdict = "reject" if watson.reject else "do not reject"
    print(f"Watson U2={watson.statistic:.4f} (critical {watson.critical_value}): {verdict}; "
          f"correlation={corr:.4f}")
    return [res_path, qq_path, diag], [args.input]


def cmd_simulate(args):
    fit_cfg = SIM_FIT.with_(geometry=_geometry(args), n_starts=args.starts)
    if args.table:
        rows = reproduce_table(args.table, args.scale, args.seed, fit_cfg, jobs=args.jobs)
        name = f"table_{args.table}.csv"
    else:
        cfg = scenario_config(args.scenario, args.replications, args.seed, fit_cfg)
        summary = run_simulation(cfg, jobs=args.jobs)
        spec = SCENARIOS[args.scenario]
        rows = [summary_row(args.scenario, spec["n"], spec["concentration"], summary,
                            spec["reported"])]
        name = f"scenario_{args.scenario}.csv"
    out = os.path.join(args.out, name)
    write_table_csv(rows, out)
    for row in rows:
        print(f"{row['table']} n={row['n']} c={row['concentration']}: "
              f"b0={row['b0_circular_mean']:.4f} b1={row['b1_mean']:.4f} b2={row['b2_mean']:.4f}")
    return [out], []


def _sim_config(args, replications=1):
    return SimConfig(
        truth=_params(args.truth, "--truth"),
        predictor=PredictorSpec(args.predictor_family),
        error=AngularErrorSpec(args.family, args.concentration),
        n=args.n, replications=replications,
        fit=SIM_FIT.with_(geometry=_geometry(args),
                          n_starts=getattr(args, "starts", SIM_FIT.n_starts)),
        seed=args.seed,
    )


def cmd_coverage(args):
    cfg = _sim_config(args)
    res = run_coverage(cfg, args.x, B=args.B, level=args.level, iterations=args.iterations,
                       mode=args.mode, refit_starts=args.refit_starts, jobs=args.jobs)
    out = os.path.join(args.out, f"coverage_{args.mode}.json")
    _write_json(out, {"mode": res.mode, "coverage": res.coverage, "iterations": res.iterations,
                      "x": res.x_j, "level": res.level, "B": res.B,
                      "mean_width": float(np.mean(res.widths)), "hits": res.hits.astype(int)})
    print(f"{args.mode} coverage {res.coverage:.3f} over {res.iterations} iterations")
    return [out], []


def cmd_sample(args):
    cfg = _sim_config(args)
    data = simulate_dataset(cfg.truth, cfg.predictor, cfg.error, cfg.n, make_rng(args.seed))
    out = os.path.join(args.out, "sample.csv")
    _write_rows(out, ("x", "theta"), zip(data.x, data.theta))
    return [out], []


COMMANDS = {
    "ingest": cmd_ingest, "fit": cmd_fit, "predict": cmd_predict,
    "ci": lambda a: _cmd_interval(a, "ci"), "pi": lambda a: _cmd_interval(a, "pi"),
    "diagnose": cmd_diagnose, "simulate": cmd_simulate, "coverage": cmd_coverage,
    "sample": cmd_sample,
}


def _replay(args):
    with open(_require_file(args.manifest)) as fh:
        manifest = json.load(fh)
    argv = list(manifest["argv"])
    if args.out:
        argv += ["--out", args.out]
    return run(argv)


def _execute(args, argv):
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    outputs, inputs = COMMANDS[args.command](args)
    wall = time.perf_counter() - t0
    manifest = {
        "command": args.command,
        "argv": argv,
        "config": {k: v for k, v in vars(args).items() if k not in ("verbose",)},
        "seed": args.seed,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
        "columns": {os.path.basename(p): COLUMNS[os.path.basename(p)]
                    for p in outputs if os.path.basename(p) in COLUMNS},
        "version": __version__,
        "wall_time_s": round(wall, 3),
    }
    if args.command == "simulate":
        manifest["scale"] = args.scale
    write_metadata(os.path.join(args.out, "manifest.json"), **manifest)


def run(argv=None):
    """Entry point returning an exit code instead of exiting."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 1
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "replay":
            return _replay(args)
        _execute(args, argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"circreg: error: {exc}", file=sys.stderr)
        return 1
    except (CircRegError, ValueError, KeyError) as exc:
        print(f"circreg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())
