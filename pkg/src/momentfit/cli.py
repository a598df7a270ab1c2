"""``momentfit`` command line: fit, example, sweep, bound.

Every flag can also be given in a JSON ``--config`` file under the same
name with dashes replaced by underscores; flags win over the file.

Exit codes: 0 success, 2 input error, 3 degenerate moments,
4 solver non-convergence, 5 partial experiment.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import files
from .errors import HankelNotPD, InvalidSamples, MomentFitError, NotConverged, OddOrder
from .experiments import DEFAULT_SWEEP, ESTIMATORS, ExperimentConfig, run_experiment, write_report
from .hellinger import SolveOptions, solve
from .maxent import ENTROPY_METHODS, error_bound_report, fit_maxent
from .moments import MomentSequence, compute_sample_moments
from .priors import DEFAULT_INFLATION, GaussianPrior, default_prior
from .quadrature import DEFAULT_NODES_PER_PANEL, DEFAULT_PANELS, DEFAULT_WIDTH_SD, grid_for_prior
from .sampling import benchmark_example, sample_mixture

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NOT_CONVERGED, EXIT_PARTIAL = 0, 2, 3, 4, 5


class InputError(Exception):
    pass


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _add_grid(p):
    g = p.add_argument_group("quadrature grid")
    g.add_argument("--panels", type=int, help=f"Gauss-Legendre panels (default {DEFAULT_PANELS})")
    g.add_argument("--nodes-per-panel", type=int,
                   help=f"nodes per panel, 2..64 (default {DEFAULT_NODES_PER_PANEL})")
    g.add_argument("--width-sd", type=float,
                   help=f"half width in prior standard deviations (default {DEFAULT_WIDTH_SD:g})")


def _add_prior(p):
    g = p.add_argument_group("prior")
    g.add_argument("--prior-mean", type=float, help="prior mean (default: first moment)")
    g.add_argument("--prior-std", type=float, help="prior standard deviation")
    g.add_argument("--prior-inflation", type=float,
                   help=f"variance = inflation * mu_2 when --prior-std is absent (default {DEFAULT_INFLATION:g})")


def _add_experiment(p, sweep):
    p.add_argument("--id", type=int, dest="example_id", help="example number 1..5")
    p.add_argument("--runs", type=int, dest="mc_runs", help="Monte Carlo runs per sample count")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--estimators", type=_name_list, help=f"comma-separated subset of {','.join(ESTIMATORS)}")
    p.add_argument("--order", type=int, help="moment order 2n (default: the example's)")
    if sweep:
        p.add_argument("--sample-counts", type=_int_list,
                       help=f"comma-separated m values (default {','.join(map(str, DEFAULT_SWEEP))})")
    else:
        p.add_argument("--samples", type=int, dest="sample_count", help="samples per run")
        p.add_argument("--no-bound", action="store_true", default=None, help="skip the bound report")
    p.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--timestamps", action="store_true", default=None,
                   help="record wall-clock start/end in report.json (breaks byte-identity)")
    _add_grid(p)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="momentfit",
        description="Moment-matching density estimation under the squared Hellinger distance.",
    )
    parser.add_argument("--config", help="JSON file with default values for any flag")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a density to a sample file")
    p.add_argument("samples_path", nargs="?", help="one-column CSV or newline-delimited numbers")
    p.add_argument("--order", type=int, help="even moment order 2n")
    p.add_argument("--out", help="output prefix: writes PREFIX.json and PREFIX.csv")
    p.add_argument("--max-iter", type=int, help="Newton iteration cap (default 200)")
    p.add_argument("--no-standardize", action="store_true", default=None,
                   help="solve in raw coordinates")
    _add_prior(p)
    _add_grid(p)

    p = sub.add_parser("example", help="run one of the five benchmark experiments")
    _add_experiment(p, sweep=False)

    p = sub.add_parser("sweep", help="metrics against sample count for one example")
    _add_experiment(p, sweep=True)

    p = sub.add_parser("bound", help="maxent error-bound report")
    p.add_argument("samples_path", nargs="?", help="sample file (omit with --id)")
    p.add_argument("--id", type=int, dest="example_id", help="use example 1..5 as the truth")
    p.add_argument("--order", type=int, help="even moment order 2n")
    p.add_argument("--moments", choices=("population", "sample"),
                   help="with --id: analytic moments of the truth or moments of seeded draws "
                        "(default population)")
    p.add_argument("--samples", type=int, dest="sample_count", help="draws for --moments sample")
    p.add_argument("--seed", type=int, help="seed for --moments sample (default 0)")
    p.add_argument("--entropy", choices=sorted(ENTROPY_METHODS),
                   help="entropy of the truth from samples when it is unknown (default histogram)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    _add_prior(p)
    _add_grid(p)
    return parser


def _merge(args, config_path):
    """Flags override values from the JSON config file."""
    values = {}
    if config_path:
        try:
            values = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {config_path}: {exc}") from None
        if not isinstance(values, dict):
            raise InputError("config file must hold a JSON object")
        values = {k.replace("-", "_"): v for k, v in values.items()}
    for key, val in vars(args).items():
        if val is not None:
            values[key] = val
    return values


def _grid(opts, prior, breakpoints=()):
    return grid_for_prior(prior, opts.get("panels", DEFAULT_PANELS),
                          opts.get("nodes_per_panel", DEFAULT_NODES_PER_PANEL),
                          opts.get("width_sd", DEFAULT_WIDTH_SD), breakpoints)


def _prior(opts, moments):
    if opts.get("prior_std") is not None:
        mean = opts.get("prior_mean", moments.values[1])
        return GaussianPrior(float(mean), float(opts["prior_std"]))
    prior = default_prior(moments, opts.get("prior_inflation", DEFAULT_INFLATION))
    if opts.get("prior_mean") is not None:
        prior = GaussianPrior(float(opts["prior_mean"]), prior.std_dev)
    return prior


def _order(opts, default=None):
    order = opts.get("order", default)
    if order is None:
        raise InputError("--order is required")
    return int(order)


def cmd_fit(opts):
    if not opts.get("samples_path"):
        raise InputError("a sample file is required")
    samples = files.read_samples(opts["samples_path"])
    moments = compute_sample_moments(samples, _order(opts))
    prior = _prior(opts, moments)
    grid = _grid(opts, prior)
    sopts = SolveOptions(max_iter=int(opts.get("max_iter", 200)),
                         standardize=not opts.get("no_standardize", False))
    out = opts.get("out")
    code = EXIT_OK
    try:
        est = solve(moments, prior, grid, sopts)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.estimate is None:
            return EXIT_NOT_CONVERGED
        est, code = exc.estimate, EXIT_NOT_CONVERGED
    doc = est.to_dict()
    doc["sample_count"] = int(samples.size)
    if out:
        files.write_json(f"{out}.json", doc)
        xs = np.linspace(prior.mean - 10 * prior.std_dev, prior.mean + 10 * prior.std_dev, 1000)
        files.write_csv(f"{out}.csv", ["x", "density"], zip(xs, est.pdf(xs)))
    else:
        sys.stdout.write(files.dumps(doc))
    return code


def _experiment_config(opts, sweep):
    keys = ("example_id", "mc_runs", "seed", "estimators", "order", "panels", "nodes_per_panel",
            "width_sd", "sample_counts", "sample_count", "spec", "prior")
    data = {k: opts[k] for k in keys if opts.get(k) is not None}
    if "example_id" not in data and "spec" not in data:
        raise InputError("--id (or a custom spec in --config) is required")
    try:
        return ExperimentConfig.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid experiment config: {exc}") from None


def _now():
    return datetime.now(timezone.utc).isoformat()


def _run_and_write(opts, config, sample_counts, curves_m, bound):
    started = _now() if opts.get("timestamps") else None
    report = run_experiment(config, sample_counts, workers=int(opts.get("workers", 1)), bound=bound)
    stamps = {"start": started, "end": _now()} if started else None
    out = opts.get("out") or f"momentfit-{'sweep' if curves_m is None else 'example'}-" \
                             f"{config.example_id or 'custom'}"
    write_report(report, out, curves_m=curves_m, timestamps=stamps)
    for est, m, i, err in report.failures:
        print(f"warning: {est} failed on m={m} run {i}: {err}", file=sys.stderr)
    print(f"wrote {out}" + (" (partial)" if report.partial else ""), file=sys.stderr)
    return EXIT_PARTIAL if report.partial else EXIT_OK


def cmd_example(opts):
    config = _experiment_config(opts, sweep=False)
    return _run_and_write(opts, config, (config.sample_count,), config.sample_count,
                          bound=not opts.get("no_bound", False))


def cmd_sweep(opts):
    config = _experiment_config(opts, sweep=True)
    return _run_and_write(opts, config, config.sample_counts, None, bound=False)


def cmd_bound(opts):
    truth = None
    samples = None
    if opts.get("example_id") is not None:
        ex = benchmark_example(opts["example_id"])
        order = _order(opts, ex.order)
        truth = ex.spec
        if opts.get("moments", "population") == "population":
            moments = MomentSequence(order, tuple(ex.spec.moments(order)))
        else:
            samples = sample_mixture(ex.spec, int(opts.get("sample_count", ex.sample_count)),
                                     int(opts.get("seed", 0)))
            moments = compute_sample_moments(samples, order)
        prior = ex.prior if opts.get("prior_std") is None else _prior(opts, moments)
    elif opts.get("samples_path"):
        samples = files.read_samples(opts["samples_path"])
        moments = compute_sample_moments(samples, _order(opts))
        prior = _prior(opts, moments)
    else:
        raise InputError("give a sample file or --id")
    grid = _grid(opts, prior, truth.breakpoints() if truth is not None else ())
    est = solve(moments, prior, grid)
    maxent = fit_maxent(moments, grid)
    if truth is not None:
        rep = error_bound_report(est, moments, grid, true_density=truth.pdf, maxent=maxent)
    else:
        rep = error_bound_report(est, moments, grid, samples=samples, maxent=maxent,
                                 entropy_method=opts.get("entropy", "histogram"))
    doc = {"schema_version": 1, "order": moments.order,
           "prior": {"mean": prior.mean, "std_dev": prior.std_dev}, **rep.to_dict()}
    if not rep.approximate:
        doc["H_p"] = rep.H_p
    else:
        doc["H_p_plugin"] = doc.pop("H_p")
    if opts.get("out"):
        files.write_json(opts["out"], doc)
    else:
        sys.stdout.write(files.dumps(doc))
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "example": cmd_example, "sweep": cmd_sweep, "bound": cmd_bound}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _merge(args, args.config)
        return COMMANDS[args.command](opts)
    except HankelNotPD as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (InputError, InvalidSamples, OddOrder, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MomentFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
