"""Monte Carlo experiment harness.

A run is keyed by ``(m, run_index)``.  Its samples come from the child
stream ``make_rng(seed, m, run_index)``, so results do not depend on
execution order or worker count.  Every estimator failure is recorded per
run; a report with any failure is marked partial.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import files, svg
from .baselines import dpmkl_solve, gmm_fit, kde_fit
from .errors import MomentFitError
from .hellinger import solve
from .maxent import error_bound_report
from .metrics import kl_divergence, tv_distance
from .moments import MomentSequence, compute_sample_moments
from .priors import GaussianPrior
from .quadrature import DEFAULT_NODES_PER_PANEL, DEFAULT_PANELS, DEFAULT_WIDTH_SD, grid_for_prior
from .sampling import GENERATOR_NAME, MixtureSpec, make_rng, benchmark_example, sample_mixture

REPORT_SCHEMA_VERSION = 1
ESTIMATORS = ("dpmsh", "dpmkl", "kde", "gmm")
DEFAULT_SWEEP = (50, 100, 200, 400)
EVAL_POINTS = 1000
EVAL_WIDTH_SD = 10.0


@dataclass(frozen=True)
class ExperimentConfig:
    spec: MixtureSpec
    prior: GaussianPrior
    order: int
    sample_count: int
    example_id: int | None = None
    mc_runs: int = 50
    sample_counts: tuple = DEFAULT_SWEEP
    seed: int = 0
    panels: int = DEFAULT_PANELS
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL
    width_sd: float = DEFAULT_WIDTH_SD
    estimators: tuple = ESTIMATORS
    gmm_components: int = 2

    def __post_init__(self):
        if self.mc_runs < 1:
            raise ValueError("mc_runs must be at least 1")
        if not self.sample_counts:
            raise ValueError("sample_counts must be non-empty")
        if any(int(m) != m or m < 2 for m in self.sample_counts) or self.sample_count < 2:
            raise ValueError("sample counts must be integers >= 2")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ValueError(f"estimators must be a non-empty subset of {ESTIMATORS}, got {self.estimators}")
        if self.order < 2 or self.order % 2:
            raise ValueError(f"order must be an even integer >= 2, got {self.order}")

    @classmethod
    def for_example(cls, example_id, **overrides):
        ex = benchmark_example(example_id)
        base = dict(spec=ex.spec, prior=ex.prior, order=ex.order, sample_count=ex.sample_count,
                    example_id=ex.id, mc_runs=ex.mc_runs)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        ex_id = data.pop("example_id", None)
        conv = {}
        if "spec" in data:
            conv["spec"] = MixtureSpec.from_dict(data.pop("spec"))
        if "prior" in data:
            p = data.pop("prior")
            conv["prior"] = GaussianPrior(float(p["mean"]), float(p["std_dev"]))
        for key in ("sample_counts", "estimators"):
            if key in data:
                conv[key] = tuple(data.pop(key))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        conv.update(data)
        if ex_id is not None:
            return cls.for_example(int(ex_id), **conv)
        missing = {"spec", "prior", "order", "sample_count"} - set(conv)
        if missing:
            raise ValueError(f"custom experiment needs {sorted(missing)} (or an example_id)")
        return cls(**conv)

    def to_dict(self):
        d = asdict(self)
        d["spec"] = self.spec.to_dict()
        d["prior"] = {"mean": self.prior.mean, "std_dev": self.prior.std_dev}
        d["sample_counts"] = list(self.sample_counts)
        d["estimators"] = list(self.estimators)
        return d

    def hash(self):
        blob = json.dumps(files._plain(self.to_dict()), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def grid(self):
        return grid_for_prior(self.prior, self.panels, self.nodes_per_panel, self.width_sd,
                              self.spec.breakpoints())

    def eval_points(self):
        w = EVAL_WIDTH_SD * self.prior.std_dev
        return np.linspace(self.prior.mean - w, self.prior.mean + w, EVAL_POINTS)


def _fit(name, x, config, keys):
    grid = config.grid()
    if name == "dpmsh":
        return solve(compute_sample_moments(x, config.order), config.prior, grid)
    if name == "dpmkl":
        return dpmkl_solve(compute_sample_moments(x, config.order), config.prior, grid)
    if name == "kde":
        return kde_fit(x)
    return gmm_fit(x, config.gmm_components, seed=config.seed, keys=keys)


def run_single(config, m, run_index):
    """Sample, fit every configured estimator and score it against the truth."""
    x = sample_mixture(config.spec, m, make_rng(config.seed, m, run_index))
    grid = config.grid()
    xs = config.eval_points()
    out = {}
    for name in config.estimators:
        rec = {"status": "ok", "tv": math.nan, "kl": math.nan, "moment_residual_max": math.nan,
               "curve": None}
        try:
            model = _fit(name, x, config, (m, run_index))
            rec["tv"] = tv_distance(model, config.spec.pdf, grid)
            rec["kl"] = kl_divergence(config.spec, model, grid)
            diag = getattr(model, "diagnostics", None)
            if diag:
                rec["moment_residual_max"] = diag["max_relative_residual"]
            rec["curve"] = model.pdf(xs)
        except (MomentFitError, ValueError) as exc:
            rec["status"] = f"{type(exc).__name__}: {exc}"
        out[name] = rec
    return out


def _run_one(args):
    return run_single(*args)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    # runs[m][run_index][estimator] -> record
    runs: dict = field(default_factory=dict)
    bound: dict | None = None

    @property
    def failures(self):
        return [(est, m, i, rec["status"])
                for m, rows in self.runs.items() for i, row in enumerate(rows)
                for est, rec in row.items() if rec["status"] != "ok"]

    @property
    def partial(self):
        return bool(self.failures)

    def summary(self):
        """``(estimator, m) -> aggregated metrics`` over successful runs."""
        table = {}
        for m, rows in self.runs.items():
            for est in self.config.estimators:
                good = [r[est] for r in rows if r[est]["status"] == "ok"]
                tv = np.array([g["tv"] for g in good])
                kl = np.array([g["kl"] for g in good])
                res = np.array([g["moment_residual_max"] for g in good])
                ddof = 1 if len(good) > 1 else 0
                table[est, m] = {
                    "tv_mean": float(tv.mean()) if good else math.nan,
                    "tv_std": float(tv.std(ddof=ddof)) if good else math.nan,
                    "kl_mean": float(kl.mean()) if good else math.nan,
                    "kl_std": float(kl.std(ddof=ddof)) if good else math.nan,
                    "n_ok": len(good),
                    "n_runs": len(rows),
                    "moment_residual_max": float(np.max(res)) if good and np.all(np.isfinite(res)) else math.nan,
                }
        return table

    def mean_curves(self, m):
        rows = self.runs[m]
        curves = {}
        for est in self.config.estimators:
            good = [r[est]["curve"] for r in rows if r[est]["status"] == "ok"]
            curves[est] = np.mean(good, axis=0) if good else np.full(EVAL_POINTS, math.nan)
        return curves

    def to_dict(self, timestamps=None):
        summary = self.summary()
        d = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "provenance": {"seed": self.config.seed, "config_hash": self.config.hash(),
                           "generator": GENERATOR_NAME},
            "config": self.config.to_dict(),
            "partial": self.partial,
            "failures": [{"estimator": e, "m": m, "run": i, "error": s} for e, m, i, s in self.failures],
            "metrics": [{"estimator": e, "m": m, **v} for (e, m), v in sorted(
                summary.items(), key=lambda kv: (self.config.estimators.index(kv[0][0]), kv[0][1]))],
            "bound": self.bound,
        }
        if timestamps:
            d["provenance"]["timestamps"] = timestamps
        return d


def run_experiment(config, sample_counts=None, workers=1, bound=False):
    """Run ``mc_runs`` runs for every ``m`` in ``sample_counts``."""
    counts = tuple(sample_counts) if sample_counts is not None else (config.sample_count,)
    jobs = [(config, int(m), i) for m in counts for i in range(config.mc_runs)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]
    report = ExperimentReport(config)
    for (_, m, _), res in zip(jobs, results):
        report.runs.setdefault(m, []).append(res)
    if bound:
        report.bound = population_bound(config)
    return report


def population_bound(config, order=None):
    """Bound report for a DPMSH fit to the truth's population moments."""
    order = order or config.order
    grid = config.grid()
    moments = MomentSequence(order, tuple(config.spec.moments(order)))
    est = solve(moments, config.prior, grid)
    rep = error_bound_report(est, moments, grid, true_density=config.spec.pdf)
    return {"order": order, "moments": "population", **rep.to_dict()}


def _metric_rows(report):
    summary = report.summary()
    rows = []
    for est in report.config.estimators:
        for m in sorted(report.runs):
            s = summary[est, m]
            rows.append([est, m, s["tv_mean"], s["tv_std"], s["kl_mean"], s["kl_std"]])
    return rows


METRIC_HEADER = ["estimator", "m", "tv_mean", "tv_std", "kl_mean", "kl_std"]


def write_report(report, out_dir, curves_m=None, timestamps=None):
    """Write ``metrics.csv``, ``runs.csv``, ``report.json`` and SVG charts.

    With ``curves_m`` set, ``curves.csv`` and ``density.svg`` hold the mean
    density curves at that sample count.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = report.config
    label = f"Example {cfg.example_id}" if cfg.example_id else "custom experiment"
    files.write_csv(out / "metrics.csv", METRIC_HEADER, _metric_rows(report))
    run_rows = [[est, m, i, rec["status"], rec["tv"], rec["kl"], rec["moment_residual_max"]]
                for m in sorted(report.runs) for i, row in enumerate(report.runs[m])
                for est, rec in row.items()]
    files.write_csv(out / "runs.csv", ["estimator", "m", "run", "status", "tv", "kl",
                                       "moment_residual_max"], run_rows)
    header, rows = files.read_csv(out / "metrics.csv")
    (out / "metrics.svg").write_text(svg.metrics_chart_from_csv(
        header, rows, "tv_mean", title=f"{label}: mean sup-CDF distance"))
    if curves_m is not None:
        xs = cfg.eval_points()
        curves = report.mean_curves(curves_m)
        cols = ["x", "true"] + list(cfg.estimators)
        data = [xs, cfg.spec.pdf(xs)] + [curves[e] for e in cfg.estimators]
        files.write_csv(out / "curves.csv", cols, zip(*data))
        header, rows = files.read_csv(out / "curves.csv")
        (out / "density.svg").write_text(svg.density_chart_from_csv(
            header, rows, title=f"{label}: mean of {cfg.mc_runs} estimates, m = {curves_m}"))
    doc = report.to_dict(timestamps)
    files.write_json(out / "report.json", doc)
    if report.bound is not None:
        files.write_json(out / "bound.json", report.bound)
    return doc


def with_overrides(config, **kw):
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
