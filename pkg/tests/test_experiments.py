import json
import math

import numpy as np
import pytest

from momentfit import files, svg
from momentfit.experiments import (
    METRIC_HEADER,
    ExperimentConfig,
    population_bound,
    run_experiment,
    run_single,
    with_overrides,
    write_report,
)
from momentfit.priors import GaussianPrior
from momentfit.sampling import benchmark_example


def small(example_id=1, **kw):
    return ExperimentConfig.for_example(example_id, mc_runs=3, estimators=("dpmsh", "kde"), **kw)


class TestConfig:
    def test_example_defaults(self):
        cfg = ExperimentConfig.for_example(4)
        ex = benchmark_example(4)
        assert (cfg.order, cfg.sample_count, cfg.prior, cfg.mc_runs) == (6, 200, ex.prior, 50)

    def test_round_trip_and_hash(self):
        cfg = small(3, seed=9)
        back = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert back == cfg and back.hash() == cfg.hash()
        assert with_overrides(cfg, seed=10).hash() != cfg.hash()

    def test_custom_spec(self):
        cfg = ExperimentConfig.from_dict({
            "spec": benchmark_example(2).spec.to_dict(), "prior": {"mean": 0.0, "std_dev": 5.0},
            "order": 4, "sample_count": 50})
        assert cfg.example_id is None and cfg.prior == GaussianPrior(0.0, 5.0)

    @pytest.mark.parametrize("bad", [
        {"example_id": 1, "order": 5}, {"example_id": 1, "mc_runs": 0},
        {"example_id": 1, "estimators": ["nope"]}, {"example_id": 1, "bogus": 1},
        {"order": 4}, {"example_id": 1, "sample_counts": [1]},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(bad)

    def test_grid_has_breakpoints(self):
        edges = small(3).grid().panel_edges
        assert 2.0 in edges and -2.0 in edges


class TestRuns:
    def test_single_run(self):
        rec = run_single(small(), 100, 0)
        assert set(rec) == {"dpmsh", "kde"}
        assert rec["dpmsh"]["status"] == "ok" and 0 < rec["dpmsh"]["tv"] < 1
        assert rec["dpmsh"]["moment_residual_max"] <= 1e-6
        assert math.isnan(rec["kde"]["moment_residual_max"])
        assert rec["kde"]["curve"].shape == (1000,)

    def test_worker_count_does_not_matter(self, tmp_path):
        cfg = small()
        a = write_report(run_experiment(cfg, workers=1), tmp_path / "a", curves_m=100)
        b = write_report(run_experiment(cfg, workers=2), tmp_path / "b", curves_m=100)
        assert a == b
        for name in ("metrics.csv", "runs.csv", "curves.csv", "report.json", "metrics.svg", "density.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_failures_recorded(self):
        cfg = ExperimentConfig.for_example(1, mc_runs=3, estimators=("gmm",), gmm_components=60)
        rep = run_experiment(cfg, sample_counts=(50,))
        assert rep.partial and len(rep.failures) == 3
        assert math.isnan(rep.summary()["gmm", 50]["tv_mean"])

    def test_report_files(self, tmp_path):
        rep = run_experiment(small(), sample_counts=(50, 100))
        rep.bound = population_bound(rep.config)
        doc = write_report(rep, tmp_path, timestamps={"start": "t0", "end": "t1"})
        header, rows = files.read_csv(tmp_path / "metrics.csv")
        assert header == METRIC_HEADER and len(rows) == 4
        assert [r[:2] for r in rows] == [["dpmsh", "50"], ["dpmsh", "100"], ["kde", "50"], ["kde", "100"]]
        loaded = json.loads((tmp_path / "report.json").read_text())
        assert loaded["provenance"]["timestamps"] == {"start": "t0", "end": "t1"}
        assert loaded["provenance"]["config_hash"] == rep.config.hash()
        assert doc["schema_version"] == 1 and not doc["partial"]
        bound = json.loads((tmp_path / "bound.json").read_text())
        assert bound["measured_tv"] <= bound["total"]
        assert not (tmp_path / "curves.csv").exists()

    def test_svg_regenerates_from_csv(self, tmp_path):
        write_report(run_experiment(small()), tmp_path, curves_m=100)
        header, rows = files.read_csv(tmp_path / "metrics.csv")
        again = svg.metrics_chart_from_csv(header, rows, "tv_mean", title="Example 1: mean sup-CDF distance")
        assert again == (tmp_path / "metrics.svg").read_text()
        header, rows = files.read_csv(tmp_path / "curves.csv")
        assert header == ["x", "true", "dpmsh", "kde"]
        again = svg.density_chart_from_csv(header, rows, title="Example 1: mean of 3 estimates, m = 100")
        assert again == (tmp_path / "density.svg").read_text()


class TestFiles:
    def test_samples_round_trip(self, tmp_path, rng):
        x = rng.normal(size=20)
        files.write_samples(tmp_path / "s.csv", x)
        np.testing.assert_array_equal(files.read_samples(tmp_path / "s.csv"), x)

    def test_plain_text(self, tmp_path):
        (tmp_path / "s.txt").write_text("1.5\n\n-2\n3e-1\n")
        np.testing.assert_array_equal(files.read_samples(tmp_path / "s.txt"), [1.5, -2.0, 0.3])

    @pytest.mark.parametrize("text", ["1\nabc\n", "1,2\n3,4\n"])
    def test_bad_files(self, tmp_path, text):
        from momentfit.errors import InvalidSamples
        (tmp_path / "s.txt").write_text(text)
        with pytest.raises(InvalidSamples):
            files.read_samples(tmp_path / "s.txt")

    def test_json_non_finite(self):
        assert json.loads(files.dumps({"a": float("nan"), "b": np.float64(2.0)})) == {"a": None, "b": 2.0}
