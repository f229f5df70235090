"""Tests for the experiment engine: determinism, calibration, per-kind checks."""

import math
import os

import numpy as np
import pytest
from dataclasses import replace

from hyplab.errors import InvalidConfigError
from hyplab.experiments import (
    ExperimentConfig,
    calibrate,
    calibration_key,
    load_calibration,
    run_experiment,
)
from hyplab.rng import DistSpec

GAUSS_R = DistSpec("gaussian", "real")
GAUSS_C = DistSpec("gaussian", "complex")
BERN_C = DistSpec("bernoulli", "complex")


def small(kind, **kw):
    defaults = dict(kind=kind, n=24, trials=40, threads=1, master_seed=7)
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestConfigValidation:
    def test_unknown_kind(self):
        with pytest.raises(InvalidConfigError):
            small("spectral-gap").validate()

    def test_n_floor(self):
        with pytest.raises(InvalidConfigError):
            small("sup-norm", n=4).validate()

    def test_codim_range(self):
        with pytest.raises(InvalidConfigError):
            small("distance-conc", n=24, m=20).validate()

    def test_tuple_size_range(self):
        with pytest.raises(InvalidConfigError):
            small("normal-coords", n=16, d=5).validate()
        small("normal-coords", n=200, d=4).validate()  # ceil(200^(1/4)) = 4

    def test_inner_product_requires_symmetric_law(self):
        a = math.sqrt(2.0)
        skewed = DistSpec(
            "custom", "real", support=(-1.0 / a, 2.0 / a), weights=(2 / 3, 1 / 3)
        )
        with pytest.raises(InvalidConfigError):
            small("inner-product", dist=skewed).validate()

    def test_t_grid_must_increase(self):
        with pytest.raises(InvalidConfigError):
            small("upper-tail", t_grid=(1.0, 1.0, 2.0)).validate()

    def test_be_lengths_must_increase(self):
        with pytest.raises(InvalidConfigError):
            small("berry-esseen", be_lengths=(16, 4)).validate()

    def test_bad_reference_name(self):
        with pytest.raises(InvalidConfigError):
            small("least-singular", reference="cauchy").validate()


class TestDeterminism:
    def test_reports_identical_for_any_worker_count(self):
        base = small("least-singular", n=16, trials=30, dist=GAUSS_C)
        rep1 = run_experiment(base)
        rep8 = run_experiment(replace(base, threads=8))
        d1, d8 = rep1.to_dict(), rep8.to_dict()
        assert d1 == d8

    def test_reseeding_changes_results(self):
        rep_a = run_experiment(small("sup-norm", master_seed=1))
        rep_b = run_experiment(small("sup-norm", master_seed=2))
        assert rep_a.per_trial["sup_stat"][0] != rep_b.per_trial["sup_stat"][0]

    def test_report_structure(self):
        rep = run_experiment(small("min-coord", trials=25))
        assert rep.summary["min_stat"]["count"] == 25
        assert len(rep.per_trial["min_stat"]) == 25
        assert set(rep.summary["min_stat"]) >= {"mean", "std", "min", "max", "q50"}
        assert rep.discarded == {"count": 0, "reasons": {}}
        payload = rep.to_dict()
        assert "wall_time_seconds" not in payload
        assert rep.to_dict(include_timing=True)["wall_time_seconds"] > 0
        assert "threads" not in payload["config"]


class TestCalibration:
    def test_sup_norm_roundtrip(self, tmp_path):
        path = str(tmp_path / "cal.json")
        entry = calibrate("sup-norm", n=32, trials=120, threads=1, calibration_path=path)
        assert entry["upper"] > entry["lower"] > 0
        table = load_calibration(path)
        assert calibration_key("sup-norm", 32) in table

        config = small("sup-norm", n=32, trials=120, dist=GAUSS_R, calibration_path=path)
        rep = run_experiment(config)
        assert rep.checks["sup_envelope"]["passed"]
        assert rep.checks["sup_lower_envelope_fraction"]["passed"]

    def test_missing_calibration_skips_envelope_checks(self):
        rep = run_experiment(small("sup-norm"))
        assert rep.checks["sup_envelope"] == {"skipped": "no calibration for sup-norm at this n"}
        assert rep.passed  # skipped checks do not fail the report

    def test_neg_second_moment_calibration_trivial(self):
        assert calibrate("neg-second-moment", n=40, trials=1) == {"tolerance": 1e-8}

    def test_uncalibratable_kind_rejected(self):
        with pytest.raises(InvalidConfigError):
            calibrate("berry-esseen", n=16, trials=10)

    def test_gaussian_self_consistency_under_reseeding(self, tmp_path):
        # scaled-down version of the 95-of-100 reseeding invariant
        path = str(tmp_path / "cal.json")
        calibrate("sup-norm", n=64, trials=300, threads=2, calibration_path=path)
        passed = 0
        for seed in range(12):
            rep = run_experiment(
                ExperimentConfig(
                    kind="sup-norm", n=64, trials=300, dist=GAUSS_R,
                    master_seed=seed, threads=2, calibration_path=path,
                )
            )
            passed += rep.passed
        assert passed >= 11

    def test_min_coord_calibration(self, tmp_path):
        path = str(tmp_path / "cal.json")
        entry = calibrate("min-coord", n=32, trials=200, calibration_path=path)
        assert entry["lower"] > 0
        rep = run_experiment(
            small("min-coord", n=32, trials=200, dist=GAUSS_R, calibration_path=path)
        )
        assert rep.checks["min_coord_below_calibrated_fraction"]["passed"]


class TestKinds:
    def test_upper_tail_exponential_law(self):
        # complex gaussian: survival of n sigma_min^2 is exactly e^{-t}
        rep = run_experiment(
            ExperimentConfig(
                kind="upper-tail", n=24, trials=2000, dist=GAUSS_C, threads=2,
                t_grid=(0.5, 1.0, 1.5, 2.0, 3.0, 4.0),
            )
        )
        assert rep.checks["survival_nonincreasing"]["passed"]
        slope = rep.checks["log_survival_slope"]["value"]
        assert rep.checks["log_survival_r2"]["value"] >= 0.97
        assert -1.35 <= slope <= -0.7

    def test_upper_tail_insufficient_resolution_skips_fit(self):
        rep = run_experiment(
            ExperimentConfig(
                kind="upper-tail", n=16, trials=20, dist=GAUSS_C, t_grid=(30.0, 40.0, 50.0)
            )
        )
        assert rep.checks["log_survival_slope"] == {"skipped": "fewer than 3 resolved grid points"}

    def test_least_singular_reference_override(self):
        rep = run_experiment(
            small("least-singular", n=16, trials=30, dist=GAUSS_C, reference="std-normal")
        )
        assert "ks_std-normal" in rep.ks_results

    def test_universality_companion(self):
        rep = run_experiment(
            ExperimentConfig(
                kind="least-singular", n=16, trials=400,
                dist=DistSpec("bernoulli", "real"), universality=True, threads=2,
            )
        )
        entry = rep.ks_results["universality_n_sigma_min_sq"]
        assert entry["threshold"] == 0.06
        assert 0.0 <= entry["statistic"] <= 1.0

    def test_universality_flag_ignored_for_gaussian(self):
        rep = run_experiment(small("least-singular", n=16, dist=GAUSS_C, universality=True))
        assert not any(k.startswith("universality") for k in rep.ks_results)

    @pytest.mark.parametrize("kind,stat", [
        ("normal-coords", "coord0"),
        ("inner-product", "ip"),
    ])
    def test_universality_meter_scaled(self, kind, stat):
        # scaled-down sampling of the n=128/2000-trial universality invariant
        rep = run_experiment(
            ExperimentConfig(
                kind=kind, n=64, trials=800, d=2, threads=2,
                dist=DistSpec("bernoulli", "real"), universality=True,
            )
        )
        entry = rep.ks_results[f"universality_{stat}"]
        assert entry["statistic"] <= entry["threshold"], entry

    def test_universality_meter_sup_norm(self):
        # the extreme-value statistic needs larger n before the Bernoulli
        # and gaussian laws meet the 0.06 meter (converges like 1/log n)
        rep = run_experiment(
            ExperimentConfig(
                kind="sup-norm", n=400, trials=2000, threads=2,
                dist=DistSpec("bernoulli", "real"), universality=True,
            )
        )
        entry = rep.ks_results["universality_sup_stat"]
        assert entry["statistic"] <= 0.06, entry

    def test_upper_tail_runs_gaussian_comparison_by_default(self):
        rep = run_experiment(
            ExperimentConfig(kind="upper-tail", n=16, trials=300,
                             dist=DistSpec("bernoulli", "real"), threads=2)
        )
        assert "universality_n_sigma_min_sq" in rep.ks_results

    def test_eigenvector_structure_and_histograms(self):
        rep = run_experiment(
            ExperimentConfig(kind="eigenvector", n=16, trials=50, dist=BERN_C, threads=2)
        )
        assert set(rep.per_trial) == {"sup_stat", "re_v1", "im_v1", "modulus"}
        for name in ("re_v1", "im_v1"):
            hist = rep.histograms[name]
            assert hist.counts.size == 40
            assert hist.bin_edges[0] == -4.0 and hist.bin_edges[-1] == 4.0
        assert "ks_re_v1" in rep.ks_results and "ks_im_v1" in rep.ks_results

    def test_eigenvector_all_trials_discarded_fails(self):
        rep = run_experiment(
            ExperimentConfig(kind="eigenvector", n=16, trials=10, dist=BERN_C, eigen_max_iter=1)
        )
        assert not rep.passed
        assert rep.discarded["count"] == 10
        assert rep.discarded["reasons"] == {"non-converged": 10}
        assert not rep.checks["degenerate_ensemble_fraction"]["passed"]

    def test_distance_concentration_checks(self):
        rep = run_experiment(
            ExperimentConfig(kind="distance-conc", n=64, trials=300, m=8, threads=2)
        )
        assert rep.checks["distance_within_5_fraction"]["passed"]
        assert rep.checks["correlation_within_5_fraction"]["passed"]

    def test_hanson_wright_envelope(self):
        rep = run_experiment(
            ExperimentConfig(kind="hanson-wright", n=64, trials=3000, threads=2)
        )
        assert rep.checks["hw_fitted_rate_positive"]["passed"]
        assert rep.checks["hw_survival_at_4_below_envelope"]["passed"]

    def test_berry_esseen_envelope_scaling(self):
        rep = run_experiment(
            ExperimentConfig(
                kind="berry-esseen", n=16, trials=8000, be_lengths=(4, 16, 64), threads=2
            )
        )
        assert all(entry["passed"] for entry in rep.ks_results.values())
        # the Bernoulli lattice error really does shrink with the ladder
        ks4 = rep.ks_results["ks_be_4"]["statistic"]
        ks64 = rep.ks_results["ks_be_64"]["statistic"]
        assert ks64 < ks4

    def test_normal_coords_complex_components(self):
        rep = run_experiment(
            ExperimentConfig(kind="normal-coords", n=32, trials=60, d=2, dist=BERN_C)
        )
        assert set(rep.per_trial) == {"coord0_re", "coord0_im", "coord1_re", "coord1_im"}

    def test_sphere_baseline_passes_at_scale(self):
        rep = run_experiment(
            ExperimentConfig(kind="sphere-baseline", n=64, trials=3000, threads=2)
        )
        assert rep.passed, (rep.ks_results, rep.checks)

    def test_neg_second_moment_gaussian(self):
        rep = run_experiment(
            ExperimentConfig(kind="neg-second-moment", n=30, trials=25, m=20, dist=GAUSS_R)
        )
        assert rep.passed
        assert rep.checks["identity_max_rel_err"]["value"] <= 1e-8

    def test_debug_dump_writes_first_trial(self, tmp_path):
        dump = str(tmp_path / "dump")
        run_experiment(small("least-singular", n=16, trials=3, debug_dump=dump))
        assert os.path.exists(os.path.join(dump, "trial0_matrix.csv"))
