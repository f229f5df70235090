"""Tests for empirical distributions, KS statistics, histograms, and moments."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyplab.references import std_normal_cdf
from hyplab.rng import DistSpec, make_stream, sample_vector
from hyplab.stats import (
    EmpiricalDistribution,
    histogram,
    ks_one_sample,
    ks_two_sample,
    moments,
)

GAUSS_R = DistSpec("gaussian", "real")


class TestKsOneSample:
    def test_single_point_at_median(self):
        assert ks_one_sample([0.0], std_normal_cdf) == pytest.approx(0.5, abs=1e-15)

    def test_two_symmetric_points(self):
        expected = std_normal_cdf(1.0) - 0.5  # = 0.34134...
        assert ks_one_sample([-1.0, 1.0], std_normal_cdf) == pytest.approx(expected, abs=1e-14)
        assert ks_one_sample([-1.0, 1.0], std_normal_cdf) == pytest.approx(0.34134, abs=5e-6)

    def test_large_gaussian_sample_below_critical_value(self):
        # asymptotic Kolmogorov critical value at the 0.1% level
        n = 10**5
        critical = 1.95 / math.sqrt(n)
        below = 0
        for rep in range(100):
            draws = sample_vector(make_stream(31, rep), n, GAUSS_R)
            below += ks_one_sample(draws, std_normal_cdf) <= critical
        assert below >= 99

    def test_invariant_under_increasing_affine_maps(self):
        draws = sample_vector(make_stream(32, 0), 500, GAUSS_R)
        base = ks_one_sample(draws, std_normal_cdf)
        for a, b in [(2.0, 0.0), (0.5, 1.0), (3.0, -2.0)]:
            mapped = ks_one_sample(a * draws + b, lambda t: std_normal_cdf((t - b) / a))
            assert mapped == pytest.approx(base, abs=1e-12)

    def test_accepts_empirical_distribution(self):
        emp = EmpiricalDistribution.from_samples([0.0, 1.0])
        assert ks_one_sample(emp, std_normal_cdf) == ks_one_sample([1.0, 0.0], std_normal_cdf)


class TestKsTwoSample:
    def test_identical_samples(self):
        data = [0.3, -1.0, 2.0, 0.0]
        assert ks_two_sample(data, data) == 0.0

    def test_disjoint_supports(self):
        assert ks_two_sample([0.0], [1.0]) == 1.0

    def test_hand_merge(self):
        assert ks_two_sample([1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 5.0]) == pytest.approx(0.25)

    @settings(max_examples=50, deadline=None)
    @given(
        a=st.lists(st.floats(-100, 100), min_size=1, max_size=40),
        b=st.lists(st.floats(-100, 100), min_size=1, max_size=40),
    )
    def test_symmetric_and_bounded(self, a, b):
        d = ks_two_sample(a, b)
        assert d == ks_two_sample(b, a)
        assert 0.0 <= d <= 1.0

    def test_matches_scipy(self):
        from scipy.stats import ks_2samp

        a = sample_vector(make_stream(33, 0), 400, GAUSS_R)
        b = sample_vector(make_stream(33, 1), 300, GAUSS_R) * 1.2
        assert ks_two_sample(a, b) == pytest.approx(ks_2samp(a, b).statistic, abs=1e-13)


class TestHistogram:
    def test_single_sample(self):
        h = histogram([0.5], 1, (0.0, 1.0))
        assert h.counts.tolist() == [1]
        assert h.density.tolist() == [1.0]

    def test_two_bins(self):
        h = histogram([0.25, 0.75], 2, (0.0, 1.0))
        assert h.counts.tolist() == [1, 1]
        assert h.density.tolist() == [1.0, 1.0]

    def test_out_of_range_counted(self):
        h = histogram([-1.0, 0.5, 2.0, 1.0], 2, (0.0, 1.0))
        assert h.counts.sum() == 1
        assert h.below == 1 and h.above == 2  # hi itself is out of [lo, hi)
        assert h.in_range_fraction == 0.25

    def test_density_integrates_to_in_range_fraction(self):
        draws = sample_vector(make_stream(34, 0), 5000, GAUSS_R)
        h = histogram(draws, 37, (-1.5, 2.0))
        width = np.diff(h.bin_edges)
        assert abs(float(h.density @ width) - h.in_range_fraction) <= 1e-12

    def test_gaussian_density_oracle(self):
        draws = sample_vector(make_stream(34, 1), 10**6, GAUSS_R)
        h = histogram(draws, 50, (-4.0, 4.0))
        centers = 0.5 * (h.bin_edges[:-1] + h.bin_edges[1:])
        target = np.exp(-centers**2 / 2.0) / math.sqrt(2.0 * math.pi)
        assert float(np.max(np.abs(h.density - target))) <= 0.01

    def test_csv_schema(self, tmp_path):
        h = histogram([0.25, 0.75, 5.0], 2, (0.0, 1.0))
        path = tmp_path / "h.csv"
        h.to_csv(str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_left,bin_right,count,density"
        assert len(lines) == 4
        assert lines[-1] == "out_of_range,0,1,"

    def test_validation(self):
        with pytest.raises(ValueError):
            histogram([0.0], 0, (0.0, 1.0))
        with pytest.raises(ValueError):
            histogram([0.0], 3, (1.0, 1.0))


class TestMoments:
    def test_pm_one(self):
        assert np.allclose(moments([-1.0, 1.0], 4), [0.0, 1.0, 0.0, 1.0])

    def test_single_point(self):
        assert np.allclose(moments([2.0], 2), [2.0, 4.0])

    def test_gaussian_double_factorials(self):
        n = 10**6
        draws = sample_vector(make_stream(35, 0), n, GAUSS_R)
        got = moments(draws, 6)
        expected = np.array([0.0, 1.0, 0.0, 3.0, 0.0, 15.0])
        for k in range(1, 7):
            powers = draws**k
            se = powers.std() / math.sqrt(n)
            assert abs(got[k - 1] - expected[k - 1]) <= 5 * se, k

    def test_negation_parity(self):
        draws = sample_vector(make_stream(35, 1), 1000, GAUSS_R) + 0.3
        plus = moments(draws, 5)
        minus = moments(-draws, 5)
        signs = np.array([-1.0, 1.0, -1.0, 1.0, -1.0])
        assert np.allclose(minus, signs * plus, rtol=1e-12, atol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            moments([1.0], 0)
        with pytest.raises(ValueError):
            moments([], 2)
