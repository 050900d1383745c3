import csv
import io
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stable_predict.classes import HypothesisClass, LabeledSample, erm
from stable_predict.errors import BadDistribution
from stable_predict.experiments import (
    SWEEP_HEADER,
    ExpMechLearner,
    LowerBoundFamily,
    SourceDistribution,
    SubsampledLearner,
    amplification_demo,
    flip_set,
    lower_bound_experiment,
    sample_complexity_sweep,
    sample_dataset,
    sweep_csv,
    trial_seeds,
)
from stable_predict.stable import StableConfig, stability_certificate
from stable_predict.verify import naive_subsampled_values

pairs = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 1)), min_size=1, max_size=8).map(LabeledSample.from_pairs)


class TestData:
    def test_realizable_sample(self):
        H = HypothesisClass.thresholds(5)
        D = SourceDistribution.uniform(H, 3)
        S = sample_dataset(D, 40, np.random.default_rng(0))
        assert H.losses(S)[3] == 0.0
        assert erm(H, S).representative == 3 or H.losses(S)[erm(H, S).representative] == 0.0

    def test_noise_half(self):
        H = HypothesisClass.thresholds(3)
        D = SourceDistribution.uniform(H, 0, noise_rate=0.5)
        S = D.sample(20_000, np.random.default_rng(1))
        assert abs(S.ys.mean() - 0.5) <= 3 * math.sqrt(0.25 / 20_000)

    def test_point_mass(self):
        H = HypothesisClass.thresholds(3)
        D = SourceDistribution(H, [0.0, 1.0, 0.0], 2)
        assert set(D.sample(30, np.random.default_rng(2)).points) == {1}

    def test_seeded(self):
        D = SourceDistribution.uniform(HypothesisClass.thresholds(4), 1, 0.2)
        assert D.sample(10, np.random.default_rng(4)) == D.sample(10, np.random.default_rng(4))

    def test_validation(self):
        H = HypothesisClass.thresholds(2)
        with pytest.raises(BadDistribution):
            SourceDistribution(H, [0.5, 0.6], 0)
        with pytest.raises(ValueError):
            SourceDistribution(H, [0.5, 0.5], 0, noise_rate=0.6)

    def test_risk(self):
        H = HypothesisClass.thresholds(2)
        D = SourceDistribution(H, [0.25, 0.75], 1, 0.1)
        # target row (1, 0); predictor 1/2 everywhere errs half the time
        assert D.risk([0.5, 0.5]) == pytest.approx(0.5)
        assert D.best_risk() == pytest.approx(0.1)


class TestFlipSet:
    def test_absent(self):
        S = LabeledSample((0, 1), (1, 0))
        assert flip_set(S, 3) == S

    def test_single(self):
        S = LabeledSample((0, 1, 2), (1, 0, 0))
        assert flip_set(S, 1).labels == (1, 1, 0)

    @given(pairs, st.integers(0, 3))
    def test_involution(self, S, k):
        assert flip_set(flip_set(S, k), k) == S
        assert flip_set(S, k).points == S.points


class TestLowerBound:
    def test_family(self):
        fam = LowerBoundFamily(3, 0.125)
        assert sum(fam.exact_weights) == 1
        assert fam.exact_weights[0] == Fraction(1, 4)
        assert fam.threshold(0.25) == pytest.approx(8.0)
        assert fam.error_floor(0.25, 4) == pytest.approx(2 * 0.125 * (1 - 4 * 0.25 * 0.125 * 4 / 2))
        with pytest.raises(ValueError):
            LowerBoundFamily(3, 0.3)
        with pytest.raises(ValueError):
            LowerBoundFamily(1, 0.1)

    def test_constant_learner(self):
        fam = LowerBoundFamily(3, 0.125)
        rep = lower_bound_experiment(lambda S: np.full(3, 0.5), fam, 4, 50, np.random.default_rng(0), 0.25)
        assert rep["mean_error"] == pytest.approx(0.5)
        # the light coordinates carry mass 4 alpha, each half wrong
        assert rep["chain"]["light"]["mean"] == pytest.approx(2 * 0.125)
        assert rep["max_flip_excess"] <= 0.0

    def test_expected_counts(self):
        fam = LowerBoundFamily(3, 0.125)
        n, trials = 40, 400
        rep = lower_bound_experiment(lambda S: np.full(3, 0.5), fam, n, trials, np.random.default_rng(1), 0.25)
        expected = 4 * 0.125 * n / 2
        assert rep["expected_count_light"] == pytest.approx(expected)
        sd = math.sqrt(n * 0.25 * 0.75) / math.sqrt(trials)
        assert abs(rep["mean_count_light"] - expected) <= 4 * sd

    def test_seeds_split(self):
        a = [g.integers(1 << 30) for g in trial_seeds(3, 4)]
        b = [g.integers(1 << 30) for g in trial_seeds(3, 4)]
        assert a == b and len(set(a)) == 4


class TestAmplification:
    H = HypothesisClass.thresholds(2)

    def test_no_amplification_at_eta_one(self):
        rep = amplification_demo(0.5, 1.0, self.H, 2)
        assert rep["measured_eps"] <= 0.5 + 1e-9
        assert rep["measured_eps"] == pytest.approx(rep["base_eps_measured"])

    def test_constant_base(self):
        rep = amplification_demo(0.5, 0.5, self.H, 2, base=lambda S: np.full(2, 0.3))
        assert rep["measured_eps"] == 0.0

    def test_half_rate(self):
        rep = amplification_demo(0.5, 0.5, self.H, 2)
        assert rep["holds"] and rep["bound"] == 0.5

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            amplification_demo(0.5, 0.3, self.H, 2)

    def test_wrapper_against_naive(self):
        H = HypothesisClass.thresholds(3)
        base = ExpMechLearner(H, 0.7)
        S = LabeledSample.from_pairs([(0, 1), (2, 0), (1, 1), (2, 1)])
        np.testing.assert_allclose(SubsampledLearner(base, 2)(S), naive_subsampled_values(base, S, 2), atol=1e-12)


SWEEP = {
    "hypothesis_class": {"kind": "thresholds", "domain_size": 3},
    "ns": [3, 10, 40],
    "gammas": [0.5, 1.0],
    "alpha": 0.25,
    "n_prime_frac": 0.25,
    "trials": 20,
    "seed": 11,
    "target": 1,
    "noise_rate": 0.1,
}


class TestSweep:
    def test_csv_header_and_rows(self):
        rows, summary = sample_complexity_sweep(SWEEP)
        text = sweep_csv(rows)
        reader = list(csv.reader(io.StringIO(text)))
        assert tuple(reader[0]) == SWEEP_HEADER
        assert len(reader) == 1 + 6
        assert summary["points"] == 6
        assert set(summary["per_gamma"]) == {"0.5", "1.0"}

    def test_reproducible(self):
        assert sweep_csv(sample_complexity_sweep(SWEEP)[0]) == sweep_csv(sample_complexity_sweep(SWEEP)[0])

    def test_constant_class(self):
        cfg = dict(SWEEP, hypothesis_class={"kind": "explicit", "vectors": [[1, 0, 1]]}, target=0)
        rows, _ = sample_complexity_sweep(cfg)
        assert all(r["excess_err"] == pytest.approx(0.0, abs=1e-12) for r in rows)
        assert all(r["d"] == 0 for r in rows)

    def test_excess_falls_with_n(self):
        cfg = dict(SWEEP, ns=[4, 16, 64, 256], gammas=[0.5], trials=30, noise_rate=0.0)
        rows, summary = sample_complexity_sweep(cfg)
        rho = summary["per_gamma"]["0.5"]["spearman_n_vs_excess"]
        assert rho < 0
        assert rows[-1]["excess_err"] < rows[0]["excess_err"]
        # certificates are skipped on grids that are too large
        assert math.isnan(rows[-1]["stability_gap"])
        assert not math.isnan(rows[0]["stability_gap"])

    def test_mechanism_part_of_gap_scales_with_gamma(self):
        # the gap is a subset-choice part plus a part linear in gamma,
        # so differences between successive halvings shrink by about 2
        H = HypothesisClass.thresholds(3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            gaps = [stability_certificate(StableConfig(1, g), H, 4)["stability_gap"] for g in (0.4, 0.2, 0.1, 0.05)]
        steps = np.diff(gaps) * -1
        assert np.all(steps > 0)
        for a, b in zip(steps, steps[1:]):
            assert 1.5 <= a / b <= 2.5
