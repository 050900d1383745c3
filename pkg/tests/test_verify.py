import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stable_predict.classes import HypothesisClass, LabeledSample, erm
from stable_predict.data import SourceDistribution
from stable_predict.errors import TooLarge
from stable_predict.sample_size import n_gen
from stable_predict.stable import StableConfig, StableLearner
from stable_predict.verify import (
    DominanceClaim,
    NeighborGrid,
    check_dominance,
    dominance_over_grid,
    draw_net_candidate,
    empirical_prediction_law,
    evaluate_grid,
    min_privacy_eps,
    net_probability_check,
    privacy_eps,
    privacy_frontier,
    stability_gap,
    sup_stability_gap,
    uniform_convergence_check,
)


def constant(v):
    return lambda S: np.full(2, v)


def erm_learner(H):
    return lambda S: np.asarray(erm(H, S).row, dtype=float)


class TestGrid:
    @pytest.mark.parametrize("N, n", [(2, 1), (2, 3), (3, 2)])
    def test_sequence_grid(self, N, n):
        g = NeighborGrid.build(N, n)
        k = 2 * N
        assert len(g) == k**n
        assert len(g.pairs) == k**n * n * (k - 1) // 2
        diff = (g.symbols[g.pairs[:, 0]] != g.symbols[g.pairs[:, 1]]).sum(axis=1)
        assert np.all(diff == 1)
        assert np.all(g.pairs[:, 0] < g.pairs[:, 1])
        assert len({tuple(p) for p in g.pairs.tolist()}) == len(g.pairs)

    def test_multiset_grid(self):
        g = NeighborGrid.build(2, 3, "multisets")
        assert len(g) == math.comb(3 + 3, 3)
        for i, j in g.pairs.tolist():
            a, b = sorted(g.symbols[i].tolist()), sorted(g.symbols[j].tolist())
            assert sum(min(a.count(s), b.count(s)) for s in range(4)) == 2

    def test_sample_decoding(self):
        g = NeighborGrid.build(2, 2)
        assert g.sample(0) == LabeledSample((0, 0), (0, 0))
        assert g.sample(len(g) - 1) == LabeledSample((1, 1), (1, 1))

    def test_guard(self):
        with pytest.raises(TooLarge):
            NeighborGrid.build(4, 8)
        with pytest.raises(ValueError):
            NeighborGrid.build(2, 2, "bags")

    def test_ordered_pairs_symmetric(self):
        g = NeighborGrid.build(2, 2)
        assert len(g.ordered_pairs) == 2 * len(g.pairs)


class TestDominance:
    def test_equal(self):
        assert check_dominance(DominanceClaim(np.array([0.3, 0.9]), np.array([0.3, 0.9])))[0]

    def test_zero_margin(self):
        holds, (x, y, margin) = check_dominance(DominanceClaim(np.array([0.6]), np.array([0.5]), 1.0, 0.1))
        # tight at y = 0: |0.6 - 0| = 0.5 + 0.1
        assert holds and y == 0 and margin == pytest.approx(0.0, abs=1e-15)

    def test_violated(self):
        holds, (x, y, margin) = check_dominance(DominanceClaim(np.array([0.9]), np.array([0.5]), 1.0, 0.1))
        assert not holds and y == 0 and margin == pytest.approx(-0.3)


class TestGapAndEps:
    def test_constant_learner(self):
        g = NeighborGrid.build(2, 2)
        assert sup_stability_gap(constant(0.3), g) == 0.0
        for delta in (0.0, 0.1, 0.5):
            assert min_privacy_eps(constant(0.5), g, delta) == 0.0

    def test_erm_gap_one(self):
        g = NeighborGrid.build(2, 2)
        assert sup_stability_gap(erm_learner(HypothesisClass.thresholds(2)), g) == 1.0
        assert min_privacy_eps(erm_learner(HypothesisClass.thresholds(2)), g) == math.inf

    @settings(max_examples=50)
    @given(st.data())
    def test_eps_and_dominance_agree(self, data):
        g = NeighborGrid.build(2, 2)
        values = np.array(data.draw(st.lists(st.floats(0.01, 0.99), min_size=len(g) * 2, max_size=len(g) * 2))).reshape(-1, 2)
        delta = data.draw(st.sampled_from([0.0, 0.01, 0.1]))
        eps = privacy_eps(values, g.pairs, delta)
        assert dominance_over_grid(values, g.pairs, math.exp(eps), delta, tol=1e-9)[0]
        if eps > 1e-6:
            assert not dominance_over_grid(values, g.pairs, math.exp(eps * 0.99), delta, tol=0)[0]

    @settings(max_examples=50)
    @given(st.data())
    def test_frontier_monotone_and_gap(self, data):
        g = NeighborGrid.build(2, 2)
        values = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=len(g) * 2, max_size=len(g) * 2))).reshape(-1, 2)
        deltas, eps = privacy_frontier(values, g.pairs, 0.01)
        assert all(a >= b - 1e-12 for a, b in zip(eps, eps[1:]))
        gap = stability_gap(values, g.pairs)[0]
        # zero-eps privacy at delta equal to the stability gap
        assert privacy_eps(values, g.pairs, gap) == 0.0

    def test_gap_witness(self):
        g = NeighborGrid.build(2, 1)
        values = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.7], [0.0, 0.0]])
        gap, (i, j, x) = stability_gap(values, g.pairs)
        assert gap == 0.7 and x == 1 and 2 in (i, j)


class TestEvaluate:
    def test_process_pool_identical(self):
        g = NeighborGrid.build(2, 3, "multisets")
        learner = StableLearner(HypothesisClass.thresholds(2), StableConfig(2, 0.5))
        np.testing.assert_array_equal(evaluate_grid(learner, g, workers=2), evaluate_grid(learner, g, workers=1))

    def test_unpicklable_falls_back(self):
        g = NeighborGrid.build(2, 2)
        out = evaluate_grid(constant(0.2), g, workers=2)
        assert out.shape == (len(g), 2)


class TestStatistical:
    def test_deterministic_learner(self):
        rng = np.random.default_rng(0)
        p, half = empirical_prediction_law(lambda S, x, r: 1, None, 0, 100, rng)
        assert p == 1.0 and p - half > 0.5

    def test_fair_coin(self):
        covered = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            p, half = empirical_prediction_law(lambda S, x, r: int(r.random() < 0.5), None, 0, 10_000, rng)
            covered += abs(p - 0.5) <= half
        assert covered >= 97

    def test_needs_trials(self):
        with pytest.raises(ValueError):
            empirical_prediction_law(lambda S, x, r: 1, None, 0, 50, np.random.default_rng(0))

    def test_uniform_convergence(self):
        H = HypothesisClass.thresholds(4)
        D = SourceDistribution.uniform(H, 2)
        rng = np.random.default_rng(1)
        assert uniform_convergence_check(H, D, 5, 1.0, 50, rng) == 0.0
        assert uniform_convergence_check(H, D, 1, 0.05, 200, rng) == 1.0
        n = n_gen(0.25, 0.25, 1)
        assert uniform_convergence_check(H, D, n, 0.25, 300, rng) <= 0.25

    def test_net_candidates(self):
        rng = np.random.default_rng(0)
        w = np.array([0.5, 0.5, 0.0])
        assert draw_net_candidate(w, 10, rng, "distinct") == {0, 1}
        assert draw_net_candidate(w, 3, rng) <= {0, 1}
        with pytest.raises(ValueError):
            draw_net_candidate(w, 2, rng, "other")

    def test_net_probability(self):
        H = HypothesisClass.thresholds(8)
        D = SourceDistribution.uniform(H, 0)
        rng = np.random.default_rng(5)
        assert net_probability_check(H, D, 8, 0.01, 50, rng, "distinct") == 0.0
        assert net_probability_check(H, D, 2, 1.0, 50, rng) == 0.0
        rates = [net_probability_check(H, D, m, 0.25, 2000, rng) for m in (2, 8)]
        assert rates[0] > rates[1]
