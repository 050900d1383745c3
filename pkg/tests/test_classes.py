import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import patterns, threshold_rows
from stable_predict.classes import (
    HypothesisClass,
    LabeledSample,
    compute_vc_dim,
    erm,
    growth_count,
    growth_function,
    is_eps_net,
    net_radius,
    restrict,
    sauer_bound,
    sauer_bound_exp,
)
from stable_predict.errors import BadDistribution, EmptyRestriction, TooLarge


def explicit_classes(max_domain=5, max_size=8):
    return st.integers(1, max_domain).flatmap(
        lambda N: st.lists(st.tuples(*[st.integers(0, 1)] * N), min_size=1, max_size=max_size).map(
            HypothesisClass.explicit
        )
    )


class TestLabeledSample:
    def test_from_pairs_round_trip(self):
        S = LabeledSample.from_pairs([(0, 1), (2, 0)])
        assert S.points == (0, 2) and S.labels == (1, 0)
        assert list(S.pairs) == [(0, 1), (2, 0)]

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            LabeledSample((0,), (2,))
        with pytest.raises(ValueError):
            LabeledSample((0, 1), (1,))

    def test_domain_check(self):
        with pytest.raises(ValueError):
            LabeledSample((0, 5), (1, 1)).check_domain(4)

    def test_neighbor(self):
        S = LabeledSample((0, 1, 2), (1, 0, 0))
        assert S.is_neighbor(S.replace(1, 3, 1))
        assert not S.is_neighbor(S.replace(1, 3, 1).replace(0, 2, 0))

    def test_relabel_uses_row(self):
        S = LabeledSample((0, 2, 1), (0, 0, 0))
        assert S.relabel((1, 0, 1)).labels == (1, 1, 0)


class TestHypothesisClass:
    def test_threshold_table(self):
        H = HypothesisClass.thresholds(3)
        assert [tuple(r) for r in H.table.tolist()] == threshold_rows(3)

    def test_point_functions(self):
        H = HypothesisClass.point_functions(3)
        assert H.table.tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]

    def test_json_round_trip(self):
        H = HypothesisClass.explicit([(0, 1, 1), (1, 0, 0)])
        assert HypothesisClass.from_json(H.to_json()).table.tolist() == H.table.tolist()

    def test_losses(self):
        H = HypothesisClass.thresholds(2)
        S = LabeledSample((0, 1), (1, 0))
        assert H.mistakes(S).tolist() == [1, 0, 1]
        np.testing.assert_allclose(H.losses(S), [0.5, 0.0, 0.5])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            HypothesisClass("circles", 3)


class TestRestrict:
    def test_threshold_patterns(self):
        H = HypothesisClass.thresholds(4)
        ds = restrict(H, [1, 2])
        assert [d.labels for d in ds] == [(0, 0), (1, 0), (1, 1)]
        # smallest index realizing each pattern
        assert [d.representative for d in ds] == [0, 2, 3]

    def test_empty(self):
        with pytest.raises(EmptyRestriction):
            restrict(HypothesisClass.thresholds(3), [])

    def test_single_dichotomy(self):
        H = HypothesisClass.explicit([(0, 1), (0, 0)])
        ds = restrict(H, [0])
        assert len(ds) == 1 and ds[0].representative == 0

    @given(explicit_classes(), st.data())
    def test_patterns_match_brute_force(self, H, data):
        T = data.draw(st.lists(st.integers(0, H.domain_size - 1), min_size=1, max_size=4))
        rows = [tuple(r) for r in H.table.tolist()]
        got = restrict(H, T)
        assert {d.labels for d in got} == patterns(rows, T)
        for d in got:
            assert d.representative == min(i for i, r in enumerate(rows) if tuple(r[t] for t in T) == d.labels)
        assert list(H.representatives(T)) == sorted(d.representative for d in got)


class TestGrowth:
    @pytest.mark.parametrize("N", [2, 5, 8])
    def test_thresholds(self, N):
        assert [growth_count(HypothesisClass.thresholds(N), m) for m in range(1, N + 1)] == list(range(2, N + 2))

    def test_point_functions(self):
        H = HypothesisClass.point_functions(5)
        assert [growth_count(H, m) for m in range(1, 6)] == [2, 3, 4, 5, 5]

    def test_all_functions(self):
        H = HypothesisClass.all_functions(4)
        assert [growth_count(H, m) for m in range(1, 5)] == [2, 4, 8, 16]

    def test_saturates_past_domain(self):
        H = HypothesisClass.thresholds(3)
        assert growth_function(H, 50) == growth_function(H, 3) == 4

    def test_guard(self):
        H = HypothesisClass.thresholds(21)
        with pytest.raises(TooLarge) as info:
            growth_count(H, 3)
        assert info.value.bound == sauer_bound(1, 3)

    @settings(max_examples=60)
    @given(explicit_classes(max_domain=6, max_size=12))
    def test_sauer_shelah(self, H):
        for m in range(1, H.domain_size + 1):
            assert growth_count(H, m) <= sauer_bound(H.vc_dim, m)

    def test_sauer_values(self):
        assert sauer_bound(1, 4) == 5
        assert sauer_bound(2, 4) == 11
        assert sauer_bound(5, 3) == 8
        assert sauer_bound_exp(0, 10) == 1.0
        assert sauer_bound_exp(2, 3) == 8.0


class TestVC:
    @pytest.mark.parametrize(
        "H, d",
        [
            (HypothesisClass.thresholds(6), 1),
            (HypothesisClass.point_functions(6), 1),
            (HypothesisClass.all_functions(3), 3),
            (HypothesisClass.explicit([(0, 1, 0)]), 0),
            # one hypothesis labels the lone point 1, nothing is shattered
            (HypothesisClass.point_functions(1), 0),
        ],
    )
    def test_known(self, H, d):
        assert compute_vc_dim(H) == d

    def test_default_assigned(self):
        assert HypothesisClass.thresholds(5).vc_dim == 1


class TestNets:
    def test_thresholds_even_points(self):
        # agreeing thresholds differ on one odd point, mass 1/8
        H = HypothesisClass.thresholds(8)
        w = np.full(8, 1 / 8)
        assert net_radius({0, 2, 4, 6}, H, w) == pytest.approx(1 / 8)
        assert is_eps_net({0, 2, 4, 6}, H, w, 1 / 8)
        assert not is_eps_net({0, 2, 4, 6}, H, w, 1 / 16)

    def test_whole_support_is_a_net(self):
        H = HypothesisClass.all_functions(3)
        assert net_radius({0, 1, 2}, H, [0.2, 0.3, 0.5]) == 0.0

    def test_empty_set(self):
        H = HypothesisClass.thresholds(4)
        assert net_radius([], H, np.full(4, 0.25)) == pytest.approx(1.0)

    def test_bad_weights(self):
        with pytest.raises(BadDistribution):
            net_radius([0], HypothesisClass.thresholds(2), [0.5, 0.6])

    @settings(max_examples=40)
    @given(explicit_classes(max_domain=5), st.data())
    def test_radius_against_pairs(self, H, data):
        w = np.asarray(data.draw(st.lists(st.integers(0, 5), min_size=H.domain_size, max_size=H.domain_size)), float)
        if w.sum() == 0:
            w[0] = 1
        w /= w.sum()
        A = data.draw(st.sets(st.integers(0, H.domain_size - 1)))
        rows = H.table
        best = 0.0
        for a, b in itertools.combinations(range(len(rows)), 2):
            if all(rows[a][x] == rows[b][x] for x in A):
                best = max(best, float(w @ (rows[a] != rows[b])))
        assert net_radius(A, H, w) == pytest.approx(best, abs=1e-12)


class TestERM:
    def test_tie_break_smallest_index(self):
        H = HypothesisClass.thresholds(3)
        S = LabeledSample((1,), (0,))
        assert erm(H, S).representative == 0

    def test_realizable(self):
        H = HypothesisClass.thresholds(4)
        S = LabeledSample((0, 1, 2, 3), (1, 1, 0, 0))
        d = erm(H, S)
        assert d.representative == 2 and d.row == (1, 1, 0, 0)
