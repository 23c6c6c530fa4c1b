import math

import numpy as np
import pytest

from mvstack.errors import DegenerateSelection, OneClassOnly
from mvstack.metrics import (SelectionMatrix, accuracy, auc, h_measure,
                             nogueira_stability, selection_rates)
from mvstack.numerics import RngStream

from oracles import auc_pairwise, h_measure_numeric


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([1, 0, 1], [0.9, 0.1, 0.8]) == 1.0

    def test_threshold_boundary(self):
        # p = 0.5 counts as a positive call under the >= convention
        assert accuracy([1, 0], [0.5, 0.5]) == 0.5

    def test_majority_class_rate(self):
        y = np.array([1] * 85 + [0] * 42)
        assert accuracy(y, np.ones(127)) == pytest.approx(0.67, abs=0.003)


class TestSelectionRates:
    def test_counting(self):
        out = selection_rates({1, 2, 11}, set(range(1, 11)), 300)
        assert out.tpr == pytest.approx(0.2)
        assert out.fpr == pytest.approx(1 / 290)
        assert out.fdr == pytest.approx(1 / 3)

    def test_empty_selection(self):
        out = selection_rates(set(), {1, 2}, 10)
        assert (out.tpr, out.fpr, out.fdr) == (0.0, 0.0, 0.0)

    def test_perfect(self):
        t = set(range(1, 11))
        out = selection_rates(t, t, 30)
        assert (out.tpr, out.fpr, out.fdr) == (1.0, 0.0, 0.0)

    def test_empty_truth_marker(self):
        out = selection_rates({1}, set(), 10)
        assert math.isnan(out.tpr)

    def test_intersection_identity(self):
        rng = RngStream(3)
        for _ in range(50):
            V = 20
            S = set(int(v) for v in rng.choice(V, size=int(rng.integers(0, 8)),
                                               replace=False))
            T = set(int(v) for v in rng.choice(V, size=int(rng.integers(1, 8)),
                                               replace=False))
            out = selection_rates(S, T, V)
            hits_a = round(out.tpr * len(T))
            hits_b = len(S) - round(out.fdr * len(S)) if S else 0
            assert hits_a == hits_b == len(S & T)


class TestAuc:
    def test_perfect(self):
        assert auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_all_ties(self):
        assert auc([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5

    def test_hand_case(self):
        assert auc([1, 1, 0, 0], [0.9, 0.4, 0.6, 0.2]) == 0.75

    def test_one_class(self):
        with pytest.raises(OneClassOnly):
            auc([1, 1], [0.4, 0.6])

    def test_matches_pairwise_oracle(self):
        rng = RngStream(11)
        for _ in range(1000):
            n = int(rng.integers(4, 51))
            y = (rng.random(n) < 0.5).astype(int)
            if y.sum() in (0, n):
                y[0] = 1 - y[0]
            # coarse scores force plenty of ties
            s = np.round(rng.random(n), 1)
            assert auc(y, s) == auc_pairwise(y, s)

    def test_antisymmetry(self):
        rng = RngStream(13)
        for _ in range(50):
            y = (rng.random(30) < 0.4).astype(int)
            if y.sum() in (0, 30):
                y[0] = 1 - y[0]
            s = rng.standard_normal(30)
            assert abs(auc(y, s) + auc(y, -s) - 1.0) <= 1e-12

    def test_monotone_transform_invariance(self):
        rng = RngStream(17)
        y = (rng.random(40) < 0.5).astype(int)
        y[0], y[1] = 0, 1
        s = rng.standard_normal(40)
        assert auc(y, s) == auc(y, np.exp(s))


class TestHMeasure:
    def test_noninformative_near_zero(self):
        rng = RngStream(19)
        y = (rng.random(20000) < 0.5).astype(int)
        s = rng.random(20000)
        assert h_measure(y, s) < 0.01

    def test_perfect_is_one(self):
        y = np.array([0, 0, 0, 1, 1, 1])
        s = np.array([0.1, 0.2, 0.3, 0.7, 0.8, 0.9])
        assert h_measure(y, s) == pytest.approx(1.0, abs=1e-12)

    def test_matches_quadrature_oracle(self):
        rng = RngStream(23)
        for _ in range(20):
            y = (rng.random(8) < 0.5).astype(int)
            if y.sum() in (0, 8):
                y[0] = 1 - y[0]
            s = np.round(rng.random(8), 2)
            got = h_measure(y, s)
            want = h_measure_numeric(y, s)
            assert got == pytest.approx(want, abs=1e-6)

    def test_transform_invariance(self):
        rng = RngStream(29)
        y = (rng.random(60) < 0.4).astype(int)
        y[0], y[1] = 0, 1
        s = rng.standard_normal(60)
        assert h_measure(y, s) == pytest.approx(h_measure(y, 3 * s + 2), abs=1e-12)

    def test_class_prior_severity_runs(self):
        rng = RngStream(31)
        y = (rng.random(100) < 0.3).astype(int)
        y[0], y[1] = 0, 1
        s = rng.random(100) + 0.3 * y
        base = h_measure(y, s)
        alt = h_measure(y, s, severity="class-prior")
        assert 0.0 <= alt <= 1.0 and alt != base

    def test_one_class(self):
        with pytest.raises(OneClassOnly):
            h_measure([0, 0], [0.1, 0.2])


class TestNogueira:
    def test_identical_rows(self):
        rows = np.tile([True, False, True, False], (6, 1))
        assert nogueira_stability(rows) == 1.0

    def test_antithetic_pair(self):
        rows = np.array([[True, False], [False, True]])
        assert nogueira_stability(rows) == -1.0

    def test_random_chance_corrected(self):
        rng = RngStream(37)
        vals = []
        for _ in range(200):
            M, V, k = 30, 12, 4
            rows = np.zeros((M, V), dtype=bool)
            for i in range(M):
                rows[i, rng.choice(V, size=k, replace=False)] = True
            vals.append(nogueira_stability(rows))
        assert abs(float(np.mean(vals))) <= 0.05

    def test_upper_bound(self):
        rng = RngStream(41)
        for _ in range(100):
            rows = rng.random((5, 7)) < rng.random(7)
            rows[0, 0] = True
            rows[1, 1] = False
            try:
                assert nogueira_stability(rows) <= 1.0 + 1e-12
            except DegenerateSelection:
                pass

    def test_degenerate(self):
        with pytest.raises(DegenerateSelection):
            nogueira_stability(np.zeros((3, 4), dtype=bool))
        with pytest.raises(DegenerateSelection):
            nogueira_stability(np.ones((3, 4), dtype=bool))

    def test_needs_two_models(self):
        with pytest.raises(ValueError):
            nogueira_stability(np.array([[True, False]]))

    def test_selection_matrix_dims(self):
        m = SelectionMatrix(np.zeros((4, 6), dtype=bool))
        assert (m.M, m.V) == (4, 6)
