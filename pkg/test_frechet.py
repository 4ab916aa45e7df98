#!/usr/bin/env python3
"""
Test Suite for sample Fréchet means

Covers the objective, the IER closed form, the naive thresholded mean, the sample
medoid, the exhaustive search and the tiny-n estimator oracle.

Usage:
  pytest test_frechet.py

Requirements:
  - pytest
  - pytest-timeout
"""

import unittest

import numpy as np
import pytest

from frechet_unet.core.ensembles import sample_ier
from frechet_unet.core.frechet import (
    closed_form_ier_mean,
    exhaustive_frechet_mean,
    frechet_objective,
    naive_frechet_mean,
    pairwise_squared_distances,
    sample_medoid,
)
from frechet_unet.core.oracle import compare_estimators, counterexample, run_oracle
from frechet_unet.core.spectra import distance
from frechet_unet.models.config import OracleConfig
from frechet_unet.models.enums import FrechetMethod, Metric
from frechet_unet.models.errors import GraphError, SearchSpaceTooLarge
from frechet_unet.models.graph import Graph
from frechet_unet.models.params import IerParams, RngSeed

K3 = Graph.complete(3)
EMPTY3 = Graph.empty(3)


def _sample(seed, n, p, size):
    generator = RngSeed(seed).generator()
    params = IerParams.constant(n, p)
    return [sample_ier(params, generator) for _ in range(size)]


class TestObjective(unittest.TestCase):
    """Fréchet objective and pairwise distances"""

    @pytest.mark.timeout(5)
    def test_objective_values(self):
        self.assertEqual(frechet_objective(K3, [K3, K3, EMPTY3], Metric.HAMMING), 3.0)
        self.assertEqual(frechet_objective(Graph.path(3), [K3, K3, EMPTY3], Metric.HAMMING), 2.0)
        with self.assertRaises(GraphError):
            frechet_objective(K3, [], Metric.HAMMING)

    @pytest.mark.timeout(10)
    def test_pairwise_matches_distance(self):
        sample = _sample(1, 8, 0.4, 6)
        for metric in Metric:
            matrix = pairwise_squared_distances(sample, metric)
            for i in range(len(sample)):
                for j in range(len(sample)):
                    self.assertAlmostEqual(matrix[i, j], distance(sample[i], sample[j], metric) ** 2, places=9)


class TestBaselines(unittest.TestCase):
    """Closed form, naive threshold and medoid"""

    @pytest.mark.timeout(5)
    def test_naive_mean(self):
        self.assertEqual(naive_frechet_mean([K3, K3]).mean, K3)
        self.assertEqual(naive_frechet_mean([K3, EMPTY3]).mean, EMPTY3)
        result = naive_frechet_mean([K3, K3, EMPTY3])
        self.assertEqual(result.mean, K3)
        self.assertEqual(result.objective, 3.0)
        self.assertEqual(result.method, FrechetMethod.NAIVE_THRESHOLD)

    @pytest.mark.timeout(5)
    def test_closed_form(self):
        self.assertEqual(closed_form_ier_mean(IerParams.constant(5, 0.6).P), Graph.complete(5))
        self.assertEqual(closed_form_ier_mean(IerParams.constant(5, 0.5).P), Graph.empty(5))

    @pytest.mark.timeout(5)
    def test_medoid(self):
        result = sample_medoid([K3, K3, EMPTY3], Metric.HAMMING)
        self.assertEqual(result.index, 0)
        self.assertEqual(result.mean, K3)
        self.assertEqual(result.objective, 3.0)
        self.assertEqual(sample_medoid([EMPTY3, K3], Metric.HAMMING).index, 0)

    @pytest.mark.timeout(10)
    def test_medoid_is_sample_minimum(self):
        sample = _sample(2, 10, 0.3, 8)
        for metric in Metric:
            result = sample_medoid(sample, metric)
            for g in sample:
                self.assertLessEqual(result.objective, frechet_objective(g, sample, metric) + 1e-9)


class TestExhaustive(unittest.TestCase):
    """Exhaustive search over all graphs on n <= 6 vertices"""

    @pytest.mark.timeout(5)
    def test_counterexample(self):
        sample, exhaustive, naive = counterexample()
        self.assertEqual(sample, [K3, K3, EMPTY3])
        self.assertEqual(exhaustive.mean.edge_count, 2)
        self.assertEqual(exhaustive.mean, Graph.from_bits(3, "011"))
        self.assertAlmostEqual(exhaustive.objective, 2.0)
        self.assertEqual(naive.mean, K3)
        self.assertAlmostEqual(naive.objective, 3.0)

    @pytest.mark.timeout(5)
    def test_single_graph_sample(self):
        g = Graph.path(4)
        for metric in (Metric.HAMMING,):
            self.assertEqual(exhaustive_frechet_mean([g], metric).mean, g)
        self.assertAlmostEqual(exhaustive_frechet_mean([g], Metric.LAPLACIAN_SPECTRAL).objective, 0.0)

    @pytest.mark.timeout(5)
    def test_refuses_large_n(self):
        with self.assertRaises(SearchSpaceTooLarge) as ctx:
            exhaustive_frechet_mean([Graph.empty(7)], Metric.HAMMING)
        self.assertEqual(ctx.exception.n, 7)

    @pytest.mark.timeout(30)
    def test_worker_count_does_not_change_result(self):
        sample = _sample(3, 5, 0.5, 5)
        for metric in (Metric.HAMMING, Metric.ADJACENCY_SPECTRAL):
            single = exhaustive_frechet_mean(sample, metric, workers=1)
            split = exhaustive_frechet_mean(sample, metric, workers=4)
            self.assertEqual(single.mean, split.mean)
            self.assertEqual(single.objective, split.objective)

    @pytest.mark.timeout(30)
    def test_global_minimum(self):
        sample = _sample(4, 4, 0.5, 4)
        for metric in Metric:
            best = exhaustive_frechet_mean(sample, metric)
            for code in range(2 ** 6):
                candidate = Graph.from_bits(4, format(code, "06b"))
                self.assertLessEqual(best.objective, frechet_objective(candidate, sample, metric) + 1e-9)


class TestOracle(unittest.TestCase):
    """Estimators against the exhaustive minimizer on tiny graphs"""

    @pytest.mark.timeout(30)
    def test_objective_ordering(self):
        report = run_oracle(OracleConfig(n=4, trials=100, sample_size=5, p=0.9), seed=20221)
        self.assertEqual(report.trials, 100)
        self.assertEqual(report.ordering_violations, 0)
        self.assertGreaterEqual(report.mean_naive_gap, 0.0)
        self.assertGreaterEqual(report.mean_medoid_gap, 0.0)
        # thresholding misses the exhaustive minimizer on roughly one sample in six here
        self.assertAlmostEqual(report.naive_agreement, 0.84, delta=0.12)
        self.assertGreaterEqual(report.naive_optimal, report.naive_agreement)

    @pytest.mark.timeout(10)
    def test_compare_estimators(self):
        exhaustive, naive, medoid, worst = compare_estimators([K3, K3, EMPTY3], Metric.HAMMING)
        self.assertLessEqual(exhaustive.objective, medoid.objective)
        self.assertLessEqual(medoid.objective, worst)
        self.assertEqual(worst, 6.0)
        self.assertEqual(naive.objective, 3.0)

    @pytest.mark.timeout(30)
    def test_reproducible(self):
        config = OracleConfig(n=4, trials=10, sample_size=3, p=0.5, metric=Metric.LAPLACIAN_SPECTRAL.value)
        first = run_oracle(config, seed=5)
        second = run_oracle(config, seed=5)
        self.assertEqual(first, second)
        self.assertTrue(np.isfinite(first.max_medoid_gap))


if __name__ == "__main__":
    unittest.main()
