#!/usr/bin/env python3
"""
Test Suite for the random graph ensembles

Covers Beta edge-probability matrices, IER sampling, connected SBM sampling,
preferential attachment growth and reproducibility of seeded streams.

Usage:
  pytest test_ensembles.py

Requirements:
  - pytest
  - pytest-timeout
"""

import math
import unittest

import numpy as np
import pytest

from frechet_unet.core.ensembles import is_connected, sample_beta_P, sample_ier, sample_pa, sample_sbm
from frechet_unet.models.errors import ConnectivityTimeout, EnsembleParameterError
from frechet_unet.models.graph import Graph, WeightedMatrix
from frechet_unet.models.params import IerParams, PaParams, RngSeed, SbmParams


class TestBetaMatrices(unittest.TestCase):
    """Edge-probability matrices with Beta entries"""

    @pytest.mark.timeout(10)
    def test_entry_mean(self):
        for a, b in [(2.0, 3.0), (0.5, 0.5), (5.0, 1.0)]:
            P = sample_beta_P(a, b, 200, RngSeed(1)).P
            upper = P.w[np.triu_indices(200, k=1)]
            self.assertAlmostEqual(float(upper.mean()), a / (a + b), delta=0.01)
            self.assertTrue(np.all((upper >= 0.0) & (upper <= 1.0)))
            np.testing.assert_array_equal(np.diag(P.w), 0.0)

    @pytest.mark.timeout(5)
    def test_rejects_nonpositive_shapes(self):
        with self.assertRaises(EnsembleParameterError):
            sample_beta_P(0.0, 1.0, 5, RngSeed(1))
        with self.assertRaises(EnsembleParameterError):
            sample_beta_P(1.0, -2.0, 5, RngSeed(1))


class TestIer(unittest.TestCase):
    """Independent-edge sampling"""

    @pytest.mark.timeout(20)
    def test_edge_count_statistics(self):
        p, n, draws = 0.3, 28, 200
        pairs = n * (n - 1) // 2
        generator = RngSeed(2).generator()
        params = IerParams.constant(n, p)
        total = sum(sample_ier(params, generator).edge_count for _ in range(draws))
        expected = draws * pairs * p
        sigma = math.sqrt(draws * pairs * p * (1 - p))
        self.assertLess(abs(total - expected), 4 * sigma)

    @pytest.mark.timeout(30)
    def test_edge_frequencies_follow_P(self):
        n, draws = 12, 3000
        w = np.triu(RngSeed(21).generator().uniform(0.2, 0.8, size=(n, n)), k=1)
        params = IerParams(WeightedMatrix(w + w.T))
        generator = RngSeed(22).generator()
        counts = np.zeros((n, n))
        for _ in range(draws):
            counts += sample_ier(params, generator).adj
        iu = np.triu_indices(n, k=1)
        p = params.P.w[iu]
        z = (counts[iu] / draws - p) / np.sqrt(p * (1 - p) / draws)
        self.assertLessEqual(float(np.mean(np.abs(z) > 3.0)), 0.05)
        self.assertLess(float(np.max(np.abs(z))), 5.0)

    @pytest.mark.timeout(5)
    def test_degenerate_probabilities(self):
        self.assertEqual(sample_ier(IerParams.constant(6, 0.0), RngSeed(3)), Graph.empty(6))
        self.assertEqual(sample_ier(IerParams.constant(6, 1.0), RngSeed(3)), Graph.complete(6))

    @pytest.mark.timeout(5)
    def test_same_stream_same_graph(self):
        params = IerParams.constant(28, 0.5)
        self.assertEqual(sample_ier(params, RngSeed(4, 9)), sample_ier(params, RngSeed(4, 9)))
        self.assertNotEqual(sample_ier(params, RngSeed(4, 9)), sample_ier(params, RngSeed(4, 10)))

    @pytest.mark.timeout(5)
    def test_derived_streams_are_stable(self):
        root = RngSeed(20221)
        self.assertEqual(root.derive("ier").derive(0, 1), root.derive("ier").derive(0, 1))
        self.assertNotEqual(root.derive("ier").derive(0, 1).stream, root.derive("ier").derive(1, 0).stream)
        with self.assertRaises(EnsembleParameterError):
            RngSeed(-1)


class TestSbm(unittest.TestCase):
    """Connected stochastic block model samples"""

    @pytest.mark.timeout(20)
    def test_samples_are_connected(self):
        generator = RngSeed(5).generator()
        for blocks in [(14, 14), (10, 10, 8)]:
            params = SbmParams(blocks, 0.5, 0.01)
            for _ in range(10):
                g = sample_sbm(params, generator)
                self.assertEqual(g.n, 28)
                self.assertTrue(is_connected(g))

    def _densities(self, params, draws, seed):
        """Empirical within-block and between-block edge densities over connected draws."""
        labels = params.labels()
        iu = np.triu_indices(params.n, k=1)
        same = (labels[:, None] == labels[None, :])[iu]
        generator = RngSeed(seed).generator()
        within = between = 0
        for _ in range(draws):
            upper = sample_sbm(params, generator).adj[iu]
            within += int(upper[same].sum())
            between += int(upper[~same].sum())
        return within / (draws * same.sum()), between / (draws * (~same).sum()), same.sum(), (~same).sum()

    def _assert_within_3_sigma(self, observed, p, trials):
        self.assertLess(abs(observed - p), 3 * math.sqrt(p * (1 - p) / trials))

    @pytest.mark.timeout(60)
    def test_block_densities_match_p_and_q(self):
        draws = 1000
        for blocks, p, q in [((14, 14), 0.5, 0.1), ((10, 10, 8), 0.7, 0.2)]:
            params = SbmParams(blocks, p, q)
            within, between, n_within, n_between = self._densities(params, draws, 31)
            self._assert_within_3_sigma(within, p, draws * n_within)
            self._assert_within_3_sigma(between, q, draws * n_between)

    @pytest.mark.timeout(60)
    def test_three_blocks_dense_within(self):
        draws = 1000
        within, _, n_within, _ = self._densities(SbmParams((10, 10, 8), 0.9, 0.01), draws, 32)
        self.assertEqual(n_within, 45 + 45 + 28)
        self._assert_within_3_sigma(within, 0.9, draws * n_within)

    @pytest.mark.timeout(5)
    def test_full_probabilities_give_complete_graph(self):
        self.assertEqual(sample_sbm(SbmParams((14, 14), 1.0, 1.0), RngSeed(6)), Graph.complete(28))

    @pytest.mark.timeout(5)
    def test_disconnected_blocks_time_out(self):
        with self.assertRaises(ConnectivityTimeout) as ctx:
            sample_sbm(SbmParams((14, 14), 1.0, 0.0), RngSeed(7), max_attempts=5)
        self.assertEqual(ctx.exception.attempts, 5)

    @pytest.mark.timeout(5)
    def test_parameter_checks(self):
        with self.assertRaises(EnsembleParameterError):
            SbmParams((14, 14), 0.2, 0.5)
        with self.assertRaises(EnsembleParameterError):
            SbmParams((14, 0), 0.5, 0.1)
        with self.assertRaises(EnsembleParameterError):
            sample_sbm(SbmParams((4, 4), 0.5, 0.1), RngSeed(1), max_attempts=0)
        self.assertEqual(SbmParams((10, 10, 8), 0.5, 0.1).labels().tolist()[9:11], [0, 1])


class TestPreferentialAttachment(unittest.TestCase):
    """Preferential attachment growth"""

    @pytest.mark.timeout(20)
    def test_edge_counts(self):
        generator = RngSeed(8).generator()
        for l in [1, 5, 12, 25]:
            g = sample_pa(PaParams(l, 28), generator)
            self.assertEqual(g.edge_count, l * (28 - l))
            self.assertTrue(is_connected(g))
        self.assertEqual(sample_pa(PaParams(5, 28), generator).edge_count, 115)

    @pytest.mark.timeout(5)
    def test_smallest_tree(self):
        g = sample_pa(PaParams(1, 4), RngSeed(9))
        self.assertEqual(g.edge_count, 3)
        self.assertTrue(is_connected(g))

    @pytest.mark.timeout(5)
    def test_newcomers_attach_l_times(self):
        l, n = 4, 20
        g = sample_pa(PaParams(l, n), RngSeed(10))
        for v in range(l + 1, n):
            self.assertEqual(int(g.adj[v, :v].sum()), l)

    @pytest.mark.timeout(5)
    def test_requires_growth_beyond_star(self):
        with self.assertRaises(EnsembleParameterError):
            sample_pa(PaParams(27, 28), RngSeed(11))
        with self.assertRaises(EnsembleParameterError):
            sample_pa(PaParams(3, 4), RngSeed(11))
        self.assertEqual(sample_pa(PaParams(26, 28), RngSeed(11)).edge_count, 26 * 2)

    @pytest.mark.timeout(5)
    def test_parameter_checks(self):
        with self.assertRaises(EnsembleParameterError):
            PaParams(28, 28)
        with self.assertRaises(EnsembleParameterError):
            PaParams(0, 28)

    @pytest.mark.timeout(10)
    def test_reproducible(self):
        params = PaParams(7, 28)
        self.assertEqual(sample_pa(params, RngSeed(12, 3)), sample_pa(params, RngSeed(12, 3)))


class TestConnectivity(unittest.TestCase):
    """Breadth-first connectivity check"""

    @pytest.mark.timeout(5)
    def test_examples(self):
        self.assertTrue(is_connected(Graph.path(6)))
        self.assertTrue(is_connected(Graph.empty(1)))
        self.assertFalse(is_connected(Graph.empty(3)))
        self.assertFalse(is_connected(Graph.from_edges(4, [(0, 1), (2, 3)])))


if __name__ == "__main__":
    unittest.main()
