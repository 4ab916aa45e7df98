#!/usr/bin/env python3
"""
Test Suite for the experiment pipeline

Covers dataset generation and storage, Fréchet mean prediction, per-trial evaluation,
summaries, and a small end-to-end benchmark with report files.

Usage:
  pytest test_pipeline.py

Requirements:
  - pytest
  - pytest-timeout
"""

import csv
import math
import os
import tempfile
import unittest

import numpy as np
import pytest

from frechet_unet.core.benchmark import (
    RECORDS_FILE,
    build_dataset,
    checkpoint_path,
    load_model,
    load_records,
    loss_log_path,
    report_files,
    run_benchmark,
    train_and_save,
    training_data,
)
from frechet_unet.core.datasets import (
    generate_dataset,
    generate_ier_dataset,
    generate_pa_dataset,
    generate_sbm_dataset,
    generate_test_set,
)
from frechet_unet.core.evaluation import evaluate, sample_mean_spectrum, spectral_gap, summarize, summarize_all
from frechet_unet.core.frechet import sample_medoid
from frechet_unet.core.graphs import threshold_half
from frechet_unet.core.spectra import adjacency_spectrum
from frechet_unet.core.training import binarize_output, predict_frechet
from frechet_unet.models.config import GenerationConfig, RunConfig
from frechet_unet.models.enums import Ensemble, Metric, Variant
from frechet_unet.models.errors import DatasetError, GraphError, MissingCheckpointError, ReportError
from frechet_unet.models.graph import Graph
from frechet_unet.models.params import RngSeed
from frechet_unet.models.results import EvalRecord
from frechet_unet.utils.dataset_io import INPUTS, load_dataset, save_dataset

K3 = Graph.complete(3)
EMPTY3 = Graph.empty(3)


class IdentityNetwork:
    def infer(self, x):
        return np.asarray(x)


class ConstantNetwork:
    def __init__(self, value):
        self.value = value

    def infer(self, x):
        return np.full(np.shape(x), self.value)


def small_config(root):
    config = RunConfig()
    config.update({
        "seed": 7,
        "generation.n": 8,
        "generation.sample_size": 4,
        "generation.count_params": 2,
        "generation.batches_per_param": 2,
        "generation.sbm_blocks_two": [4, 4],
        "generation.sbm_blocks_three": [3, 3, 2],
        "generation.pa_l_values": [1, 2, 3],
        "generation.pa_batches_per_l": 2,
        "training.epochs": 1,
        "training.batch_size": 2,
        "training.base_channels": 2,
        "evaluation.trials": 6,
        "evaluation.models": ["ier", "naive"],
        "evaluation.rel_window": 5,
        "evaluation.abs_curve_len": 8,
        "evaluation.rel_curve_len": 5,
        "paths.datasets": os.path.join(root, "datasets"),
        "paths.checkpoints": os.path.join(root, "checkpoints"),
        "paths.reports": os.path.join(root, "reports"),
    })
    config.validate()
    return config


def _record(model="m", ensemble=Ensemble.IER, trial=0, delta=(1.0, 2.0, 3.0), kl=0.5):
    delta = np.array(delta)
    return EvalRecord(model, ensemble, trial, delta, delta / 2, delta, delta / 2, kl, 0)


class TestDatasets(unittest.TestCase):
    """Training and test pair generation"""

    @pytest.mark.timeout(20)
    def test_ier_pairs(self):
        pairs = generate_ier_dataset(1, count_params=3, batches_per_param=2, N=5, n=8)
        self.assertEqual(len(pairs), 6)
        for pair in pairs:
            self.assertEqual(len(pair.batch), 5)
            self.assertEqual(pair.target, threshold_half(pair.P))
            self.assertEqual(pair.ensemble, Ensemble.IER)
        self.assertEqual([p.params["draw"] for p in pairs], [0, 0, 1, 1, 2, 2])

    @pytest.mark.timeout(30)
    def test_sbm_layouts(self):
        pairs = generate_sbm_dataset(2, count_params=3, batches_per_param=1, N=3,
                                     blocks_two=(4, 4), blocks_three=(3, 3, 2))
        self.assertEqual([p.params["blocks"] for p in pairs], [[4, 4], [4, 4], [3, 3, 2]])
        for pair in pairs:
            self.assertIn(pair.target, pair.batch)
            self.assertLessEqual(pair.params["q"], pair.params["p"])

    @pytest.mark.timeout(30)
    def test_pa_pairs(self):
        pairs = generate_pa_dataset(3, l_values=[1, 2], batches_per_l=3, N=4, n=8)
        self.assertEqual([p.params["l"] for p in pairs], [1, 1, 1, 2, 2, 2])
        for pair in pairs:
            self.assertIn(pair.target, pair.batch)
            self.assertEqual(pair.target.edge_count, pair.params["l"] * (8 - pair.params["l"]))

    @pytest.mark.timeout(30)
    def test_targets_are_medoids_under_the_ensemble_metric(self):
        self.assertEqual(Ensemble.SBM.metric, Metric.ADJACENCY_SPECTRAL)
        self.assertEqual(Ensemble.PA.metric, Metric.LAPLACIAN_SPECTRAL)
        sbm = generate_sbm_dataset(8, count_params=2, batches_per_param=1, N=4,
                                   blocks_two=(4, 4), blocks_three=(3, 3, 2))
        pa = generate_pa_dataset(9, l_values=[2], batches_per_l=2, N=4, n=8)
        for pair in sbm + pa:
            self.assertEqual(pair.target, sample_medoid(pair.batch, pair.ensemble.metric).mean)

    @pytest.mark.timeout(30)
    def test_reproducible_with_workers(self):
        single = generate_ier_dataset(4, count_params=2, batches_per_param=3, N=4, n=8)
        threaded = generate_ier_dataset(4, count_params=2, batches_per_param=3, N=4, n=8, workers=3)
        for a, b in zip(single, threaded):
            self.assertEqual(a.batch, b.batch)
            self.assertEqual(a.stream, b.stream)

    @pytest.mark.timeout(30)
    def test_test_set_is_held_out(self):
        config = GenerationConfig(n=8, sample_size=3, count_params=2, batches_per_param=2,
                                  sbm_blocks_two=[4, 4], sbm_blocks_three=[3, 3, 2], pa_l_values=[1, 2, 3])
        train_streams = {p.stream for p in generate_dataset(Ensemble.IER, 5, config)}
        for ensemble in Ensemble:
            test = generate_test_set(ensemble, 5, config, trials=5)
            self.assertEqual(len(test), 5)
            self.assertFalse(train_streams & {p.stream for p in test})
            self.assertTrue(all(p.ensemble is ensemble for p in test))


class TestDatasetFiles(unittest.TestCase):
    """Dataset directories"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.directory = os.path.join(self.tmp.name, "ier")
        self.pairs = generate_ier_dataset(6, count_params=2, batches_per_param=6, N=3, n=8)

    def tearDown(self):
        self.tmp.cleanup()

    @pytest.mark.timeout(20)
    def test_save_then_load(self):
        save_dataset(self.pairs, self.directory, {"seed": 6})
        loaded = load_dataset(self.directory)
        self.assertEqual(len(loaded), len(self.pairs))
        for original, pair in zip(self.pairs, loaded):
            self.assertEqual(pair.target, original.target)
            self.assertEqual(pair.batch, original.batch)
            np.testing.assert_array_equal(pair.input.w, original.input.w)
            self.assertEqual(pair.meta(), original.meta())

    @pytest.mark.timeout(10)
    def test_corrupt_inputs(self):
        save_dataset(self.pairs, self.directory)
        with open(os.path.join(self.directory, INPUTS), "r+b") as f:
            f.write(np.full(64, 0.25, dtype="<f4").tobytes())
        with self.assertRaises(DatasetError):
            load_dataset(self.directory)

    @pytest.mark.timeout(10)
    def test_missing_and_mixed(self):
        with self.assertRaises(DatasetError):
            load_dataset(os.path.join(self.tmp.name, "absent"))
        with self.assertRaises(DatasetError):
            save_dataset([], self.directory)
        sbm = generate_sbm_dataset(1, count_params=1, batches_per_param=1, N=3, blocks_two=(4, 4),
                                   blocks_three=(3, 3, 2))
        with self.assertRaises(DatasetError):
            save_dataset(self.pairs + sbm, self.directory)
        self.assertFalse(os.path.exists(self.directory))


class TestPrediction(unittest.TestCase):
    """Network outputs to graphs"""

    @pytest.mark.timeout(5)
    def test_identity_network_recovers_sample(self):
        g = Graph.path(6)
        self.assertEqual(predict_frechet(IdentityNetwork(), [g, g, g]), g)

    @pytest.mark.timeout(5)
    def test_constant_half_gives_empty_graph(self):
        self.assertEqual(predict_frechet(ConstantNetwork(0.5), [K3, EMPTY3]), EMPTY3)
        self.assertEqual(predict_frechet(ConstantNetwork(0.9), [EMPTY3]), K3)

    @pytest.mark.timeout(5)
    def test_binarize_symmetrizes(self):
        y = np.array([[0.9, 0.8, 0.2], [0.4, 0.9, 0.7], [0.2, 0.1, 0.9]])
        self.assertEqual(binarize_output(y, 3), Graph.from_edges(3, [(0, 1)]))


class TestEvaluation(unittest.TestCase):
    """Per-trial records and summaries"""

    @pytest.mark.timeout(5)
    def test_k3_against_empty(self):
        (record,) = evaluate([K3], [EMPTY3], [[EMPTY3]])
        np.testing.assert_allclose(record.delta, [2.0, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(record.delta_sample, [2.0, 1.0, 1.0], atol=1e-12)
        self.assertAlmostEqual(record.kl, -math.log(1e-6), places=9)

    @pytest.mark.timeout(5)
    def test_exact_estimate(self):
        g = Graph.path(5)
        (record,) = evaluate([g], [g], [[g, Graph.empty(5)]])
        np.testing.assert_array_equal(record.delta, np.zeros(5))
        self.assertEqual(record.kl, 0.0)
        self.assertTrue(np.any(record.delta_sample > 0))

    @pytest.mark.timeout(5)
    def test_misaligned_inputs(self):
        with self.assertRaises(GraphError):
            evaluate([K3], [K3, K3], [[K3]])
        with self.assertRaises(GraphError):
            evaluate([K3], [Graph.empty(4)], [[K3]])

    @pytest.mark.timeout(5)
    def test_sample_mean_spectrum_and_gap(self):
        np.testing.assert_allclose(sample_mean_spectrum([K3, EMPTY3]), [1.0, -0.5, -0.5], atol=1e-12)
        delta, rel = spectral_gap(np.array([2.0, 0.0]), np.array([1.0, 1.0]), eps_rel=1e-8)
        np.testing.assert_array_equal(delta, [1.0, 1.0])
        np.testing.assert_allclose(rel, [0.5, 1e8])

    @pytest.mark.timeout(5)
    def test_summary_of_single_record(self):
        record = _record(delta=(0.2, 0.9, 0.1))
        summary = summarize([record])
        np.testing.assert_array_equal(summary.mean_delta, record.delta)
        self.assertEqual(summary.max_abs, (0.9, 2))
        self.assertEqual(summary.min_abs, (0.1, 3))
        self.assertEqual(summary.kl_mean, 0.5)
        self.assertEqual(summary.kl_variance, 0.0)

    @pytest.mark.timeout(5)
    def test_summary_averages(self):
        records = [_record(trial=0, delta=(1.0, 4.0, 0.0), kl=1.0), _record(trial=1, delta=(3.0, 0.0, 2.0), kl=3.0)]
        summary = summarize(records, rel_window=2)
        np.testing.assert_array_equal(summary.mean_delta, [2.0, 2.0, 1.0])
        self.assertEqual(summary.max_abs, (2.0, 1))
        self.assertEqual(summary.min_rel, (1.0, 1))
        self.assertEqual(summary.kl_mean, 2.0)
        self.assertEqual(summary.kl_variance, 1.0)
        reversed_summary = summarize(records[::-1], rel_window=2)
        np.testing.assert_array_equal(reversed_summary.mean_delta, summary.mean_delta)

    @pytest.mark.timeout(5)
    def test_summary_groups(self):
        with self.assertRaises(GraphError):
            summarize([])
        with self.assertRaises(GraphError):
            summarize([_record(model="a"), _record(model="b")])
        groups = summarize_all([_record(model="a"), _record(model="b"), _record(model="a", trial=1)])
        self.assertEqual(list(groups), [("a", Ensemble.IER), ("b", Ensemble.IER)])
        self.assertEqual(groups[("a", Ensemble.IER)].trials, 2)

    @pytest.mark.timeout(5)
    def test_record_dict_round_trip(self):
        record = _record()
        again = EvalRecord.from_dict(record.to_dict())
        np.testing.assert_array_equal(again.delta, record.delta)
        self.assertEqual(again.ensemble, Ensemble.IER)


class TestBenchmark(unittest.TestCase):
    """Small end-to-end runs"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.config = small_config(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    @pytest.mark.timeout(120)
    def test_train_then_benchmark(self):
        for ensemble in Ensemble:
            build_dataset(self.config, ensemble)
        self.assertEqual(len(training_data(self.config, Variant.GEN)), 4 + 4 + 6)

        path, digest, run = train_and_save(self.config, Variant.IER)
        self.assertEqual(path, checkpoint_path(self.config, Variant.IER))
        self.assertTrue(os.path.isfile(loss_log_path(path)))
        self.assertEqual(len(run.epoch_losses), 1)

        directory, summaries = run_benchmark(self.config)
        names = sorted(os.listdir(directory))
        self.assertEqual(len([n for n in names if n.startswith("summary_table")]), 5)
        self.assertEqual(len([n for n in names if n.startswith("curves_fig")]), 6)
        self.assertIn(RECORDS_FILE, names)
        self.assertIn("run.json", names)
        self.assertEqual(set(summaries), {(m, e) for m in ("ier", "naive") for e in Ensemble})

        with open(os.path.join(directory, "summary_table1.csv")) as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["model", "metric", "value", "eig_index"])
        self.assertEqual([row[:2] for row in rows[1:]], [
            ["IER-Unet", "max_mean_abs"], ["IER-Unet", "min_mean_abs"],
            ["Naive", "max_mean_abs"], ["Naive", "min_mean_abs"],
        ])
        with open(os.path.join(directory, "curves_fig5.csv")) as f:
            curve = list(csv.reader(f))[1:]
        self.assertEqual(len(curve), 2 * 8)
        self.assertEqual(curve[5][3], "")

        records = load_records(directory)
        self.assertEqual(len(records), 2 * 3 * 6)
        self.assertEqual(report_files(records, self.config).keys(), report_files(records[::-1], self.config).keys())

    @pytest.mark.timeout(120)
    def test_reports_are_reproducible(self):
        self.config.evaluation.train_missing = True
        first, _ = run_benchmark(self.config, report_dir=os.path.join(self.tmp.name, "first"))
        second, _ = run_benchmark(self.config, workers=2, report_dir=os.path.join(self.tmp.name, "second"))
        for name in sorted(os.listdir(first)):
            with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
                self.assertEqual(a.read(), b.read(), name)

    @pytest.mark.timeout(10)
    def test_missing_checkpoint(self):
        with self.assertRaises(MissingCheckpointError):
            load_model(self.config, Variant.PA)
        with self.assertRaises(MissingCheckpointError):
            run_benchmark(self.config)
        self.assertFalse(os.path.exists(self.config.paths.reports))
        with self.assertRaises(ReportError):
            load_records(self.config.paths.reports)


@unittest.skipUnless(os.environ.get("FGL_RUN_SLOW") == "1", "set FGL_RUN_SLOW=1 for desk-scale runs")
class TestDeskScale(unittest.TestCase):
    """Full-size training of every variant, evaluated on every ensemble in one shared run"""

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        config = RunConfig()
        config.update({
            "threads": os.cpu_count() or 1,
            "evaluation.train_missing": True,
            "paths.datasets": os.path.join(cls.tmp.name, "datasets"),
            "paths.checkpoints": os.path.join(cls.tmp.name, "checkpoints"),
            "paths.reports": os.path.join(cls.tmp.name, "reports"),
        })
        config.validate()
        _, cls.summaries = run_benchmark(config, config.threads)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    @pytest.mark.timeout(4 * 60 * 60)
    def test_ier_unet_beats_naive(self):
        unet = self.summaries[("ier", Ensemble.IER)]
        naive = self.summaries[("naive", Ensemble.IER)]
        self.assertEqual(unet.trials, 90)
        self.assertLess(unet.max_abs[0], naive.max_abs[0])

    @pytest.mark.timeout(60)
    def test_some_variant_beats_naive_on_every_ensemble(self):
        for ensemble in Ensemble:
            naive = self.summaries[("naive", ensemble)].mean_delta[0]
            best = min(self.summaries[(v.value, ensemble)].mean_delta[0] for v in Variant)
            self.assertLess(best, naive, ensemble.value)

    @pytest.mark.timeout(60)
    def test_gen_unet_kl_below_pa_unet_on_ier(self):
        gen = self.summaries[("gen", Ensemble.IER)]
        pa = self.summaries[("pa", Ensemble.IER)]
        self.assertLess(gen.kl_mean, pa.kl_mean)


if __name__ == "__main__":
    unittest.main()
