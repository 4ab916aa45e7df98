#!/usr/bin/env python3
"""
Test Suite for run configuration

Covers defaults, YAML files, the FGL_SEED environment override, flag overrides,
type coercion, validation and the configuration digest.

Usage:
  pytest test_config.py

Requirements:
  - pytest
  - pytest-timeout
"""

import os
import tempfile
import unittest

import pytest
import yaml

from frechet_unet.models.config import DEFAULT_L_VALUES, SEED_ENV_VAR, RunConfig
from frechet_unet.models.errors import ConfigError


class TestRunConfig(unittest.TestCase):
    """Configuration layering and validation"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, data):
        path = os.path.join(self.tmp.name, "run.yaml")
        with open(path, "w") as f:
            yaml.safe_dump(data, f)
        return path

    @pytest.mark.timeout(5)
    def test_defaults(self):
        config = RunConfig.load(environ={})
        self.assertEqual(config.generation.n, 28)
        self.assertEqual(config.generation.sample_size, 10)
        self.assertEqual(config.generation.pa_l_values, DEFAULT_L_VALUES)
        self.assertEqual(config.generation.sbm_blocks_three, [10, 10, 8])
        self.assertEqual(config.training.base_channels, 16)
        self.assertEqual(config.evaluation.trials, 90)
        self.assertEqual(config.evaluation.models, ["ier", "sbm", "pa", "gen", "naive"])
        self.assertEqual(config.oracle.n, 4)

    @pytest.mark.timeout(5)
    def test_layering(self):
        path = self._write({"seed": 11, "training": {"epochs": 3, "lr": 0.01}})
        config = RunConfig.load(path, environ={})
        self.assertEqual((config.seed, config.training.epochs, config.training.lr), (11, 3, 0.01))

        config = RunConfig.load(path, environ={SEED_ENV_VAR: "12"})
        self.assertEqual(config.seed, 12)

        config = RunConfig.load(path, {"seed": 13, "training.epochs": None}, environ={SEED_ENV_VAR: "12"})
        self.assertEqual(config.seed, 13)
        self.assertEqual(config.training.epochs, 3)

    @pytest.mark.timeout(5)
    def test_coercion(self):
        config = RunConfig.load(overrides={
            "evaluation.models": "ier, naive",
            "evaluation.train_missing": "yes",
            "generation.pa_l_values": "5,7",
            "generation.ier_constant_p": "0.4",
            "training.batch_size": 4.0,
        }, environ={})
        self.assertEqual(config.evaluation.models, ["ier", "naive"])
        self.assertTrue(config.evaluation.train_missing)
        self.assertEqual(config.generation.pa_l_values, [5, 7])
        self.assertEqual(config.generation.ier_constant_p, 0.4)
        self.assertEqual(config.training.batch_size, 4)
        with self.assertRaises(ConfigError):
            RunConfig.load(overrides={"training.batch_size": 2.5}, environ={})
        with self.assertRaises(ConfigError):
            RunConfig.load(overrides={"evaluation.train_missing": "maybe"}, environ={})

    @pytest.mark.timeout(5)
    def test_unknown_keys(self):
        with self.assertRaises(ConfigError) as ctx:
            RunConfig.load(self._write({"training": {"momentum": 0.5}}), environ={})
        self.assertEqual(ctx.exception.field, "training.momentum")
        with self.assertRaises(ConfigError):
            RunConfig.load(overrides={"network.depth": 3}, environ={})
        with self.assertRaises(ConfigError):
            RunConfig.load(self._write({"training": 5}), environ={})

    @pytest.mark.timeout(5)
    def test_unreadable_files(self):
        with self.assertRaises(ConfigError):
            RunConfig.load(os.path.join(self.tmp.name, "absent.yaml"), environ={})
        path = os.path.join(self.tmp.name, "bad.yaml")
        with open(path, "w") as f:
            f.write("seed: [1,\n")
        with self.assertRaises(ConfigError):
            RunConfig.load(path, environ={})
        with self.assertRaises(ConfigError):
            RunConfig.load(self._write([1, 2]), environ={})

    @pytest.mark.timeout(5)
    def test_validation(self):
        invalid = [
            {"generation.n": 30},
            {"generation.sbm_q_max": 0.6},
            {"generation.sbm_blocks_two": [10, 10]},
            {"generation.pa_l_values": [28]},
            {"generation.pa_l_values": [5, 27]},
            {"training.lr": 0.0},
            {"evaluation.models": ["ier", "resnet"]},
            {"evaluation.rel_window": 29},
            {"oracle.n": 7},
            {"oracle.metric": "euclidean"},
            {"seed": -1},
        ]
        for overrides in invalid:
            with self.assertRaises(ConfigError, msg=str(overrides)) as ctx:
                RunConfig.load(overrides=overrides, environ={})
            self.assertTrue(ctx.exception.field.startswith(next(iter(overrides)).split(".")[0]))

    @pytest.mark.timeout(5)
    def test_digest(self):
        a = RunConfig.load(environ={})
        b = RunConfig.load(environ={})
        self.assertEqual(a.digest(), b.digest())
        self.assertEqual(len(a.digest()), 16)
        c = RunConfig.load(overrides={"training.epochs": 99}, environ={})
        self.assertNotEqual(a.digest(), c.digest())


if __name__ == "__main__":
    unittest.main()
