"""Desk-scale reproduction runs on real MNIST.

Skipped unless ``QUASINIT_SLOW=1`` and the four MNIST files are present under
``QUASINIT_DATA_DIR`` (default ``data``). Expect minutes for the single-layer
check and hours for the reduced grid.
"""

import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from quasinit.errors import DatasetMissing
from quasinit.harness import ExperimentPlan, run_grid, run_plan
from quasinit.mnist import load_mnist
from quasinit.qmc import SobolEngine
from quasinit.stats import OUTCOME_MASKS


def _load():
    if os.environ.get('QUASINIT_SLOW') != '1':
        raise unittest.SkipTest('set QUASINIT_SLOW=1 to run reproduction checks')
    try:
        return load_mnist(Path(os.environ.get('QUASINIT_DATA_DIR', 'data')))
    except DatasetMissing as err:
        raise unittest.SkipTest(str(err))


class TestSingleLayerEpochOne(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.dataset = _load()

    def test_random_uniform_u32(self):
        plan = ExperimentPlan(
            model='single_layer',
            units=32,
            initializer='random_uniform',
            optimizer='adam',
            repetitions=30,
            epochs=1,
        )
        engine = SobolEngine(4)
        with tempfile.TemporaryDirectory() as tmp:
            q = run_plan(plan, self.dataset, tmp, engine=engine)
            p = run_plan(plan.counterpart('prng'), self.dataset, tmp, engine=engine)
        q_med = float(np.median(q.trace.complete[:, 0]))
        p_med = float(np.median(p.trace.complete[:, 0]))
        self.assertAlmostEqual(q_med, 0.87, delta=0.05)
        self.assertAlmostEqual(p_med, 0.55, delta=0.07)
        self.assertGreaterEqual(q_med - p_med, 0.15)

    def test_sawtooth_around_u32(self):
        engine = SobolEngine(4)
        medians = {}
        with tempfile.TemporaryDirectory() as tmp:
            for units in (31, 32, 33):
                plan = ExperimentPlan(
                    model='single_layer',
                    units=units,
                    initializer='random_uniform',
                    optimizer='adam',
                    repetitions=30,
                    epochs=1,
                )
                outcome = run_plan(plan, self.dataset, tmp, engine=engine)
                medians[units] = float(np.median(outcome.trace.complete[:, 0]))
        self.assertGreaterEqual(medians[32] - medians[31], 0.10)
        self.assertGreaterEqual(medians[32] - medians[33], 0.10)


class TestReducedGrid(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.dataset = _load()

    def test_mlp_grid(self):
        doc = {
            'models': ['mlp_32_32'],
            'optimizers': ['sgd', 'adam'],
            'initializers': 'all',
            'repetitions': 20,
            'epochs': 30,
        }
        with tempfile.TemporaryDirectory() as tmp:
            outcome = run_grid(doc, self.dataset, tmp)
        self.assertEqual(len(outcome.results), 20)
        masks = {m for m, *_ in OUTCOME_MASKS}
        self.assertTrue(all(r.final in masks for r in outcome.results))
        sgd = outcome.summary.set_index('optimizer').loc['sgd']
        self.assertGreater(sgd['win'], sgd['loss'])


if __name__ == '__main__':
    unittest.main()
