import json
import math
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
import pandas as pd

from quasinit.errors import MetadataMismatch, NumericalDivergence, PlanError
from quasinit.harness import (
    alpha_histogram,
    bench_draws,
    compare,
    E_PLOT_CAP,
    expand_grid,
    ExperimentPlan,
    format_duration,
    iter_runs,
    load_grid,
    make_executor,
    read_comparison,
    read_run,
    repetition_seeds,
    run_grid,
    run_plan,
    single_layer_curves,
    summary_grid,
    timed,
    u_sequence,
    write_plot_data,
    write_run,
)
from quasinit.harness.store import run_manifest, SCHEMA_VERSION
from quasinit.initializers import InitializerKind
from quasinit.mnist import prepare, RawMnist
from quasinit.nn import AccuracyTrace
from quasinit.seed_select import SeedSearchConfig
from quasinit.stats import INDETERMINATE

DATA = Path(__file__).parent / 'data'


def synthetic_dataset(n_train=48, n_test=20, seed=0):
    rng = np.random.default_rng(seed)
    raw = RawMnist(
        rng.integers(0, 256, size=(n_train, 28, 28), dtype=np.uint8),
        rng.integers(0, 10, size=n_train, dtype=np.uint8),
        rng.integers(0, 256, size=(n_test, 28, 28), dtype=np.uint8),
        rng.integers(0, 10, size=n_test, dtype=np.uint8),
    )
    return prepare(raw)


def tiny_plan(**kwargs):
    defaults = dict(
        model='single_layer',
        units=2,
        initializer='he_uniform',
        optimizer='sgd',
        repetitions=2,
        epochs=2,
        batch_size=16,
        learning_rate=0.01,
    )
    return ExperimentPlan(**(defaults | kwargs))


def worked_example_trace(arm):
    csv = DATA / f"worked_example_{arm}.csv"
    return AccuracyTrace.from_frame(pd.read_csv(csv), {'arm': arm, 'source': str(csv), 'delta_q': 4})


class TestExperimentPlan(unittest.TestCase):

    def test_defaults(self):
        plan = ExperimentPlan()
        self.assertEqual(
            (plan.model, plan.initializer, plan.optimizer, plan.repetitions, plan.epochs),
            ('mlp_32_32', InitializerKind.GLOROT_UNIFORM, 'adam', 100, 30),
        )
        self.assertEqual((plan.batch_size, plan.learning_rate), (64, 1e-4))

    def test_hash_is_stable_and_arm_sensitive(self):
        a, b = ExperimentPlan(), ExperimentPlan()
        self.assertEqual(a.plan_hash(), b.plan_hash())
        self.assertEqual(len(a.plan_hash()), 16)
        self.assertNotEqual(a.plan_hash(), a.counterpart('prng').plan_hash())
        self.assertEqual(a.facets(), a.counterpart('prng').facets())

    def test_prng_normalized(self):
        noisy = ExperimentPlan(arm='prng', seed_policy='auto', nu=7)
        self.assertEqual(noisy.plan_hash(), ExperimentPlan(arm='prng').plan_hash())
        auto = ExperimentPlan(seed_policy='auto', seed_search=SeedSearchConfig(1, 20, 5))
        self.assertEqual(
            auto.counterpart('prng').plan_hash(), ExperimentPlan(arm='prng').plan_hash()
        )

    def test_dict_round_trip(self):
        plan = tiny_plan(seed_policy='auto', seed_search=SeedSearchConfig(2, 9, 3, 1, 2))
        doc = json.loads(json.dumps(plan.to_dict()))
        self.assertEqual(ExperimentPlan.from_dict(doc), plan)

    def test_validation(self):
        bad = [
            dict(initializer='xavier'),
            dict(model='cnn'),
            dict(arm='both'),
            dict(optimizer='rmsprop'),
            dict(epochs=0),
            dict(units=4),
            dict(model='single_layer'),
            dict(model='single_layer', units=71),
            dict(nu=0),
            dict(dataset='cifar10'),
        ]
        for kwargs in bad:
            with self.subTest(**kwargs), self.assertRaises(PlanError):
                ExperimentPlan(**kwargs)

    def test_from_dict_validation(self):
        for doc in ({'epochs': 'ten'}, {'colour': 'red'}, {'seed_search': {'V': 1}}, []):
            with self.subTest(doc=doc), self.assertRaises(PlanError):
                ExperimentPlan.from_dict(doc)

    def test_model_config(self):
        cfg = tiny_plan(units=5).model_config()
        self.assertEqual(cfg.layer_sizes, (5,))
        self.assertEqual(cfg.layer_sources, ['qrng', 'prng'])
        self.assertEqual(ExperimentPlan(arm='prng').model_config().layer_sources, ['prng'] * 3)

    def test_repetition_seeds(self):
        seeds = repetition_seeds(0, 3, 3)
        self.assertEqual(seeds, repetition_seeds(0, 3, 3))
        base = seeds['layer_seeds'][0]
        self.assertEqual(seeds['layer_seeds'], [base, (base + 1) % 2**32, (base + 2) % 2**32])
        self.assertNotEqual(seeds['shuffle_seed'], repetition_seeds(0, 4, 3)['shuffle_seed'])

    def test_u_sequence(self):
        self.assertEqual([u_sequence(u) for u in (1, 2, 4, 6, 8, 31)], [
            'odd', 'even_2mod4', 'even_0mod4', 'even_2mod4', 'even_0mod4', 'odd'
        ])
        with self.assertRaises(PlanError):
            u_sequence(0)


class TestRunPlan(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.dataset = synthetic_dataset()

    def test_writes_trace_and_manifest(self):
        plan = tiny_plan()
        with tempfile.TemporaryDirectory() as tmp:
            outcome = run_plan(plan, self.dataset, tmp)
            self.assertEqual(outcome.path, Path(tmp) / plan.plan_hash())
            self.assertEqual(outcome.trace.values.shape, (2, 2))
            self.assertTrue((outcome.path / 'trace.csv').exists())
            with open(outcome.path / 'manifest.json') as f:
                manifest = json.load(f)
            self.assertEqual(manifest['schema_version'], SCHEMA_VERSION)
            self.assertEqual(manifest['status'], 'complete')
            self.assertEqual((manifest['nu'], manifest['delta_q']), (1, 0))
            self.assertEqual(manifest['plan'], plan.to_dict())
            self.assertEqual(len(manifest['repetitions']), 2)
            self.assertEqual(manifest['repetitions'][0]['layers'][0]['dimension'], 1)
            header = (outcome.path / 'trace.csv').read_text().splitlines()[0]
            self.assertEqual(header, 'repetition,epoch,accuracy')

    def test_deterministic_and_skips_completed(self):
        plan = tiny_plan()
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            first = run_plan(plan, self.dataset, a)
            second = run_plan(plan, self.dataset, b)
            name = plan.plan_hash()
            for file in ('trace.csv', 'manifest.json'):
                self.assertEqual(
                    (Path(a) / name / file).read_bytes(), (Path(b) / name / file).read_bytes()
                )
            again = run_plan(plan, self.dataset, a)
            self.assertTrue(again.skipped)
            np.testing.assert_array_equal(again.trace.values, first.trace.values)
            self.assertFalse(run_plan(plan, self.dataset, a, skip_existing=False).skipped)
            np.testing.assert_array_equal(second.trace.values, first.trace.values)

    def test_arms_share_shuffle_seeds(self):
        plan = tiny_plan()
        with tempfile.TemporaryDirectory() as tmp:
            q = run_plan(plan, self.dataset, tmp)
            p = run_plan(plan.counterpart('prng'), self.dataset, tmp)
            shuffles = [
                [rec['shuffle_seed'] for rec in o.manifest['repetitions']] for o in (q, p)
            ]
            self.assertEqual(shuffles[0], shuffles[1])
            self.assertIsNone(p.manifest['nu'])
            self.assertEqual(p.manifest['repetitions'][0]['layers'][0]['source'], 'prng')

    def test_auto_seed_policy(self):
        plan = tiny_plan(seed_policy='auto', seed_search=SeedSearchConfig(1, 4, 2, 1, 1))
        with tempfile.TemporaryDirectory() as tmp:
            outcome = run_plan(plan, self.dataset, tmp)
            manifest = outcome.manifest
            self.assertEqual(manifest['delta_q'], 1)
            self.assertIn(manifest['nu'], [c['seed'] for c in manifest['seed_search']['candidates']])
            self.assertEqual(outcome.trace.meta['delta_q'], 1)
            trace, _ = read_run(outcome.path)
            self.assertEqual(trace.meta['delta_q'], 1)

    def test_failed_repetition_is_recorded(self):
        plan = tiny_plan()
        side_effect = [np.array([0.25, 0.5]), NumericalDivergence(2, 0, [0.3])]
        with tempfile.TemporaryDirectory() as tmp:
            with mock.patch('quasinit.harness.plan.train', side_effect=side_effect):
                outcome = run_plan(plan, self.dataset, tmp)
            self.assertEqual(outcome.manifest['status'], 'partial')
            self.assertIn('NumericalDivergence', outcome.manifest['failures']['1'])
            self.assertEqual(outcome.trace.values[0].tolist(), [0.25, 0.5])
            self.assertEqual(outcome.trace.values[1, 0], 0.3)
            self.assertTrue(math.isnan(outcome.trace.values[1, 1]))
            self.assertEqual(outcome.trace.complete.shape, (1, 2))
            trace, _ = read_run(outcome.path)
            self.assertEqual(list(trace.failures), [1])
            self.assertFalse(run_plan(plan, self.dataset, tmp).skipped)

    def test_executor_matches_serial(self):
        plan = tiny_plan(repetitions=3)
        self.assertIsNone(make_executor(1, self.dataset))
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            serial = run_plan(plan, self.dataset, a)
            with make_executor(2, self.dataset) as executor:
                pooled = run_plan(plan, self.dataset, b, executor=executor)
            np.testing.assert_array_equal(serial.trace.values, pooled.trace.values)


class TestStore(unittest.TestCase):

    def test_round_trip(self):
        trace = AccuracyTrace(np.array([[0.1, 0.2], [0.3, np.nan]]), failures={1: 'boom'})
        manifest = run_manifest(plan={'arm': 'qrng'}, plan_hash='abc', delta_q=3, failures=trace.failures)
        with tempfile.TemporaryDirectory() as tmp:
            write_run(Path(tmp) / 'abc', trace, manifest)
            loaded, stored = read_run(Path(tmp) / 'abc')
            np.testing.assert_array_equal(loaded.values, trace.values)
            self.assertEqual(loaded.failures, {1: 'boom'})
            self.assertEqual((loaded.meta['arm'], loaded.meta['delta_q']), ('qrng', 3))
            self.assertEqual(stored['status'], 'partial')
            self.assertNotIn('timestamp', json.dumps(stored))
            self.assertEqual(len(list(iter_runs(tmp))), 1)

    def test_bare_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            csv = Path(tmp) / 'mine.csv'
            csv.write_text('repetition,epoch,accuracy\n0,1,0.5\n0,2,0.6\n1,1,0.4\n1,2,0.7\n')
            trace, manifest = read_run(csv)
            self.assertEqual(manifest, {})
            self.assertEqual(trace.values.tolist(), [[0.5, 0.6], [0.4, 0.7]])
            self.assertEqual(trace.meta['delta_q'], 0)

    def test_schema_mismatch(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_run(tmp, AccuracyTrace(np.array([[0.5]])), {'schema_version': 99})
            with self.assertRaises(MetadataMismatch):
                read_run(tmp)


class TestCompare(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.q = worked_example_trace('qrng')
        cls.p = worked_example_trace('prng')

    def test_worked_example_persisted(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = compare(self.q, self.p, out_dir=tmp)
            self.assertEqual(result.delta_q, 4)
            self.assertEqual(result.final, 'w:w,w,wt')
            [path] = (Path(tmp) / 'compare').iterdir()
            for name in ('comparison.csv', 'thresholds.csv', 'epochs.csv', 'manifest.json'):
                self.assertTrue((path / name).exists(), name)
            loaded = read_comparison(path)
            self.assertEqual((loaded.final, loaded.s_a, loaded.e_q_am), ('w:w,w,wt', 'win', 18))
            self.assertAlmostEqual(loaded.e_am, result.e_am, places=5)
            self.assertAlmostEqual(loaded.d_am, result.d_am, places=6)
            self.assertIs(loaded.threshold(0.5).D, INDETERMINATE)
            self.assertEqual(loaded.threshold(0.5).E_bound, 'upper')
            self.assertEqual(len(loaded.grid), 18)
            epochs = pd.read_csv(path / 'epochs.csv')
            self.assertEqual(len(epochs), 60)
            self.assertEqual(set(epochs['arm']), {'qrng', 'prng'})

    def test_delta_q_override(self):
        result = compare(self.q, self.p, delta_q=0)
        self.assertAlmostEqual(result.e_am, (18 - 30) / 30 * 100, places=6)

    def test_self_comparison_warns(self):
        with self.assertLogs('quasinit.harness.comparison', 'WARNING'):
            result = compare(self.q, self.q, delta_q=0)
        self.assertEqual((result.s_a, result.final), ('tie', 't:t,t,t'))
        self.assertEqual(result.alpha, 0.0)

    def test_mismatches(self):
        with self.assertRaises(MetadataMismatch):
            compare(self.q, AccuracyTrace(self.p.values[:, :10]))
        plan_a, plan_b = tiny_plan(), tiny_plan(optimizer='adam')
        a = AccuracyTrace(self.q.values[:5, :2], {'plan': plan_a.to_dict(), 'arm': 'qrng'})
        b = AccuracyTrace(
            self.p.values[:5, :2], {'plan': plan_b.counterpart('prng').to_dict(), 'arm': 'prng'}
        )
        with self.assertRaises(MetadataMismatch) as ctx:
            compare(a, b)
        self.assertIn('optimizer', str(ctx.exception))


class TestGrid(unittest.TestCase):

    def test_full_factorial(self):
        pairs = expand_grid({'optimizers': ['sgd', 'adam'], 'initializers': 'all'})
        self.assertEqual(len(pairs), 20)
        for q, p in pairs:
            self.assertEqual((q.arm, p.arm), ('qrng', 'prng'))
            self.assertEqual(q.facets(), p.facets())
        self.assertEqual(len({q.plan_hash() for q, _ in pairs}), 20)

    def test_single_layer_widths(self):
        pairs = expand_grid(
            {'models': ['single_layer'], 'units': [1, 2, 3], 'initializers': ['orthogonal']}
        )
        self.assertEqual([q.units for q, _ in pairs], [1, 2, 3])
        with self.assertRaises(PlanError):
            expand_grid({'models': ['single_layer']})

    def test_defaults_and_search(self):
        pairs = expand_grid(
            {'initializers': ['he_normal'], 'seed_policy': 'auto', 'seed_search': {'Z': 20}},
            master_seed=9,
        )
        [(q, p)] = pairs
        self.assertEqual((q.master_seed, q.seed_search.Z, q.seed_policy), (9, 20, 'auto'))
        self.assertEqual(p.seed_policy, 'fixed')
        [(q, _)] = expand_grid({'initializers': ['he_normal'], 'master_seed': 1}, master_seed=9)
        self.assertEqual(q.master_seed, 1)

    def test_invalid_documents(self):
        for doc in (
            {'initializers': ['xavier']},
            {'optimizers': 'sgd'},
            {'epochs': 'many'},
            {'seed_search': {'Q': 1}},
        ):
            with self.subTest(doc=doc), self.assertRaises(PlanError):
                expand_grid(doc)

    def test_load_grid(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'grid.yaml'
            path.write_text('optimizers: [sgd]\ninitializers: all\nlearning_rate: 0.01\n')
            self.assertEqual(len(expand_grid(load_grid(path))), 10)
            path.write_text('repetitions: lots\n')
            with self.assertRaises(PlanError) as ctx:
                load_grid(path)
            self.assertTrue(any('grid.yaml' in note for note in ctx.exception.__notes__))

    def test_run_grid(self):
        doc = {
            'models': ['single_layer'],
            'units': [2, 3],
            'optimizers': ['sgd'],
            'initializers': ['he_uniform'],
            'repetitions': 3,
            'epochs': 2,
            'batch_size': 16,
            'learning_rate': 0.01,
        }
        with tempfile.TemporaryDirectory() as tmp:
            outcome = run_grid(doc, synthetic_dataset(), tmp)
            self.assertEqual(len(outcome.results), 2)
            self.assertEqual(sorted(outcome.summary['units']), [2, 3])
            self.assertEqual(int(outcome.summary['n'].sum()), 2)
            for name in ('summary.csv', 'comparisons.csv', 'grid.yaml'):
                self.assertTrue((outcome.path / name).exists(), name)
            self.assertEqual(len(list((Path(tmp) / 'compare').iterdir())), 2)
            self.assertEqual(outcome.results[0].meta['u_sequence'], 'even_2mod4')

            written = write_plot_data(tmp, render=True, bins=5)
            for key in ('summary_grid', 'alpha', 'alpha_histogram', 'single_layer'):
                self.assertTrue(written[key].exists(), key)
            self.assertTrue(written['single_layer_png'].exists())
            curves = pd.read_csv(written['single_layer'])
            self.assertEqual(len(curves), 2 * 2 * 2)
            self.assertEqual(set(curves['u_sequence']), {'odd', 'even_2mod4'})

            rerun = run_grid(doc, synthetic_dataset(), tmp)
            self.assertTrue(all(q.skipped and p.skipped for q, p in rerun.runs))


class TestPlots(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.result = compare(worked_example_trace('qrng'), worked_example_trace('prng'))

    def test_summary_grid_caps_e(self):
        frame = summary_grid([self.result])
        self.assertEqual(len(frame), 18)
        row = frame[np.isclose(frame['A'], 0.2)].iloc[0]
        self.assertEqual((row['E'], row['E_raw']), (E_PLOT_CAP, 400.0))
        row = frame[np.isclose(frame['A'], 0.5)].iloc[0]
        self.assertTrue(math.isnan(row['D']))
        self.assertEqual(row['E_bound'], 'upper')

    def test_alpha_histogram(self):
        values, hist = alpha_histogram([self.result, self.result], bins=4)
        self.assertEqual(len(values), 2)
        self.assertEqual(int(hist['count'].sum()), 2)
        self.assertAlmostEqual(values['alpha'][0], 0.04, places=6)

    def test_single_layer_curves_ignore_other_models(self):
        trace = AccuracyTrace(np.array([[0.1, 0.2], [0.3, 0.4]]))
        runs = [
            (trace, {'plan': {'model': 'mlp_32_32'}}),
            (trace, {'plan': {'model': 'single_layer', 'units': 6, 'arm': 'qrng'}}),
        ]
        curves = single_layer_curves(runs)
        self.assertEqual(len(curves), 2)
        self.assertEqual(set(curves['u_sequence']), {'even_2mod4'})
        self.assertEqual(len(single_layer_curves([])), 0)


class TestBench(unittest.TestCase):

    def test_bench_table(self):
        table = bench_draws([1, 3], [4, 16], ['uniform', 'normal'], repeats=2)
        self.assertEqual(len(table), 2 * 2 * 2 * 3)
        self.assertEqual(
            list(table.columns),
            ['source', 'cached', 'distribution', 'k', 'n', 'median_s', 'q1_s', 'q3_s'],
        )
        self.assertTrue((table['median_s'] >= 0).all())
        self.assertEqual(set(table.loc[table['cached'], 'source']), {'qrng'})

    def test_bench_validation(self):
        with self.assertRaises(ValueError):
            bench_draws([1], [4], ['cauchy'])
        with self.assertRaises(ValueError):
            bench_draws([1], [4], repeats=0)

    def test_format_duration(self):
        self.assertEqual(format_duration(2.5), '2.500 s')
        self.assertEqual(format_duration(0.0025), '2.500 ms')
        self.assertEqual(format_duration(3e-6), '3.000 μs')

    def test_timed(self):
        @timed(label='square')
        def square(x):
            return x * x

        with self.assertLogs('quasinit.harness.bench', 'INFO') as logs:
            self.assertEqual(square(3), 9)
        self.assertIn('square finished in', logs.output[0])


if __name__ == '__main__':
    unittest.main()
