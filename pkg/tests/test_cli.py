import contextlib
import io
import json
import tempfile
import unittest
from pathlib import Path

from quasinit.cli import EX_FAILURE, EX_USAGE, main
from quasinit.config import load_settings, Settings
from quasinit.data import DEFAULT_DIRECTION_FILE, register_direction_file
from quasinit.errors import MalformedRow, PlanError

from .test_mnist import write_mnist


def run_cli(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = main(list(argv))
        except SystemExit as exc:
            code = exc.code
    return code, out.getvalue(), err.getvalue()


class TestSample(unittest.TestCase):

    def test_sobol_uniform(self):
        code, out, _ = run_cli('sample', '--source', 'qrng', '--dimension', '1', '--count', '3')
        self.assertEqual(code, 0)
        self.assertEqual(out, '0.5\n0.75\n0.25\n')

    def test_mersenne_twister(self):
        code, out, _ = run_cli('sample', '--source', 'prng', '--seed', '42', '--count', '2')
        self.assertEqual(code, 0)
        self.assertEqual([float(v) for v in out.split()], [0.3745401188473625, 0.9507143064099162])

    def test_discrepancy(self):
        code, out, _ = run_cli(
            'sample', '--source', 'qrng', '--count', '3', '--discrepancy'
        )
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out), {'count': 3, 'star_discrepancy': 0.25})

    def test_truncated_normal_stays_in_bounds(self):
        code, out, _ = run_cli(
            'sample', '--source', 'qrng', '--dimension', '5', '--count', '500',
            '--dist', 'truncated_normal', '--params', '1,0.5',
        )
        self.assertEqual(code, 0)
        values = [float(v) for v in out.split()]
        self.assertEqual(len(values), 500)
        self.assertTrue(all(0.0 < v < 2.0 for v in values))

    def test_invalid_parameters(self):
        code, out, err = run_cli(
            'sample', '--source', 'qrng', '--count', '3', '--params', '1,0'
        )
        self.assertEqual(code, EX_FAILURE)
        self.assertEqual(out, '')
        doc = json.loads(err.strip().splitlines()[-1])
        self.assertEqual(doc['error'], 'InvalidBounds')
        self.assertEqual(doc['schema_version'], 1)

    def test_usage_errors(self):
        for argv in (('sample', '--count', '3'), ('bogus',), ()):
            with self.subTest(argv=argv):
                code, _, err = run_cli(*argv)
                self.assertEqual(code, EX_USAGE)
                self.assertIn('usage:', err)


class TestInit(unittest.TestCase):

    def test_random_uniform_matrix(self):
        code, out, _ = run_cli(
            'init', '--source', 'qrng', '--initializer', 'random_uniform', '--shape', '2,2'
        )
        self.assertEqual(code, 0)
        self.assertEqual(out, '0,0.025\n-0.025,-0.0125\n')

    def test_rank_too_low(self):
        code, _, err = run_cli(
            'init', '--source', 'prng', '--initializer', 'orthogonal', '--shape', '4'
        )
        self.assertEqual(code, EX_FAILURE)
        self.assertEqual(json.loads(err.strip().splitlines()[-1])['error'], 'RankTooLow')


class TestExperiments(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)
        self.data = self.root / 'mnist'
        self.out = self.root / 'out'
        self.data.mkdir()
        write_mnist(self.data, n_train=12, n_test=8)
        self.globals = ['--data-dir', str(self.data), '--out-dir', str(self.out)]
        self.plan = [
            '--model', 'single_layer', '--units', '2', '--repetitions', '2',
            '--epochs', '2', '--batch-size', '4', '--lr', '0.01',
        ]

    def tearDown(self):
        self._tmp.cleanup()

    def test_missing_dataset(self):
        code, out, err = run_cli(
            '--data-dir', str(self.root / 'nowhere'), '--out-dir', str(self.out), 'train', *self.plan
        )
        self.assertEqual(code, EX_FAILURE)
        self.assertEqual(out, '')
        doc = json.loads(err.strip().splitlines()[-1])
        self.assertEqual(doc['error'], 'DatasetMissing')
        self.assertIn('train-images-idx3-ubyte', doc['message'])

    def test_train_compare_plot(self):
        code, out, _ = run_cli(*self.globals, 'train', *self.plan)
        self.assertEqual(code, 0)
        q = json.loads(out)
        self.assertEqual((q['status'], q['skipped'], q['nu'], q['delta_q']), ('complete', False, 1, 0))

        code, out, _ = run_cli(*self.globals, 'train', *self.plan, '--arm', 'prng')
        self.assertEqual(code, 0)
        p = json.loads(out)
        self.assertIsNone(p['nu'])

        code, out, _ = run_cli(*self.globals, 'train', *self.plan)
        self.assertTrue(json.loads(out)['skipped'])

        code, out, _ = run_cli(*self.globals, 'compare', q['path'], p['path'])
        self.assertEqual(code, 0)
        header, row = out.strip().splitlines()
        self.assertIn('final', header.split(','))
        self.assertEqual(len(list((self.out / 'compare').iterdir())), 1)

        code, out, _ = run_cli(*self.globals, 'compare', q['path'], q['path'], '--no-write')
        self.assertEqual(code, 0)

        code, out, _ = run_cli(*self.globals, 'plot-data')
        self.assertEqual(code, 0)
        written = json.loads(out)
        self.assertTrue(Path(written['summary_grid']).exists())
        self.assertTrue(Path(written['single_layer']).exists())

    def test_plan_file_and_mismatch(self):
        plan = self.root / 'plan.yaml'
        plan.write_text(
            'model: single_layer\nunits: 3\nrepetitions: 2\nepochs: 1\n'
            'batch_size: 4\nlearning_rate: 0.01\noptimizer: sgd\n'
        )
        code, out, _ = run_cli(*self.globals, 'train', '--plan', str(plan))
        self.assertEqual(code, 0)
        sgd = json.loads(out)['path']
        code, out, _ = run_cli(
            *self.globals, 'train', '--plan', str(plan), '--optimizer', 'adam', '--arm', 'prng'
        )
        adam = json.loads(out)['path']
        code, _, err = run_cli(*self.globals, 'compare', sgd, adam)
        self.assertEqual(code, EX_FAILURE)
        self.assertEqual(json.loads(err.strip().splitlines()[-1])['error'], 'MetadataMismatch')

    def test_seed_search(self):
        code, out, _ = run_cli(
            *self.globals, 'seed-search', *self.plan, '--search', '1,4,2,1,1'
        )
        self.assertEqual(code, 0)
        doc = json.loads(out)
        self.assertEqual(doc['delta_q'], 1)
        self.assertIn(doc['nu'], [c['seed'] for c in doc['candidates']])

    def test_bad_search_string(self):
        code, _, err = run_cli(*self.globals, 'seed-search', *self.plan, '--search', '1,4')
        self.assertEqual(code, EX_FAILURE)
        self.assertEqual(json.loads(err.strip().splitlines()[-1])['error'], 'InvalidSeedSearch')

    def test_bench(self):
        code, out, _ = run_cli(
            'bench', '--dimensions', '1,2', '--counts', '8', '--dist', 'uniform', '--repeats', '1'
        )
        self.assertEqual(code, 0)
        lines = out.strip().splitlines()
        self.assertEqual(lines[0], 'source,cached,distribution,k,n,median_s,q1_s,q3_s')
        self.assertEqual(len(lines), 1 + 2 * 3)


class TestSettings(unittest.TestCase):

    def test_layers(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'settings.yaml'
            path.write_text('jobs: 3\nmaster_seed: 7\nout_dir: results\n')
            self.assertEqual(load_settings(path, environ={}).jobs, 3)
            env = {'QUASINIT_JOBS': '4', 'QUASINIT_SOBOL_CACHE': 'yes'}
            s = load_settings(path, environ=env)
            self.assertEqual((s.jobs, s.master_seed, s.sobol_cache), (4, 7, True))
            self.assertEqual(s.out_dir, Path('results'))
            s = load_settings(path, environ=env, jobs=5, master_seed=None)
            self.assertEqual((s.jobs, s.master_seed), (5, 7))
            s = load_settings(environ={'QUASINIT_CONFIG': str(path)})
            self.assertEqual(s.jobs, 3)

    def test_defaults(self):
        s = load_settings(environ={})
        self.assertEqual(s, Settings())
        self.assertEqual((s.data_dir, s.out_dir, s.jobs), (Path('data'), Path('out'), 1))

    def test_invalid(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'settings.yaml'
            path.write_text('jobs: many\n')
            with self.assertRaises(PlanError):
                load_settings(path, environ={})
            path.write_text('colour: blue\n')
            with self.assertRaises(PlanError):
                load_settings(path, environ={})
        with self.assertRaises(PlanError):
            load_settings(environ={'QUASINIT_JOBS': 'x'})
        with self.assertRaises(PlanError):
            load_settings(environ={}, jobs=0)


class TestDirectionRegistry(unittest.TestCase):

    def test_bundled_file(self):
        self.assertTrue(DEFAULT_DIRECTION_FILE.path.exists())
        self.assertEqual(register_direction_file(DEFAULT_DIRECTION_FILE.path), DEFAULT_DIRECTION_FILE.path)

    def test_rejects_bad_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(FileNotFoundError):
                register_direction_file(Path(tmp) / 'missing.txt')
            bad = Path(tmp) / 'bad.txt'
            bad.write_text('d s a m_i\n2 1 0 1 7\n')
            with self.assertRaises(MalformedRow):
                register_direction_file(bad)
            self.assertNotIn(bad.name, [p.name for p in DEFAULT_DIRECTION_FILE.path.parent.iterdir()])


if __name__ == '__main__':
    unittest.main()
